// Scene rendering. Pure DOM rebuild per state change: small scenes, no need
// for anything cleverer. The display permutation is applied here and only
// here — the flow and API never see it.
import { button, clear, el } from "./dom";
import { StudyFlow } from "./flow";
import { drawPack } from "./paddock";
import type { FeedbackEntry, SurveyItem } from "./protocol";
import { ClientSceneState, countersForDisplay, submitLocked } from "./state";
import { togglePlant } from "./survey";

const PLANT_NAMES: Record<number, string> = {
  1: "Sunpetal",
  2: "Mosspuff",
  3: "Glowvine",
  4: "Thornberry",
  5: "Dewfrond",
};

export function mountApp(root: HTMLElement, flow: StudyFlow): void {
  flow.subscribe(() => renderState(root, flow));
  renderState(root, flow);
}

function renderState(root: HTMLElement, flow: StudyFlow): void {
  const state = flow.state;
  clear(root);
  if (state.retry !== null) {
    root.append(
      el(
        "div",
        { class: "banner" },
        state.retry.message + " ",
        button("Retry", () => void flow.retry(), { className: "retry" }),
      ),
    );
  }
  const scene = state.scene;
  if (scene === null) {
    root.append(consentScene(flow));
    return;
  }
  switch (scene.kind) {
    case "instructions":
      root.append(instructionsScene(flow, state));
      break;
    case "progress":
      root.append(progressScene(state));
      break;
    case "choice":
      root.append(choiceScene(flow, state));
      break;
    case "feedback":
      root.append(feedbackScene(flow, state));
      break;
    case "attention":
      root.append(attentionScene(flow));
      break;
    case "survey":
      root.append(surveyScene(flow, state, scene.items));
      break;
    case "payout":
      root.append(payoutScene(state));
      break;
  }
}

function consentScene(flow: StudyFlow): HTMLElement {
  const box = el("input", { type: "checkbox", id: "consent-box" });
  const start = button("I agree — begin", () => void flow.giveConsent(), { disabled: true });
  box.addEventListener("change", () => {
    start.disabled = !box.checked;
  });
  return el(
    "section",
    { class: "scene consent" },
    el("h1", {}, "Shub caretaking study"),
    el(
      "p",
      {},
      "You will look after a pack of alien creatures for twelve feeding rounds. " +
        "Your choices and questionnaire answers are recorded for research. " +
        "Participation is voluntary and you may stop at any time.",
    ),
    el("label", { for: "consent-box" }, box, " I have read the above and consent to take part."),
    el("p", {}, start),
  );
}

function gateLabel(base: string, remaining: number): string {
  return remaining > 0 ? `${base} (${remaining})` : base;
}

function instructionsScene(flow: StudyFlow, state: ClientSceneState): HTMLElement {
  const locked = submitLocked(state);
  return el(
    "section",
    { class: "scene instructions" },
    el("h1", {}, "Your shub pack"),
    el(
      "p",
      {},
      `You are in charge of ${state.packSize} shubs. Each round, choose how many leaves ` +
        "of each of the five plants to feed them. Good meals grow the pack; bad meals " +
        "shrink it. Every two rounds you will see an overview of your recent choices.",
    ),
    el("p", {}, "Read carefully — the start button unlocks when the countdown ends."),
    button(gateLabel("Start", state.countdownRemaining), () => void flow.clickStart(), {
      disabled: locked,
    }),
  );
}

function progressScene(state: ClientSceneState): HTMLElement {
  return el(
    "section",
    { class: "scene progress" },
    el("h2", {}, "Feeding…"),
    el("p", { class: "progress-count" }, `${state.countdownRemaining}`),
  );
}

function packCanvas(state: ClientSceneState): HTMLElement {
  const canvas = el("canvas", { class: "paddock", width: "420", height: "160" });
  drawPack(canvas, state.packSize);
  return el(
    "div",
    {},
    canvas,
    el("p", { class: "pack-line" }, `Pack size: ${state.packSize}`),
  );
}

function choiceScene(flow: StudyFlow, state: ClientSceneState): HTMLElement {
  const scene = state.scene;
  if (scene === null || scene.kind !== "choice") throw new Error("not a choice scene");
  const counters = el("div", { class: "counters" });
  for (const { plant, value } of countersForDisplay(state)) {
    counters.append(
      el(
        "div",
        { class: "counter", "data-plant": String(plant) },
        el("span", { class: "plant-name" }, PLANT_NAMES[plant] ?? `Plant ${plant}`),
        button("▲", () => flow.clickArrow(plant - 1, +1), { className: "arrow up" }),
        el("span", { class: "count" }, String(value)),
        button("▼", () => flow.clickArrow(plant - 1, -1), { className: "arrow down" }),
      ),
    );
  }
  const parts: (Node | string)[] = [
    el("h2", {}, `Round ${scene.trial} of ${scene.trials_total}`),
    packCanvas(state),
    counters,
    button("Feeding time!", () => void flow.clickFeed()),
  ];
  if (scene.previous !== null) {
    parts.push(
      el(
        "p",
        { class: "previous" },
        `Last round the pack went from ${scene.previous.pack_before} to ${scene.previous.pack_after}.`,
      ),
    );
  }
  return el("section", { class: "scene choice" }, ...parts);
}

function feedbackRow(entry: FeedbackEntry): HTMLElement[] {
  const rows = [
    el(
      "tr",
      {},
      el("td", {}, String(entry.trial)),
      el("td", {}, entry.choice.join(", ")),
      el("td", {}, String(entry.pack_before)),
      el("td", {}, String(entry.pack_after)),
      el("td", {}, entry.delta > 0 ? `+${entry.delta}` : String(entry.delta)),
    ),
  ];
  if (entry.near_optimal === true) {
    rows.push(
      el(
        "tr",
        { class: "cfe near-optimal" },
        el("td", { colspan: "5" }, "Your choice was already close to an optimal meal."),
      ),
    );
  } else if (entry.cfe != null) {
    rows.push(
      el(
        "tr",
        { class: "cfe suggestion" },
        el(
          "td",
          { colspan: "5" },
          `A better meal would have been: ${entry.cfe.suggestion.join(", ")}`,
        ),
      ),
    );
  }
  return rows;
}

function feedbackScene(flow: StudyFlow, state: ClientSceneState): HTMLElement {
  const scene = state.scene;
  if (scene === null || scene.kind !== "feedback") throw new Error("not a feedback scene");
  const locked = submitLocked(state);
  const table = el(
    "table",
    { class: "feedback" },
    el(
      "thead",
      {},
      el(
        "tr",
        {},
        el("th", {}, "Round"),
        el("th", {}, "Leaves fed"),
        el("th", {}, "Pack before"),
        el("th", {}, "Pack after"),
        el("th", {}, "Change"),
      ),
    ),
    el(
      "tbody",
      {},
      ...(state.feedback?.entries.flatMap(feedbackRow) ?? [
        el("tr", {}, el("td", { colspan: "5" }, "Loading…")),
      ]),
    ),
  );
  return el(
    "section",
    { class: "scene feedback" },
    el("h2", {}, `Block ${scene.block} overview`),
    table,
    el("p", { class: "pack-line" }, `Pack size: ${state.packSize}`),
    button(gateLabel("Continue", state.countdownRemaining), () => void flow.clickContinue(), {
      disabled: locked,
    }),
  );
}

function attentionScene(flow: StudyFlow): HTMLElement {
  const input = el("input", { type: "number", class: "attention-answer", min: "0" });
  const submit = (): void => {
    const value = Number.parseInt(input.value, 10);
    if (Number.isNaN(value)) return;
    void flow.submitAttention(value);
  };
  return el(
    "section",
    { class: "scene attention" },
    el("h2", {}, "Quick check"),
    el("p", {}, "How many shubs are in your pack right now?"),
    input,
    button("Answer", submit),
  );
}

function surveyItemNode(flow: StudyFlow, state: ClientSceneState, item: SurveyItem): HTMLElement {
  const problem = state.surveyProblems.includes(
    typeof item.id === "number" ? `item${item.id}` : item.id,
  );
  const wrap = el("fieldset", { class: problem ? "item problem" : "item" }, el("legend", {}, item.text));
  if (item.kind === "plant-selection") {
    const key = item.id === 1 ? "relevant" : "irrelevant";
    const selection = key === "relevant" ? flow.form.relevant : flow.form.irrelevant;
    for (const plant of item.plants) {
      const box = el("input", { type: "checkbox" });
      box.checked = selection instanceof Set && selection.has(plant);
      box.addEventListener("change", () =>
        flow.editSurvey((form) => {
          form[key] = togglePlant(form[key], plant);
        }),
      );
      wrap.append(el("label", { class: "plant-option" }, box, PLANT_NAMES[plant] ?? `Plant ${plant}`));
    }
    const dk = el("input", { type: "checkbox" });
    dk.checked = selection === item.dont_know;
    dk.addEventListener("change", () =>
      flow.editSurvey((form) => {
        form[key] = dk.checked ? item.dont_know : null;
      }),
    );
    wrap.append(el("label", { class: "plant-option dont-know" }, dk, "I don't know"));
  } else if (item.kind === "likert") {
    const current = flow.form.likert.get(item.id);
    for (const [value, text] of Object.entries(item.scale)) {
      const radio = el("input", { type: "radio", name: `likert-${item.id}` });
      radio.checked = current === Number(value);
      radio.addEventListener("change", () =>
        flow.editSurvey((form) => form.likert.set(item.id, Number(value))),
      );
      wrap.append(el("label", { class: "likert-option" }, radio, `${value} — ${text}`));
    }
    const pna = el("input", { type: "radio", name: `likert-${item.id}` });
    pna.checked = current === item.prefer_not_to_answer;
    pna.addEventListener("change", () =>
      flow.editSurvey((form) => form.likert.set(item.id, item.prefer_not_to_answer)),
    );
    wrap.append(el("label", { class: "likert-option" }, pna, "Prefer not to answer"));
  } else {
    const select = el("select", {}, el("option", { value: "" }, "— choose —"));
    for (const option of item.options) {
      select.append(el("option", { value: option }, option));
    }
    const current = item.id === "age" ? flow.form.ageBand : flow.form.gender;
    select.value = current ?? "";
    select.addEventListener("change", () =>
      flow.editSurvey((form) => {
        const value = select.value === "" ? null : select.value;
        if (item.id === "age") form.ageBand = value;
        else form.gender = value;
      }),
    );
    wrap.append(select);
  }
  return wrap;
}

function surveyScene(flow: StudyFlow, state: ClientSceneState, items: SurveyItem[]): HTMLElement {
  const parts: (Node | string)[] = [el("h2", {}, "Closing questionnaire")];
  if (state.surveyProblems.length > 0) {
    parts.push(
      el(
        "p",
        { class: "problems" },
        "Please complete the highlighted items before submitting.",
      ),
    );
  }
  for (const item of items) {
    parts.push(surveyItemNode(flow, state, item));
  }
  parts.push(button("Submit", () => void flow.submitSurvey()));
  return el("section", { class: "scene survey" }, ...parts);
}

function payoutScene(state: ClientSceneState): HTMLElement {
  return el(
    "section",
    { class: "scene payout" },
    el("h2", {}, "All done — thank you!"),
    state.paymentCode !== null
      ? el("p", { class: "code" }, `Your completion code: ${state.paymentCode}`)
      : el("p", {}, "Fetching your completion code…"),
    el("p", {}, el("a", { href: "debrief.html" }, "Read the study debrief")),
  );
}
