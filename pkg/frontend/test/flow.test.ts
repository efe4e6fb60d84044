import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { StudyApi } from "../src/api";
import { StudyFlow } from "../src/flow";
import { submitLocked } from "../src/state";
import { ATTENTION_AFTER, FakeServer, TRIALS_TOTAL } from "./fakeServer";

function makeFlow(server: FakeServer): StudyFlow {
  return new StudyFlow(new StudyApi("http://fake", server.fetch));
}

function fillSurvey(flow: StudyFlow): void {
  flow.editSurvey((form) => {
    form.relevant = new Set([5, 2]);
    form.irrelevant = "DK";
    for (let id = 3; id <= 10; id++) form.likert.set(id, 4);
    form.ageBand = "25-34y";
    form.gender = "female";
  });
}

/** Pattern the driver feeds on trial t; distinct per plant and trial. */
function pattern(trial: number): number[] {
  return [0, 1, 2, 3, 4].map((i) => (trial + i) % 7);
}

async function flush(): Promise<void> {
  await vi.advanceTimersByTimeAsync(0);
}

/** Auto-plays the study like an attentive participant would. */
async function play(flow: StudyFlow, server: FakeServer): Promise<void> {
  const feedbackSeen: unknown[] = [];
  for (let guard = 0; guard < 400; guard++) {
    const scene = flow.state.scene;
    if (scene === null) throw new Error("no scene to play");
    if (scene.kind === "progress" || submitLocked(flow.state)) {
      await vi.advanceTimersByTimeAsync(1000);
      continue;
    }
    if (scene.kind === "instructions") {
      await flow.clickStart();
    } else if (scene.kind === "choice") {
      for (const [i, target] of pattern(scene.trial).entries()) {
        for (let n = 0; n < target; n++) flow.clickArrow(i, +1);
      }
      await flow.clickFeed();
    } else if (scene.kind === "feedback") {
      await flush();
      expect(flow.state.feedback).toEqual(server.feedbackPayload());
      feedbackSeen.push(flow.state.feedback);
      await flow.clickContinue();
    } else if (scene.kind === "attention") {
      await flow.submitAttention(server.packSize);
    } else if (scene.kind === "survey") {
      fillSurvey(flow);
      await flow.submitSurvey();
    } else {
      await flush();
      if (flow.state.paymentCode !== null) {
        expect(feedbackSeen).toHaveLength(TRIALS_TOTAL / 2);
        return;
      }
    }
  }
  throw new Error("study never reached the payment code");
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("StudyFlow full walk", () => {
  it("plays consent to payment code with canonical payloads throughout", async () => {
    const server = new FakeServer({ includeCfe: true });
    const flow = makeFlow(server);
    await flow.giveConsent();
    expect(flow.state.scene?.kind).toBe("instructions");
    expect(submitLocked(flow.state)).toBe(true);

    await play(flow, server);

    expect(server.feeds).toHaveLength(TRIALS_TOTAL);
    server.feeds.forEach((feed, i) => {
      expect(feed.leaves).toEqual(pattern(i + 1)); // canonical order, not display order
      expect(feed.decisionTimeMs).toBeGreaterThanOrEqual(0);
    });
    expect(server.attentionAnswers.map((a) => a.afterTrial)).toEqual(ATTENTION_AFTER);
    expect(server.attentionAnswers.every((a) => a.correct)).toBe(true);
    expect(flow.state.lastAttentionCorrect).toBe(true);
    expect(server.feedbackFetches).toBe(6);
    expect(server.surveyBody).toEqual({
      relevant_plants: [2, 5],
      irrelevant_plants: "DK",
      likert: { "3": 4, "4": 4, "5": 4, "6": 4, "7": 4, "8": 4, "9": 4, "10": 4 },
      age_band: "25-34y",
      gender: "female",
    });
    expect(flow.state.paymentCode).toBe("TESTCODE123");
    expect(server.paymentIssued).toBe(true);
  });

  it("strips nothing from a control feedback table (no cfe keys)", async () => {
    const server = new FakeServer();
    const flow = makeFlow(server);
    await flow.giveConsent();
    await vi.advanceTimersByTimeAsync(2000);
    await flow.clickStart();
    await flow.clickFeed(); // trial 1, all zeros
    await vi.advanceTimersByTimeAsync(1000);
    await flow.clickFeed(); // trial 2 -> feedback block 1
    await vi.advanceTimersByTimeAsync(1000);
    await flush();
    expect(flow.state.scene?.kind).toBe("feedback");
    expect(flow.state.feedback?.entries).toHaveLength(2);
    for (const entry of flow.state.feedback?.entries ?? []) {
      expect("cfe" in entry).toBe(false);
      expect("near_optimal" in entry).toBe(false);
    }
  });
});

describe("countdown gates", () => {
  it("ignores clicks while the gate is closed", async () => {
    const server = new FakeServer({ startDelayS: 5 });
    const flow = makeFlow(server);
    await flow.giveConsent();

    await flow.clickStart(); // locked: must be a no-op
    expect(server.advances).toBe(0);
    await vi.advanceTimersByTimeAsync(4000);
    await flow.clickStart();
    expect(server.advances).toBe(0);
    expect(flow.state.countdownRemaining).toBe(1);
    await vi.advanceTimersByTimeAsync(1000);
    await flow.clickStart();
    expect(server.advances).toBe(1);
    expect(flow.state.scene?.kind).toBe("choice");
  });

  it("unwraps a zero-duration progress scene immediately", async () => {
    const server = new FakeServer({ progressS: 0, startDelayS: 0 });
    const flow = makeFlow(server);
    await flow.giveConsent();
    await flow.clickStart();
    await flow.clickFeed();
    expect(flow.state.scene?.kind).toBe("choice");
    expect(flow.state.scene?.kind === "choice" && flow.state.scene.trial).toBe(2);
  });
});

describe("failure handling", () => {
  async function reachTrial1(server: FakeServer): Promise<StudyFlow> {
    const flow = makeFlow(server);
    await flow.giveConsent();
    await vi.advanceTimersByTimeAsync(2000);
    await flow.clickStart();
    expect(flow.state.scene?.kind).toBe("choice");
    return flow;
  }

  it("recovers from a stale 409 by resyncing the scene", async () => {
    const server = new FakeServer();
    const flow = await reachTrial1(server);
    flow.clickArrow(1, +1);
    flow.clickArrow(1, +1);

    server.reject409Suffix = "/feed";
    await flow.clickFeed();

    expect(flow.state.scene?.kind).toBe("choice");
    expect(flow.state.retry).toBeNull();
    // same trial after resync, so the participant's half-made choice survives
    expect(flow.state.counters).toEqual([0, 2, 0, 0, 0]);
    expect(server.feeds).toHaveLength(0);
    await flow.clickFeed();
    expect(server.feeds).toHaveLength(1);
    expect(server.feeds[0]?.leaves).toEqual([0, 2, 0, 0, 0]);
  });

  it("shows the retry banner on network failure and replays the call", async () => {
    const server = new FakeServer();
    const flow = await reachTrial1(server);
    flow.clickArrow(0, +1);
    flow.clickArrow(4, +1);

    server.failNextFetch = true;
    await flow.clickFeed();

    expect(flow.state.retry?.message).toMatch(/connection lost/i);
    expect(flow.state.counters).toEqual([1, 0, 0, 0, 1]);
    expect(server.feeds).toHaveLength(0);

    await flow.retry();
    expect(flow.state.retry).toBeNull();
    expect(server.feeds).toHaveLength(1);
    expect(server.feeds[0]?.leaves).toEqual([1, 0, 0, 0, 1]);
    expect(flow.state.scene?.kind).toBe("progress");
  });
});

describe("survey validation", () => {
  it("blocks submission locally until the form is complete", async () => {
    // a fake already sitting at the survey keeps the test on the point
    const server = new FakeServer({ startDelayS: 0, continueDelayS: 0, progressS: 0 });
    server.phase = "survey";
    server.lastFed = TRIALS_TOTAL;
    const flow = makeFlow(server);
    await flow.giveConsent();
    expect(flow.state.scene?.kind).toBe("survey");

    await flow.submitSurvey();
    expect(flow.state.surveyProblems).toContain("item1");
    expect(flow.state.surveyProblems).toContain("gender");
    expect(server.surveyBody).toBeNull();

    fillSurvey(flow);
    await flow.submitSurvey();
    await flush();
    expect(server.surveyBody).not.toBeNull();
    expect(flow.state.scene?.kind).toBe("payout");
  });
});
