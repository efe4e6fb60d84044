// End-to-end run against a real service process: train a model, start the
// server with its stock timings, and let the client flow play one full
// session -- consent, twelve feeding rounds, both attention checks, the
// survey, and the payment code -- while measuring every countdown gate and
// cross-checking each feedback table against the server's own payload.
//
// Run with: npm run e2e   (expects the Python package to be installed)
import { deepStrictEqual } from "node:assert";
import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { StudyApi } from "../src/api";
import { StudyFlow } from "../src/flow";
import { submitLocked, type ClientSceneState } from "../src/state";

const START_S = 20;
const CONTINUE_S = 10;
const PROGRESS_S = 3;
const TRIALS_TOTAL = 12;
// gates run on 1 Hz intervals, so they can only err on the long side; the
// margin covers measurement skew between our listener and the timer start
const MARGIN_S = 0.5;

function pass(line: string): void {
  console.log(`PASS  ${line}`);
}

async function waitForServer(base: string, deadlineMs: number): Promise<void> {
  const until = Date.now() + deadlineMs;
  while (Date.now() < until) {
    try {
      await fetch(`${base}/api/session/probe/scene`);
      return; // any HTTP response means the service is up
    } catch {
      await new Promise((r) => setTimeout(r, 250));
    }
  }
  throw new Error("service never came up");
}

interface GateLog {
  startGateS: number | null;
  progressS: number[];
  continueS: number[];
}

async function playSession(base: string): Promise<{ code: string; gates: GateLog; blocks: number }> {
  const api = new StudyApi(base);
  const flow = new StudyFlow(api);
  const acted = new Set<string>();
  const gates: GateLog = { startGateS: null, progressS: [], continueS: [] };
  let instructionsAt: number | null = null;
  let lastKind: string | null = null;
  let lastKindAt = 0;
  let blocksChecked = 0;
  let finish: (code: string) => void;
  let fail: (error: unknown) => void;
  const outcome = new Promise<string>((resolve, reject) => {
    finish = resolve;
    fail = reject;
  });

  const once = (key: string, action: () => Promise<void>): void => {
    if (acted.has(key)) return;
    acted.add(key);
    queueMicrotask(() => {
      action().catch((error) => fail(error));
    });
  };

  const listener = (state: ClientSceneState): void => {
    const scene = state.scene;
    if (scene === null) return;
    const now = performance.now();
    if (scene.kind !== lastKind) {
      if (lastKind === "progress") {
        gates.progressS.push((now - lastKindAt) / 1000);
      }
      if (lastKind === "feedback") {
        gates.continueS.push((now - lastKindAt) / 1000);
      }
      if (scene.kind === "instructions") {
        instructionsAt = now;
      }
      if (scene.kind === "choice" && scene.trial === 1 && instructionsAt !== null) {
        gates.startGateS = (now - instructionsAt) / 1000;
      }
      lastKind = scene.kind;
      lastKindAt = now;
    }
    if (submitLocked(state) || scene.kind === "progress") return;

    if (scene.kind === "instructions") {
      once("start", () => flow.clickStart());
    } else if (scene.kind === "choice") {
      once(`feed:${scene.trial}`, async () => {
        // the best meal (5 of plant 2, 1 of plant 4, 4 of plant 5): the pack
        // grows every round and the feedback rows carry near-optimal flags
        for (let n = 0; n < 5; n++) flow.clickArrow(1, +1);
        flow.clickArrow(3, +1);
        for (let n = 0; n < 4; n++) flow.clickArrow(4, +1);
        await flow.clickFeed();
      });
    } else if (scene.kind === "feedback") {
      if (state.feedback === null) return; // table still loading
      once(`continue:${scene.block}`, async () => {
        const raw = await (
          await fetch(`${base}/api/session/${state.sessionId}/feedback`)
        ).json();
        deepStrictEqual(flow.state.feedback, raw);
        blocksChecked += 1;
        await flow.clickContinue();
      });
    } else if (scene.kind === "attention") {
      once(`attention:${scene.after_trial}`, () => flow.submitAttention(state.packSize));
    } else if (scene.kind === "survey") {
      once("survey", async () => {
        flow.editSurvey((form) => {
          form.relevant = new Set([2, 4]);
          form.irrelevant = new Set([1, 3, 5]);
          for (let id = 3; id <= 10; id++) form.likert.set(id, 4);
          form.likert.set(7, "PNA"); // item 7 asks for exactly this answer
          form.ageBand = "25-34y";
          form.gender = "prefer not to answer";
        });
        await flow.submitSurvey();
      });
    } else if (scene.kind === "payout" && state.paymentCode !== null) {
      finish(state.paymentCode);
    }
  };

  flow.subscribe(listener);
  await flow.giveConsent();
  const code = await outcome;
  if (flow.state.lastAttentionCorrect !== true) {
    throw new Error("attention answer was graded wrong");
  }
  if (acted.has("attention:3") !== true || acted.has("attention:7") !== true) {
    throw new Error("missed an attention check");
  }
  return { code, gates, blocks: blocksChecked };
}

async function main(): Promise<void> {
  const workdir = mkdtempSync(join(tmpdir(), "webui-e2e-"));
  const port = 8655 + (process.pid % 211);
  const base = `http://127.0.0.1:${port}`;
  let server: ChildProcess | null = null;
  try {
    console.log("training the model (once, ~1 min)...");
    execFileSync("cfstudy", ["train", "--experiment", "1", "--out", join(workdir, "model.json")], {
      stdio: ["ignore", "ignore", "inherit"],
    });
    writeFileSync(
      join(workdir, "study.toml"),
      ['model_path = "model.json"', 'assignment = "fixed:cfe"', `bind = "127.0.0.1:${port}"`, ""].join(
        "\n",
      ),
    );
    server = spawn(
      "cfstudy",
      ["serve", "--config", join(workdir, "study.toml"), "--store", join(workdir, "store")],
      { stdio: ["ignore", "ignore", "inherit"] },
    );
    await waitForServer(base, 30_000);

    console.log("playing one full session (stock 20/10/3 second gates, ~2 min)...");
    const watchdog = new Promise<never>((_, reject) =>
      setTimeout(() => reject(new Error("e2e watchdog expired")), 300_000).unref(),
    );
    const { code, gates, blocks } = await Promise.race([playSession(base), watchdog]);

    pass(`full session: consent -> ${TRIALS_TOTAL} trials -> survey -> payment code ${code}`);
    if (gates.startGateS === null || gates.startGateS < START_S - MARGIN_S) {
      throw new Error(`start gate too short: ${String(gates.startGateS)}s`);
    }
    pass(`start gate held for ${gates.startGateS.toFixed(1)}s (nominal ${START_S}s)`);
    const shortProgress = gates.progressS.filter((s) => s < PROGRESS_S - MARGIN_S);
    if (gates.progressS.length !== 12 || shortProgress.length > 0) {
      throw new Error(`progress gates wrong: ${JSON.stringify(gates.progressS)}`);
    }
    pass(
      `progress screens: ${gates.progressS.length}, shortest ${Math.min(...gates.progressS).toFixed(1)}s (nominal ${PROGRESS_S}s)`,
    );
    const shortContinues = gates.continueS.filter((s) => s < CONTINUE_S - MARGIN_S);
    if (gates.continueS.length !== 6 || shortContinues.length > 0) {
      throw new Error(`continue gates wrong: ${JSON.stringify(gates.continueS)}`);
    }
    pass(
      `feedback gates: ${gates.continueS.length}, shortest ${Math.min(...gates.continueS).toFixed(1)}s (nominal ${CONTINUE_S}s)`,
    );
    if (blocks !== 6) throw new Error(`checked ${blocks} feedback tables, wanted 6`);
    pass("all 6 feedback tables matched the server payload byte for byte");
  } finally {
    if (server !== null) {
      server.kill("SIGINT");
      await new Promise((resolve) => {
        server?.once("exit", resolve);
        setTimeout(resolve, 5000).unref();
      });
    }
    rmSync(workdir, { recursive: true, force: true });
  }
}

main().then(
  () => process.exit(0),
  (error) => {
    console.error(error);
    process.exit(1);
  },
);
