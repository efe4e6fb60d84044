// In-memory stand-in for the study service, for driving the real client
// stack (schema parsing included) without sockets.
import type { FetchLike } from "../src/api";
import { makeInstrument } from "./fixtures";

export const TRIALS_TOTAL = 12;
export const ATTENTION_AFTER = [3, 7];

interface FakeOptions {
  startDelayS?: number;
  continueDelayS?: number;
  progressS?: number;
  includeCfe?: boolean;
}

interface LogEntry {
  trial: number;
  choice: number[];
  pack_before: number;
  pack_after: number;
  delta: number;
}

/**
 * In-memory stand-in for the study service, speaking the same wire protocol:
 * progress wrappers after feeds and attention answers, feedback after even
 * trials, attention checks after trials 3 and 7.
 */
export class FakeServer {
  packSize = 20;
  trial = 1;
  lastFed = 0;
  phase: "instructions" | "choice" | "feedback" | "attention" | "survey" | "payout" = "instructions";
  progressPending = false;
  displayOrder = [3, 1, 5, 2, 4];
  trialLog: LogEntry[] = [];
  feeds: { leaves: number[]; decisionTimeMs: number }[] = [];
  attentionAnswers: { afterTrial: number; answer: number; correct: boolean }[] = [];
  surveyBody: unknown = null;
  paymentIssued = false;
  advances = 0;
  feedbackFetches = 0;

  failNextFetch = false;
  reject409Suffix: string | null = null;

  private readonly startDelayS: number;
  private readonly continueDelayS: number;
  private readonly progressS: number;
  private readonly includeCfe: boolean;

  constructor(options: FakeOptions = {}) {
    this.startDelayS = options.startDelayS ?? 2;
    this.continueDelayS = options.continueDelayS ?? 2;
    this.progressS = options.progressS ?? 1;
    this.includeCfe = options.includeCfe ?? false;
  }

  feedbackPayload(): unknown {
    const entries = this.trialLog.slice(-2).map((entry) =>
      this.includeCfe
        ? {
            ...entry,
            cfe: { suggestion: [0, 5, 0, 1, 4], predicted_growth: 1.89, distance: 3 },
            near_optimal: false,
          }
        : { ...entry },
    );
    return {
      block: this.lastFed / 2,
      entries,
      continue_delay_s: this.continueDelayS,
    };
  }

  private plainScene(): Record<string, unknown> {
    switch (this.phase) {
      case "instructions":
        return {
          kind: "instructions",
          start_delay_s: this.startDelayS,
          pack_size: this.packSize,
          trials_total: TRIALS_TOTAL,
          plant_display_order: this.displayOrder,
        };
      case "choice":
        return {
          kind: "choice",
          trial: this.trial,
          trials_total: TRIALS_TOTAL,
          pack_size: this.packSize,
          plant_display_order: this.displayOrder,
          previous: this.trialLog.at(-1) ?? null,
        };
      case "feedback":
        return {
          kind: "feedback",
          block: this.lastFed / 2,
          trials: [this.lastFed - 1, this.lastFed],
          pack_size: this.packSize,
          continue_delay_s: this.continueDelayS,
        };
      case "attention":
        return { kind: "attention", after_trial: this.lastFed };
      case "survey":
        return { kind: "survey", items: makeInstrument() };
      case "payout":
        return { kind: "payout" };
    }
  }

  private scene(): unknown {
    const plain = this.plainScene();
    if (this.progressPending && plain["kind"] !== "attention") {
      return { kind: "progress", duration_s: this.progressS, next: plain };
    }
    return plain;
  }

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  private conflict(message: string): Response {
    return this.json({ detail: message }, 409);
  }

  fetch: FetchLike = async (url, init) => {
    if (this.failNextFetch) {
      this.failNextFetch = false;
      throw new TypeError("connection reset");
    }
    const method = init?.method ?? "GET";
    const path = new URL(url).pathname;
    if (this.reject409Suffix !== null && path.endsWith(this.reject409Suffix)) {
      this.reject409Suffix = null;
      return this.conflict("injected conflict");
    }
    const body =
      init?.body === undefined || init?.body === null
        ? undefined
        : (JSON.parse(init.body as string) as Record<string, unknown>);

    if (method === "POST" && path === "/api/session") {
      return this.json({ session_id: "fake-1", scene: this.scene() });
    }
    if (method === "GET" && path.endsWith("/scene")) {
      return this.json(this.scene());
    }
    if (method === "POST" && path.endsWith("/advance")) {
      if (this.phase === "instructions") {
        this.advances += 1;
        this.phase = "choice";
        this.progressPending = false;
        return this.json({ scene: this.scene() });
      }
      if (this.phase === "feedback") {
        this.advances += 1;
        this.progressPending = false;
        if (this.lastFed === TRIALS_TOTAL) {
          this.phase = "survey";
        } else {
          this.trial = this.lastFed + 1;
          this.phase = "choice";
        }
        return this.json({ scene: this.scene() });
      }
      return this.conflict(`cannot advance from '${this.phase}'`);
    }
    if (method === "POST" && path.endsWith("/feed")) {
      if (this.phase !== "choice") return this.conflict("scene is not 'choice'");
      const leaves = body?.["leaves"];
      if (
        !Array.isArray(leaves) ||
        leaves.length !== 5 ||
        leaves.some((v) => !Number.isInteger(v) || v < 0 || v > 6)
      ) {
        return this.json({ detail: "bad leaves" }, 422);
      }
      this.feeds.push({
        leaves: leaves as number[],
        decisionTimeMs: body?.["decision_time_ms"] as number,
      });
      const before = this.packSize;
      const delta = 1;
      this.packSize = before + delta;
      this.trialLog.push({
        trial: this.trial,
        choice: leaves as number[],
        pack_before: before,
        pack_after: this.packSize,
        delta,
      });
      this.lastFed = this.trial;
      this.progressPending = true;
      if (ATTENTION_AFTER.includes(this.trial)) {
        this.phase = "attention";
      } else if (this.trial % 2 === 0) {
        this.phase = "feedback";
      } else {
        this.trial += 1;
      }
      return this.json({
        trial: this.lastFed,
        delta,
        pack_size: this.packSize,
        scene: this.scene(),
      });
    }
    if (method === "GET" && path.endsWith("/feedback")) {
      if (this.phase !== "feedback") return this.conflict("scene is not 'feedback'");
      this.feedbackFetches += 1;
      return this.json(this.feedbackPayload());
    }
    if (method === "POST" && path.endsWith("/attention")) {
      if (this.phase !== "attention") return this.conflict("scene is not 'attention'");
      const answer = body?.["answer"] as number;
      const correct = answer === this.packSize;
      this.attentionAnswers.push({ afterTrial: this.lastFed, answer, correct });
      this.progressPending = true;
      this.trial = this.lastFed + 1;
      this.phase = "choice";
      return this.json({ correct, scene: this.scene() });
    }
    if (method === "POST" && path.endsWith("/survey")) {
      if (this.phase !== "survey") return this.conflict("scene is not 'survey'");
      this.surveyBody = body;
      this.phase = "payout";
      return this.json({ scene: this.scene() });
    }
    if (method === "GET" && path.endsWith("/payment-code")) {
      if (this.phase !== "payout") return this.conflict("not finished");
      if (this.paymentIssued) return this.conflict("code already issued");
      this.paymentIssued = true;
      return this.json({ code: "TESTCODE123" });
    }
    return this.json({ detail: "no such route" }, 404);
  };
}
