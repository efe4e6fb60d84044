// The scene-flow controller: owns the client state, talks to the service,
// and walks consent -> instructions -> trials -> survey -> payment code.
// Rendering is somebody else's job; everything observable happens through
// the subscribed listener.
import { ApiHttpError, NetworkError, StudyApi } from "./api";
import type { ChoiceScene, PlainScene, Scene } from "./protocol";
import {
  ClientSceneState,
  applyScene,
  bumpCounter,
  initialState,
  leavesPayload,
  submitLocked,
} from "./state";
import { SurveyForm, emptyForm, surveyPayload, validateSurvey } from "./survey";
import { Countdown, DecisionTimer } from "./timer";

export type FlowListener = (state: ClientSceneState) => void;

export interface FlowOptions {
  /** decision-timer clock override (tests, headless runs) */
  now?: () => number;
}

export class StudyFlow {
  readonly state: ClientSceneState = initialState();
  form: SurveyForm = emptyForm();

  private listeners: FlowListener[] = [];
  private countdown = new Countdown();
  private decisionTimer: DecisionTimer;
  private renderedTrial: number | null = null;
  private pendingRetry: (() => Promise<void>) | null = null;

  constructor(
    private readonly api: StudyApi,
    options: FlowOptions = {},
  ) {
    this.decisionTimer = new DecisionTimer(options.now);
  }

  subscribe(listener: FlowListener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  /** The consent click; everything before it is a static local page. */
  async giveConsent(): Promise<void> {
    await this.guard(async () => {
      const created = await this.api.createSession();
      this.state.sessionId = created.session_id;
      this.acceptScene(created.scene);
    });
  }

  async clickStart(): Promise<void> {
    if (this.currentKind() !== "instructions" || submitLocked(this.state)) return;
    await this.guard(async () => {
      this.acceptScene(await this.api.advance(this.sessionId()));
    });
  }

  clickArrow(canonicalIndex: number, step: number): void {
    if (this.currentKind() !== "choice") return;
    bumpCounter(this.state, canonicalIndex, step);
    this.emit();
  }

  async clickFeed(): Promise<void> {
    if (this.currentKind() !== "choice" || submitLocked(this.state)) return;
    const leaves = leavesPayload(this.state);
    const decisionTime = this.decisionTimer.elapsedMs();
    await this.guard(async () => {
      const result = await this.api.feed(this.sessionId(), leaves, decisionTime);
      // the follow-up scene may not restate the pack (attention hides it)
      this.state.packSize = result.pack_size;
      this.acceptScene(result.scene);
    });
  }

  async clickContinue(): Promise<void> {
    if (this.currentKind() !== "feedback" || submitLocked(this.state)) return;
    await this.guard(async () => {
      this.acceptScene(await this.api.advance(this.sessionId()));
    });
  }

  async submitAttention(answer: number): Promise<void> {
    if (this.currentKind() !== "attention") return;
    await this.guard(async () => {
      const result = await this.api.submitAttention(this.sessionId(), answer);
      this.state.lastAttentionCorrect = result.correct;
      this.acceptScene(result.scene);
    });
  }

  /** Survey form edits; no server traffic until the submit click. */
  editSurvey(edit: (form: SurveyForm) => void): void {
    edit(this.form);
    this.emit();
  }

  async submitSurvey(): Promise<void> {
    const scene = this.state.scene;
    if (scene === null || scene.kind !== "survey") return;
    const problems = validateSurvey(this.form, scene.items);
    if (problems.length > 0) {
      this.state.surveyProblems = problems;
      this.emit();
      return;
    }
    await this.guard(async () => {
      this.acceptScene(await this.api.submitSurvey(this.sessionId(), surveyPayload(this.form)));
    });
  }

  /** Re-run the call that hit a network failure; local state is untouched. */
  async retry(): Promise<void> {
    const pending = this.pendingRetry;
    if (pending === null) return;
    this.pendingRetry = null;
    this.state.retry = null;
    this.emit();
    await pending();
  }

  // ------------------------------------------------------------- internals

  private sessionId(): string {
    if (this.state.sessionId === null) throw new Error("no session yet");
    return this.state.sessionId;
  }

  private currentKind(): string | null {
    return this.state.scene?.kind ?? null;
  }

  /** Swap in a scene and start whatever gate or fetch it needs. */
  private acceptScene(scene: Scene): void {
    if (scene.kind === "progress" && scene.duration_s <= 0) {
      this.acceptScene(scene.next);
      return;
    }
    applyScene(this.state, scene);
    this.countdown.cancel();
    if (this.state.countdownRemaining > 0) {
      this.countdown.start(
        this.state.countdownRemaining,
        (remaining) => {
          this.state.countdownRemaining = remaining;
          this.emit();
        },
        () => {
          this.state.countdownRemaining = 0;
          if (this.state.scene?.kind === "progress") {
            this.acceptScene(this.state.scene.next);
            return;
          }
          this.emit();
        },
      );
    }
    if (scene.kind !== "progress") {
      this.enteredScene(scene);
    }
    this.emit();
  }

  private enteredScene(scene: PlainScene): void {
    if (scene.kind === "choice") {
      this.enteredChoice(scene);
    } else if (scene.kind === "feedback") {
      void this.fetchFeedbackTable();
    } else if (scene.kind === "payout") {
      void this.fetchPaymentCode();
    }
  }

  private enteredChoice(scene: ChoiceScene): void {
    if (scene.trial !== this.renderedTrial) {
      // a new trial starts with untouched counters and a fresh stopwatch;
      // re-entering the same trial (resync) keeps both
      this.renderedTrial = scene.trial;
      this.state.counters.fill(0);
      this.decisionTimer.start();
    }
  }

  private async fetchFeedbackTable(): Promise<void> {
    await this.guard(async () => {
      this.state.feedback = await this.api.getFeedback(this.sessionId());
      this.emit();
    });
  }

  private async fetchPaymentCode(): Promise<void> {
    try {
      this.state.paymentCode = await this.api.paymentCode(this.sessionId());
      this.emit();
    } catch (error) {
      if (error instanceof ApiHttpError && error.status === 409) {
        // one-shot code was already handed out (page reload); nothing to show
        this.state.paymentCode = null;
        this.emit();
        return;
      }
      if (error instanceof NetworkError) {
        this.showRetryBanner(() => this.fetchPaymentCode());
        return;
      }
      throw error;
    }
  }

  /**
   * Shared error policy: network failures raise the retry banner with the
   * attempted call stored for replay; a 409 means the client's idea of the
   * scene is stale, so the truth is re-fetched from GET scene.
   */
  private async guard(work: () => Promise<void>): Promise<void> {
    try {
      await work();
    } catch (error) {
      if (error instanceof NetworkError) {
        this.showRetryBanner(work);
        return;
      }
      if (error instanceof ApiHttpError && error.status === 409) {
        await this.resync();
        return;
      }
      throw error;
    }
  }

  private showRetryBanner(work: () => Promise<void>): void {
    this.pendingRetry = work;
    this.state.retry = { message: "Connection lost — your progress is safe." };
    this.emit();
  }

  private async resync(): Promise<void> {
    await this.guard(async () => {
      this.acceptScene(await this.api.getScene(this.sessionId()));
    });
  }
}
