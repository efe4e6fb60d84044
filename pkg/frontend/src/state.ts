// Client-side scene state. Counters live in canonical plant order (p1..p5);
// the shuffled display order is a pure render-time permutation and must never
// leak into anything sent to the server.
import type { FeedbackPayload, Scene } from "./protocol";

export const LEAF_MIN = 0;
export const LEAF_MAX = 6;
export const PLANT_COUNT = 5;

export interface RetryState {
  message: string;
}

export interface ClientSceneState {
  scene: Scene | null;
  sessionId: string | null;
  /** seconds left on the current gate; 0 means interactive */
  countdownRemaining: number;
  /** plant ids 1..5 in the order this participant sees them */
  displayOrder: number[];
  /** leaves per plant, canonical order, each clamped to 0..6 */
  counters: number[];
  packSize: number;
  /** end-of-block table as fetched from the server, display-only */
  feedback: FeedbackPayload | null;
  surveyProblems: string[];
  paymentCode: string | null;
  lastAttentionCorrect: boolean | null;
  retry: RetryState | null;
}

export function initialState(): ClientSceneState {
  return {
    scene: null,
    sessionId: null,
    countdownRemaining: 0,
    displayOrder: [1, 2, 3, 4, 5],
    counters: new Array(PLANT_COUNT).fill(0),
    packSize: 0,
    feedback: null,
    surveyProblems: [],
    paymentCode: null,
    lastAttentionCorrect: null,
    retry: null,
  };
}

export function clampLeaves(value: number): number {
  return Math.min(LEAF_MAX, Math.max(LEAF_MIN, Math.trunc(value)));
}

/** Arrow-click update; out-of-range results stick to the bounds. */
export function bumpCounter(state: ClientSceneState, canonicalIndex: number, step: number): void {
  if (canonicalIndex < 0 || canonicalIndex >= PLANT_COUNT) {
    throw new RangeError(`no plant at index ${canonicalIndex}`);
  }
  const current = state.counters[canonicalIndex] ?? 0;
  state.counters[canonicalIndex] = clampLeaves(current + step);
}

/** True while a countdown gate is blocking the scene's action button. */
export function submitLocked(state: ClientSceneState): boolean {
  return state.countdownRemaining > 0;
}

/**
 * Counter values permuted for the screen: slot i shows the plant
 * displayOrder[i]. Render-side only; API payloads use state.counters as-is.
 */
export function countersForDisplay(state: ClientSceneState): { plant: number; value: number }[] {
  return state.displayOrder.map((plant) => ({
    plant,
    value: state.counters[plant - 1] ?? 0,
  }));
}

/** The canonical feed payload; independent of any display permutation. */
export function leavesPayload(state: ClientSceneState): number[] {
  return state.counters.slice();
}

/** Fold a freshly fetched scene into the state. */
export function applyScene(state: ClientSceneState, scene: Scene): void {
  state.scene = scene;
  state.feedback = null;
  state.surveyProblems = [];
  const inner = scene.kind === "progress" ? scene.next : scene;
  if (inner.kind === "instructions" || inner.kind === "choice") {
    state.displayOrder = inner.plant_display_order.slice();
  }
  if ("pack_size" in inner) {
    state.packSize = inner.pack_size;
  }
  if (scene.kind === "progress") {
    state.countdownRemaining = scene.duration_s;
  } else if (scene.kind === "instructions") {
    state.countdownRemaining = scene.start_delay_s;
  } else if (scene.kind === "feedback") {
    state.countdownRemaining = scene.continue_delay_s;
  } else {
    state.countdownRemaining = 0;
  }
}
