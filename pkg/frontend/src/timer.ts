// Countdown gates and the per-trial decision stopwatch.

export class Countdown {
  private handle: ReturnType<typeof setInterval> | null = null;

  /** Ticks once per second from `seconds` down to 0, then fires onDone. */
  start(seconds: number, onTick: (remaining: number) => void, onDone: () => void): void {
    this.cancel();
    let remaining = Math.ceil(seconds);
    if (remaining <= 0) {
      onDone();
      return;
    }
    this.handle = setInterval(() => {
      remaining -= 1;
      if (remaining <= 0) {
        this.cancel();
        onTick(0);
        onDone();
      } else {
        onTick(remaining);
      }
    }, 1000);
  }

  cancel(): void {
    if (this.handle !== null) {
      clearInterval(this.handle);
      this.handle = null;
    }
  }
}

/**
 * Measures scene-interactive to submit-click on the monotonic clock, so a
 * wall-clock jump can never produce a negative or bogus duration.
 */
export class DecisionTimer {
  private startedAt: number | null = null;

  constructor(private readonly now: () => number = () => performance.now()) {}

  start(): void {
    this.startedAt = this.now();
  }

  /** Whole milliseconds since start(); 0 if never started. */
  elapsedMs(): number {
    if (this.startedAt === null) return 0;
    return Math.max(0, Math.round(this.now() - this.startedAt));
  }
}
