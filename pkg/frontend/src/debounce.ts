/**
 * Debounced re-query scheduler with stale-response discarding.
 *
 * Every state change that affects results calls `schedule()`; after the
 * debounce window one request fires. Responses carry the monotone request
 * sequence number; anything older than the newest applied response is
 * dropped, so slow responses never clobber fresh ones.
 */

export const DEBOUNCE_MS = 250;

type Clock = {
  setTimeout: (fn: () => void, ms: number) => unknown;
  clearTimeout: (handle: unknown) => void;
};

const realClock: Clock = {
  setTimeout: (fn, ms) => setTimeout(fn, ms),
  clearTimeout: (h) => clearTimeout(h as number),
};

export class QueryScheduler<T> {
  private timer: unknown = null;
  private seq = 0;
  private applied = 0;
  requestCount = 0;

  constructor(
    private readonly run: (seq: number) => Promise<T>,
    private readonly apply: (result: T, seq: number) => void,
    private readonly onError: (err: unknown) => void = () => {},
    private readonly debounceMs: number = DEBOUNCE_MS,
    private readonly clock: Clock = realClock,
  ) {}

  /** Schedule a (re-)query after the debounce window; coalesces bursts. */
  schedule(): void {
    if (this.timer !== null) this.clock.clearTimeout(this.timer);
    this.timer = this.clock.setTimeout(() => {
      this.timer = null;
      this.fire();
    }, this.debounceMs);
  }

  /** Fire immediately (explicit user submit); cancels any pending timer. */
  fire(): void {
    if (this.timer !== null) {
      this.clock.clearTimeout(this.timer);
      this.timer = null;
    }
    const seq = ++this.seq;
    this.requestCount += 1;
    this.run(seq).then(
      (result) => {
        if (seq > this.applied) {
          this.applied = seq;
          this.apply(result, seq);
        }
      },
      (err) => {
        if (seq > this.applied) this.onError(err);
      },
    );
  }

  get pending(): boolean {
    return this.timer !== null;
  }
}
