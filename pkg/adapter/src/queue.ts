/**
 * Single-flight job queue for GPU-bound seats. One generation runs at a
 * time; later arrivals wait their turn, and anything past the depth cap is
 * refused immediately so the caller can back off and retry.
 */

export class QueueFullError extends Error {}

export class SingleFlightQueue {
  private tail: Promise<void> = Promise.resolve();
  private depth = 0;

  constructor(
    readonly seat: string,
    readonly maxDepth: number,
  ) {
    if (!Number.isInteger(maxDepth) || maxDepth < 1) {
      throw new Error(`seat ${seat}: queue depth must be a positive integer`);
    }
  }

  /** Jobs running plus jobs waiting. */
  get pending(): number {
    return this.depth;
  }

  run<T>(job: () => Promise<T>): Promise<T> {
    if (this.depth >= this.maxDepth) {
      return Promise.reject(
        new QueueFullError(
          `seat ${this.seat}: queue full, ${this.maxDepth} request(s) already pending`,
        ),
      );
    }
    this.depth += 1;
    const turn = this.tail;
    let release!: () => void;
    this.tail = new Promise<void>((resolve) => {
      release = resolve;
    });
    return (async () => {
      await turn;
      try {
        return await job();
      } finally {
        this.depth -= 1;
        release();
      }
    })();
  }
}
