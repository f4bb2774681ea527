/** FIFO gate for UI work.
 *
 * At most one job runs at a time; a recompute holds the queue and any
 * interactions issued meanwhile run, in order, once it settles. A rejected
 * job does not wedge the queue.
 */

export class SerialQueue {
  private tail: Promise<void> = Promise.resolve();
  private depth = 0;

  get busy(): boolean {
    return this.depth > 0;
  }

  enqueue<T>(job: () => T | Promise<T>): Promise<T> {
    this.depth += 1;
    const run = this.tail.then(job);
    const settle = () => {
      this.depth -= 1;
    };
    this.tail = run.then(settle, settle);
    return run;
  }
}
