import { describe, expect, it } from "vitest";

import { SerialQueue } from "../src/queue";

function gate(): { promise: Promise<void>; open: () => void } {
  let open!: () => void;
  const promise = new Promise<void>((resolve) => {
    open = resolve;
  });
  return { promise, open };
}

describe("SerialQueue", () => {
  it("runs jobs in submission order", async () => {
    const q = new SerialQueue();
    const order: number[] = [];
    await Promise.all([
      q.enqueue(async () => {
        order.push(1);
      }),
      q.enqueue(() => {
        order.push(2);
      }),
      q.enqueue(async () => {
        order.push(3);
      }),
    ]);
    expect(order).toEqual([1, 2, 3]);
  });

  it("holds later work until the in-flight job settles", async () => {
    const q = new SerialQueue();
    const g = gate();
    let firstDone = false;
    let secondStarted = false;
    const first = q.enqueue(async () => {
      await g.promise;
      firstDone = true;
    });
    const second = q.enqueue(() => {
      secondStarted = true;
      expect(firstDone).toBe(true);
    });
    await Promise.resolve();
    expect(secondStarted).toBe(false);
    expect(q.busy).toBe(true);
    g.open();
    await Promise.all([first, second]);
    expect(secondStarted).toBe(true);
    expect(q.busy).toBe(false);
  });

  it("keeps going after a rejected job", async () => {
    const q = new SerialQueue();
    const boom = q.enqueue(() => {
      throw new Error("boom");
    });
    await expect(boom).rejects.toThrow("boom");
    const after = await q.enqueue(() => "still running");
    expect(after).toBe("still running");
    expect(q.busy).toBe(false);
  });

  it("returns each job's own result", async () => {
    const q = new SerialQueue();
    expect(await q.enqueue(() => 7)).toBe(7);
    expect(await q.enqueue(async () => "x")).toBe("x");
  });
});
