/** Store behavior around the mutation queue, confirmation dialogs, the
 * one-by-one queue, and session expiry.
 */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { Client } from "../src/api";
import { debounce } from "../src/panels";
import { openSession, type Store } from "../src/state";
import { gridUnits, installFetch, MockService } from "./mockService";

const UNITS = gridUnits(3, 2, 10, 5);

let mock: MockService;
let store: Store;

beforeEach(async () => {
  mock = new MockService("s4", 50, 35, UNITS);
  installFetch(mock);
  store = await openSession(new Client(), "s4");
});

afterEach(() => {
  vi.useRealTimers();
});

describe("mutation queue", () => {
  it("serializes concurrent mutations in dispatch order", async () => {
    await store.generateUnits(1.0);
    mock.requests.length = 0;
    const first = store.addLabel("one");
    const second = store.addLabel("two");
    const third = store.addLabel("three");
    await Promise.all([first, second, third]);
    const posts = mock.requests.filter((r) => r.method === "POST").map((r) => (r.body as { name: string }).name);
    expect(posts).toEqual(["one", "two", "three"]);
    // each mutation refreshed the mirror before the next one started
    const order = mock.requests.map((r) => `${r.method} ${r.path.split("?")[0]}`);
    const firstSummary = order.indexOf("GET /sessions/s4");
    expect(firstSummary).toBeGreaterThan(0);
    expect(order.filter((x) => x === "GET /sessions/s4")).toHaveLength(3);
  });
});

describe("regeneration confirmation", () => {
  it("surfaces ConfirmationRequired as a pending dialog and retries with confirm", async () => {
    await store.generateUnits(1.0);
    await store.addLabel("text");
    await store.assign(1, 1);
    await store.generateUnits(2.0);
    expect(store.pendingConfirm).not.toBeNull();
    expect(store.pendingConfirm!.labeledUnits).toEqual([1]);
    expect(mock.assignments.size).toBe(1); // nothing was discarded yet

    await store.confirmPending();
    expect(store.pendingConfirm).toBeNull();
    expect(mock.assignments.size).toBe(0); // confirmed regeneration reset labels
    expect(store.summary?.unlabeled).toBe(UNITS.length);
  });

  it("dismissing the dialog keeps every assignment", async () => {
    await store.generateUnits(1.0);
    await store.addLabel("text");
    await store.assign(1, 1);
    await store.generateUnits(2.0);
    store.dismissConfirm();
    expect(store.pendingConfirm).toBeNull();
    expect(mock.assignments.get(1)).toBe(1);
  });
});

describe("one-by-one queue", () => {
  it("auto-advances to the next unlabeled unit after each assignment", async () => {
    await store.generateUnits(1.0);
    await store.addLabel("text");
    store.setMode("AnnotateOneByOne");
    expect(store.focused).toBe(1);
    await store.assignFocused(1);
    expect(store.focused).toBe(2);
    await store.assignFocused(1);
    expect(store.focused).toBe(3);
    store.skipFocused();
    expect(store.focused).toBe(4);
  });

  it("finishes the restricted queue without leaking into other units", async () => {
    await store.generateUnits(1.0);
    await store.addLabel("text");
    store.setMode("AnnotateRoi");
    await store.selectRoi([5, 5, 25, 10]); // units 1 and 2
    await store.applyRoi("per_unit", null);
    expect(store.queue).toEqual([1, 2]);
    await store.assignFocused(1);
    expect(store.focused).toBe(2);
    await store.assignFocused(1);
    expect(store.focused).toBeNull(); // queue exhausted, unit 3+ untouched
    expect(mock.assignments.has(3)).toBe(false);
  });
});

describe("session expiry", () => {
  it("flags the store when the service answers 404", async () => {
    mock.sid = "gone"; // every request now misses
    await expect(store.refresh()).rejects.toMatchObject({ status: 404 });
    expect(store.sessionExpired).toBe(true);
    expect(store.notice?.kind).toBe("error");
  });
});

describe("threshold debounce", () => {
  it("coalesces a slider burst into one trailing call", () => {
    vi.useFakeTimers();
    const calls: number[] = [];
    const submit = debounce((t: number) => calls.push(t), 150);
    for (let t = 10; t <= 90; t += 10) {
      submit(t);
      vi.advanceTimersByTime(30); // faster than the 150ms window
    }
    expect(calls).toEqual([]);
    vi.advanceTimersByTime(150);
    expect(calls).toEqual([90]); // only the final value went out
  });
});
