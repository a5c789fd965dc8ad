import { describe, expect, it } from 'vitest';

import { EventQueue } from '../src/events.js';
import type { UiEvent } from '../src/types.js';

describe('EventQueue', () => {
  it('assigns strictly increasing sequence numbers', () => {
    const queue = new EventQueue(async () => {});
    queue.emit(0, 'show', 'a', 0);
    queue.emit(5, 'click', 'a', 0);
    queue.emit(9, 'next', undefined, 1);
    const seqs = queue.allEvents().map((e) => e.seq);
    expect(seqs).toEqual([0, 1, 2]);
  });

  it('keeps the buffer on post failure and resends the same seqs', async () => {
    const batches: UiEvent[][] = [];
    let fail = true;
    const queue = new EventQueue(async (events) => {
      if (fail) throw new Error('network down');
      batches.push(events);
    });
    queue.emit(0, 'show', 'a', 0);
    queue.emit(10, 'click', 'a', 0);

    expect(await queue.flush()).toBe(false);
    expect(queue.pendingCount()).toBe(2);

    fail = false;
    expect(await queue.flush()).toBe(true);
    expect(queue.pendingCount()).toBe(0);
    expect(batches[0].map((e) => e.seq)).toEqual([0, 1]);
  });

  it('events emitted during a flush stay queued for the next flush', async () => {
    const batches: UiEvent[][] = [];
    let release: () => void = () => {};
    const gate = new Promise<void>((resolve) => (release = resolve));
    const queue = new EventQueue(async (events) => {
      batches.push(events);
      await gate;
    });
    queue.emit(0, 'show', 'a', 0);
    const flushing = queue.flush();
    queue.emit(20, 'click', 'a', 0); // lands while the first batch is in flight
    release();
    await flushing;
    expect(queue.pendingCount()).toBe(1);
    await queue.flush();
    expect(batches.map((b) => b.map((e) => e.seq))).toEqual([[0], [1]]);
  });

  it('drain retries until the buffer empties', async () => {
    let failures = 2;
    const batches: UiEvent[][] = [];
    const queue = new EventQueue(async (events) => {
      if (failures > 0) {
        failures -= 1;
        throw new Error('flaky');
      }
      batches.push(events);
    });
    queue.emit(0, 'show', 'a', 0);
    await queue.drain(1);
    expect(queue.pendingCount()).toBe(0);
    expect(batches).toHaveLength(1);
  });

  it('rounds timestamps to whole milliseconds', () => {
    const queue = new EventQueue(async () => {});
    const ev = queue.emit(16.6667, 'show', 'a', 0);
    expect(ev.t_ms).toBe(17);
  });
});
