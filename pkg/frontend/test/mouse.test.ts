import { mkdirSync, writeFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

import { EventQueue } from '../src/events.js';
import { MouseSession } from '../src/mouse.js';
import type { MouseManifest } from '../src/types.js';

const HERE = dirname(fileURLToPath(import.meta.url));

class FakeClock {
  t = 0;
  now(): number {
    return this.t;
  }
  advance(ms: number): void {
    this.t += ms;
  }
}

function manifestOf(pages: string[][], durationS = 100): MouseManifest {
  return {
    session_id: 's-mouse',
    mode: 'mouse',
    rate_hz: 10,
    duration_s: durationS,
    query_text: 'find the ring',
    example_image_ids: pages[0].slice(0, 4),
    pages,
  };
}

function makeSession(pages: string[][], durationS = 100) {
  const clock = new FakeClock();
  const queue = new EventQueue(async () => {});
  const rendered: { page: number; ids: string[] }[] = [];
  let finished = 0;
  const session = new MouseSession(manifestOf(pages, durationS), queue, clock, {
    renderPage: (page, ids) => rendered.push({ page, ids: [...ids] }),
    updateTimer: () => {},
    onFinish: () => {
      finished += 1;
    },
  });
  return { session, clock, queue, rendered, finishedCount: () => finished };
}

describe('MouseSession', () => {
  it('start shows page 0; next emits show events for the whole new page', () => {
    const pages = [
      ['a0', 'a1', 'a2'],
      ['a3', 'a4', 'a5'],
    ];
    const { session, clock, queue } = makeSession(pages);
    session.start();
    clock.advance(2_000);
    session.nextPage();

    const events = queue.allEvents();
    const page1Shows = events.filter((e) => e.kind === 'show' && e.page === 1);
    expect(page1Shows.map((e) => e.image_id)).toEqual(['a3', 'a4', 'a5']);
    expect(events.filter((e) => e.kind === 'next')).toHaveLength(1);
  });

  it('click toggles exactly once per image and both directions are logged', () => {
    const { session, clock, queue } = makeSession([['a0', 'a1']]);
    session.start();
    clock.advance(500);
    session.toggle('a0');
    expect([...session.markedIds]).toEqual(['a0']);
    clock.advance(500);
    session.toggle('a0'); // unmark
    expect([...session.markedIds]).toEqual([]);
    expect(queue.allEvents().filter((e) => e.kind === 'click')).toHaveLength(2);
  });

  it('clicks after the timer hits zero are ignored and finish happens once', () => {
    const { session, clock, queue, finishedCount } = makeSession([['a0', 'a1']], 10);
    session.start();
    clock.advance(5_000);
    session.toggle('a0');
    clock.advance(6_000); // past the 10 s budget
    session.tick();
    expect(session.isFinished).toBe(true);
    session.toggle('a1'); // ignored
    session.tick();
    expect(finishedCount()).toBe(1);
    const clicks = queue.allEvents().filter((e) => e.kind === 'click');
    expect(clicks.map((e) => e.image_id)).toEqual(['a0']);
  });

  it('scripted session: 5 clicks across 2 of 3 pages; log partitions as hand-computed', () => {
    const pages = [
      ['a0', 'a1', 'a2', 'a3'],
      ['a4', 'a5', 'a6', 'a7'],
      ['a8', 'a9', 'a10', 'a11'],
    ];
    const { session, clock } = makeSession(pages, 100);
    session.start(); //               t=0: show a0..a3 (page 0)
    clock.advance(1_000);
    session.toggle('a1'); //          t=1000: click a1
    clock.advance(1_000);
    session.toggle('a3'); //          t=2000: click a3
    clock.advance(1_000);
    session.nextPage(); //            t=3000: next -> show a4..a7 (page 1)
    clock.advance(1_000);
    session.toggle('a4'); //          t=4000: click a4
    clock.advance(1_000);
    session.toggle('a6'); //          t=5000: click a6
    clock.advance(1_000);
    session.toggle('a5'); //          t=6000: click a5 (the last positive)
    clock.advance(2_000);
    session.finish();

    const doc = session.toLogDoc();
    // hand-computed partition per the core rules:
    //   p_a  = clicked in click order           -> a1 a3 a4 a6 a5
    //   n_a  = shown at/before t=6000, unclicked -> a0 a2 a7 (display order)
    //   rest = never observed                    -> a8 a9 a10 a11
    const clicks = doc.events.filter((e) => e.kind === 'click');
    expect(clicks.map((e) => e.image_id)).toEqual(['a1', 'a3', 'a4', 'a6', 'a5']);
    const shows = doc.events.filter((e) => e.kind === 'show');
    expect(shows).toHaveLength(8); // pages 0 and 1 only

    // persist for the Python round-trip integration test
    const outDir = join(HERE, '..', 'test-output');
    mkdirSync(outDir, { recursive: true });
    writeFileSync(join(outDir, 'roundtrip-log.json'), JSON.stringify(doc, null, 2) + '\n');

    // sequence numbers strictly increasing; clicks reference shown images
    const seqs = doc.events.map((e) => e.seq);
    expect(seqs).toEqual([...seqs].sort((x, y) => x - y));
    const shownBefore = new Set<string>();
    for (const e of doc.events) {
      if (e.kind === 'show' && e.image_id) shownBefore.add(e.image_id);
      if (e.kind === 'click') expect(shownBefore.has(e.image_id!)).toBe(true);
    }
  });

  it('does not advance past the last page', () => {
    const { session, clock, queue } = makeSession([['a0'], ['a1']]);
    session.start();
    clock.advance(100);
    session.nextPage();
    clock.advance(100);
    session.nextPage(); // no third page; ignored
    expect(session.currentPage).toBe(1);
    expect(queue.allEvents().filter((e) => e.kind === 'next')).toHaveLength(1);
  });
});
