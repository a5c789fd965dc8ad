/** Browser entry: fetch the session manifest and mount the matching view.
 *
 * The session id comes from the ?session= query parameter. Events flush on a
 * short interval and drain on finish; images for the next page/block are
 * pre-fetched before playback so load hitches do not distort RSVP timing.
 */

import { ApiClient } from './api.js';
import { EventQueue } from './events.js';
import { MouseSession } from './mouse.js';
import { RsvpPlayer } from './rsvp.js';
import type { FrameScheduler, Manifest, MouseManifest, RsvpManifest } from './types.js';

const api = new ApiClient('');

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text) node.textContent = text;
  return node;
}

async function prefetch(ids: string[]): Promise<void> {
  await Promise.all(
    ids.map(
      (id) =>
        new Promise<void>((resolve) => {
          const img = new Image();
          img.onload = () => resolve();
          img.onerror = () => resolve();
          img.src = api.imageUrl(id);
        }),
    ),
  );
}

function header(root: HTMLElement, manifest: Manifest): void {
  root.appendChild(el('h2', 'query', manifest.query_text));
  const examples = el('div', 'examples');
  for (const id of manifest.example_image_ids) {
    const img = el('img');
    img.src = api.imageUrl(id);
    img.width = 120;
    examples.appendChild(img);
  }
  root.appendChild(examples);
}

function mountMouse(root: HTMLElement, manifest: MouseManifest, sessionId: string): void {
  header(root, manifest);
  const timer = el('div', 'timer', `${manifest.duration_s.toFixed(0)} s`);
  const grid = el('div', 'grid');
  const controls = el('div', 'controls');
  const startBtn = el('button', '', 'Search');
  const nextBtn = el('button', '', 'Next');
  nextBtn.disabled = true;
  controls.append(startBtn, nextBtn);
  root.append(timer, controls, grid);

  const queue = new EventQueue((events) => api.postEvents(sessionId, events));
  const session = new MouseSession(manifest, queue, { now: () => performance.now() }, {
    renderPage(pageIndex, imageIds, marked) {
      grid.replaceChildren();
      for (const id of imageIds) {
        const img = el('img', marked.has(id) ? 'marked' : '');
        img.src = api.imageUrl(id);
        img.width = 160;
        img.onclick = () => session.toggle(id);
        grid.appendChild(img);
      }
      void prefetch(manifest.pages[pageIndex + 1] ?? []);
    },
    updateTimer(msLeft) {
      timer.textContent = `${(msLeft / 1000).toFixed(0)} s`;
    },
    onFinish() {
      nextBtn.disabled = true;
      grid.classList.add('disabled');
      void queue
        .drain()
        .then(() => api.finish(sessionId))
        .then((r) => {
          timer.textContent = `done: ${r.n_clicks} clicks over ${r.n_seen} images`;
        });
    },
  });

  startBtn.onclick = () => {
    startBtn.disabled = true;
    nextBtn.disabled = false;
    void prefetch(manifest.pages[0] ?? []).then(() => {
      session.start();
      const loop = setInterval(() => {
        session.tick();
        void queue.flush();
        if (session.isFinished) clearInterval(loop);
      }, 250);
    });
  };
  nextBtn.onclick = () => session.nextPage();
}

function rafScheduler(): FrameScheduler {
  let handle = 0;
  return {
    requestFrame(cb) {
      handle = requestAnimationFrame(cb);
    },
    cancel() {
      cancelAnimationFrame(handle);
    },
  };
}

function mountRsvp(root: HTMLElement, manifest: RsvpManifest, sessionId: string): void {
  header(root, manifest);
  const stage = el('div', 'stage', 'press Start; spacebar when you spot a target');
  const startBtn = el('button', '', 'Start');
  root.append(startBtn, stage);
  const image = el('img');
  image.width = 480;

  const queue = new EventQueue((events) => api.postEvents(sessionId, events));
  const player = new RsvpPlayer(manifest, queue, rafScheduler(), {
    showImage(imageId) {
      image.src = api.imageUrl(imageId);
      if (image.parentElement !== stage) stage.replaceChildren(image);
    },
    showRest(nextBlockIndex) {
      stage.replaceChildren(
        el('p', 'rest', `rest - block ${nextBlockIndex + 1} starts shortly`),
      );
      void prefetch(manifest.stimulus_order.blocks[nextBlockIndex] ?? []);
    },
    onDone() {
      stage.replaceChildren(el('p', '', 'session complete'));
      void queue.drain().then(() => api.finish(sessionId));
    },
    onTimingWarning(message) {
      console.warn(`timing: ${message}`);
    },
  });

  document.addEventListener('keydown', (ev) => {
    if (ev.code === 'Space') {
      ev.preventDefault();
      player.pressButton(performance.now());
    }
  });
  startBtn.onclick = () => {
    startBtn.disabled = true;
    void prefetch(manifest.stimulus_order.blocks[0] ?? []).then(() => {
      player.start();
      const flusher = setInterval(() => {
        void queue.flush();
        if (player.isDone) clearInterval(flusher);
      }, 500);
    });
  };
}

async function boot(): Promise<void> {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app element');
  const sessionId = new URLSearchParams(window.location.search).get('session');
  if (!sessionId) {
    root.textContent = 'missing ?session=<id>';
    return;
  }
  const manifest = await api.manifest(sessionId);
  if (manifest.mode === 'mouse') {
    mountMouse(root, manifest, sessionId);
  } else {
    mountRsvp(root, manifest, sessionId);
  }
}

void boot();
