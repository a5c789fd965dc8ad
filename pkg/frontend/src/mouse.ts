/** Timed mouse annotation session over a paginated grid.
 *
 * Framework-free controller: rendering goes through injected hooks so the
 * same logic drives the browser DOM and headless tests. Click toggles an
 * image's marked state (both directions are logged); the countdown is
 * enforced here as well as server-side, and hitting zero finishes exactly
 * once.
 */

import { EventQueue } from './events.js';
import type { Clock, MouseManifest, UiEvent } from './types.js';

export interface MouseHooks {
  renderPage(pageIndex: number, imageIds: string[], marked: ReadonlySet<string>): void;
  updateTimer(msLeft: number): void;
  onFinish(): void;
}

export class MouseSession {
  private t0 = NaN;
  private page = 0;
  private marked = new Set<string>();
  private shown = new Set<string>();
  private finished = false;

  constructor(
    private manifest: MouseManifest,
    private queue: EventQueue,
    private clock: Clock,
    private hooks: MouseHooks,
  ) {}

  get budgetMs(): number {
    return this.manifest.duration_s * 1000;
  }

  get currentPage(): number {
    return this.page;
  }

  get markedIds(): ReadonlySet<string> {
    return this.marked;
  }

  get isFinished(): boolean {
    return this.finished;
  }

  elapsedMs(): number {
    return this.clock.now() - this.t0;
  }

  timeLeftMs(): number {
    return Math.max(0, this.budgetMs - this.elapsedMs());
  }

  /** Search pressed: start the countdown and show page 0. */
  start(): void {
    this.t0 = this.clock.now();
    this.showPage(0);
  }

  private showPage(index: number): void {
    this.page = index;
    const ids = this.manifest.pages[index] ?? [];
    const t = this.elapsedMs();
    for (const imageId of ids) {
      this.shown.add(imageId);
      this.queue.emit(t, 'show', imageId, index);
    }
    this.hooks.renderPage(index, ids, this.marked);
  }

  /** Next button: advance one page (no wrap) and log the transition. */
  nextPage(): void {
    if (this.finished || this.timeLeftMs() <= 0) return;
    if (this.page + 1 >= this.manifest.pages.length) return;
    this.queue.emit(this.elapsedMs(), 'next', undefined, this.page + 1);
    this.showPage(this.page + 1);
  }

  /** Left click: toggle marked state; ignored after time is up. */
  toggle(imageId: string): void {
    if (this.finished || this.timeLeftMs() <= 0) return;
    if (!this.shown.has(imageId)) return;
    if (this.marked.has(imageId)) {
      this.marked.delete(imageId);
    } else {
      this.marked.add(imageId);
    }
    this.queue.emit(this.elapsedMs(), 'click', imageId, this.page);
    this.hooks.renderPage(this.page, this.manifest.pages[this.page] ?? [], this.marked);
  }

  /** Timer tick from the glue loop; finishes the session at zero. */
  tick(): void {
    if (this.finished) return;
    const left = this.timeLeftMs();
    this.hooks.updateTimer(left);
    if (left <= 0) this.finish();
  }

  finish(): void {
    if (this.finished) return;
    this.finished = true;
    this.hooks.onFinish();
  }

  /** The client-side AnnotationLog document for this session. */
  toLogDoc(): {
    version: 1;
    session_id: string;
    mode: 'mouse';
    rate_hz: number;
    duration_s: number;
    events: UiEvent[];
  } {
    return {
      version: 1,
      session_id: this.manifest.session_id,
      mode: 'mouse',
      rate_hz: this.manifest.rate_hz,
      duration_s: this.manifest.duration_s,
      events: this.queue.allEvents(),
    };
  }
}
