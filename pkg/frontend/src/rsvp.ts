/** RSVP player: frame-scheduled presentation at the manifest rate.
 *
 * Each animation frame computes which stimulus index should be on screen
 * from the monotonic clock, so display durations do not drift with frame
 * jitter. Actual per-image display timestamps are logged as show events;
 * spacebar presses log button events (image context during a block, nulls
 * during rest screens). Skipped indices from dropped frames are logged and
 * surfaced as timing warnings.
 */

import { EventQueue } from './events.js';
import type { FrameScheduler, RsvpManifest } from './types.js';

export interface RsvpHooks {
  showImage(imageId: string, blockIndex: number): void;
  showRest(nextBlockIndex: number): void;
  onDone(): void;
  onTimingWarning?(message: string): void;
}

type Phase = 'idle' | 'block' | 'rest' | 'done';

export class RsvpPlayer {
  private t0 = NaN;
  private phase: Phase = 'idle';
  private blockIndex = 0;
  private stimulusIndex = -1;
  private phaseStart = 0;
  private currentImage: string | null = null;

  constructor(
    private manifest: RsvpManifest,
    private queue: EventQueue,
    private scheduler: FrameScheduler,
    private hooks: RsvpHooks,
  ) {}

  get intervalMs(): number {
    return 1000 / this.manifest.rate_hz;
  }

  get gapMs(): number {
    return this.manifest.stimulus_order.inter_block_gap_s * 1000;
  }

  get isDone(): boolean {
    return this.phase === 'done';
  }

  start(): void {
    if (this.phase !== 'idle') return;
    this.phase = 'block';
    this.blockIndex = 0;
    this.stimulusIndex = -1;
    this.scheduler.requestFrame((t) => {
      this.t0 = t;
      this.phaseStart = t;
      this.onFrame(t);
    });
  }

  /** Spacebar: log a button press against whatever is on screen. */
  pressButton(t_ms?: number): void {
    if (this.phase === 'done' || this.phase === 'idle') return;
    const t = (t_ms ?? this.lastFrameTime) - this.t0;
    if (this.phase === 'block' && this.currentImage !== null) {
      this.queue.emit(t, 'button', this.currentImage, this.blockIndex);
    } else {
      this.queue.emit(t, 'button', null, null); // rest screen: excluded downstream
    }
  }

  private lastFrameTime = 0;

  private onFrame(t: number): void {
    this.lastFrameTime = t;
    if (this.phase === 'block') {
      this.frameInBlock(t);
    } else if (this.phase === 'rest') {
      if (t - this.phaseStart >= this.gapMs) {
        this.phase = 'block';
        this.phaseStart = t;
        this.stimulusIndex = -1;
        this.currentImage = null;
      }
    }
    if (this.phase !== 'done') {
      this.scheduler.requestFrame((next) => this.onFrame(next));
    }
  }

  private frameInBlock(t: number): void {
    const block = this.manifest.stimulus_order.blocks[this.blockIndex];
    const due = Math.floor((t - this.phaseStart) / this.intervalMs);
    if (due <= this.stimulusIndex) return;
    if (due > this.stimulusIndex + 1 && this.stimulusIndex >= 0) {
      const skipped = due - this.stimulusIndex - 1;
      this.hooks.onTimingWarning?.(
        `dropped ${skipped} frame(s) near stimulus ${due} of block ${this.blockIndex}`,
      );
    }
    // log every index we passed (skipped ones share this frame's timestamp)
    for (let idx = this.stimulusIndex + 1; idx <= due; idx++) {
      if (idx >= block.length) break;
      this.queue.emit(t - this.t0, 'show', block[idx], this.blockIndex);
    }
    this.stimulusIndex = Math.min(due, block.length - 1);
    if (due >= block.length) {
      this.endOfBlock(t);
      return;
    }
    this.currentImage = block[this.stimulusIndex];
    this.hooks.showImage(this.currentImage, this.blockIndex);
  }

  private endOfBlock(t: number): void {
    this.currentImage = null;
    if (this.blockIndex + 1 >= this.manifest.stimulus_order.blocks.length) {
      this.phase = 'done';
      this.hooks.onDone();
      return;
    }
    this.blockIndex += 1;
    this.phase = 'rest';
    this.phaseStart = t;
    this.hooks.showRest(this.blockIndex);
  }
}
