/** Buffered, sequence-numbered event stream with at-least-once delivery.
 *
 * Every emitted event gets the next sequence number; the server deduplicates
 * on seq, so retries are safe. On network failure the batch stays in the
 * buffer and the next flush resends everything still unacknowledged.
 */

import type { EventKind, UiEvent } from './types.js';

export type PostEvents = (events: UiEvent[]) => Promise<void>;

export class EventQueue {
  private nextSeq = 0;
  private buffer: UiEvent[] = [];
  private log: UiEvent[] = [];
  private flushing = false;

  constructor(private post: PostEvents) {}

  emit(t_ms: number, kind: EventKind, image_id?: string | null, page?: number | null): UiEvent {
    const ev: UiEvent = { seq: this.nextSeq++, t_ms: Math.round(t_ms), kind };
    if (image_id !== undefined) ev.image_id = image_id;
    if (page !== undefined) ev.page = page;
    this.buffer.push(ev);
    this.log.push(ev);
    return ev;
  }

  /** All events emitted so far (the client-side authoritative log). */
  allEvents(): UiEvent[] {
    return [...this.log];
  }

  pendingCount(): number {
    return this.buffer.length;
  }

  /** Push buffered events to the server; on failure the buffer is kept. */
  async flush(): Promise<boolean> {
    if (this.flushing || this.buffer.length === 0) return true;
    this.flushing = true;
    const batch = [...this.buffer];
    try {
      await this.post(batch);
      // only drop what this batch covered; later emits stay queued
      this.buffer = this.buffer.filter((e) => e.seq > batch[batch.length - 1].seq);
      return true;
    } catch {
      return false; // buffer intact; caller retries later
    } finally {
      this.flushing = false;
    }
  }

  /** Flush until empty, waiting retryDelayMs between failed attempts. */
  async drain(retryDelayMs = 250, maxAttempts = 20): Promise<void> {
    for (let attempt = 0; attempt < maxAttempts; attempt++) {
      if (await this.flush()) {
        if (this.buffer.length === 0) return;
      }
      await new Promise((resolve) => setTimeout(resolve, retryDelayMs));
    }
    throw new Error(`event queue not drained after ${maxAttempts} attempts`);
  }
}
