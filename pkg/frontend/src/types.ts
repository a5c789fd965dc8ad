/** Wire types for the annotation service API. */

export type EventKind = 'show' | 'click' | 'next' | 'button';

export interface UiEvent {
  seq: number;
  t_ms: number;
  kind: EventKind;
  image_id?: string | null;
  page?: number | null;
}

export interface MouseManifest {
  session_id: string;
  mode: 'mouse';
  rate_hz: number;
  duration_s: number;
  query_text: string;
  example_image_ids: string[];
  pages: string[][];
}

export interface RsvpManifest {
  session_id: string;
  mode: 'rsvp';
  rate_hz: number;
  duration_s: number;
  query_text: string;
  example_image_ids: string[];
  stimulus_order: { blocks: string[][]; inter_block_gap_s: number };
}

export type Manifest = MouseManifest | RsvpManifest;

export interface FinishResult {
  ap: number | null;
  n_clicks: number;
  n_seen: number;
}

/** The session log shape the core pipeline consumes (AnnotationLog JSON). */
export interface AnnotationLogDoc {
  version: 1;
  session_id: string;
  mode: 'mouse' | 'rsvp';
  rate_hz: number;
  duration_s: number;
  events: UiEvent[];
}

/** Monotonic time source; performance.now in the browser, fakes in tests. */
export interface Clock {
  now(): number;
}

/** requestAnimationFrame-style scheduler, injectable so tests control time. */
export interface FrameScheduler {
  requestFrame(cb: (t_ms: number) => void): void;
  cancel(): void;
}
