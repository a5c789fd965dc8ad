/** Thin fetch client for the annotation service. */

import type { FinishResult, Manifest, UiEvent } from './types.js';

export class ApiClient {
  constructor(private baseUrl = '') {}

  async manifest(sessionId: string): Promise<Manifest> {
    const r = await fetch(`${this.baseUrl}/api/sessions/${sessionId}/manifest`);
    if (!r.ok) throw new Error(`manifest: HTTP ${r.status}`);
    return (await r.json()) as Manifest;
  }

  imageUrl(imageId: string): string {
    return `${this.baseUrl}/api/images/${imageId}`;
  }

  async postEvents(sessionId: string, events: UiEvent[]): Promise<void> {
    const r = await fetch(`${this.baseUrl}/api/sessions/${sessionId}/events`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ events }),
    });
    if (!r.ok) throw new Error(`events: HTTP ${r.status}`);
  }

  async finish(sessionId: string): Promise<FinishResult> {
    const r = await fetch(`${this.baseUrl}/api/sessions/${sessionId}/finish`, { method: 'POST' });
    if (!r.ok) throw new Error(`finish: HTTP ${r.status}`);
    return (await r.json()) as FinishResult;
  }
}
