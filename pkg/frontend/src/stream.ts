import type { ConnectionStatus, TelemetryEvent } from './types.js';

export interface FeedOptions {
  baseUrl: string;
  onEvent: (event: TelemetryEvent) => void;
  onStatus?: (status: ConnectionStatus) => void;
  /** Delay before a reconnect attempt, ms. */
  retryDelayMs?: number;
}

/**
 * Server-sent event reader for /events/stream.
 *
 * Tracks the last seen seq and resumes from lastSeq + 1 on every reconnect,
 * so a dropped connection produces neither gaps nor duplicates downstream.
 */
export class EventFeed {
  private lastSeq = -1;
  private stopped = false;
  private controller: AbortController | null = null;

  constructor(private readonly opts: FeedOptions) {}

  get lastSeenSeq(): number {
    return this.lastSeq;
  }

  /** Run until stop(); resolves when stopped. */
  async run(fromSeq = 0): Promise<void> {
    this.lastSeq = fromSeq - 1;
    this.stopped = false;
    while (!this.stopped) {
      try {
        await this.consumeOnce(this.lastSeq + 1);
      } catch {
        // fall through to reconnect
      }
      if (this.stopped) break;
      this.setStatus('reconnecting');
      await sleep(this.opts.retryDelayMs ?? 250);
    }
    this.setStatus('disconnected');
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private async consumeOnce(fromSeq: number): Promise<void> {
    this.controller = new AbortController();
    const resp = await fetch(
      `${this.opts.baseUrl}/events/stream?from_seq=${fromSeq}`,
      { signal: this.controller.signal },
    );
    if (!resp.ok || !resp.body) {
      throw new Error(`stream request failed: ${resp.status}`);
    }
    this.setStatus('live');
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = '';
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      buffer += decoder.decode(value, { stream: true });
      let frameEnd: number;
      while ((frameEnd = buffer.indexOf('\n\n')) >= 0) {
        const frame = buffer.slice(0, frameEnd);
        buffer = buffer.slice(frameEnd + 2);
        this.handleFrame(frame);
      }
    }
  }

  private handleFrame(frame: string): void {
    for (const line of frame.split('\n')) {
      if (!line.startsWith('data:')) continue;
      const event = JSON.parse(line.slice('data:'.length).trim()) as TelemetryEvent;
      // a reconnect can race with new appends; seq is the dedupe key
      if (event.seq <= this.lastSeq) continue;
      this.lastSeq = event.seq;
      this.opts.onEvent(event);
    }
  }

  private setStatus(status: ConnectionStatus): void {
    this.opts.onStatus?.(status);
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
