import { GatewayClient, type GatewaySettings } from './client.js';
import { DashboardState } from './state.js';
import { EventFeed } from './stream.js';
import type { RoutingMode } from './types.js';

export interface ControllerOptions {
  /** Snapshot polling interval, ms. */
  pollIntervalMs?: number;
  /** SSE reconnect delay, ms. */
  retryDelayMs?: number;
  feedCapacity?: number;
}

/**
 * Wires the gateway client, the SSE feed, and the rendered state together.
 *
 * Every mutation goes through the admin API and is applied to state only
 * from the acknowledged response; a rejected call leaves state untouched
 * and surfaces the error to the caller for inline display.
 */
export class DashboardController {
  readonly state: DashboardState;
  private readonly client: GatewayClient;
  private readonly feed: EventFeed;
  private feedDone: Promise<void> | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private readonly pollIntervalMs: number;

  constructor(settings: GatewaySettings, opts: ControllerOptions = {}) {
    this.state = new DashboardState(opts.feedCapacity ?? 500);
    this.client = new GatewayClient(settings);
    this.pollIntervalMs = opts.pollIntervalMs ?? 2000;
    this.feed = new EventFeed({
      baseUrl: settings.baseUrl,
      retryDelayMs: opts.retryDelayMs,
      onEvent: (e) => this.state.pushEvent(e),
      onStatus: (s) => this.state.setConnection(s),
    });
  }

  /** Pull current mode/overrides/metrics, then subscribe to the live feed. */
  async start(fromSeq = 0): Promise<void> {
    this.state.applyModeAck(await this.client.getMode());
    this.state.applyOverridesAck(await this.client.getOverrides());
    await this.refreshSnapshot();
    this.feedDone = this.feed.run(fromSeq);
    this.pollTimer = setInterval(() => {
      void this.refreshSnapshot();
    }, this.pollIntervalMs);
  }

  async stop(): Promise<void> {
    if (this.pollTimer) clearInterval(this.pollTimer);
    this.pollTimer = null;
    this.feed.stop();
    await this.feedDone;
    this.feedDone = null;
  }

  async switchMode(mode: RoutingMode): Promise<void> {
    const acked = await this.client.setMode(mode);
    this.state.applyModeAck(acked);
  }

  async editOverride(category: string, precision: string | null): Promise<void> {
    const acked =
      precision === null
        ? await this.client.clearOverride(category)
        : await this.client.setOverride(category, precision);
    this.state.applyOverridesAck(acked);
  }

  async refreshSnapshot(): Promise<void> {
    try {
      this.state.applySnapshot(await this.client.metrics());
      this.state.applyPool(await this.client.pool());
    } catch {
      this.state.markSnapshotStale();
    }
  }
}
