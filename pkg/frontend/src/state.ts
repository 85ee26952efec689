import type {
  AggregateSnapshot,
  ConnectionStatus,
  PoolHealth,
  RoutingMode,
  TelemetryEvent,
} from './types.js';

/**
 * All state the dashboard renders from.
 *
 * Mode and overrides hold the last *acknowledged* admin response only;
 * there is no optimistic local state. The event buffer is a bounded ring.
 */
export class DashboardState {
  readonly capacity: number;

  private buffer: TelemetryEvent[] = [];

  mode: RoutingMode | null = null;
  overrides: Record<string, string> = {};
  pool: PoolHealth = {};
  connection: ConnectionStatus = 'disconnected';

  snapshot: AggregateSnapshot | null = null;
  snapshotAt: number | null = null;
  snapshotStale = false;

  constructor(capacity = 500) {
    if (capacity < 1) throw new Error('capacity must be positive');
    this.capacity = capacity;
  }

  get feed(): readonly TelemetryEvent[] {
    return this.buffer;
  }

  pushEvent(event: TelemetryEvent): void {
    this.buffer.push(event);
    if (this.buffer.length > this.capacity) {
      this.buffer.splice(0, this.buffer.length - this.capacity);
    }
  }

  setConnection(status: ConnectionStatus): void {
    this.connection = status;
  }

  applyModeAck(mode: RoutingMode): void {
    this.mode = mode;
  }

  applyOverridesAck(overrides: Record<string, string>): void {
    this.overrides = { ...overrides };
  }

  applyPool(pool: PoolHealth): void {
    this.pool = pool;
  }

  applySnapshot(snapshot: AggregateSnapshot, at: number = Date.now()): void {
    this.snapshot = snapshot;
    this.snapshotAt = at;
    this.snapshotStale = false;
  }

  /** Metrics fetch failed; keep the last good values, flag them stale. */
  markSnapshotStale(): void {
    this.snapshotStale = true;
  }
}
