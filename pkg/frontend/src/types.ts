// JSON contracts of the gateway's external interfaces. The dashboard never
// recomputes any of these numbers; it only fetches and formats them.

export type RoutingMode = 'latency' | 'cost';

export type EventKind = 'decision' | 'upstream' | 'admin' | 'health';

export interface TelemetryEvent {
  seq: number;
  timestamp: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export interface AggregateSnapshot {
  window: { from_seq: number; to_seq: number | null };
  requests: number;
  per_category: Record<string, Record<string, number>>;
  totals: {
    cost_usd: number;
    latency_s: number;
    tokens_in: number;
    tokens_out: number;
  };
  baseline_cost_usd: number;
  baseline_latency_s: number;
  savings_fraction: number | null;
  latency_savings_fraction: number | null;
}

export interface EventsPage {
  events: TelemetryEvent[];
  max_seq: number;
}

export interface VariantHealth {
  model_id: string;
  precision: string;
  health: 'healthy' | 'degraded' | 'down';
  endpoint_url: string;
  last_probe: number | null;
}

export type PoolHealth = Record<string, VariantHealth>;

export type ConnectionStatus = 'disconnected' | 'live' | 'reconnecting';
