import type { DashboardState } from './state.js';
import type { TelemetryEvent } from './types.js';

/** Display formatting only; no value is recomputed here. */
export function formatFraction(fraction: number | null): string {
  if (fraction === null) return 'n/a';
  return `${(fraction * 100).toFixed(1)}%`;
}

export interface SavingsPanel {
  costSavings: string;
  latencySavings: string;
  requests: number;
  stale: boolean;
  asOf: number | null;
}

export function renderSavingsPanel(state: DashboardState): SavingsPanel {
  const snap = state.snapshot;
  return {
    costSavings: formatFraction(snap ? snap.savings_fraction : null),
    latencySavings: formatFraction(snap ? snap.latency_savings_fraction : null),
    requests: snap ? snap.requests : 0,
    stale: state.snapshotStale,
    asOf: state.snapshotAt,
  };
}

export interface FeedRow {
  seq: number;
  kind: string;
  summary: string;
}

export function renderFeedRow(event: TelemetryEvent): FeedRow {
  let summary: string;
  if (event.kind === 'decision') {
    const p = event.payload;
    summary = `${p.task_category} -> ${p.precision} (${p.variant_id}, ${p.rationale})`;
  } else if (event.kind === 'admin') {
    summary = `admin: ${event.payload.action}`;
  } else {
    summary = event.kind;
  }
  return { seq: event.seq, kind: event.kind, summary };
}
