import type {
  AggregateSnapshot,
  EventsPage,
  PoolHealth,
  RoutingMode,
} from './types.js';

export class GatewayError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'GatewayError';
  }
}

export interface GatewaySettings {
  baseUrl: string;
  adminToken: string;
}

/** Thin typed wrapper over the gateway's JSON endpoints. */
export class GatewayClient {
  constructor(private readonly settings: GatewaySettings) {}

  async metrics(): Promise<AggregateSnapshot> {
    return this.get('/metrics');
  }

  async events(fromSeq = 0, limit = 100): Promise<EventsPage> {
    return this.get(`/events?from_seq=${fromSeq}&limit=${limit}`);
  }

  async getMode(): Promise<RoutingMode> {
    const body = await this.get<{ mode: RoutingMode }>('/admin/mode', true);
    return body.mode;
  }

  async setMode(mode: RoutingMode): Promise<RoutingMode> {
    const body = await this.post<{ mode: RoutingMode }>('/admin/mode', { mode });
    return body.mode;
  }

  async getOverrides(): Promise<Record<string, string>> {
    const body = await this.get<{ overrides: Record<string, string> }>(
      '/admin/overrides',
      true,
    );
    return body.overrides;
  }

  async setOverride(
    category: string,
    precision: string,
  ): Promise<Record<string, string>> {
    const body = await this.post<{ overrides: Record<string, string> }>(
      '/admin/overrides',
      { category, precision },
    );
    return body.overrides;
  }

  async clearOverride(category: string): Promise<Record<string, string>> {
    const body = await this.post<{ overrides: Record<string, string> }>(
      '/admin/overrides',
      { category, precision: null },
    );
    return body.overrides;
  }

  async pool(): Promise<PoolHealth> {
    const body = await this.get<{ variants: PoolHealth }>('/admin/pool', true);
    return body.variants;
  }

  private async get<T>(path: string, admin = false): Promise<T> {
    const resp = await fetch(this.settings.baseUrl + path, {
      headers: admin ? this.authHeaders() : {},
    });
    return this.decode(resp);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(this.settings.baseUrl + path, {
      method: 'POST',
      headers: { 'content-type': 'application/json', ...this.authHeaders() },
      body: JSON.stringify(body),
    });
    return this.decode(resp);
  }

  private authHeaders(): Record<string, string> {
    return { authorization: `Bearer ${this.settings.adminToken}` };
  }

  private async decode<T>(resp: Response): Promise<T> {
    if (!resp.ok) {
      let message = `gateway returned ${resp.status}`;
      try {
        const body = (await resp.json()) as { error?: string };
        if (body.error) message = body.error;
      } catch {
        // non-JSON error body; keep the status message
      }
      throw new GatewayError(resp.status, message);
    }
    return (await resp.json()) as T;
  }
}
