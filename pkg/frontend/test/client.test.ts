import { afterEach, beforeEach, describe, expect, it } from 'vitest';
import { GatewayClient, GatewayError } from '../src/client.js';
import { StubGateway } from './stub-gateway.js';

let gw: StubGateway;
let base: string;

beforeEach(async () => {
  gw = new StubGateway();
  base = await gw.start();
});

afterEach(async () => {
  await gw.stop();
});

function client(token = gw.adminToken): GatewayClient {
  return new GatewayClient({ baseUrl: base, adminToken: token });
}

describe('GatewayClient', () => {
  it('fetches the aggregate snapshot as-is', async () => {
    gw.snapshot.requests = 12;
    gw.snapshot.savings_fraction = 0.15;
    const snap = await client().metrics();
    expect(snap.requests).toBe(12);
    expect(snap.savings_fraction).toBe(0.15);
  });

  it('pages events', async () => {
    gw.emitDecision('research', 'INT4', 'v4');
    gw.emitDecision('code', 'BF16', 'v16');
    const page = await client().events(1);
    expect(page.events.map((e) => e.seq)).toEqual([1]);
    expect(page.max_seq).toBe(1);
  });

  it('round-trips mode through the admin API', async () => {
    expect(await client().getMode()).toBe('latency');
    expect(await client().setMode('cost')).toBe('cost');
    expect(await client().getMode()).toBe('cost');
  });

  it('sets and clears overrides', async () => {
    const c = client();
    expect(await c.setOverride('research', 'BF16')).toEqual({ research: 'BF16' });
    expect(await c.clearOverride('research')).toEqual({});
  });

  it('rejects a bad admin token with status 401', async () => {
    await expect(client('wrong').getMode()).rejects.toMatchObject({
      name: 'GatewayError',
      status: 401,
    });
  });

  it('surfaces the gateway error message on rejected mutations', async () => {
    const err = await client()
      .setOverride('research', 'FP3')
      .catch((e: GatewayError) => e);
    expect(err).toBeInstanceOf(GatewayError);
    expect((err as GatewayError).status).toBe(422);
    expect((err as GatewayError).message).toContain('FP3');
  });

  it('reads pool health', async () => {
    const pool = await client().pool();
    expect(pool.v16.health).toBe('healthy');
  });
});
