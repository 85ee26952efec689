export { DashboardController, type ControllerOptions } from './app.js';
export { GatewayClient, GatewayError, type GatewaySettings } from './client.js';
export { formatFraction, renderFeedRow, renderSavingsPanel } from './format.js';
export { DashboardState } from './state.js';
export { EventFeed, type FeedOptions } from './stream.js';
export type * from './types.js';
