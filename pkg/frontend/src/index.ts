export { BridgeClient, BridgeError } from "./client.js";
export { FlightcoreVecEnv } from "./env.js";
export type { MakeOptions, Space, StepResult } from "./env.js";
export * as protocol from "./protocol.js";
