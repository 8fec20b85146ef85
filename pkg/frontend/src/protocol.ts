/**
 * Wire protocol for the flightcore TCP bridge.
 *
 * Every frame is `u32 LE payload length | u8 tag | payload`; payloads are
 * little-endian and start with a u64 message id. This file mirrors the
 * Python side (flightcore/bridge.py) byte for byte.
 */

export const PROTOCOL_VERSION = 1;
export const MAX_PAYLOAD = 64 * 1024 * 1024;

export const TAG_VERSION = 0;
export const TAG_STATE_UPDATE = 1;
export const TAG_CONFIGURE = 2;
export const TAG_POINTCLOUD_REQUEST = 3;
export const TAG_POINTCLOUD_CHUNK = 4;
export const TAG_ACK = 5;
export const TAG_ERROR = 6;
export const TAG_ENV_MAKE = 16;
export const TAG_ENV_RESET = 17;
export const TAG_ENV_STEP = 18;
export const TAG_ENV_RESULT = 19;
export const TAG_ENV_CLOSE = 20;

/** Episode termination codes carried in EnvResult (0 = not done). */
export const REASONS = [
  null, "timeout", "gate_pass", "gate_hit", "ground_hit", "bounds",
] as const;

export class ProtocolError extends Error {}

export interface VersionMsg {
  tag: typeof TAG_VERSION;
  msgId: bigint;
  version: number;
}

export interface StateUpdateMsg {
  tag: typeof TAG_STATE_UPDATE;
  msgId: bigint;
  simTime: number;
  /** rows of [envId, px, py, pz, qw, qx, qy, qz] */
  poses: Float64Array[];
}

export interface AckMsg {
  tag: typeof TAG_ACK;
  msgId: bigint;
  refId: bigint;
  info: Record<string, string>;
}

export interface ErrorMsg {
  tag: typeof TAG_ERROR;
  msgId: bigint;
  refId: bigint;
  reason: string;
}

export interface ChunkMsg {
  tag: typeof TAG_POINTCLOUD_CHUNK;
  msgId: bigint;
  refId: bigint;
  index: number;
  total: number;
  data: Buffer;
}

export interface EnvResultMsg {
  tag: typeof TAG_ENV_RESULT;
  msgId: bigint;
  refId: bigint;
  nEnvs: number;
  obsDim: number;
  /** flat row-major (nEnvs x obsDim) */
  observations: Float64Array;
  rewards: Float64Array;
  dones: boolean[];
  reasonCodes: Uint8Array;
}

export type Message =
  | VersionMsg
  | StateUpdateMsg
  | AckMsg
  | ErrorMsg
  | ChunkMsg
  | EnvResultMsg;

function frame(tag: number, payload: Buffer): Buffer {
  if (payload.length > MAX_PAYLOAD) {
    throw new ProtocolError(`payload of ${payload.length} bytes exceeds limit`);
  }
  const head = Buffer.alloc(5);
  head.writeUInt32LE(payload.length, 0);
  head.writeUInt8(tag, 4);
  return Buffer.concat([head, payload]);
}

function idHeader(msgId: bigint, extra: number): Buffer {
  const buf = Buffer.alloc(8 + extra);
  buf.writeBigUInt64LE(msgId, 0);
  return buf;
}

export function encodeVersion(msgId: bigint, version = PROTOCOL_VERSION): Buffer {
  const payload = idHeader(msgId, 2);
  payload.writeUInt16LE(version, 8);
  return frame(TAG_VERSION, payload);
}

function kvText(items: Record<string, string | number>): string {
  return Object.entries(items)
    .map(([k, v]) => `${k} = ${v}\n`)
    .join("");
}

export function encodeConfigure(msgId: bigint,
                                items: Record<string, string | number>): Buffer {
  const text = Buffer.from(kvText(items), "utf-8");
  return frame(TAG_CONFIGURE, Buffer.concat([idHeader(msgId, 0), text]));
}

export function encodeEnvMake(msgId: bigint,
                              items: Record<string, string | number>): Buffer {
  const text = Buffer.from(kvText(items), "utf-8");
  return frame(TAG_ENV_MAKE, Buffer.concat([idHeader(msgId, 0), text]));
}

export function encodeEnvReset(msgId: bigint): Buffer {
  return frame(TAG_ENV_RESET, idHeader(msgId, 0));
}

export function encodeEnvClose(msgId: bigint): Buffer {
  return frame(TAG_ENV_CLOSE, idHeader(msgId, 0));
}

export function encodeEnvStep(msgId: bigint, actions: Float64Array,
                              nEnvs: number, actDim: number): Buffer {
  if (actions.length !== nEnvs * actDim) {
    throw new ProtocolError(
      `actions length ${actions.length} != ${nEnvs} * ${actDim}`);
  }
  const payload = idHeader(msgId, 8 + actions.length * 8);
  payload.writeUInt32LE(nEnvs, 8);
  payload.writeUInt32LE(actDim, 12);
  for (let i = 0; i < actions.length; i++) {
    payload.writeDoubleLE(actions[i], 16 + 8 * i);
  }
  return frame(TAG_ENV_STEP, payload);
}

export function encodePointcloudRequest(msgId: bigint, lo: number[], hi: number[],
                                        resolution: number): Buffer {
  const payload = idHeader(msgId, 7 * 8);
  const vals = [...lo, ...hi, resolution];
  vals.forEach((v, i) => payload.writeDoubleLE(v, 8 + 8 * i));
  return frame(TAG_POINTCLOUD_REQUEST, payload);
}

export function parseInfo(text: string): Record<string, string> {
  const out: Record<string, string> = {};
  for (const line of text.split("\n")) {
    const eq = line.indexOf("=");
    if (eq > 0) {
      out[line.slice(0, eq).trim()] = line.slice(eq + 1).trim();
    }
  }
  return out;
}

function need(cond: boolean): asserts cond {
  if (!cond) {
    throw new ProtocolError("frame length mismatch");
  }
}

export function decodeMessage(tag: number, payload: Buffer): Message {
  need(payload.length >= 8);
  const msgId = payload.readBigUInt64LE(0);
  const body = payload.subarray(8);

  switch (tag) {
    case TAG_VERSION: {
      need(body.length === 2);
      return { tag: TAG_VERSION, msgId, version: body.readUInt16LE(0) };
    }
    case TAG_STATE_UPDATE: {
      need(body.length >= 12);
      const simTime = body.readDoubleLE(0);
      const n = body.readUInt32LE(8);
      const rest = body.subarray(12);
      need(rest.length === n * 60);
      const poses: Float64Array[] = [];
      for (let i = 0; i < n; i++) {
        const off = i * 60;
        const row = new Float64Array(8);
        row[0] = rest.readUInt32LE(off);
        for (let k = 0; k < 7; k++) {
          row[1 + k] = rest.readDoubleLE(off + 4 + 8 * k);
        }
        poses.push(row);
      }
      return { tag: TAG_STATE_UPDATE, msgId, simTime, poses };
    }
    case TAG_ACK: {
      need(body.length >= 8);
      const refId = body.readBigUInt64LE(0);
      return { tag: TAG_ACK, msgId, refId,
               info: parseInfo(body.subarray(8).toString("utf-8")) };
    }
    case TAG_ERROR: {
      need(body.length >= 8);
      const refId = body.readBigUInt64LE(0);
      return { tag: TAG_ERROR, msgId, refId,
               reason: body.subarray(8).toString("utf-8") };
    }
    case TAG_POINTCLOUD_CHUNK: {
      need(body.length >= 16);
      return {
        tag: TAG_POINTCLOUD_CHUNK, msgId,
        refId: body.readBigUInt64LE(0),
        index: body.readUInt32LE(8),
        total: body.readUInt32LE(12),
        data: Buffer.from(body.subarray(16)),
      };
    }
    case TAG_ENV_RESULT: {
      need(body.length >= 16);
      const refId = body.readBigUInt64LE(0);
      const n = body.readUInt32LE(8);
      const obsDim = body.readUInt32LE(12);
      const rest = body.subarray(16);
      need(rest.length === n * obsDim * 8 + n * 8 + n + n);
      const observations = new Float64Array(n * obsDim);
      for (let i = 0; i < observations.length; i++) {
        observations[i] = rest.readDoubleLE(8 * i);
      }
      const rewards = new Float64Array(n);
      const rewOff = n * obsDim * 8;
      for (let i = 0; i < n; i++) {
        rewards[i] = rest.readDoubleLE(rewOff + 8 * i);
      }
      const dones: boolean[] = [];
      const doneOff = rewOff + n * 8;
      for (let i = 0; i < n; i++) {
        dones.push(rest.readUInt8(doneOff + i) !== 0);
      }
      const reasonCodes = new Uint8Array(n);
      for (let i = 0; i < n; i++) {
        reasonCodes[i] = rest.readUInt8(doneOff + n + i);
      }
      return { tag: TAG_ENV_RESULT, msgId, refId, nEnvs: n, obsDim,
               observations, rewards, dones, reasonCodes };
    }
    default:
      throw new ProtocolError(`unexpected tag ${tag}`);
  }
}

/** Incremental length-prefixed frame splitter for a TCP byte stream. */
export class FrameReader {
  private buffer: Buffer = Buffer.alloc(0);

  push(data: Buffer): void {
    this.buffer = this.buffer.length === 0 ? Buffer.from(data)
      : Buffer.concat([this.buffer, data]);
  }

  next(): { tag: number; payload: Buffer } | null {
    if (this.buffer.length < 5) {
      return null;
    }
    const length = this.buffer.readUInt32LE(0);
    if (length > MAX_PAYLOAD) {
      throw new ProtocolError(`declared payload of ${length} bytes exceeds limit`);
    }
    if (this.buffer.length < 5 + length) {
      return null;
    }
    const tag = this.buffer.readUInt8(4);
    const payload = Buffer.from(this.buffer.subarray(5, 5 + length));
    this.buffer = Buffer.from(this.buffer.subarray(5 + length));
    return { tag, payload };
  }
}
