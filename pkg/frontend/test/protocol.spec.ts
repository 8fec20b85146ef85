import { describe, expect, it } from "vitest";

import {
  FrameReader,
  ProtocolError,
  TAG_ACK,
  TAG_ENV_RESULT,
  TAG_ENV_STEP,
  TAG_ERROR,
  TAG_VERSION,
  decodeMessage,
  encodeEnvMake,
  encodeEnvStep,
  encodeVersion,
  parseInfo,
} from "../src/protocol.js";

describe("framing", () => {
  it("version frame has the exact byte layout", () => {
    const frame = encodeVersion(7n, 1);
    // u32 len = 10 (u64 id + u16 version), u8 tag = 0
    expect([...frame.subarray(0, 5)]).toEqual([10, 0, 0, 0, 0]);
    expect(frame.readBigUInt64LE(5)).toBe(7n);
    expect(frame.readUInt16LE(13)).toBe(1);
  });

  it("env_step packs little-endian doubles row-major", () => {
    const actions = new Float64Array([1.5, -2.25, 0, 9.81]);
    const frame = encodeEnvStep(3n, actions, 2, 2);
    const payload = frame.subarray(5);
    expect(payload.readUInt32LE(8)).toBe(2);
    expect(payload.readUInt32LE(12)).toBe(2);
    expect(payload.readDoubleLE(16)).toBe(1.5);
    expect(payload.readDoubleLE(40)).toBe(9.81);
  });

  it("env_step rejects mismatched lengths", () => {
    expect(() => encodeEnvStep(1n, new Float64Array(3), 2, 2)).toThrow(ProtocolError);
  });

  it("action batches round-trip the boundary bit-exactly", () => {
    const tricky = new Float64Array([
      0, -0, 9.81, -2e-3, Number.MIN_VALUE, -Number.MIN_VALUE,
      1 / 3, Math.PI, 1e300, -1e-300, 0.1 + 0.2, 2 ** -1022,
    ]);
    const frame = encodeEnvStep(1n, tricky, 3, 4);
    const payload = frame.subarray(5 + 16);
    for (let i = 0; i < tricky.length; i++) {
      const back = payload.readDoubleLE(8 * i);
      expect(Object.is(back, tricky[i])).toBe(true);
    }
  });

  it("frame reader reassembles split and concatenated frames", () => {
    const a = encodeVersion(1n);
    const b = encodeEnvMake(2n, { task: "stabilize" });
    const joined = Buffer.concat([a, b]);
    const reader = new FrameReader();
    reader.push(joined.subarray(0, 3));
    expect(reader.next()).toBeNull();
    reader.push(joined.subarray(3, a.length + 4));
    expect(reader.next()?.tag).toBe(TAG_VERSION);
    expect(reader.next()).toBeNull();
    reader.push(joined.subarray(a.length + 4));
    const second = reader.next();
    expect(second?.tag).toBe(16);
    expect(second?.payload.subarray(8).toString()).toContain("task = stabilize");
  });
});

describe("decode", () => {
  it("round-trips an env result", () => {
    // build payload by hand: id, ref, n=2, obsDim=3, obs, rewards, dones, codes
    const n = 2;
    const obsDim = 3;
    const payload = Buffer.alloc(8 + 8 + 4 + 4 + n * obsDim * 8 + n * 8 + n + n);
    payload.writeBigUInt64LE(5n, 0);
    payload.writeBigUInt64LE(4n, 8);
    payload.writeUInt32LE(n, 16);
    payload.writeUInt32LE(obsDim, 20);
    const obs = [0.1, 0.2, 0.3, -1, -2, -3];
    obs.forEach((v, i) => payload.writeDoubleLE(v, 24 + 8 * i));
    payload.writeDoubleLE(-0.002, 24 + 48);
    payload.writeDoubleLE(0.1, 24 + 56);
    payload.writeUInt8(1, 24 + 64);
    payload.writeUInt8(0, 24 + 65);
    payload.writeUInt8(1, 24 + 66); // timeout
    payload.writeUInt8(0, 24 + 67);
    const msg = decodeMessage(TAG_ENV_RESULT, payload);
    expect(msg.tag).toBe(TAG_ENV_RESULT);
    if (msg.tag === TAG_ENV_RESULT) {
      expect(msg.refId).toBe(4n);
      expect([...msg.observations]).toEqual(obs);
      expect([...msg.rewards]).toEqual([-0.002, 0.1]);
      expect(msg.dones).toEqual([true, false]);
      expect([...msg.reasonCodes]).toEqual([1, 0]);
    }
  });

  it("rejects truncated payloads", () => {
    expect(() => decodeMessage(TAG_ACK, Buffer.alloc(4))).toThrow(ProtocolError);
    expect(() => decodeMessage(TAG_ENV_STEP, Buffer.alloc(8))).toThrow();
  });

  it("parses ack info text", () => {
    expect(parseInfo("obs_dim = 10\nact_dim = 4\n")).toEqual({
      obs_dim: "10",
      act_dim: "4",
    });
  });

  it("decodes error frames", () => {
    const payload = Buffer.alloc(16 + 4);
    payload.writeBigUInt64LE(9n, 0);
    payload.writeBigUInt64LE(8n, 8);
    payload.write("nope", 16);
    const msg = decodeMessage(TAG_ERROR, payload);
    expect(msg.tag).toBe(TAG_ERROR);
    if (msg.tag === TAG_ERROR) {
      expect(msg.reason).toBe("nope");
    }
  });
});
