/**
 * Promise-based TCP client for the flightcore bridge.
 *
 * Requests are serial (one outstanding at a time, matching the server's
 * per-connection discipline); StateUpdate frames arriving between replies
 * are buffered in `stateUpdates` (bounded ring).
 */

import * as net from "node:net";

import {
  AckMsg,
  ChunkMsg,
  EnvResultMsg,
  FrameReader,
  Message,
  StateUpdateMsg,
  TAG_ACK,
  TAG_ENV_RESULT,
  TAG_ERROR,
  TAG_POINTCLOUD_CHUNK,
  TAG_STATE_UPDATE,
  TAG_VERSION,
  decodeMessage,
  encodeConfigure,
  encodeEnvClose,
  encodeEnvMake,
  encodeEnvReset,
  encodeEnvStep,
  encodePointcloudRequest,
  encodeVersion,
} from "./protocol.js";

export class BridgeError extends Error {}

const MAX_BUFFERED_STATES = 1024;

export class BridgeClient {
  readonly stateUpdates: StateUpdateMsg[] = [];
  private readonly socket: net.Socket;
  private readonly reader = new FrameReader();
  private readonly inbox: Message[] = [];
  private waiter: { resolve: (m: Message) => void; reject: (e: Error) => void } | null = null;
  private fault: Error | null = null;
  private msgId = 0n;

  private constructor(socket: net.Socket) {
    this.socket = socket;
    // no setEncoding: data events always deliver Buffers
    socket.on("data", (data: Buffer) => this.onData(data));
    socket.on("error", (err) => this.fail(err));
    socket.on("close", () => this.fail(new BridgeError("connection closed")));
  }

  static connect(host: string, port: number, timeoutMs = 10_000): Promise<BridgeClient> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port, noDelay: true });
      const timer = setTimeout(() => {
        socket.destroy();
        reject(new BridgeError(`connect timeout to ${host}:${port}`));
      }, timeoutMs);
      socket.once("connect", () => {
        clearTimeout(timer);
        resolve(new BridgeClient(socket));
      });
      socket.once("error", (err) => {
        clearTimeout(timer);
        reject(err);
      });
    });
  }

  close(): void {
    this.socket.destroy();
  }

  private fail(err: Error): void {
    if (this.fault === null) {
      this.fault = err;
    }
    if (this.waiter) {
      const w = this.waiter;
      this.waiter = null;
      w.reject(this.fault);
    }
  }

  private onData(data: Buffer): void {
    try {
      this.reader.push(data);
      for (let f = this.reader.next(); f !== null; f = this.reader.next()) {
        const msg = decodeMessage(f.tag, f.payload);
        if (msg.tag === TAG_STATE_UPDATE) {
          this.stateUpdates.push(msg);
          if (this.stateUpdates.length > MAX_BUFFERED_STATES) {
            this.stateUpdates.shift();
          }
          continue;
        }
        if (this.waiter) {
          const w = this.waiter;
          this.waiter = null;
          w.resolve(msg);
        } else {
          this.inbox.push(msg);
        }
      }
    } catch (err) {
      this.fail(err as Error);
    }
  }

  private nextMessage(timeoutMs = 60_000): Promise<Message> {
    if (this.inbox.length > 0) {
      return Promise.resolve(this.inbox.shift() as Message);
    }
    if (this.fault !== null) {
      return Promise.reject(this.fault);
    }
    if (this.waiter !== null) {
      return Promise.reject(new BridgeError("overlapping requests"));
    }
    return new Promise<Message>((resolve, reject) => {
      const timer = setTimeout(() => {
        this.waiter = null;
        reject(new BridgeError("reply timeout"));
      }, timeoutMs);
      this.waiter = {
        resolve: (m) => {
          clearTimeout(timer);
          resolve(m);
        },
        reject: (e) => {
          clearTimeout(timer);
          reject(e);
        },
      };
    });
  }

  private nextId(): bigint {
    this.msgId += 1n;
    return this.msgId;
  }

  private async reply(frame: Buffer): Promise<Message> {
    this.socket.write(frame);
    const msg = await this.nextMessage();
    if (msg.tag === TAG_ERROR) {
      throw new BridgeError(msg.reason);
    }
    return msg;
  }

  async handshake(): Promise<number> {
    const msg = await this.reply(encodeVersion(this.nextId()));
    if (msg.tag !== TAG_VERSION) {
      throw new BridgeError(`expected version reply, got tag ${msg.tag}`);
    }
    return msg.version;
  }

  async configure(items: Record<string, string | number>): Promise<AckMsg> {
    const msg = await this.reply(encodeConfigure(this.nextId(), items));
    if (msg.tag !== TAG_ACK) {
      throw new BridgeError(`expected ack, got tag ${msg.tag}`);
    }
    return msg;
  }

  async envMake(items: Record<string, string | number>): Promise<AckMsg> {
    const msg = await this.reply(encodeEnvMake(this.nextId(), items));
    if (msg.tag !== TAG_ACK) {
      throw new BridgeError(`expected ack, got tag ${msg.tag}`);
    }
    return msg;
  }

  async envReset(): Promise<EnvResultMsg> {
    return this.expectResult(await this.reply(encodeEnvReset(this.nextId())));
  }

  async envStep(actions: Float64Array, nEnvs: number, actDim: number): Promise<EnvResultMsg> {
    return this.expectResult(
      await this.reply(encodeEnvStep(this.nextId(), actions, nEnvs, actDim)));
  }

  async envClose(): Promise<void> {
    const msg = await this.reply(encodeEnvClose(this.nextId()));
    if (msg.tag !== TAG_ACK) {
      throw new BridgeError(`expected ack, got tag ${msg.tag}`);
    }
  }

  /** Request the server's world as PLY bytes; chunks reassemble by index. */
  async requestPointcloud(lo: number[] = [0, 0, 0], hi: number[] = [0, 0, 0],
                          resolution = 0.0): Promise<Buffer> {
    this.socket.write(encodePointcloudRequest(this.nextId(), lo, hi, resolution));
    const chunks = new Map<number, Buffer>();
    let total: number | null = null;
    while (total === null || chunks.size < total) {
      const msg = await this.nextMessage();
      if (msg.tag === TAG_ERROR) {
        throw new BridgeError(msg.reason);
      }
      if (msg.tag !== TAG_POINTCLOUD_CHUNK) {
        throw new BridgeError(`expected chunk, got tag ${msg.tag}`);
      }
      const chunk = msg as ChunkMsg;
      chunks.set(chunk.index, chunk.data);
      total = chunk.total;
    }
    const parts: Buffer[] = [];
    for (let i = 0; i < (total ?? 0); i++) {
      parts.push(chunks.get(i) as Buffer);
    }
    return Buffer.concat(parts);
  }

  private expectResult(msg: Message): EnvResultMsg {
    if (msg.tag !== TAG_ENV_RESULT) {
      throw new BridgeError(`expected env result, got tag ${msg.tag}`);
    }
    return msg;
  }
}
