/**
 * Gym-style vectorized quadrotor environment backed by the flightcore engine.
 *
 * `make()` either connects to a running bridge (FLIGHTCORE_BRIDGE or
 * `opts.address`) or spawns the engine's serve process and talks to it over
 * the env-session protocol extension. Observations and rewards cross the
 * wire as binary float64, so values are bit-identical to the native engine.
 */

import { spawn, ChildProcess } from "node:child_process";
import { readFileSync } from "node:fs";

import { BridgeClient, BridgeError } from "./client.js";
import { EnvResultMsg, REASONS } from "./protocol.js";

export interface Space {
  shape: [number, number];
  low?: number[];
  high?: number[];
}

export interface StepResult {
  /** flat row-major (nEnvs x obsDim); see `row()` for per-env views */
  observations: Float64Array;
  rewards: Float64Array;
  dones: boolean[];
  /** termination reason per env, null while running (e.g. "timeout") */
  reasons: (string | null)[];
}

export interface MakeOptions {
  /** connect to an existing bridge instead of spawning one */
  address?: string;
  /** python executable used to spawn the engine (default: python3) */
  python?: string;
  /** key/value config file path merged into the session config */
  configPath?: string;
  /** extra config keys sent verbatim with env_make */
  config?: Record<string, string | number>;
  /** engine integration step, seconds */
  dt?: number;
  spawnTimeoutMs?: number;
}

function parseConfigFile(path: string): Record<string, string> {
  const out: Record<string, string> = {};
  for (const raw of readFileSync(path, "utf-8").split("\n")) {
    const line = raw.split("#", 1)[0].trim();
    if (!line) {
      continue;
    }
    const eq = line.indexOf("=");
    if (eq <= 0) {
      throw new Error(`${path}: expected 'key = value', got ${JSON.stringify(raw)}`);
    }
    out[line.slice(0, eq).trim()] = line.slice(eq + 1).trim();
  }
  return out;
}

function spawnServer(python: string, timeoutMs: number):
    Promise<{ proc: ChildProcess; host: string; port: number }> {
  return new Promise((resolve, reject) => {
    const proc = spawn(
      python,
      ["-m", "flightcore.cli", "serve", "--bridge", "127.0.0.1:0", "--idle"],
      { stdio: ["ignore", "pipe", "pipe"] },
    );
    let out = "";
    let err = "";
    const timer = setTimeout(() => {
      proc.kill();
      reject(new Error(`engine did not report an endpoint within ${timeoutMs} ms:\n${err}`));
    }, timeoutMs);
    proc.stdout!.on("data", (d: Buffer) => {
      out += d.toString();
      const m = out.match(/bridge listening on ([\d.]+):(\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve({ proc, host: m[1], port: Number(m[2]) });
      }
    });
    proc.stderr!.on("data", (d: Buffer) => {
      err += d.toString();
    });
    proc.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`engine exited with code ${code} before binding:\n${err}`));
    });
  });
}

export class FlightcoreVecEnv {
  readonly task: string;
  readonly nEnvs: number;
  readonly obsDim: number;
  readonly actDim: number;
  readonly maxSteps: number;
  readonly observationSpace: Space;
  readonly actionSpace: Space;

  private client: BridgeClient | null;
  private proc: ChildProcess | null;

  private constructor(task: string, nEnvs: number, info: Record<string, string>,
                      client: BridgeClient, proc: ChildProcess | null) {
    this.task = task;
    this.nEnvs = nEnvs;
    this.obsDim = Number(info.obs_dim);
    this.actDim = Number(info.act_dim);
    this.maxSteps = Number(info.max_steps);
    this.observationSpace = { shape: [nEnvs, this.obsDim] };
    this.actionSpace = {
      shape: [nEnvs, this.actDim],
      low: info.act_low.split(",").map(Number),
      high: info.act_high.split(",").map(Number),
    };
    this.client = client;
    this.proc = proc;
  }

  /** Create a vectorized environment for one of the benchmark tasks. */
  static async make(task: string, nEnvs: number, seed = 0,
                    opts: MakeOptions = {}): Promise<FlightcoreVecEnv> {
    const address = opts.address ?? process.env.FLIGHTCORE_BRIDGE;
    let proc: ChildProcess | null = null;
    let host: string;
    let port: number;
    if (address) {
      const colon = address.lastIndexOf(":");
      host = address.slice(0, colon);
      port = Number(address.slice(colon + 1));
    } else {
      const spawned = await spawnServer(opts.python ?? "python3",
                                        opts.spawnTimeoutMs ?? 60_000);
      proc = spawned.proc;
      host = spawned.host;
      port = spawned.port;
    }
    const client = await BridgeClient.connect(host, port);
    try {
      await client.handshake();
      const items: Record<string, string | number> = {};
      const configPath = opts.configPath ?? process.env.FLIGHTCORE_CONFIG;
      if (configPath) {
        Object.assign(items, parseConfigFile(configPath));
      }
      Object.assign(items, opts.config ?? {});
      items.task = task;
      items.n_envs = nEnvs;
      items.base_seed = seed;
      if (opts.dt !== undefined) {
        items.dt = opts.dt;
      }
      const ack = await client.envMake(items);
      return new FlightcoreVecEnv(task, nEnvs, ack.info, client, proc);
    } catch (err) {
      client.close();
      proc?.kill();
      throw err;
    }
  }

  private get live(): BridgeClient {
    if (this.client === null) {
      throw new BridgeError("environment is closed");
    }
    return this.client;
  }

  async reset(): Promise<StepResult> {
    return this.toResult(await this.live.envReset());
  }

  /** actions: nEnvs rows of actDim values (nested arrays or a flat array). */
  async step(actions: number[][] | Float64Array): Promise<StepResult> {
    let flat: Float64Array;
    if (actions instanceof Float64Array) {
      flat = actions;
    } else {
      if (actions.length !== this.nEnvs) {
        throw new BridgeError(`expected ${this.nEnvs} action rows, got ${actions.length}`);
      }
      flat = new Float64Array(this.nEnvs * this.actDim);
      for (let i = 0; i < this.nEnvs; i++) {
        if (actions[i].length !== this.actDim) {
          throw new BridgeError(
            `action row ${i} has ${actions[i].length} values, expected ${this.actDim}`);
        }
        flat.set(actions[i], i * this.actDim);
      }
    }
    if (flat.length !== this.nEnvs * this.actDim) {
      throw new BridgeError(
        `actions length ${flat.length} != ${this.nEnvs} * ${this.actDim}`);
    }
    return this.toResult(await this.live.envStep(flat, this.nEnvs, this.actDim));
  }

  async close(): Promise<void> {
    if (this.client === null) {
      return;
    }
    try {
      await this.client.envClose();
    } catch {
      // the session dies with the connection either way
    }
    this.client.close();
    this.client = null;
    if (this.proc) {
      this.proc.kill();
      this.proc = null;
    }
  }

  /** View of one env's observation inside a StepResult. */
  row(result: StepResult, env: number): Float64Array {
    return result.observations.subarray(env * this.obsDim, (env + 1) * this.obsDim);
  }

  private toResult(msg: EnvResultMsg): StepResult {
    if (msg.nEnvs !== this.nEnvs || msg.obsDim !== this.obsDim) {
      throw new BridgeError(
        `result shape (${msg.nEnvs}, ${msg.obsDim}) != (${this.nEnvs}, ${this.obsDim})`);
    }
    return {
      observations: msg.observations,
      rewards: msg.rewards,
      dones: msg.dones,
      reasons: Array.from(msg.reasonCodes, (c) => REASONS[c] ?? null),
    };
  }
}
