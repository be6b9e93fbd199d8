/**
 * Thin client for the skirmish environment over a JSON-lines stdio bridge.
 *
 * Method names mirror the upstream multi-agent environment surface exactly;
 * every value originates in the core process and crosses the boundary by
 * copy as plain JSON numbers (exact for float64).
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface, type Interface } from "node:readline";
import { fileURLToPath } from "node:url";
import path from "node:path";

export interface EnvInfo {
  n_agents: number;
  n_actions: number;
  obs_shape: number;
  state_shape: number;
  episode_limit: number;
}

export interface ResetResult {
  obs: number[][];
  state: number[];
}

export interface StepResult {
  reward: number;
  terminated: boolean;
  info: Record<string, unknown>;
}

export interface EnvOverrides {
  sight_range?: number;
  targeting_range?: number;
}

export interface MakeOptions {
  /** Python interpreter used to run the bridge (default "python3"). */
  pythonBin?: string;
  /** Override the bridge script location. */
  bridgePath?: string;
  /** Optional core configuration overrides. */
  overrides?: EnvOverrides;
}

export class EnvError extends Error {
  constructor(public readonly kind: string, message: string) {
    super(message);
    this.name = kind;
  }
}

/** Mirrors the core's hard failure on masked-unavailable actions. */
export class UnavailableActionError extends EnvError {
  constructor(message: string) {
    super("UnavailableAction", message);
  }
}

export class EnvClosedError extends Error {
  constructor() {
    super("environment is closed");
    this.name = "EnvClosedError";
  }
}

interface BridgeResponse {
  id: number;
  result?: unknown;
  error?: { type: string; message: string };
}

const defaultBridgePath = path.join(
  path.dirname(fileURLToPath(import.meta.url)),
  "..", "bridge", "stdio_bridge.py",
);

export class WrappedEnv {
  private proc: ChildProcessWithoutNullStreams;
  private reader: Interface;
  private pending = new Map<number, {
    resolve: (v: unknown) => void;
    reject: (e: Error) => void;
  }>();
  private nextId = 1;
  private closed = false;
  private envInfo: EnvInfo | null = null;

  private constructor(proc: ChildProcessWithoutNullStreams) {
    this.proc = proc;
    this.reader = createInterface({ input: proc.stdout });
    this.reader.on("line", (line) => this.onLine(line));
    proc.on("exit", () => {
      for (const { reject } of this.pending.values()) {
        reject(new EnvClosedError());
      }
      this.pending.clear();
    });
  }

  static async make(
    scenario: string,
    seed = 0,
    opts: MakeOptions = {},
  ): Promise<WrappedEnv> {
    const python = opts.pythonBin ?? "python3";
    const bridge = opts.bridgePath ?? defaultBridgePath;
    const proc = spawn(python, [bridge], { stdio: ["pipe", "pipe", "pipe"] });
    const env = new WrappedEnv(proc);
    const params: Record<string, unknown> = { scenario, seed };
    if (opts.overrides) params.overrides = opts.overrides;
    env.envInfo = (await env.call("make", params)) as EnvInfo;
    return env;
  }

  private onLine(line: string): void {
    if (!line.trim()) return;
    const response = JSON.parse(line) as BridgeResponse;
    const waiter = this.pending.get(response.id);
    if (!waiter) return;
    this.pending.delete(response.id);
    if (response.error) {
      const { type, message } = response.error;
      waiter.reject(
        type === "UnavailableAction"
          ? new UnavailableActionError(message)
          : new EnvError(type, message),
      );
    } else {
      waiter.resolve(response.result);
    }
  }

  private call(method: string, params: Record<string, unknown> = {}): Promise<unknown> {
    if (this.closed) {
      return Promise.reject(new EnvClosedError());
    }
    const id = this.nextId++;
    const payload = JSON.stringify({ id, method, params });
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.proc.stdin.write(payload + "\n");
    });
  }

  async reset(seed?: number): Promise<ResetResult> {
    return (await this.call("reset", seed === undefined ? {} : { seed })) as ResetResult;
  }

  async step(actions: number[]): Promise<StepResult> {
    return (await this.call("step", { actions })) as StepResult;
  }

  async get_obs(): Promise<number[][]> {
    return (await this.call("get_obs")) as number[][];
  }

  async get_obs_agent(agentId: number): Promise<number[]> {
    return (await this.call("get_obs_agent", { agent_id: agentId })) as number[];
  }

  async get_state(): Promise<number[]> {
    return (await this.call("get_state")) as number[];
  }

  async get_avail_actions(): Promise<number[][]> {
    return (await this.call("get_avail_actions")) as number[][];
  }

  async get_avail_agent_actions(agentId: number): Promise<number[]> {
    return (await this.call("get_avail_agent_actions", { agent_id: agentId })) as number[];
  }

  async get_env_info(): Promise<EnvInfo> {
    if (this.envInfo) return this.envInfo;
    return (await this.call("get_env_info")) as EnvInfo;
  }

  async close(): Promise<void> {
    if (this.closed) return;
    try {
      await this.call("close");
    } finally {
      this.closed = true;
      this.proc.stdin.end();
    }
  }
}
