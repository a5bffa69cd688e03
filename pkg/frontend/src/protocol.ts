// Wire protocol envelopes: one JSON object per line (TCP) or per WebSocket
// text frame. Mirrors docs/protocol.md on the server side.

export type MessageType =
  | "hello"
  | "scene_info"
  | "episode_start"
  | "obs"
  | "cmd"
  | "episode_end"
  | "trial_end"
  | "error"
  | "ping"
  | "pong";

export type Role = "controller" | "teleop" | "spectator";

export interface Envelope {
  type: MessageType;
  seq: number;
  payload: Record<string, unknown>;
}

export type Pose = [number, number, number]; // x, y, theta

export interface SceneInfo {
  name: string;
  bounds: [number, number, number, number];
  grid_resolution: number;
  obstacles: [number, number][][];
  ped_anchors: Pose[];
  robot_anchors: Pose[];
  mode: "lockstep" | "realtime";
  dt: number;
}

export interface RobotSpecInfo {
  name: string;
  footprint_radius: number;
  v_max: number;
  w_max: number;
  a_max: number;
  alpha_max: number;
}

export interface EpisodeStart {
  episode_id: number;
  goal: Pose;
  robot_spec: RobotSpecInfo;
  config_hash: string;
}

export interface LiveMetrics {
  elapsed: number;
  goal_distance: number;
  ped_collisions: number;
  static_collisions: number;
  min_ped_distance: number | null;
}

export interface ObsPayload {
  tick: number;
  sim_time: number;
  pose: Pose;
  twist: [number, number];
  goal: Pose;
  scan: number[];
  nearest_ped_distance?: number;
  pedestrians?: [number, number, number, number][]; // id, x, y, theta
  metrics?: LiveMetrics;
}

export interface EpisodeMetrics {
  completed: boolean;
  elapsed: number;
  final_distance: number;
  ped_collisions: number;
  static_collisions: number;
  aborted: boolean;
  min_ped_distance?: number;
  abort_reason?: string;
}

export interface ErrorPayload {
  reason: string;
  detail?: string;
  offending_seq?: number;
}

const TYPES: ReadonlySet<string> = new Set([
  "hello",
  "scene_info",
  "episode_start",
  "obs",
  "cmd",
  "episode_end",
  "trial_end",
  "error",
  "ping",
  "pong",
]);

export class ProtocolError extends Error {}

/** Outgoing sequence numbers start at 0 and increase by 1. */
export class SeqAssigner {
  private next = 0;
  take(): number {
    return this.next++;
  }
}

/** Incoming sequence bookkeeping; a gap is a protocol violation. */
export class SeqChecker {
  private expected = 0;
  check(seq: number): boolean {
    if (seq !== this.expected) {
      this.expected = seq + 1;
      return false;
    }
    this.expected += 1;
    return true;
  }
}

export function encodeEnvelope(type: MessageType, seq: number, payload: Record<string, unknown>): string {
  return JSON.stringify({ type, seq, payload });
}

export function decodeEnvelope(line: string): Envelope {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    throw new ProtocolError(`parse: not valid JSON: ${line.slice(0, 80)}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ProtocolError("schema: envelope must be an object");
  }
  const env = raw as { type?: unknown; seq?: unknown; payload?: unknown };
  if (typeof env.type !== "string" || !TYPES.has(env.type)) {
    throw new ProtocolError(`schema: unknown message type ${String(env.type)}`);
  }
  if (typeof env.seq !== "number" || !Number.isInteger(env.seq) || env.seq < 0) {
    throw new ProtocolError("schema: seq must be a non-negative integer");
  }
  if (typeof env.payload !== "object" || env.payload === null || Array.isArray(env.payload)) {
    throw new ProtocolError("schema: payload must be an object");
  }
  return { type: env.type as MessageType, seq: env.seq, payload: env.payload as Record<string, unknown> };
}
