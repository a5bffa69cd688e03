// Transport-agnostic teleop session: the same state machine runs over a
// browser WebSocket or a raw TCP line stream (tests). The view renders only
// protocol data; the client never simulates.

import {
  decodeEnvelope,
  encodeEnvelope,
  Envelope,
  EpisodeMetrics,
  EpisodeStart,
  ErrorPayload,
  MessageType,
  ObsPayload,
  ProtocolError,
  Role,
  SceneInfo,
  SeqAssigner,
  SeqChecker,
} from "./protocol.js";

export interface Transport {
  send(line: string): void;
  close(): void;
}

export type ConnectionStatus = "connecting" | "connected" | "reconnecting" | "closed";

export interface ViewState {
  status: ConnectionStatus;
  scene: SceneInfo | null;
  episode: EpisodeStart | null;
  obs: ObsPayload | null;
  lastEpisodeEnd: EpisodeMetrics | null;
  report: Record<string, unknown> | null;
  lastError: ErrorPayload | null;
  framesSinceObs: number; // staleness indicator for the renderer
}

export function initialView(): ViewState {
  return {
    status: "connecting",
    scene: null,
    episode: null,
    obs: null,
    lastEpisodeEnd: null,
    report: null,
    lastError: null,
    framesSinceObs: 0,
  };
}

/** Reconnect backoff: 0.5 s doubling to a 5 s ceiling. */
export function reconnectDelayMs(attempt: number): number {
  return Math.min(500 * 2 ** Math.max(0, attempt), 5000);
}

export class TeleopClient {
  readonly view: ViewState = initialView();
  private tx = new SeqAssigner();
  private rx = new SeqChecker();
  private transport: Transport | null = null;
  private sentCmds = 0;

  constructor(
    readonly role: Role = "teleop",
    private readonly onChange: (view: ViewState) => void = () => {},
  ) {}

  attach(transport: Transport): void {
    this.transport = transport;
    this.tx = new SeqAssigner();
    this.rx = new SeqChecker();
    this.sentCmds = 0;
    this.view.status = "connecting";
    this.send("hello", { role: this.role });
    this.onChange(this.view);
  }

  detach(status: ConnectionStatus): void {
    this.transport = null;
    this.view.status = status;
    this.onChange(this.view);
  }

  get commandsSent(): number {
    return this.sentCmds;
  }

  private send(type: MessageType, payload: Record<string, unknown>): void {
    if (!this.transport) return;
    this.transport.send(encodeEnvelope(type, this.tx.take(), payload));
  }

  /** Emit one velocity command exactly as mapped from the sampled input. */
  sendCmd(v: number, w: number): void {
    if (!this.transport || this.view.status !== "connected" || !this.view.episode) return;
    this.send("cmd", { v, w });
    this.sentCmds += 1;
  }

  handleLine(line: string): void {
    let env: Envelope;
    try {
      env = decodeEnvelope(line);
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.view.lastError = { reason: "parse", detail: err.message };
        this.onChange(this.view);
        return;
      }
      throw err;
    }
    if (!this.rx.check(env.seq)) {
      this.view.lastError = { reason: "seq", detail: `server seq gap at ${env.seq}` };
    }
    this.dispatch(env);
    this.onChange(this.view);
  }

  private dispatch(env: Envelope): void {
    switch (env.type) {
      case "scene_info":
        this.view.scene = env.payload as unknown as SceneInfo;
        this.view.status = "connected";
        break;
      case "episode_start":
        this.view.episode = env.payload as unknown as EpisodeStart;
        this.view.obs = null;
        this.view.lastEpisodeEnd = null;
        break;
      case "obs":
        this.view.obs = env.payload as unknown as ObsPayload;
        this.view.framesSinceObs = 0;
        break;
      case "episode_end":
        this.view.lastEpisodeEnd = (env.payload as { metrics?: EpisodeMetrics }).metrics ?? null;
        this.view.episode = null;
        break;
      case "trial_end":
        this.view.report = (env.payload as { report?: Record<string, unknown> }).report ?? null;
        break;
      case "error":
        this.view.lastError = env.payload as unknown as ErrorPayload;
        break;
      case "ping":
        this.send("pong", env.payload);
        break;
      case "pong":
        break;
      default:
        this.view.lastError = { reason: "protocol", detail: `unexpected ${env.type}` };
    }
  }

  /** Called once per render frame to age the last observation. */
  tickFrame(): void {
    this.view.framesSinceObs += 1;
  }
}
