/** Teleop session state machine.
 *
 * The client never simulates: every displayed number originates from a
 * server message (receipts, obs headers, info results).  This module owns
 * the request cycle — exactly one action may be in flight, and each action
 * is followed by an obs + info refresh before the next keypress is
 * accepted — and accumulates the episode event log in the exact shape the
 * harness's `score` command consumes.
 */

import {
  COLLECT, MOVE_FORWARD, TURN_LEFT, TURN_RIGHT,
  DecodedObs, EpisodeResultJson, InfoMsg, ObsHeader, ReceiptMsg, Request,
  ResetMsg, ServerMsg, SessionConfigJson, decodeObs,
} from "./protocol.js";

/** One per-step record, schema-identical to the server's own event log. */
export interface EventRecord {
  step: number;
  action: number;
  pose: [number, number, number];
  collided: boolean;
  collected_ids: number[];
  reward: number;
}

export type Phase =
  | "idle"            // before reset is sent
  | "awaiting_reset"
  | "awaiting_obs"
  | "awaiting_info"
  | "ready"           // keypresses accepted
  | "awaiting_receipt"
  | "finished";

export const KEY_ACTIONS: Record<string, number> = {
  ArrowUp: MOVE_FORWARD,
  ArrowLeft: TURN_LEFT,
  ArrowRight: TURN_RIGHT,
  " ": COLLECT,
};

export const OBS_MODALITIES = ["color", "seg", "depth"];

/** Everything the HUD shows, verbatim from server messages. */
export interface Hud {
  sceneSeed: number | null;
  episodeSeed: number | null;
  mode: string | null;
  backend: string | null;
  steps: number | null;
  limit: number | null;
  collisions: number | null;
  found: number | null;
  nTargets: number | null;
  lastReward: number | null;
  score: number | null;
  exploredM2: number | null;
  poseIsEstimate: boolean;
  done: boolean;
}

const EMPTY_HUD: Hud = {
  sceneSeed: null, episodeSeed: null, mode: null, backend: null,
  steps: null, limit: null, collisions: null, found: null, nTargets: null,
  lastReward: null, score: null, exploredM2: null,
  poseIsEstimate: false, done: false,
};

export interface SummaryColumn {
  label: string;
  value: number;
}

export class TeleopSession {
  phase: Phase = "idle";
  hud: Hud = { ...EMPTY_HUD };
  log: EventRecord[] = [];
  /** Receipt poses (plus the spawn), for the explored-map pane. */
  trail: [number, number, number][] = [];
  frames: Record<string, DecodedObs> | null = null;
  frameHeader: ObsHeader | null = null;
  lastError: string | null = null;
  private pendingAction: number | null = null;
  private result: EpisodeResultJson | null = null;

  /** Request list that starts an episode; pass each to the socket. */
  start(config: SessionConfigJson): Request[] {
    this.phase = "awaiting_reset";
    this.hud = { ...EMPTY_HUD };
    this.log = [];
    this.trail = [];
    this.frames = null;
    this.frameHeader = null;
    this.lastError = null;
    this.pendingAction = null;
    this.result = null;
    return [{ cmd: "reset", config }];
  }

  /**
   * One keydown = at most one discrete action.  Returns the requests to
   * send, or [] when the press is ignored (unknown key, episode finished,
   * or a cycle still in flight).
   */
  keydown(key: string): Request[] {
    const action = KEY_ACTIONS[key];
    if (action === undefined || this.phase !== "ready") return [];
    this.pendingAction = action;
    this.phase = "awaiting_receipt";
    return [{ cmd: "action", action }];
  }

  /** Feed every socket message through here; send back the returned requests. */
  applyServer(msg: ServerMsg): Request[] {
    switch (msg.type) {
      case "reset":
        return this.onReset(msg);
      case "receipt":
        return this.onReceipt(msg);
      case "obs":
        this.frames = decodeObs(msg);
        this.frameHeader = msg.header;
        this.hud.poseIsEstimate = msg.header.pose_is_estimate;
        if (this.phase === "awaiting_obs") this.phase = "awaiting_info";
        return [];
      case "info":
        return this.onInfo(msg);
      case "error":
        this.lastError = `${msg.error}: ${msg.message}`;
        // Drop the in-flight cycle so the user can continue.
        this.pendingAction = null;
        if (this.phase !== "idle" && this.phase !== "finished") this.phase = "ready";
        return [];
      default:
        return []; // pong / mode / step — nothing displayed from these
    }
  }

  private onReset(msg: ResetMsg): Request[] {
    this.hud.sceneSeed = msg.scene_seed;
    this.hud.episodeSeed = msg.episode_seed;
    this.hud.mode = msg.mode;
    this.hud.backend = msg.backend;
    this.hud.limit = msg.episode_limit;
    this.hud.nTargets = msg.n_targets;
    this.trail = [msg.spawn];
    this.phase = "awaiting_obs";
    return [{ cmd: "obs", modalities: OBS_MODALITIES }, { cmd: "info" }];
  }

  private onReceipt(msg: ReceiptMsg): Request[] {
    if (this.pendingAction === null) return []; // receipt we did not ask for
    this.log.push({
      step: msg.a,
      action: this.pendingAction,
      pose: [msg.pose[0], msg.pose[1], msg.pose[2]],
      collided: msg.collided,
      collected_ids: [...msg.collected],
      reward: msg.reward,
    });
    this.pendingAction = null;
    this.trail.push([msg.pose[0], msg.pose[1], msg.pose[2]]);
    this.hud.steps = msg.a;
    this.hud.collisions = msg.c;
    this.hud.lastReward = msg.reward;
    this.hud.done = msg.done;
    this.phase = "awaiting_obs";
    return [{ cmd: "obs", modalities: OBS_MODALITIES }, { cmd: "info" }];
  }

  private onInfo(msg: InfoMsg): Request[] {
    if (msg.a !== undefined) this.hud.steps = msg.a;
    if (msg.c !== undefined) this.hud.collisions = msg.c;
    if (msg.found !== undefined) this.hud.found = msg.found;
    if (msg.n_targets !== undefined) this.hud.nTargets = msg.n_targets;
    if (msg.mode !== undefined) this.hud.mode = msg.mode;
    if (msg.backend !== undefined) this.hud.backend = msg.backend;
    if (msg.done !== undefined) this.hud.done = msg.done;
    if (msg.result) {
      this.result = msg.result;
      this.hud.score = msg.result.score;
      this.hud.exploredM2 = msg.result.explored_m2;
    }
    if (this.phase === "awaiting_info") {
      this.phase = this.hud.done ? "finished" : "ready";
    }
    return [];
  }

  /** End-of-episode table (six columns), from the last info result. */
  summary(): SummaryColumn[] | null {
    if (this.phase !== "finished" || !this.result) return null;
    const r = this.result;
    return [
      { label: "recall", value: r.recall },
      { label: "precision", value: r.precision },
      { label: "collisions", value: r.collisions },
      { label: "steps", value: r.actions },
      { label: "score", value: r.score },
      { label: "explored_m2", value: r.explored_m2 },
    ];
  }

  /** Episode log JSON — accepted unmodified by the harness `score` command. */
  logJson(): string {
    return JSON.stringify(this.log);
  }

  logFilename(): string {
    return `episode_scene${this.hud.sceneSeed ?? "x"}_seed${this.hud.episodeSeed ?? "x"}.json`;
  }
}
