/** WebSocket JSON protocol types and observation-buffer decoding.
 *
 * Mirrors the server's documented wire contract (docs/protocol.md in the
 * simulator repo): requests carry `cmd`, replies carry `type`, observation
 * buffers arrive base64-encoded in header order, little-endian.
 */

export const MOVE_FORWARD = 0;
export const TURN_LEFT = 1;
export const TURN_RIGHT = 2;
export const COLLECT = 3;

export const ACTION_NAMES: Record<number, string> = {
  [MOVE_FORWARD]: "move",
  [TURN_LEFT]: "turn left",
  [TURN_RIGHT]: "turn right",
  [COLLECT]: "collect",
};

/** Semantic class table (id -> name) from the scene schema. */
export const CLASS_NAMES = [
  "floor", "ceiling", "wall", "monitor", "door", "table",
  "chair", "storage", "couch", "clutter", "target",
] as const;

/** id -> RGB used by the segmentation pane and its legend. */
export const CLASS_COLORS: ReadonlyArray<readonly [number, number, number]> = [
  [120, 120, 120], // floor
  [210, 210, 210], // ceiling
  [170, 120, 80],  // wall
  [40, 40, 200],   // monitor
  [140, 70, 20],   // door
  [110, 70, 30],   // table
  [200, 60, 60],   // chair
  [130, 90, 160],  // storage
  [60, 160, 200],  // couch
  [230, 180, 40],  // clutter
  [40, 200, 80],   // target
];

export type Pose = [number, number, number];

export interface SessionConfigJson {
  scene_seed?: number;
  episode_seed?: number;
  mode?: "gt" | "perception";
  task?: { episode_limit?: number; n_targets?: number };
}

// -- requests ---------------------------------------------------------------

export type Request =
  | { cmd: "ping" }
  | { cmd: "reset"; config: SessionConfigJson }
  | { cmd: "action"; action: number }
  | { cmd: "obs"; modalities: string[] }
  | { cmd: "info" };

// -- replies ----------------------------------------------------------------

export interface ResetMsg {
  type: "reset";
  scene_digest: string;
  scene_seed: number;
  episode_seed: number;
  spawn: Pose;
  n_targets: number;
  episode_limit: number;
  mode: string;
  step_mode: boolean;
  backend: string;
  session_id: string;
}

export interface ReceiptMsg {
  type: "receipt";
  collided: boolean;
  collected: number[];
  done: boolean;
  a: number;
  c: number;
  pose: Pose;
  reward: number;
}

export interface ObsHeader {
  modalities: string[];
  dims: Record<string, number[]>;
  dtypes: Record<string, string>;
  mode: string;
  pose_is_estimate: boolean;
  tick: number;
}

export interface ObsMsg {
  type: "obs";
  header: ObsHeader;
  buffers: { name: string; b64: string }[];
}

export interface EpisodeResultJson {
  recall: number;
  precision: number;
  collisions: number;
  actions: number;
  limit: number;
  score: number;
  explored_m2: number;
}

export interface InfoMsg {
  type: "info";
  backend: string;
  tick: number;
  dt: number;
  mode?: string;
  pose?: Pose;
  a?: number;
  c?: number;
  collect_attempts?: number;
  collect_successes?: number;
  found?: number;
  n_targets?: number;
  done?: boolean;
  result?: EpisodeResultJson;
}

export interface ErrorMsg {
  type: "error";
  error: string;
  message: string;
}

export type ServerMsg =
  | { type: "pong" }
  | { type: "mode"; mode: string }
  | { type: "step"; ticks: number; collided: boolean; pose: Pose }
  | ResetMsg
  | ReceiptMsg
  | ObsMsg
  | InfoMsg
  | ErrorMsg;

export function parseServerMsg(text: string): ServerMsg {
  const obj: unknown = JSON.parse(text);
  if (typeof obj !== "object" || obj === null || typeof (obj as { type?: unknown }).type !== "string") {
    throw new Error("server message without a type field");
  }
  return obj as ServerMsg;
}

// -- observation buffers ------------------------------------------------------

export type ObsArray = Uint8Array | Uint16Array | Float32Array | Float64Array;

export interface DecodedObs {
  data: ObsArray;
  dims: number[];
}

export function bytesFromB64(b64: string): Uint8Array {
  const bin = atob(b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}

const ITEM_SIZES: Record<string, number> = {
  "<u1": 1, "<u2": 2, "<f4": 4, "<f8": 8,
};

export function decodeArray(dtype: string, bytes: Uint8Array): ObsArray {
  // Buffers start at offset 0 of their own ArrayBuffer, so the typed-array
  // views below are aligned.  Little-endian per the wire contract.
  switch (dtype) {
    case "<u1":
      return bytes;
    case "<u2":
      return new Uint16Array(bytes.buffer, bytes.byteOffset, bytes.byteLength / 2);
    case "<f4":
      return new Float32Array(bytes.buffer, bytes.byteOffset, bytes.byteLength / 4);
    case "<f8":
      return new Float64Array(bytes.buffer, bytes.byteOffset, bytes.byteLength / 8);
    default:
      throw new Error(`unsupported dtype: ${dtype}`);
  }
}

/** Decode every buffer in an obs reply, validating size against the header. */
export function decodeObs(msg: ObsMsg): Record<string, DecodedObs> {
  const out: Record<string, DecodedObs> = {};
  for (const { name, b64 } of msg.buffers) {
    const dims = msg.header.dims[name];
    const dtype = msg.header.dtypes[name];
    if (!dims || !dtype) throw new Error(`buffer ${name} missing from header`);
    const bytes = bytesFromB64(b64);
    const expected = dims.reduce((p, d) => p * d, 1) * ITEM_SIZES[dtype];
    if (bytes.byteLength !== expected) {
      throw new Error(`buffer ${name}: got ${bytes.byteLength} bytes, header says ${expected}`);
    }
    out[name] = { data: decodeArray(dtype, bytes), dims };
  }
  return out;
}
