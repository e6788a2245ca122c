import { describe, expect, it } from "vitest";

import {
  InfoMsg, ObsMsg, ReceiptMsg, ResetMsg,
} from "../src/protocol.js";
import { TeleopSession } from "../src/state.js";

function b64(bytes: Uint8Array): string {
  let bin = "";
  for (const b of bytes) bin += String.fromCharCode(b);
  return btoa(bin);
}

const RESET: ResetMsg = {
  type: "reset", scene_digest: "abc", scene_seed: 4, episode_seed: 9,
  spawn: [1.0, 2.0, 0.5], n_targets: 8, episode_limit: 400,
  mode: "gt", step_mode: true, backend: "native", session_id: "s1",
};

function receipt(a: number, over: Partial<ReceiptMsg> = {}): ReceiptMsg {
  return {
    type: "receipt", collided: false, collected: [], done: false,
    a, c: 0, pose: [1.5, 2.0, 0.5], reward: -0.1, ...over,
  };
}

function obsMsg(): ObsMsg {
  const seg = new Uint8Array([0, 1, 2, 2, 1, 0]);
  return {
    type: "obs",
    header: {
      modalities: ["seg"], dims: { seg: [2, 3] }, dtypes: { seg: "<u1" },
      mode: "gt", pose_is_estimate: false, tick: 3,
    },
    buffers: [{ name: "seg", b64: b64(seg) }],
  };
}

function info(over: Partial<InfoMsg> = {}): InfoMsg {
  return {
    type: "info", backend: "native", tick: 3, dt: 0.005, mode: "gt",
    a: 0, c: 0, found: 0, n_targets: 8, done: false, ...over,
  };
}

/** Walk a fresh session to the first `ready` phase. */
function readySession(): TeleopSession {
  const s = new TeleopSession();
  s.start({ scene_seed: 4, episode_seed: 9 });
  s.applyServer(RESET);
  s.applyServer(obsMsg());
  s.applyServer(info());
  expect(s.phase).toBe("ready");
  return s;
}

describe("episode start", () => {
  it("start() emits exactly one reset request", () => {
    const s = new TeleopSession();
    const reqs = s.start({ scene_seed: 4 });
    expect(reqs).toEqual([{ cmd: "reset", config: { scene_seed: 4 } }]);
    expect(s.phase).toBe("awaiting_reset");
  });

  it("reset reply fills the HUD from the message and requests obs+info", () => {
    const s = new TeleopSession();
    s.start({});
    const reqs = s.applyServer(RESET);
    expect(reqs.map((r) => r.cmd)).toEqual(["obs", "info"]);
    expect(s.hud.sceneSeed).toBe(4);
    expect(s.hud.limit).toBe(400);
    expect(s.hud.nTargets).toBe(8);
    expect(s.trail).toEqual([[1.0, 2.0, 0.5]]);
  });

  it("keydown before the cycle completes is ignored", () => {
    const s = new TeleopSession();
    s.start({});
    expect(s.keydown("ArrowUp")).toEqual([]);
    s.applyServer(RESET);
    expect(s.keydown("ArrowUp")).toEqual([]);
    s.applyServer(obsMsg());
    expect(s.keydown("ArrowUp")).toEqual([]);
    s.applyServer(info());
    expect(s.keydown("ArrowUp")).toEqual([{ cmd: "action", action: 0 }]);
  });
});

describe("action gating", () => {
  it("maps arrows and space to the discrete actions", () => {
    for (const [key, action] of [
      ["ArrowUp", 0], ["ArrowLeft", 1], ["ArrowRight", 2], [" ", 3],
    ] as const) {
      const s = readySession();
      expect(s.keydown(key)).toEqual([{ cmd: "action", action }]);
    }
  });

  it("ignores unknown keys", () => {
    const s = readySession();
    expect(s.keydown("x")).toEqual([]);
    expect(s.phase).toBe("ready");
  });

  it("allows at most one in-flight action per full refresh cycle", () => {
    const s = readySession();
    expect(s.keydown("ArrowUp")).toHaveLength(1);
    // every later press is dropped until receipt + obs + info all arrive
    expect(s.keydown("ArrowUp")).toEqual([]);
    s.applyServer(receipt(1));
    expect(s.keydown("ArrowLeft")).toEqual([]);
    s.applyServer(obsMsg());
    expect(s.keydown("ArrowLeft")).toEqual([]);
    s.applyServer(info({ a: 1 }));
    expect(s.keydown("ArrowLeft")).toEqual([{ cmd: "action", action: 1 }]);
  });

  it("a receipt triggers an obs+info refresh", () => {
    const s = readySession();
    s.keydown("ArrowUp");
    const reqs = s.applyServer(receipt(1));
    expect(reqs.map((r) => r.cmd)).toEqual(["obs", "info"]);
  });
});

describe("event log", () => {
  it("one receipt appends exactly one record in the harness schema", () => {
    const s = readySession();
    s.keydown(" ");
    s.applyServer(receipt(1, {
      collided: true, collected: [2, 5], reward: 1.9, pose: [3, 4, 1.25],
    }));
    expect(s.log).toEqual([{
      step: 1, action: 3, pose: [3, 4, 1.25],
      collided: true, collected_ids: [2, 5], reward: 1.9,
    }]);
    const parsed = JSON.parse(s.logJson());
    expect(parsed).toEqual(s.log);
    expect(Object.keys(parsed[0]).sort()).toEqual(
      ["action", "collected_ids", "collided", "pose", "reward", "step"],
    );
  });

  it("an unsolicited receipt logs nothing", () => {
    const s = readySession();
    expect(s.applyServer(receipt(1))).toEqual([]);
    expect(s.log).toEqual([]);
  });

  it("receipts drive the trail", () => {
    const s = readySession();
    s.keydown("ArrowUp");
    s.applyServer(receipt(1, { pose: [2, 2, 0] }));
    s.applyServer(obsMsg());
    s.applyServer(info({ a: 1 }));
    s.keydown("ArrowUp");
    s.applyServer(receipt(2, { pose: [2.5, 2, 0] }));
    expect(s.trail).toEqual([[1, 2, 0.5], [2, 2, 0], [2.5, 2, 0]]);
  });
});

describe("HUD provenance", () => {
  it("score and explored only ever come from info results", () => {
    const s = readySession();
    s.keydown("ArrowUp");
    s.applyServer(receipt(1, { reward: -0.1 }));
    expect(s.hud.score).toBeNull(); // a receipt never sets the score
    s.applyServer(obsMsg());
    s.applyServer(info({
      a: 1,
      result: {
        recall: 0.125, precision: 1.0, collisions: 0, actions: 1,
        limit: 400, score: 0.22475, explored_m2: 3.25,
      },
    }));
    expect(s.hud.score).toBe(0.22475);
    expect(s.hud.exploredM2).toBe(3.25);
  });

  it("step and collision counters mirror the receipt", () => {
    const s = readySession();
    s.keydown("ArrowUp");
    s.applyServer(receipt(5, { c: 2 }));
    expect(s.hud.steps).toBe(5);
    expect(s.hud.collisions).toBe(2);
  });

  it("pose source flag mirrors the obs header", () => {
    const s = readySession();
    const estimated = obsMsg();
    estimated.header.pose_is_estimate = true;
    s.applyServer(estimated);
    expect(s.hud.poseIsEstimate).toBe(true);
  });
});

describe("episode end", () => {
  const RESULT = {
    recall: 0.25, precision: 0.5, collisions: 3, actions: 400,
    limit: 400, score: 0.19925, explored_m2: 41.5,
  };

  function finished(): TeleopSession {
    const s = readySession();
    s.keydown("ArrowUp");
    s.applyServer(receipt(400, { done: true }));
    s.applyServer(obsMsg());
    s.applyServer(info({ a: 400, done: true, result: RESULT }));
    return s;
  }

  it("summary has the six columns, in order, from the info result", () => {
    const s = finished();
    expect(s.phase).toBe("finished");
    expect(s.summary()).toEqual([
      { label: "recall", value: 0.25 },
      { label: "precision", value: 0.5 },
      { label: "collisions", value: 3 },
      { label: "steps", value: 400 },
      { label: "score", value: 0.19925 },
      { label: "explored_m2", value: 41.5 },
    ]);
  });

  it("no summary before the episode finishes", () => {
    expect(readySession().summary()).toBeNull();
  });

  it("keypresses after the end are ignored", () => {
    const s = finished();
    expect(s.keydown("ArrowUp")).toEqual([]);
  });

  it("download filename identifies the episode", () => {
    expect(finished().logFilename()).toBe("episode_scene4_seed9.json");
  });
});

describe("errors", () => {
  it("an error reply cancels the in-flight action and unblocks input", () => {
    const s = readySession();
    s.keydown("ArrowUp");
    s.applyServer({ type: "error", error: "StateError", message: "nope" });
    expect(s.lastError).toBe("StateError: nope");
    expect(s.log).toEqual([]);
    expect(s.keydown("ArrowRight")).toEqual([{ cmd: "action", action: 2 }]);
  });
});

describe("restart", () => {
  it("start() clears the previous episode completely", () => {
    const s = readySession();
    s.keydown("ArrowUp");
    s.applyServer(receipt(1));
    const reqs = s.start({ scene_seed: 5 });
    expect(reqs[0].cmd).toBe("reset");
    expect(s.log).toEqual([]);
    expect(s.trail).toEqual([]);
    expect(s.hud.steps).toBeNull();
    expect(s.summary()).toBeNull();
  });
});
