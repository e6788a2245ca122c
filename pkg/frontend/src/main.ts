/** Browser entry point: one WebSocket, one keyboard handler, one state
 * machine.  All numbers on screen come from server messages; this file only
 * moves them into the DOM and paints the received frames.
 */

import { ACTION_NAMES, Request, SessionConfigJson, parseServerMsg } from "./protocol.js";
import {
  colorToRgba, depthToRgba, legendEntries, projectPoint, projectScale,
  segToRgba, trailExtent,
} from "./render.js";
import { KEY_ACTIONS, TeleopSession } from "./state.js";

const MAP_SIZE = 280;
const VISIT_RADIUS_M = 1.0; // drawn radius around each visited pose

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function canvasCtx(id: string): CanvasRenderingContext2D {
  const ctx = el<HTMLCanvasElement>(id).getContext("2d");
  if (!ctx) throw new Error(`no 2d context for #${id}`);
  return ctx;
}

function configFromUrl(): SessionConfigJson {
  const q = new URLSearchParams(window.location.search);
  const cfg: SessionConfigJson = {};
  if (q.has("scene")) cfg.scene_seed = Number(q.get("scene"));
  if (q.has("episode")) cfg.episode_seed = Number(q.get("episode"));
  const mode = q.get("mode");
  if (mode === "gt" || mode === "perception") cfg.mode = mode;
  return cfg;
}

function wsUrl(): string {
  const q = new URLSearchParams(window.location.search);
  return q.get("server") ?? `ws://${window.location.hostname || "127.0.0.1"}:9002`;
}

const session = new TeleopSession();

function paintFrame(id: string, rgba: Uint8ClampedArray, w: number, h: number): void {
  const canvas = el<HTMLCanvasElement>(id);
  canvas.width = w;
  canvas.height = h;
  const ctx = canvasCtx(id);
  const img = ctx.createImageData(w, h);
  img.data.set(rgba);
  ctx.putImageData(img, 0, 0);
}

function paintPanes(): void {
  const frames = session.frames;
  if (!frames) return;
  const color = frames["color"];
  if (color) {
    const [h, w] = color.dims;
    paintFrame("pane-color", colorToRgba(color.data as Uint8Array), w, h);
  }
  const seg = frames["seg"];
  if (seg) {
    const [h, w] = seg.dims;
    paintFrame("pane-seg", segToRgba(seg.data as Uint8Array), w, h);
    const legend = el<HTMLDivElement>("legend");
    legend.replaceChildren(
      ...legendEntries(seg.data as Uint8Array).map(({ name, color: c }) => {
        const item = document.createElement("span");
        item.className = "legend-item";
        const chip = document.createElement("span");
        chip.className = "chip";
        chip.style.background = `rgb(${c[0]},${c[1]},${c[2]})`;
        item.append(chip, document.createTextNode(name));
        return item;
      }),
    );
  }
  const depth = frames["depth"];
  if (depth) {
    const [h, w] = depth.dims;
    // The far sentinel equals the camera's max range, so the frame max is a
    // server-derived normalizer, not a client guess.
    const data = depth.data as Float32Array;
    let far = 0;
    for (let i = 0; i < data.length; i++) far = Math.max(far, data[i]);
    paintFrame("pane-depth", depthToRgba(data, far || 1), w, h);
  }
}

function paintMap(): void {
  const ctx = canvasCtx("pane-map");
  const canvas = ctx.canvas;
  canvas.width = MAP_SIZE;
  canvas.height = MAP_SIZE;
  ctx.fillStyle = "#14141c";
  ctx.fillRect(0, 0, MAP_SIZE, MAP_SIZE);
  if (session.trail.length === 0) return;
  const extent = trailExtent(session.trail);
  const rPx = Math.max(projectScale(extent, MAP_SIZE) * VISIT_RADIUS_M, 2);

  ctx.fillStyle = "rgba(90, 140, 220, 0.25)";
  for (const [x, y] of session.trail) {
    const [px, py] = projectPoint(x, y, extent, MAP_SIZE);
    ctx.beginPath();
    ctx.arc(px, py, rPx, 0, Math.PI * 2);
    ctx.fill();
  }
  ctx.strokeStyle = "#9ec1ff";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  session.trail.forEach(([x, y], i) => {
    const [px, py] = projectPoint(x, y, extent, MAP_SIZE);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();

  const [x, y, yaw] = session.trail[session.trail.length - 1];
  const [px, py] = projectPoint(x, y, extent, MAP_SIZE);
  ctx.fillStyle = "#ffd166";
  ctx.beginPath();
  ctx.arc(px, py, 4, 0, Math.PI * 2);
  ctx.fill();
  ctx.strokeStyle = "#ffd166";
  ctx.beginPath();
  ctx.moveTo(px, py);
  ctx.lineTo(px + 10 * Math.cos(yaw), py - 10 * Math.sin(yaw));
  ctx.stroke();
}

function fmt(v: number | null, digits = 0): string {
  if (v === null) return "–";
  return digits > 0 ? v.toFixed(digits) : String(v);
}

function paintHud(): void {
  const h = session.hud;
  el("hud-scene").textContent = fmt(h.sceneSeed);
  el("hud-mode").textContent = h.mode ?? "–";
  el("hud-steps").textContent = `${fmt(h.steps)} / ${fmt(h.limit)}`;
  el("hud-collisions").textContent = fmt(h.collisions);
  el("hud-found").textContent = `${fmt(h.found)} / ${fmt(h.nTargets)}`;
  el("hud-reward").textContent = fmt(h.lastReward, 1);
  el("hud-score").textContent = fmt(h.score, 4);
  el("hud-explored").textContent = fmt(h.exploredM2, 2);
  el("hud-pose-src").textContent = h.poseIsEstimate ? "estimated" : "ground truth";
  el("status").textContent = session.lastError ?? session.phase;
}

function paintSummary(): void {
  const box = el<HTMLDivElement>("summary");
  const cols = session.summary();
  if (!cols) {
    box.hidden = true;
    return;
  }
  box.hidden = false;
  const head = el<HTMLTableRowElement>("summary-head");
  const row = el<HTMLTableRowElement>("summary-row");
  head.replaceChildren(...cols.map(({ label }) => {
    const th = document.createElement("th");
    th.textContent = label;
    return th;
  }));
  row.replaceChildren(...cols.map(({ label, value }) => {
    const td = document.createElement("td");
    td.textContent = Number.isInteger(value) && label !== "score"
      ? String(value) : value.toFixed(4);
    return td;
  }));
}

function offerDownload(): void {
  const link = el<HTMLAnchorElement>("download");
  const blob = new Blob([session.logJson()], { type: "application/json" });
  if (link.href.startsWith("blob:")) URL.revokeObjectURL(link.href);
  link.href = URL.createObjectURL(blob);
  link.download = session.logFilename();
  link.hidden = false;
}

function repaint(): void {
  paintPanes();
  paintMap();
  paintHud();
  paintSummary();
  if (session.phase === "finished") offerDownload();
}

function run(): void {
  const socket = new WebSocket(wsUrl());
  const send = (reqs: Request[]) => {
    for (const r of reqs) socket.send(JSON.stringify(r));
  };

  socket.addEventListener("open", () => {
    send(session.start(configFromUrl()));
    repaint();
  });
  socket.addEventListener("message", (ev) => {
    send(session.applyServer(parseServerMsg(String(ev.data))));
    repaint();
  });
  socket.addEventListener("close", () => {
    session.lastError = "connection closed";
    paintHud();
  });

  window.addEventListener("keydown", (ev) => {
    if (ev.repeat) return; // holding a key is still one action per press
    if (!(ev.key in KEY_ACTIONS)) return;
    ev.preventDefault();
    const reqs = session.keydown(ev.key);
    if (reqs.length > 0) {
      const req = reqs[0];
      if (req.cmd === "action") {
        el("hud-last-action").textContent = ACTION_NAMES[req.action] ?? "?";
      }
    }
    send(reqs);
    paintHud();
  });
}

run();
