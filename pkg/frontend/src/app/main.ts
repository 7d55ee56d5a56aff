// Browser entry: three.js scene, pointer handling, and protocol wiring.

import * as THREE from "three";

import { Camera, cameraEye, defaultCamera, orbit, screenToRay, walk, zoom } from "../core/camera.js";
import { renderColor } from "../core/highlight.js";
import { InteractionCore } from "../core/interaction.js";
import { placeFromHit, raycast } from "../core/placement.js";
import { ServerMsg } from "../core/protocol.js";
import { CursorInfo, Color, EDGE, FINE_UNIT_M, WorldEntry } from "../core/types.js";
import { Connection } from "./net.js";
import { Clicks } from "./sound.js";
import { Ui, colorToHex } from "./ui.js";

const params = new URLSearchParams(location.search);
const wsUrl =
  params.get("server") ?? `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
const scene = new THREE.Scene();
scene.background = new THREE.Color(0xe8ecf1);
const threeCam = new THREE.PerspectiveCamera(45, 16 / 9, 0.01, 100);

scene.add(new THREE.AmbientLight(0xffffff, 0.75));
const sun = new THREE.DirectionalLight(0xffffff, 1.1);
sun.position.set(2, 5, 3);
scene.add(sun);
scene.add(new THREE.GridHelper(4, 200, 0xb5bdc9, 0xd2d8e0));

const cam: Camera = defaultCamera();
const sounds = new Clicks();

let worlds: WorldEntry[] = [];
let currentMarker: string | null = null;
let defaultColor: Color = [255, 96, 0];

const conn = new Connection(
  wsUrl,
  {
    onWelcome(user, list) {
      localStorage.setItem("blockUser", user);
      worlds = list;
      const requested = params.get("world");
      const target = list.find((w) => w.id === requested) ?? list.find((w) => w.kind === "personal") ?? list[0];
      ui.setWorlds(list, target.id);
      conn.join(target.id);
    },
    onWorldChanged() {
      core.replica = conn.replica;
      core.pending.clear();
      const entry = worlds.find((w) => w.id === conn.worldId);
      currentMarker = entry?.marker ?? null;
      ui.setMarkerVisible(currentMarker);
      peerCursors.clear();
      syncCursors([]);
    },
    onServerMsg(msg: ServerMsg) {
      handleServer(msg);
    },
    onPresence(users, cursors) {
      syncCursors(cursors.filter((c) => c.user !== conn.user));
    },
    onStatus(text) {
      ui.setStatus(text);
    },
  },
  localStorage.getItem("blockUser"),
);

const core = new InteractionCore(conn.replica, defaultColor, Date.now() % 1_000_000_000);

const ui = new Ui(document.body, {
  onMode: (mode) => (core.mode = mode),
  onSize: (size) => (core.size = size),
  onColor: (rgb) => (core.color = rgb),
  onUndo: () => conn.send(core.undo()),
  onWorld: (id) => conn.join(id),
  onMute: (muted) => (sounds.muted = muted),
  onMarkerDebug: () => {
    if (currentMarker === null) return;
    conn.send({
      t: "MarkerObserved",
      marker: currentMarker,
      pose: [1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1],
      at: Date.now(),
    });
    ui.toast(`observed ${currentMarker}`);
  },
});
core.color = defaultColor;
ui.setColor(defaultColor);

function handleServer(msg: ServerMsg): void {
  const { rolledBack } = core.onServer(msg);
  if (rolledBack.length > 0) {
    ui.toast(msg.t === "Reject" ? `rejected: ${(msg as { reason?: string }).reason}` : "rolled back");
  }
  if (msg.t === "Event") {
    const k = (msg.payload as { k?: string }).k;
    if (k === "add") sounds.add();
    if (k === "del" || k === "undo") sounds.remove();
  } else if (msg.t === "Reject" && rolledBack.length === 0 && msg.op !== null) {
    ui.toast(`rejected: ${msg.reason}`);
  }
  ui.setInfo(conn.replica.totalAdds, conn.replica.users.size);
}

// --- block meshes -------------------------------------------------------------

const blockGroup = new THREE.Group();
scene.add(blockGroup);
const meshes = new Map<string, THREE.Mesh>();
const geometries = new Map<number, THREE.BoxGeometry>();

function boxFor(edge: number): THREE.BoxGeometry {
  let g = geometries.get(edge);
  if (g === undefined) {
    const m = edge * FINE_UNIT_M;
    g = new THREE.BoxGeometry(m, m, m);
    geometries.set(edge, g);
  }
  return g;
}

function syncBlocks(now: number): void {
  const wanted = new Set<string>();
  for (const d of core.drawBlocks(now)) {
    const key = d.id !== null ? `b${d.id}` : `p${d.pos.join(",")}-${d.size}`;
    wanted.add(key);
    let mesh = meshes.get(key);
    const edge = EDGE[d.size];
    if (mesh === undefined) {
      mesh = new THREE.Mesh(boxFor(edge), new THREE.MeshLambertMaterial());
      meshes.set(key, mesh);
      blockGroup.add(mesh);
    }
    const half = (edge * FINE_UNIT_M) / 2;
    mesh.position.set(
      d.pos[0] * FINE_UNIT_M + half,
      d.pos[1] * FINE_UNIT_M + half,
      d.pos[2] * FINE_UNIT_M + half,
    );
    const [r, g, b] = renderColor(d.rgb, d.createdAt, now);
    (mesh.material as THREE.MeshLambertMaterial).color.setRGB(r / 255, g / 255, b / 255);
    (mesh.material as THREE.MeshLambertMaterial).opacity = d.pending ? 0.6 : 1;
    (mesh.material as THREE.MeshLambertMaterial).transparent = d.pending;
  }
  for (const [key, mesh] of meshes) {
    if (!wanted.has(key)) {
      blockGroup.remove(mesh);
      (mesh.material as THREE.Material).dispose();
      meshes.delete(key);
    }
  }
}

// --- peer cursors ---------------------------------------------------------------

const cursorGroup = new THREE.Group();
scene.add(cursorGroup);
const peerCursors = new Map<string, THREE.LineSegments>();

function syncCursors(cursors: CursorInfo[]): void {
  const wanted = new Set<string>();
  for (const c of cursors) {
    const hit = raycast(conn.replica.blocks.values(), c.origin, c.dir);
    if (hit === null) continue;
    const cell = placeFromHit(hit, c.size);
    wanted.add(c.user);
    let wire = peerCursors.get(c.user);
    const edge = EDGE[c.size];
    if (wire === undefined || (wire.userData.edge as number) !== edge) {
      if (wire !== undefined) cursorGroup.remove(wire);
      wire = new THREE.LineSegments(
        new THREE.EdgesGeometry(boxFor(edge)),
        new THREE.LineBasicMaterial(),
      );
      wire.userData.edge = edge;
      peerCursors.set(c.user, wire);
      cursorGroup.add(wire);
    }
    const half = (edge * FINE_UNIT_M) / 2;
    wire.position.set(
      cell[0] * FINE_UNIT_M + half,
      cell[1] * FINE_UNIT_M + half,
      cell[2] * FINE_UNIT_M + half,
    );
    (wire.material as THREE.LineBasicMaterial).color.setRGB(c.rgb[0] / 255, c.rgb[1] / 255, c.rgb[2] / 255);
  }
  for (const [user, wire] of peerCursors) {
    if (!wanted.has(user)) {
      cursorGroup.remove(wire);
      peerCursors.delete(user);
    }
  }
}

// --- own preview ------------------------------------------------------------------

const previewWire = new THREE.LineSegments(
  new THREE.EdgesGeometry(boxFor(1)),
  new THREE.LineBasicMaterial({ color: 0x222222 }),
);
previewWire.visible = false;
scene.add(previewWire);

function syncPreview(px: number, py: number): void {
  const { origin, dir } = screenToRay(cam, px, py, canvas.clientWidth, canvas.clientHeight);
  const cell = core.preview(origin, dir);
  if (cell === null) {
    previewWire.visible = false;
    return;
  }
  const edge = EDGE[core.size];
  if ((previewWire.userData.edge as number | undefined) !== edge) {
    previewWire.geometry.dispose();
    previewWire.geometry = new THREE.EdgesGeometry(boxFor(edge));
    previewWire.userData.edge = edge;
  }
  const half = (edge * FINE_UNIT_M) / 2;
  previewWire.position.set(
    cell[0] * FINE_UNIT_M + half,
    cell[1] * FINE_UNIT_M + half,
    cell[2] * FINE_UNIT_M + half,
  );
  previewWire.visible = true;
}

// --- pointer and keyboard ----------------------------------------------------------

let pointer = { x: 0, y: 0 };
let press: { x: number; y: number; at: number; dragging: boolean; orbiting: boolean } | null = null;
let lastCursorSent = 0;

canvas.addEventListener("pointerdown", (ev) => {
  canvas.setPointerCapture(ev.pointerId);
  press = { x: ev.clientX, y: ev.clientY, at: performance.now(), dragging: false, orbiting: ev.button !== 0 };
  if (ev.button === 0) {
    const { origin, dir } = screenToRay(cam, ev.clientX, ev.clientY, canvas.clientWidth, canvas.clientHeight);
    core.pointerDown(origin, dir, performance.now());
  }
});

canvas.addEventListener("pointermove", (ev) => {
  pointer = { x: ev.clientX, y: ev.clientY };
  if (press !== null) {
    const moved = Math.hypot(ev.clientX - press.x, ev.clientY - press.y);
    if (!press.dragging && (press.orbiting || moved > 6)) {
      press.dragging = true;
      core.cancelHold(); // camera drag wins over tap/hold
    }
    if (press.dragging) {
      orbit(cam, -ev.movementX * 0.005, ev.movementY * 0.005);
    }
  }
  const now = performance.now();
  if (now - lastCursorSent > 100 && conn.worldId !== null) {
    lastCursorSent = now;
    const { origin, dir } = screenToRay(cam, ev.clientX, ev.clientY, canvas.clientWidth, canvas.clientHeight);
    conn.send({ t: "CursorUpdate", origin, dir, size: core.size, rgb: core.color });
  }
});

canvas.addEventListener("pointerup", (ev) => {
  const wasDragging = press?.dragging ?? false;
  press = null;
  if (wasDragging || ev.button !== 0) return;
  const { origin, dir } = screenToRay(cam, ev.clientX, ev.clientY, canvas.clientWidth, canvas.clientHeight);
  const before = core.color;
  for (const msg of core.pointerUp(origin, dir, performance.now())) conn.send(msg);
  if (core.mode === "eyedropper" && core.color !== before) {
    ui.setColor(core.color);
    ui.toast(`picked ${colorToHex(core.color)}`);
  }
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  zoom(cam, ev.deltaY > 0 ? 1.1 : 0.9);
});

window.addEventListener("keydown", (ev) => {
  const step = 0.04;
  if (ev.key === "w") walk(cam, step, 0);
  if (ev.key === "s") walk(cam, -step, 0);
  if (ev.key === "a") walk(cam, 0, -step);
  if (ev.key === "d") walk(cam, 0, step);
});

// --- frame loop ----------------------------------------------------------------------

function resize(): void {
  const w = canvas.clientWidth;
  const h = canvas.clientHeight;
  if (canvas.width !== w || canvas.height !== h) {
    renderer.setSize(w, h, false);
    cam.aspect = w / h;
    threeCam.aspect = w / h;
    threeCam.updateProjectionMatrix();
  }
}

function frame(): void {
  requestAnimationFrame(frame);
  resize();
  for (const msg of core.tickHold(performance.now())) conn.send(msg);
  // authoritative event times are server epoch ms, so the fade runs on Date.now()
  syncBlocks(Date.now());
  syncPreview(pointer.x, pointer.y);
  const eye = cameraEye(cam);
  threeCam.position.set(eye[0], eye[1], eye[2]);
  threeCam.lookAt(cam.target[0], cam.target[1], cam.target[2]);
  renderer.render(scene, threeCam);
  ui.setInfo(conn.replica.totalAdds, conn.replica.users.size);
}

conn.connect();
frame();
