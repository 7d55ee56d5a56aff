// Orbit/walk camera standing in for the AR viewpoint, plus the pixel-to-ray
// unprojection used for every aim, tap, and hold.

import { Vec3, vadd, vcross, vnorm, vscale } from "./types.js";

export interface Camera {
  target: Vec3;
  yaw: number; // radians around +y
  pitch: number; // radians, positive looks down
  dist: number;
  fovY: number; // radians
  aspect: number;
}

export function defaultCamera(aspect = 16 / 9): Camera {
  return { target: [0.1, 0.06, 0.06], yaw: Math.PI / 4, pitch: 0.5, dist: 0.9, fovY: Math.PI / 4, aspect };
}

export function cameraEye(cam: Camera): Vec3 {
  const cp = Math.cos(cam.pitch);
  const offset: Vec3 = [
    cam.dist * cp * Math.sin(cam.yaw),
    cam.dist * Math.sin(cam.pitch),
    cam.dist * cp * Math.cos(cam.yaw),
  ];
  return vadd(cam.target, offset);
}

export interface Basis {
  eye: Vec3;
  forward: Vec3;
  right: Vec3;
  up: Vec3;
}

export function cameraBasis(cam: Camera): Basis {
  const eye = cameraEye(cam);
  const forward = vnorm([
    cam.target[0] - eye[0],
    cam.target[1] - eye[1],
    cam.target[2] - eye[2],
  ]);
  const right = vnorm(vcross(forward, [0, 1, 0]));
  const up = vcross(right, forward);
  return { eye, forward, right, up };
}

/** World-space ray through a viewport pixel under the current projection. */
export function screenToRay(cam: Camera, px: number, py: number, width: number, height: number): { origin: Vec3; dir: Vec3 } {
  const { eye, forward, right, up } = cameraBasis(cam);
  const ndcX = (2 * px) / width - 1;
  const ndcY = 1 - (2 * py) / height;
  const tanHalf = Math.tan(cam.fovY / 2);
  const dir = vnorm(
    vadd(forward, vadd(vscale(right, ndcX * cam.aspect * tanHalf), vscale(up, ndcY * tanHalf))),
  );
  return { origin: eye, dir };
}

export function orbit(cam: Camera, dYaw: number, dPitch: number): void {
  cam.yaw += dYaw;
  cam.pitch = Math.min(1.45, Math.max(-1.45, cam.pitch + dPitch));
}

export function zoom(cam: Camera, factor: number): void {
  cam.dist = Math.min(20, Math.max(0.1, cam.dist * factor));
}

/** Walk the target across the ground plane in view-relative directions. */
export function walk(cam: Camera, dForward: number, dRight: number): void {
  const { forward, right } = cameraBasis(cam);
  const flatF = vnorm([forward[0], 0, forward[2]]);
  cam.target = vadd(cam.target, vadd(vscale(flatF, dForward), vscale([right[0], 0, right[2]], dRight)));
}
