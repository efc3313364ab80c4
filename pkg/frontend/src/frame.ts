import type { FrameMeta, Vec3 } from "./types.js";

/** World position of a continuous pixel coordinate on a slice. */
export function pixelToWorld(f: FrameMeta, x: number, y: number): Vec3 {
  const out: Vec3 = [0, 0, 0];
  for (let i = 0; i < 3; i++) {
    out[i] = f.origin2d[i] + x * f.pitch * f.u[i] + y * f.pitch * f.v[i];
  }
  return out;
}

/** Inverse of pixelToWorld for points on the slice plane. */
export function worldToPixel(f: FrameMeta, p: Vec3): { x: number; y: number } {
  const rel: Vec3 = [p[0] - f.origin2d[0], p[1] - f.origin2d[1], p[2] - f.origin2d[2]];
  const dot = (a: Vec3, b: Vec3) => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return { x: dot(rel, f.u) / f.pitch, y: dot(rel, f.v) / f.pitch };
}

/** Signed distance of a world point from the slice plane, in mm. */
export function planeOffset(f: FrameMeta, p: Vec3): number {
  return p[0] * f.normal[0] + p[1] * f.normal[1] + p[2] * f.normal[2] - f.d;
}

/** True when the point lies within half a pixel of the slice plane. */
export function onSlice(f: FrameMeta, p: Vec3): boolean {
  return Math.abs(planeOffset(f, p)) <= f.pitch / 2 + 1e-9;
}
