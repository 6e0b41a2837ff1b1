/** Scene/intrinsics JSON from the detection engine, plus the signed
 * distances used to color pixels by their primitive. */

import * as fs from 'fs';

export interface Intrinsics {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
  depth_scale: number;
}

export interface Primitive {
  kind: 'box' | 'sphere' | 'cylinder';
  dims: number[]; // box: half extents; sphere: [r]; cylinder: [r, halfHeight]
  rotation: number[][]; // 3x3, from the stored quaternion
  translation: number[];
}

export interface Scene {
  primitives: Primitive[];
  tableZ: number | null;
}

export function loadIntrinsics(path: string): Intrinsics {
  return JSON.parse(fs.readFileSync(path, 'utf8')) as Intrinsics;
}

function quatToMatrix(q: number[]): number[][] {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  const [w, x, y, z] = q.map((v) => v / n);
  return [
    [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
    [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
    [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
  ];
}

export function loadScene(path: string): Scene {
  const raw = JSON.parse(fs.readFileSync(path, 'utf8'));
  const primitives: Primitive[] = raw.primitives.map((p: any) => {
    let dims: number[];
    if (p.kind === 'box') dims = p.half_extents;
    else if (p.kind === 'sphere') dims = [p.radius];
    else dims = [p.radius, p.half_height];
    return {
      kind: p.kind,
      dims,
      rotation: quatToMatrix(p.quaternion),
      translation: p.translation,
    };
  });
  return { primitives, tableZ: raw.table_plane ?? null };
}

export function signedDistance(prim: Primitive, p: number[]): number {
  const d = [p[0] - prim.translation[0], p[1] - prim.translation[1], p[2] - prim.translation[2]];
  const r = prim.rotation;
  // local = R^T d
  const lx = d[0] * r[0][0] + d[1] * r[1][0] + d[2] * r[2][0];
  const ly = d[0] * r[0][1] + d[1] * r[1][1] + d[2] * r[2][1];
  const lz = d[0] * r[0][2] + d[1] * r[1][2] + d[2] * r[2][2];
  if (prim.kind === 'sphere') {
    return Math.hypot(lx, ly, lz) - prim.dims[0];
  }
  if (prim.kind === 'box') {
    const qx = Math.abs(lx) - prim.dims[0];
    const qy = Math.abs(ly) - prim.dims[1];
    const qz = Math.abs(lz) - prim.dims[2];
    const outside = Math.hypot(Math.max(qx, 0), Math.max(qy, 0), Math.max(qz, 0));
    return outside + Math.min(Math.max(qx, qy, qz), 0);
  }
  const qr = Math.hypot(lx, ly) - prim.dims[0];
  const qz = Math.abs(lz) - prim.dims[1];
  const outside = Math.hypot(Math.max(qr, 0), Math.max(qz, 0));
  return outside + Math.min(Math.max(qr, qz), 0);
}

/** Index of the primitive within `tol` of the point, or -1 (table/none). */
export function nearestPrimitive(scene: Scene, p: number[], tol = 0.004): number {
  let best = -1;
  let bestDist = tol;
  scene.primitives.forEach((prim, i) => {
    const d = Math.abs(signedDistance(prim, p));
    if (d < bestDist) {
      best = i;
      bestDist = d;
    }
  });
  return best;
}
