/** Flat-shaded RGB from a rendered depth image: every valid pixel gets the
 * constant color of the primitive its back-projected point lies on; table
 * pixels grey, invalid pixels black. */

import { DepthImage, RgbImage } from './images';
import { Intrinsics, Scene, nearestPrimitive } from './scene';

const PALETTE: [number, number, number][] = [
  [220, 60, 60],
  [60, 180, 75],
  [65, 105, 225],
  [240, 180, 40],
  [170, 60, 200],
  [50, 200, 200],
  [250, 120, 40],
  [130, 200, 60],
];
const TABLE_COLOR: [number, number, number] = [120, 120, 120];

export function renderFlatRgb(depth: DepthImage, intr: Intrinsics, scene: Scene): RgbImage {
  const data = new Uint8Array(depth.width * depth.height * 3);
  for (let v = 0; v < depth.height; v++) {
    for (let u = 0; u < depth.width; u++) {
      const raw = depth.data[v * depth.width + u];
      if (raw === 0) continue; // invalid: black
      const z = raw * intr.depth_scale;
      const p = [((u - intr.cx) * z) / intr.fx, ((v - intr.cy) * z) / intr.fy, z];
      const idx = nearestPrimitive(scene, p);
      const color = idx >= 0 ? PALETTE[idx % PALETTE.length] : TABLE_COLOR;
      const o = (v * depth.width + u) * 3;
      data[o] = color[0];
      data[o + 1] = color[1];
      data[o + 2] = color[2];
    }
  }
  return { width: depth.width, height: depth.height, data };
}
