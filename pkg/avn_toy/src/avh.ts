/**
 * Orientation-heatmap tensor file format ("AVH1").
 *
 * Layout: magic "AVH1", four little-endian u32 dims (V, A, G_H, G_W), then
 * V*A*G_H*G_W little-endian float32 values, class-major then row-major.
 * This is the exchange contract with the detection engine.
 */

import * as fs from 'fs';

export interface Avh {
  vCount: number;
  aCount: number;
  gH: number;
  gW: number;
  /** (V*A, G_H, G_W) flattened C-order */
  data: Float32Array;
}

const MAGIC = 'AVH1';

export function readAvh(path: string): Avh {
  const buf = fs.readFileSync(path);
  if (buf.length < 20 || buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error(`${path}: bad AVH magic`);
  }
  const vCount = buf.readUInt32LE(4);
  const aCount = buf.readUInt32LE(8);
  const gH = buf.readUInt32LE(12);
  const gW = buf.readUInt32LE(16);
  const n = vCount * aCount * gH * gW;
  if (n === 0 || buf.length - 20 !== 4 * n) {
    throw new Error(`${path}: AVH payload is ${buf.length - 20} bytes, expected ${4 * n}`);
  }
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    data[i] = buf.readFloatLE(20 + 4 * i);
  }
  return { vCount, aCount, gH, gW, data };
}

export function writeAvh(avh: Avh, path: string): void {
  const n = avh.vCount * avh.aCount * avh.gH * avh.gW;
  if (avh.data.length !== n) {
    throw new Error(`data length ${avh.data.length} does not match dims (${n})`);
  }
  const buf = Buffer.alloc(20 + 4 * n);
  buf.write(MAGIC, 0, 'ascii');
  buf.writeUInt32LE(avh.vCount, 4);
  buf.writeUInt32LE(avh.aCount, 8);
  buf.writeUInt32LE(avh.gH, 12);
  buf.writeUInt32LE(avh.gW, 16);
  for (let i = 0; i < n; i++) {
    buf.writeFloatLE(avh.data[i], 20 + 4 * i);
  }
  fs.writeFileSync(path, buf);
}
