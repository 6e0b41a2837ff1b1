/** Binary PPM (P6, 8-bit RGB) and PGM (P5, 16-bit depth) I/O. */

import * as fs from 'fs';

export interface RgbImage {
  width: number;
  height: number;
  /** H*W*3 interleaved bytes */
  data: Uint8Array;
}

export interface DepthImage {
  width: number;
  height: number;
  /** H*W raw 16-bit depth units, 0 = invalid */
  data: Uint16Array;
}

function readHeaderTokens(buf: Buffer, magic: string, count: number): { tokens: number[]; pos: number } {
  if (buf.toString('ascii', 0, 2) !== magic) {
    throw new Error(`bad magic ${buf.toString('ascii', 0, 2)}, expected ${magic}`);
  }
  let pos = 2;
  const tokens: number[] = [];
  while (tokens.length < count) {
    while (pos < buf.length && /\s/.test(String.fromCharCode(buf[pos]))) pos++;
    if (buf[pos] === 0x23) {
      // comment line
      while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < buf.length && !/\s/.test(String.fromCharCode(buf[pos]))) pos++;
    tokens.push(parseInt(buf.toString('ascii', start, pos), 10));
  }
  return { tokens, pos: pos + 1 }; // single whitespace after the last token
}

export function readPpm(path: string): RgbImage {
  const buf = fs.readFileSync(path);
  const { tokens, pos } = readHeaderTokens(buf, 'P6', 3);
  const [width, height, maxval] = tokens;
  if (maxval !== 255) throw new Error(`${path}: PPM maxval ${maxval}, expected 255`);
  const n = width * height * 3;
  if (buf.length - pos < n) throw new Error(`${path}: truncated PPM payload`);
  return { width, height, data: new Uint8Array(buf.buffer, buf.byteOffset + pos, n).slice() };
}

export function writePpm(img: RgbImage, path: string): void {
  const header = Buffer.from(`P6\n${img.width} ${img.height}\n255\n`, 'ascii');
  fs.writeFileSync(path, Buffer.concat([header, Buffer.from(img.data)]));
}

export function readPgm16(path: string): DepthImage {
  const buf = fs.readFileSync(path);
  const { tokens, pos } = readHeaderTokens(buf, 'P5', 3);
  const [width, height, maxval] = tokens;
  if (maxval !== 65535) throw new Error(`${path}: PGM maxval ${maxval}, expected 65535`);
  const n = width * height;
  if (buf.length - pos < 2 * n) throw new Error(`${path}: truncated PGM payload`);
  const data = new Uint16Array(n);
  for (let i = 0; i < n; i++) {
    data[i] = buf.readUInt16BE(pos + 2 * i); // big-endian samples
  }
  return { width, height, data };
}
