/**
 * Toy encoder-decoder: RGB in, per-cell orientation-class confidences out.
 *
 * Two stride-2 convolutions give the fixed 4:1 spatial ratio between the
 * input image and the heatmap grid; a sigmoid head keeps every confidence
 * in [0, 1]. All initializers are seeded so builds are reproducible.
 */

import * as tf from '@tensorflow/tfjs';
import * as fs from 'fs';
import * as path from 'path';

import { Avh } from './avh';
import { RgbImage } from './images';

export interface ModelConfig {
  vCount: number;
  aCount: number;
  height: number; // input rows
  width: number; // input cols
  baseFilters: number;
}

export const DOWNSAMPLE = 4;

export function buildModel(cfg: ModelConfig, seed: number): tf.Sequential {
  if (cfg.height % 8 !== 0 || cfg.width % 8 !== 0) {
    throw new Error(`input ${cfg.width}x${cfg.height} must be divisible by 8`);
  }
  const f = cfg.baseFilters;
  const init = (k: number) => tf.initializers.glorotUniform({ seed: seed + k });
  const conv = (filters: number, strides: number, k: number, extra = {}) =>
    tf.layers.conv2d({
      filters,
      kernelSize: 3,
      strides,
      padding: 'same',
      activation: 'relu',
      kernelInitializer: init(k),
      ...extra,
    });
  // encoder to 1/8 scale for a near-global receptive field, decoder back up
  // to the 1/4-scale heatmap grid
  const model = tf.sequential();
  model.add(conv(f, 2, 1, { inputShape: [cfg.height, cfg.width, 3] }));
  model.add(conv(2 * f, 2, 2));
  model.add(conv(2 * f, 2, 3));
  model.add(conv(2 * f, 1, 4));
  model.add(tf.layers.upSampling2d({ size: [2, 2] }));
  model.add(conv(2 * f, 1, 5));
  // linear head: squared error against a 99%+-negative binary target drives
  // a sigmoid into saturation and the all-zero collapse; raw regression
  // keeps gradients alive, and predictions are clamped to [0, 1] on output
  model.add(
    tf.layers.conv2d({
      filters: cfg.vCount * cfg.aCount,
      kernelSize: 1,
      strides: 1,
      padding: 'same',
      activation: 'linear',
      kernelInitializer: init(6),
    })
  );
  return model;
}

export function rgbToTensor(img: RgbImage): tf.Tensor3D {
  const data = Float32Array.from(img.data, (b) => b / 255.0);
  return tf.tensor3d(data, [img.height, img.width, 3]);
}

/** Class-major AVH payload -> channels-last (G_H, G_W, V*A) tensor. */
export function avhToTensor(avh: Avh): tf.Tensor3D {
  const c = avh.vCount * avh.aCount;
  const hw = avh.gH * avh.gW;
  const out = new Float32Array(hw * c);
  for (let k = 0; k < c; k++) {
    for (let p = 0; p < hw; p++) {
      out[p * c + k] = avh.data[k * hw + p];
    }
  }
  return tf.tensor3d(out, [avh.gH, avh.gW, c]);
}

/** Forward pass; output written class-major per the file contract. */
export function predictAvh(model: tf.LayersModel, rgb: RgbImage, cfg: ModelConfig): Avh {
  if (rgb.height !== cfg.height || rgb.width !== cfg.width) {
    throw new Error(
      `image ${rgb.width}x${rgb.height} does not match model input ${cfg.width}x${cfg.height}`
    );
  }
  const c = cfg.vCount * cfg.aCount;
  const gH = cfg.height / DOWNSAMPLE;
  const gW = cfg.width / DOWNSAMPLE;
  const values = tf.tidy(() => {
    const x = rgbToTensor(rgb).expandDims(0);
    const y = model.predict(x) as tf.Tensor4D;
    return y.clipByValue(0, 1).dataSync() as Float32Array; // (1, gH, gW, C)
  });
  const data = new Float32Array(c * gH * gW);
  const hw = gH * gW;
  for (let p = 0; p < hw; p++) {
    for (let k = 0; k < c; k++) {
      data[k * hw + p] = values[p * c + k];
    }
  }
  return { vCount: cfg.vCount, aCount: cfg.aCount, gH, gW, data };
}

interface SavedWeights {
  config: ModelConfig;
  specs: { name: string; shape: number[] }[];
}

export function saveModel(model: tf.LayersModel, cfg: ModelConfig, dir: string): void {
  fs.mkdirSync(dir, { recursive: true });
  const specs: { name: string; shape: number[] }[] = [];
  const chunks: Buffer[] = [];
  for (const w of model.getWeights()) {
    specs.push({ name: '', shape: w.shape.slice() });
    chunks.push(Buffer.from(new Float32Array(w.dataSync()).buffer.slice(0)));
  }
  const meta: SavedWeights = { config: cfg, specs };
  fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(meta, null, 2));
  fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.concat(chunks));
}

export function loadModel(dir: string): { model: tf.Sequential; config: ModelConfig } {
  const meta = JSON.parse(fs.readFileSync(path.join(dir, 'model.json'), 'utf8')) as SavedWeights;
  const buf = fs.readFileSync(path.join(dir, 'weights.bin'));
  const model = buildModel(meta.config, 0);
  const weights: tf.Tensor[] = [];
  let offset = 0;
  for (const spec of meta.specs) {
    const n = spec.shape.reduce((a, b) => a * b, 1);
    const arr = new Float32Array(n);
    for (let i = 0; i < n; i++) arr[i] = buf.readFloatLE(offset + 4 * i);
    offset += 4 * n;
    weights.push(tf.tensor(arr, spec.shape));
  }
  model.setWeights(weights);
  weights.forEach((w) => w.dispose());
  return { model, config: meta.config };
}
