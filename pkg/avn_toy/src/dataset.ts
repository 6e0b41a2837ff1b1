/**
 * Dataset builder: drives the detection engine's CLI for scenes and
 * ground-truth heatmaps, then renders the paired flat-shaded RGB images.
 */

import { execFileSync } from 'child_process';
import * as fs from 'fs';
import * as path from 'path';

import { readPgm16, writePpm } from './images';
import { renderFlatRgb } from './render';
import { loadIntrinsics, loadScene } from './scene';

export interface DatasetConfig {
  nScenes: number;
  seed: number;
  width: number;
  height: number;
  vCount: number;
  aCount: number;
  objects: number;
}

export const DEFAULT_DATASET: Omit<DatasetConfig, 'nScenes' | 'seed'> = {
  width: 48,
  height: 32,
  vCount: 4,
  aCount: 3,
  objects: 2,
};

export interface DatasetManifest {
  config: DatasetConfig;
  pairs: { rgb: string; avh: string; scene_dir: string }[];
}

function runPrimary(args: string[]): void {
  try {
    execFileSync('graspdet', args, { stdio: ['ignore', 'pipe', 'pipe'] });
  } catch (err: any) {
    const code = err.status ?? 1;
    const msg = err.stderr ? err.stderr.toString() : String(err);
    const e = new Error(`graspdet ${args[0]} failed (exit ${code}): ${msg.trim()}`);
    (e as any).exitCode = code;
    throw e;
  }
}

export function makeDataset(outDir: string, cfg: DatasetConfig): DatasetManifest {
  fs.mkdirSync(outDir, { recursive: true });
  const intrPath = path.join(outDir, 'intrinsics.json');
  // keep the default camera's field of view at the reduced resolution
  const fx = (350.0 * cfg.width) / 384.0;
  fs.writeFileSync(
    intrPath,
    JSON.stringify(
      {
        fx,
        fy: fx,
        cx: cfg.width / 2,
        cy: cfg.height / 2,
        width: cfg.width,
        height: cfg.height,
        depth_scale: 1e-4,
      },
      null,
      2
    )
  );

  const pairs: DatasetManifest['pairs'] = [];
  for (let i = 0; i < cfg.nScenes; i++) {
    const sceneDir = path.join(outDir, `scene_${String(i).padStart(3, '0')}`);
    runPrimary([
      'synth',
      '--seed', String(cfg.seed + i),
      '--objects', String(cfg.objects),
      '--intrinsics', intrPath,
      '--out', sceneDir,
    ]);
    const avhPath = path.join(sceneDir, 'gt.avh');
    runPrimary([
      'gt-avh',
      '--annotations', path.join(sceneDir, 'annotations.jsonl'),
      '--intrinsics', intrPath,
      '--v-count', String(cfg.vCount),
      '--a-count', String(cfg.aCount),
      '--out', avhPath,
    ]);
    const depth = readPgm16(path.join(sceneDir, 'depth.pgm'));
    const scene = loadScene(path.join(sceneDir, 'scene.json'));
    const intr = loadIntrinsics(intrPath);
    const rgbPath = path.join(sceneDir, 'rgb.ppm');
    writePpm(renderFlatRgb(depth, intr, scene), rgbPath);
    pairs.push({ rgb: rgbPath, avh: avhPath, scene_dir: sceneDir });
  }

  const manifest: DatasetManifest = { config: cfg, pairs };
  fs.writeFileSync(path.join(outDir, 'dataset.json'), JSON.stringify(manifest, null, 2));
  return manifest;
}
