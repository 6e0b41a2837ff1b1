/** Subcommands: make-dataset, train, predict. */

import * as tf from '@tensorflow/tfjs';
import * as fs from 'fs';
import * as path from 'path';

import { readAvh, writeAvh } from './avh';
import { DEFAULT_DATASET, DatasetManifest, makeDataset } from './dataset';
import { readPpm } from './images';
import { avhToTensor, buildModel, loadModel, predictAvh, rgbToTensor, saveModel } from './model';
import { train } from './train';

function parseArgs(argv: string[]): { flags: Map<string, string>; command: string } {
  const command = argv[0];
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`bad argument ${argv[i]}`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return { flags, command };
}

function intFlag(flags: Map<string, string>, name: string, dflt: number): number {
  return flags.has(name) ? parseInt(flags.get(name)!, 10) : dflt;
}

function cmdMakeDataset(flags: Map<string, string>): void {
  const out = flags.get('out');
  if (!out) throw new Error('--out is required');
  const manifest = makeDataset(out, {
    nScenes: intFlag(flags, 'scenes', 4),
    seed: intFlag(flags, 'seed', 0),
    width: intFlag(flags, 'width', DEFAULT_DATASET.width),
    height: intFlag(flags, 'height', DEFAULT_DATASET.height),
    vCount: intFlag(flags, 'v-count', DEFAULT_DATASET.vCount),
    aCount: intFlag(flags, 'a-count', DEFAULT_DATASET.aCount),
    objects: intFlag(flags, 'objects', DEFAULT_DATASET.objects),
  });
  console.log(`make-dataset: ${manifest.pairs.length} pairs -> ${out}`);
}

function cmdTrain(flags: Map<string, string>): void {
  const dataDir = flags.get('dataset');
  const out = flags.get('out');
  if (!dataDir || !out) throw new Error('--dataset and --out are required');
  const manifest = JSON.parse(
    fs.readFileSync(path.join(dataDir, 'dataset.json'), 'utf8')
  ) as DatasetManifest;
  const seed = intFlag(flags, 'seed', 0);
  const epochs = intFlag(flags, 'epochs', 500);
  const lr = flags.has('lr') ? parseFloat(flags.get('lr')!) : 3e-3;
  const limit = intFlag(flags, 'pairs', manifest.pairs.length);

  const cfg = {
    vCount: manifest.config.vCount,
    aCount: manifest.config.aCount,
    height: manifest.config.height,
    width: manifest.config.width,
    baseFilters: intFlag(flags, 'filters', 16),
  };
  const model = buildModel(cfg, seed);
  const pairs = manifest.pairs.slice(0, limit).map((p) => ({
    x: rgbToTensor(readPpm(p.rgb)),
    y: avhToTensor(readAvh(p.avh)),
  }));
  const result = train(model, pairs, epochs, lr);
  saveModel(model, cfg, out);
  fs.writeFileSync(
    path.join(out, 'losses.json'),
    JSON.stringify({ losses: result.losses }, null, 2)
  );
  const first = result.losses[0];
  const last = result.losses[result.losses.length - 1];
  console.log(
    `train: ${epochs} epochs over ${pairs.length} pairs, loss ${first.toExponential(3)} -> ${last.toExponential(3)}`
  );
}

function cmdPredict(flags: Map<string, string>): void {
  const modelDir = flags.get('model');
  const image = flags.get('image');
  const out = flags.get('out');
  if (!modelDir || !image || !out) throw new Error('--model, --image and --out are required');
  const { model, config } = loadModel(modelDir);
  const avh = predictAvh(model, readPpm(image), config);
  writeAvh(avh, out);
  console.log(`predict: (${avh.vCount * avh.aCount}, ${avh.gH}, ${avh.gW}) -> ${out}`);
}

export async function main(argv: string[]): Promise<number> {
  await tf.setBackend('cpu');
  try {
    const { flags, command } = parseArgs(argv);
    if (command === 'make-dataset') cmdMakeDataset(flags);
    else if (command === 'train') cmdTrain(flags);
    else if (command === 'predict') cmdPredict(flags);
    else {
      console.error('usage: cli <make-dataset|train|predict> [--flag value ...]');
      return 2;
    }
    return 0;
  } catch (err: any) {
    console.error(`error: ${err.message ?? err}`);
    return (err as any).exitCode ?? 1;
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
