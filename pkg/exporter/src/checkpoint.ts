/**
 * Reader for TensorFlow.js-style checkpoints: a model.json whose
 * weightsManifest lists tensor specs (name, shape, dtype) and the binary
 * shard files that hold their float32 data back to back.
 */

import * as fs from 'fs';
import * as path from 'path';

import { FormatError } from './errors.js';

export interface WeightSpec {
  name: string;
  shape: number[];
  dtype: string;
}

export interface WeightsManifestGroup {
  paths: string[];
  weights: WeightSpec[];
}

export interface CheckpointTensor {
  shape: number[];
  data: Float32Array;
}

export type Checkpoint = Map<string, CheckpointTensor>;

export function loadCheckpoint(dir: string): Checkpoint {
  const modelPath = path.join(dir, 'model.json');
  if (!fs.existsSync(modelPath)) {
    throw new FormatError(`${modelPath} not found`);
  }
  let manifest: WeightsManifestGroup[];
  try {
    const parsed = JSON.parse(fs.readFileSync(modelPath, 'utf8'));
    manifest = parsed.weightsManifest;
  } catch (err) {
    throw new FormatError(`cannot parse ${modelPath}: ${err}`);
  }
  if (!Array.isArray(manifest)) {
    throw new FormatError(`${modelPath} has no weightsManifest array`);
  }

  const tensors: Checkpoint = new Map();
  for (const group of manifest) {
    const shards = group.paths.map((p) => fs.readFileSync(path.join(dir, p)));
    const data = Buffer.concat(shards);
    let offset = 0;
    for (const spec of group.weights) {
      if (spec.dtype !== 'float32') {
        throw new FormatError(`${spec.name}: dtype ${spec.dtype} unsupported (float32 only)`);
      }
      const count = spec.shape.reduce((a, b) => a * b, 1);
      const end = offset + 4 * count;
      if (end > data.length) {
        throw new FormatError(`${spec.name}: shard data truncated`);
      }
      const values = new Float32Array(count);
      for (let i = 0; i < count; i++) {
        values[i] = data.readFloatLE(offset + 4 * i);
      }
      if (tensors.has(spec.name)) {
        throw new FormatError(`duplicate tensor name ${spec.name}`);
      }
      tensors.set(spec.name, { shape: spec.shape.slice(), data: values });
      offset = end;
    }
    if (offset !== data.length) {
      throw new FormatError(
        `group [${group.paths.join(', ')}]: ${data.length - offset} trailing bytes`,
      );
    }
  }
  return tensors;
}
