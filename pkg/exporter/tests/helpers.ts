import * as fs from 'fs';
import * as path from 'path';

import { elementCount, ModelConfig, slotSpecs } from '../src/weightfile.js';

/** Deterministic pseudo-random float32 values in (-0.5, 0.5). */
export function syntheticTensor(count: number, salt: number): Float32Array {
  const out = new Float32Array(count);
  let state = (salt * 2654435761) >>> 0;
  for (let i = 0; i < count; i++) {
    state = (state * 1664525 + 1013904223) >>> 0;
    out[i] = Math.fround(state / 0x100000000 - 0.5);
  }
  return out;
}

export interface ToyCheckpoint {
  dir: string;
  tensors: Map<string, Float32Array>;
}

/**
 * Write a TFJS-style toy checkpoint whose tensor names follow the default
 * map layout. Returns the source tensors keyed by slot name for comparison.
 */
export function writeToyCheckpoint(dir: string, cfg: ModelConfig): ToyCheckpoint {
  fs.mkdirSync(dir, { recursive: true });
  const bySlot = new Map<string, Float32Array>();
  const specs = slotSpecs(cfg).map((slot, i) => {
    const data = syntheticTensor(elementCount(slot.shape), i + 1);
    bySlot.set(slot.name, data);
    return { slot, data };
  });

  const name = (slot: string) => {
    if (slot.startsWith('input_proj')) {
      return slot.endsWith('weight') ? 'asr/input_conv/kernel' : 'asr/input_conv/bias';
    }
    const m = slot.match(/^layer(\d+)\.(\w+)\.(weight|bias)$/)!;
    return `asr/layer_${m[1]}/${m[2]}/${m[3] === 'weight' ? 'kernel' : 'bias'}`;
  };

  const shards: Buffer[] = [];
  const weights = specs.map(({ slot, data }) => {
    const buf = Buffer.alloc(4 * data.length);
    for (let i = 0; i < data.length; i++) buf.writeFloatLE(data[i], 4 * i);
    shards.push(buf);
    return { name: name(slot.name), shape: slot.shape, dtype: 'float32' };
  });
  fs.writeFileSync(path.join(dir, 'shard1.bin'), Buffer.concat(shards));
  fs.writeFileSync(
    path.join(dir, 'model.json'),
    JSON.stringify({ modelTopology: {}, weightsManifest: [{ paths: ['shard1.bin'], weights }] }, null, 2),
  );
  return { dir, tensors: bySlot };
}

export const TOY_CONFIG: ModelConfig = {
  nMfcc: 4,
  channels: 6,
  nBlocks: 2,
  layersPerBlock: 2,
  kernelSize: 3,
};
