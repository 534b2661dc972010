import * as fs from 'fs';

import { Checkpoint } from './checkpoint.js';
import { ShapeMismatchError, UnmatchedSlotError } from './errors.js';
import { NameMap } from './namemap.js';
import { ModelConfig, SlotSpec, encodeWeightFile, slotSpecs } from './weightfile.js';

export interface ExportedTensor {
  slot: string;
  source: string;
  shape: number[];
}

export interface ExportResult {
  bytes: Buffer;
  tensors: ExportedTensor[];
}

function shapesEqual(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

/**
 * Resolve every weight slot against the checkpoint and serialize.
 *
 * Every slot must be covered by the name map and present in the checkpoint
 * with exactly the expected shape; no transposition or casting is applied.
 */
export function exportWeights(cfg: ModelConfig, checkpoint: Checkpoint, nameMap: NameMap): ExportResult {
  const slots: SlotSpec[] = slotSpecs(cfg);
  const missing: string[] = [];
  for (const slot of slots) {
    const source = nameMap.get(slot.name);
    if (!source || !checkpoint.has(source)) {
      missing.push(source ? `${slot.name} (checkpoint has no ${source})` : slot.name);
    }
  }
  if (missing.length > 0) {
    throw new UnmatchedSlotError(missing);
  }

  const tensors = new Map<string, Float32Array>();
  const report: ExportedTensor[] = [];
  for (const slot of slots) {
    const source = nameMap.get(slot.name)!;
    const tensor = checkpoint.get(source)!;
    if (!shapesEqual(tensor.shape, slot.shape)) {
      throw new ShapeMismatchError(slot.name, slot.shape, tensor.shape);
    }
    tensors.set(slot.name, tensor.data);
    report.push({ slot: slot.name, source, shape: tensor.shape });
  }
  return { bytes: encodeWeightFile(cfg, tensors), tensors: report };
}

export function writeExport(result: ExportResult, outPath: string): void {
  fs.writeFileSync(outPath, result.bytes);
}
