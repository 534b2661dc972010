/**
 * GCUW weight container (all integers little-endian):
 *
 *   bytes 0..3   magic "GCUW"
 *   u32          format version (1)
 *   u32 x 5      nMfcc, channels, nBlocks, layersPerBlock, kernelSize
 *   payload      f32 tensors in fixed order: input_proj W, input_proj b,
 *                then per layer: filter W, filter b, gate W, gate b,
 *                residual W, residual b
 *   u64          FNV-1a checksum of the payload bytes
 */

import { FormatError } from './errors.js';
import { fnv1a64 } from './fnv.js';

export const MAGIC = 'GCUW';
export const FORMAT_VERSION = 1;
export const HEADER_BYTES = 4 + 6 * 4;

export interface ModelConfig {
  nMfcc: number;
  channels: number;
  nBlocks: number;
  layersPerBlock: number;
  kernelSize: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  nMfcc: 20,
  channels: 128,
  nBlocks: 3,
  layersPerBlock: 5,
  kernelSize: 7,
};

export interface SlotSpec {
  name: string;
  shape: number[];
}

export function totalLayers(cfg: ModelConfig): number {
  return cfg.nBlocks * cfg.layersPerBlock;
}

/** Slot names and shapes in exact payload order. */
export function slotSpecs(cfg: ModelConfig): SlotSpec[] {
  const c = cfg.channels;
  const k = cfg.kernelSize;
  const slots: SlotSpec[] = [
    { name: 'input_proj.weight', shape: [c, cfg.nMfcc] },
    { name: 'input_proj.bias', shape: [c] },
  ];
  for (let layer = 0; layer < totalLayers(cfg); layer++) {
    slots.push({ name: `layer${layer}.filter.weight`, shape: [c, c, k] });
    slots.push({ name: `layer${layer}.filter.bias`, shape: [c] });
    slots.push({ name: `layer${layer}.gate.weight`, shape: [c, c, k] });
    slots.push({ name: `layer${layer}.gate.bias`, shape: [c] });
    slots.push({ name: `layer${layer}.residual.weight`, shape: [c, c] });
    slots.push({ name: `layer${layer}.residual.bias`, shape: [c] });
  }
  return slots;
}

export function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function payloadBytes(cfg: ModelConfig): number {
  return 4 * slotSpecs(cfg).reduce((acc, s) => acc + elementCount(s.shape), 0);
}

/** Serialize tensors (keyed by slot name, in any order) into GCUW bytes. */
export function encodeWeightFile(cfg: ModelConfig, tensors: Map<string, Float32Array>): Buffer {
  const payload = Buffer.alloc(payloadBytes(cfg));
  let offset = 0;
  for (const slot of slotSpecs(cfg)) {
    const tensor = tensors.get(slot.name);
    if (!tensor) {
      throw new FormatError(`missing tensor for slot ${slot.name}`);
    }
    if (tensor.length !== elementCount(slot.shape)) {
      throw new FormatError(
        `${slot.name}: ${tensor.length} values, shape [${slot.shape.join('x')}] needs ${elementCount(slot.shape)}`,
      );
    }
    for (let i = 0; i < tensor.length; i++) {
      payload.writeFloatLE(tensor[i], offset);
      offset += 4;
    }
  }

  const header = Buffer.alloc(HEADER_BYTES);
  header.write(MAGIC, 0, 'ascii');
  header.writeUInt32LE(FORMAT_VERSION, 4);
  header.writeUInt32LE(cfg.nMfcc, 8);
  header.writeUInt32LE(cfg.channels, 12);
  header.writeUInt32LE(cfg.nBlocks, 16);
  header.writeUInt32LE(cfg.layersPerBlock, 20);
  header.writeUInt32LE(cfg.kernelSize, 24);

  const trailer = Buffer.alloc(8);
  trailer.writeBigUInt64LE(fnv1a64(payload), 0);
  return Buffer.concat([header, payload, trailer]);
}

export interface DecodedWeightFile {
  config: ModelConfig;
  tensors: Map<string, Float32Array>;
  checksum: bigint;
}

/** Parse and checksum-validate GCUW bytes (used by the round-trip tests). */
export function decodeWeightFile(data: Buffer): DecodedWeightFile {
  if (data.length < HEADER_BYTES || data.toString('ascii', 0, 4) !== MAGIC) {
    throw new FormatError('not a GCUW file');
  }
  const version = data.readUInt32LE(4);
  if (version !== FORMAT_VERSION) {
    throw new FormatError(`unsupported version ${version}`);
  }
  const config: ModelConfig = {
    nMfcc: data.readUInt32LE(8),
    channels: data.readUInt32LE(12),
    nBlocks: data.readUInt32LE(16),
    layersPerBlock: data.readUInt32LE(20),
    kernelSize: data.readUInt32LE(24),
  };
  const expected = HEADER_BYTES + payloadBytes(config) + 8;
  if (data.length !== expected) {
    throw new FormatError(`file is ${data.length} bytes, format implies ${expected}`);
  }
  const payload = data.subarray(HEADER_BYTES, data.length - 8);
  const stored = data.readBigUInt64LE(data.length - 8);
  const actual = fnv1a64(payload);
  if (actual !== stored) {
    throw new FormatError(`checksum mismatch: stored ${stored}, computed ${actual}`);
  }

  const tensors = new Map<string, Float32Array>();
  let offset = 0;
  for (const slot of slotSpecs(config)) {
    const count = elementCount(slot.shape);
    const values = new Float32Array(count);
    for (let i = 0; i < count; i++) {
      values[i] = payload.readFloatLE(offset);
      offset += 4;
    }
    tensors.set(slot.name, values);
  }
  return { config, tensors, checksum: actual };
}
