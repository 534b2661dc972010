/**
 * Name map: one `slot = checkpoint tensor name` line per mapping. A `{l}`
 * placeholder on both sides expands to every layer index, so a 15-layer map
 * stays six lines long. Lines starting with # and blank lines are ignored.
 */

import * as fs from 'fs';

import { FormatError } from './errors.js';
import { ModelConfig, slotSpecs, totalLayers } from './weightfile.js';

export type NameMap = Map<string, string>; // slot -> checkpoint tensor name

export function parseNameMap(text: string, cfg: ModelConfig): NameMap {
  const entries: Array<[string, string]> = [];
  text.split(/\r?\n/).forEach((line, index) => {
    const stripped = line.trim();
    if (!stripped || stripped.startsWith('#')) return;
    const eq = stripped.indexOf('=');
    if (eq < 0) {
      throw new FormatError(`name map line ${index + 1}: expected slot = tensor name`);
    }
    entries.push([stripped.slice(0, eq).trim(), stripped.slice(eq + 1).trim()]);
  });

  const map: NameMap = new Map();
  const add = (slot: string, tensor: string) => {
    if (map.has(slot)) {
      throw new FormatError(`slot ${slot} mapped more than once`);
    }
    map.set(slot, tensor);
  };
  for (const [slot, tensor] of entries) {
    if (slot.includes('{l}')) {
      for (let layer = 0; layer < totalLayers(cfg); layer++) {
        add(slot.replaceAll('{l}', String(layer)), tensor.replaceAll('{l}', String(layer)));
      }
    } else {
      add(slot, tensor);
    }
  }

  const known = new Set(slotSpecs(cfg).map((s) => s.name));
  for (const slot of map.keys()) {
    if (!known.has(slot)) {
      throw new FormatError(`name map references unknown slot ${slot}`);
    }
  }
  return map;
}

export function loadNameMap(path: string, cfg: ModelConfig): NameMap {
  return parseNameMap(fs.readFileSync(path, 'utf8'), cfg);
}
