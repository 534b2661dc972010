#!/usr/bin/env node
import * as path from 'path';
import { fileURLToPath } from 'url';

import { loadCheckpoint } from './checkpoint.js';
import { ExporterError } from './errors.js';
import { exportWeights, writeExport } from './export.js';
import { fnv1a64, fnvHex } from './fnv.js';
import { loadNameMap } from './namemap.js';
import { DEFAULT_CONFIG, HEADER_BYTES, ModelConfig } from './weightfile.js';

interface CliArgs {
  checkpointDir: string;
  mapPath: string;
  outPath: string;
  config: ModelConfig;
}

function usage(): never {
  console.error(
    'usage: gcuw-export <checkpoint-dir> --map <name-map> --out <weights.gcuw>\n' +
      '       [--n-mfcc 20] [--channels 128] [--blocks 3] [--layers-per-block 5] [--kernel-size 7]',
  );
  process.exit(2);
}

function parseArgs(argv: string[]): CliArgs {
  const config = { ...DEFAULT_CONFIG };
  let checkpointDir = '';
  let mapPath = '';
  let outPath = '';
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) usage();
      return argv[i];
    };
    switch (arg) {
      case '--map':
        mapPath = next();
        break;
      case '--out':
        outPath = next();
        break;
      case '--n-mfcc':
        config.nMfcc = Number(next());
        break;
      case '--channels':
        config.channels = Number(next());
        break;
      case '--blocks':
        config.nBlocks = Number(next());
        break;
      case '--layers-per-block':
        config.layersPerBlock = Number(next());
        break;
      case '--kernel-size':
        config.kernelSize = Number(next());
        break;
      default:
        if (arg.startsWith('-') || checkpointDir) usage();
        checkpointDir = arg;
    }
  }
  if (!checkpointDir || !mapPath || !outPath) usage();
  return { checkpointDir, mapPath, outPath, config };
}

export function run(argv: string[]): number {
  const args = parseArgs(argv);
  try {
    const checkpoint = loadCheckpoint(args.checkpointDir);
    const nameMap = loadNameMap(args.mapPath, args.config);
    const result = exportWeights(args.config, checkpoint, nameMap);
    writeExport(result, args.outPath);
    for (const t of result.tensors) {
      console.log(`${t.slot}  [${t.shape.join('x')}]  <- ${t.source}`);
    }
    const payload = result.bytes.subarray(HEADER_BYTES, result.bytes.length - 8);
    console.log(`wrote ${args.outPath} (${result.bytes.length} bytes), ` +
      `payload checksum ${fnvHex(fnv1a64(payload))}`);
    return 0;
  } catch (err) {
    if (err instanceof ExporterError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const entry = process.argv[1] ? path.resolve(process.argv[1]) : '';
if (entry === fileURLToPath(import.meta.url)) {
  process.exit(run(process.argv.slice(2)));
}
