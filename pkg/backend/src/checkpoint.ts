/**
 * Checkpoints are plain JSON: config + vocabulary + parameter arrays.
 * Full float64 precision survives the JSON round trip, so a reloaded
 * model decodes identically.
 */

import * as fs from 'fs';

import { BackendConfig, DEFAULT_CONFIG, Model, validateConfig } from './model';
import { Tokenizer } from './tokenizer';

interface CheckpointFile {
  format: string;
  config: BackendConfig;
  vocab: string[];
  params: Record<string, number[]>;
}

const FORMAT = 'slicefix-backend/2';

export function saveCheckpoint(path: string, model: Model): void {
  const file: CheckpointFile = {
    format: FORMAT,
    config: model.config,
    vocab: model.tokenizer.pieces,
    params: model.snapshot(),
  };
  fs.writeFileSync(path, JSON.stringify(file));
}

export function loadCheckpoint(path: string): Model {
  let raw: string;
  try {
    raw = fs.readFileSync(path, 'utf-8');
  } catch (err) {
    throw new Error(`cannot read checkpoint ${path}: ${(err as Error).message}`);
  }
  const file = JSON.parse(raw) as CheckpointFile;
  if (file.format !== FORMAT) {
    throw new Error(`unsupported checkpoint format ${file.format}`);
  }
  validateConfig(file.config);
  const tokenizer = new Tokenizer(file.vocab);
  return new Model(tokenizer, file.config, file.params);
}

export function freshModel(corpusTokens: Iterable<string>, overrides: Partial<BackendConfig>): Model {
  const config: BackendConfig = {
    checkpoint: overrides.checkpoint ?? '',
    ...DEFAULT_CONFIG,
    ...overrides,
  } as BackendConfig;
  validateConfig(config);
  const tokenizer = Tokenizer.fromCorpus(corpusTokens);
  return new Model(tokenizer, config);
}
