#!/usr/bin/env node
/**
 * slicefix-backend CLI.
 *
 *   init     --corpus inputs.jsonl --out ckpt.json [--seed N] [--dim D]
 *   serve    --checkpoint ckpt.json [--seed N] [--beam-width W]
 *   finetune --checkpoint ckpt.json --train t.jsonl [--valid v.jsonl]
 *            --out best.json [--epochs 20] [--batch 32] [--lr 0.5]
 *            [--patience 5] [--seed N]
 *
 * The corpus files are the encoder pipeline's inputs.jsonl records
 * ({"id", "tokens", ...}, optionally with "target" for training).
 */

import * as fs from 'fs';

import { freshModel, loadCheckpoint, saveCheckpoint } from './checkpoint';
import { DEFAULT_TRAIN_OPTIONS, finetune, loadPairs } from './trainer';
import { serve } from './serve';

interface Args {
  command: string;
  options: Map<string, string>;
}

function parseArgs(argv: string[]): Args {
  const [command, ...rest] = argv;
  const options = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key.startsWith('--') || i + 1 >= rest.length) {
      throw new Error(`malformed option ${key}`);
    }
    options.set(key.slice(2), rest[i + 1]);
  }
  return { command: command ?? '', options };
}

function required(args: Args, name: string): string {
  const value = args.options.get(name);
  if (value === undefined) throw new Error(`--${name} is required`);
  return value;
}

function numberOption(args: Args, name: string, fallback: number): number {
  const value = args.options.get(name);
  if (value === undefined) return fallback;
  const parsed = Number(value);
  if (!Number.isFinite(parsed)) throw new Error(`--${name} must be a number`);
  return parsed;
}

function* corpusTokens(path: string): Iterable<string> {
  const text = fs.readFileSync(path, 'utf-8');
  for (const line of text.split('\n')) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const record = JSON.parse(trimmed) as { tokens?: string[]; target?: string };
    for (const token of record.tokens ?? []) yield token;
    if (typeof record.target === 'string') {
      for (const token of record.target.split(/\s+/)) if (token) yield token;
    }
  }
}

function cmdInit(args: Args): number {
  const corpus = required(args, 'corpus');
  const out = required(args, 'out');
  const model = freshModel(corpusTokens(corpus), {
    checkpoint: out,
    decodingSeed: numberOption(args, 'seed', 0),
    dim: numberOption(args, 'dim', 24),
    beamWidth: numberOption(args, 'beam-width', 0),
  });
  saveCheckpoint(out, model);
  process.stderr.write(`initialized checkpoint ${out} (vocab=${model.tokenizer.size})\n`);
  return 0;
}

async function cmdServe(args: Args): Promise<number> {
  const model = loadCheckpoint(required(args, 'checkpoint'));
  const seed = args.options.get('seed');
  if (seed !== undefined) model.config.decodingSeed = Number(seed);
  const width = args.options.get('beam-width');
  if (width !== undefined) model.config.beamWidth = Number(width);
  await serve(model);
  return 0;
}

function cmdFinetune(args: Args): number {
  const model = loadCheckpoint(required(args, 'checkpoint'));
  const out = required(args, 'out');
  const train = loadPairs(required(args, 'train'), model);
  const validPath = args.options.get('valid');
  const valid = validPath ? loadPairs(validPath, model) : [];
  const options = {
    epochs: numberOption(args, 'epochs', DEFAULT_TRAIN_OPTIONS.epochs),
    batchSize: numberOption(args, 'batch', DEFAULT_TRAIN_OPTIONS.batchSize),
    learningRate: numberOption(args, 'lr', DEFAULT_TRAIN_OPTIONS.learningRate),
    patience: numberOption(args, 'patience', DEFAULT_TRAIN_OPTIONS.patience),
    seed: numberOption(args, 'seed', DEFAULT_TRAIN_OPTIONS.seed),
  };
  const result = finetune(model, train, valid, options, (m) => {
    process.stdout.write(
      JSON.stringify({ epoch: m.epoch, train_loss: m.trainLoss, valid_loss: m.validLoss }) + '\n',
    );
  });
  saveCheckpoint(out, model);
  process.stdout.write(
    JSON.stringify({
      best_epoch: result.bestEpoch,
      epochs_run: result.metrics.length,
      stopped_early: result.stoppedEarly,
      checkpoint: out,
    }) + '\n',
  );
  return 0;
}

async function main(): Promise<number> {
  const args = parseArgs(process.argv.slice(2));
  switch (args.command) {
    case 'init':
      return cmdInit(args);
    case 'serve':
      return cmdServe(args);
    case 'finetune':
      return cmdFinetune(args);
    default:
      process.stderr.write('usage: slicefix-backend init|serve|finetune [options]\n');
      return 2;
  }
}

main()
  .then((code) => {
    process.exitCode = code;
  })
  .catch((err) => {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    process.exitCode = 1;
  });
