import assert from 'node:assert/strict';
import { test } from 'node:test';
import * as path from 'path';

import { askServer, runCli, tmpdir, toyCorpus, writeJsonl } from './helpers';

interface EpochLine {
  epoch?: number;
  train_loss?: number;
  valid_loss?: number;
  best_epoch?: number;
  epochs_run?: number;
  stopped_early?: boolean;
}

function setup(dir: string): { corpus: string; ckpt: string } {
  const corpus = path.join(dir, 'train.jsonl');
  writeJsonl(corpus, toyCorpus(50));
  const ckpt = path.join(dir, 'ckpt.json');
  const init = runCli(['init', '--corpus', corpus, '--out', ckpt, '--seed', '11', '--dim', '16']);
  assert.equal(init.status, 0, init.stderr);
  return { corpus, ckpt };
}

function parseLines(stdout: string): EpochLine[] {
  return stdout
    .split('\n')
    .filter((l) => l.trim())
    .map((l) => JSON.parse(l) as EpochLine);
}

test('toy fine-tune on 50 pairs: training loss decreases over 2 epochs', () => {
  const dir = tmpdir();
  const { corpus, ckpt } = setup(dir);
  const out = path.join(dir, 'tuned.json');
  const result = runCli([
    'finetune',
    '--checkpoint', ckpt,
    '--train', corpus,
    '--out', out,
    '--epochs', '2',
    '--batch', '32',
    '--seed', '3',
  ]);
  assert.equal(result.status, 0, result.stderr);
  const lines = parseLines(result.stdout);
  const epochs = lines.filter((l) => l.epoch !== undefined);
  assert.equal(epochs.length, 2);
  assert.ok(
    epochs[1].train_loss! < epochs[0].train_loss!,
    `loss did not decrease: ${epochs[0].train_loss} -> ${epochs[1].train_loss}`,
  );
});

test('plateau fixture: five non-improving epochs trigger the early stop', () => {
  const dir = tmpdir();
  const { corpus, ckpt } = setup(dir);
  const out = path.join(dir, 'tuned.json');
  // lr 0 freezes the model, so validation loss is exactly flat from epoch 1
  const result = runCli([
    'finetune',
    '--checkpoint', ckpt,
    '--train', corpus,
    '--valid', corpus,
    '--out', out,
    '--epochs', '20',
    '--lr', '0',
    '--patience', '5',
  ]);
  assert.equal(result.status, 0, result.stderr);
  const summary = parseLines(result.stdout).find((l) => l.epochs_run !== undefined)!;
  assert.equal(summary.stopped_early, true);
  assert.ok(summary.epochs_run! < 20, `ran all ${summary.epochs_run} epochs`);
  assert.equal(summary.epochs_run, 6); // best at epoch 1, then 5 flat epochs
  assert.equal(summary.best_epoch, 1);
});

test('fine-tuned checkpoint saves the best weights and still serves', async () => {
  const dir = tmpdir();
  const { corpus, ckpt } = setup(dir);
  const out = path.join(dir, 'tuned.json');
  const result = runCli([
    'finetune',
    '--checkpoint', ckpt,
    '--train', corpus,
    '--valid', corpus,
    '--out', out,
    '--epochs', '6',
    '--seed', '3',
  ]);
  assert.equal(result.status, 0, result.stderr);
  const request = JSON.stringify({
    id: 'q',
    input_tokens: ['<GLB>', '<CTX>', 'int', 'x', '=', '0', ';', '<BOL>', 'x', '=', '3', ';', '<EOL>'],
    k: 5,
  });
  const [line] = await askServer(['--checkpoint', out], [request]);
  const response = JSON.parse(line);
  assert.equal(response.id, 'q');
  assert.ok(response.candidates.length >= 1);
});

test('fine-tuning learns the toy repair mapping', () => {
  const dir = tmpdir();
  const { corpus, ckpt } = setup(dir);
  const out = path.join(dir, 'tuned.json');
  const result = runCli([
    'finetune',
    '--checkpoint', ckpt,
    '--train', corpus,
    '--out', out,
    '--epochs', '60',
    '--batch', '8',
    '--lr', '1.0',
    '--patience', '60',
    '--seed', '1',
  ]);
  assert.equal(result.status, 0, result.stderr);
  const lines = parseLines(result.stdout).filter((l) => l.epoch !== undefined);
  const final = lines[lines.length - 1].train_loss!;
  assert.ok(final < 0.6, `final training loss ${final} still high`);
});

test('empty training corpus is an error', () => {
  const dir = tmpdir();
  const { ckpt } = setup(dir);
  const empty = path.join(dir, 'empty.jsonl');
  writeJsonl(empty, []);
  const result = runCli(['finetune', '--checkpoint', ckpt, '--train', empty, '--out', path.join(dir, 'x.json')]);
  assert.notEqual(result.status, 0);
  assert.match(result.stderr, /training corpus is empty/);
});
