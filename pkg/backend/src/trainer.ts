/**
 * Fine-tuning loop: minibatch SGD on cross-entropy with validation-based
 * early stopping. Defaults: at most 20 epochs, batch 32, stop after 5
 * consecutive epochs without validation improvement, keep the checkpoint
 * with minimum validation loss.
 */

import * as fs from 'fs';

import { Model, zeroGradients } from './model';
import { mulberry32 } from './rng';

export interface TrainPair {
  id: string;
  sourceIds: number[];
  targetIds: number[];
}

export interface TrainOptions {
  epochs: number;
  batchSize: number;
  learningRate: number;
  patience: number;
  seed: number;
}

export const DEFAULT_TRAIN_OPTIONS: TrainOptions = {
  epochs: 20,
  batchSize: 32,
  learningRate: 0.5,
  patience: 5,
  seed: 0,
};

export interface EpochMetrics {
  epoch: number;
  trainLoss: number;
  validLoss: number;
}

export interface TrainResult {
  metrics: EpochMetrics[];
  bestEpoch: number;
  stoppedEarly: boolean;
}

/** True once the tail of the history shows `patience` consecutive epochs
 * without improvement over the best validation loss so far. */
export function shouldStop(validLosses: number[], patience: number): boolean {
  if (validLosses.length <= patience) return false;
  let best = Infinity;
  let sinceImprovement = 0;
  for (const loss of validLosses) {
    if (loss < best - 1e-12) {
      best = loss;
      sinceImprovement = 0;
    } else {
      sinceImprovement += 1;
    }
  }
  return sinceImprovement >= patience;
}

export function evaluateLoss(model: Model, pairs: TrainPair[]): number {
  if (pairs.length === 0) return 0;
  let total = 0;
  for (const pair of pairs) {
    total += model.pairLoss(pair.sourceIds, pair.targetIds);
  }
  return total / pairs.length;
}

export function finetune(
  model: Model,
  train: TrainPair[],
  valid: TrainPair[],
  options: TrainOptions,
  onEpoch?: (m: EpochMetrics) => void,
): TrainResult {
  if (train.length === 0) {
    throw new Error('training corpus is empty');
  }
  const rng = mulberry32(options.seed + 0x7ea1);
  const metrics: EpochMetrics[] = [];
  const validLosses: number[] = [];
  let best = Infinity;
  let bestEpoch = 0;
  let bestParams = model.snapshot();
  let stoppedEarly = false;

  for (let epoch = 1; epoch <= options.epochs; epoch++) {
    const order = shuffled(train.length, rng);
    let epochLoss = 0;
    for (let start = 0; start < order.length; start += options.batchSize) {
      const batch = order.slice(start, start + options.batchSize);
      const grads = zeroGradients(model);
      let batchLoss = 0;
      for (const idx of batch) {
        const pair = train[idx];
        batchLoss += model.pairLoss(pair.sourceIds, pair.targetIds, grads);
      }
      epochLoss += batchLoss;
      model.applyGradients(grads, options.learningRate, batch.length);
    }
    const trainLoss = epochLoss / train.length;
    const validLoss = evaluateLoss(model, valid.length > 0 ? valid : train);
    validLosses.push(validLoss);
    const entry = { epoch, trainLoss, validLoss };
    metrics.push(entry);
    onEpoch?.(entry);

    if (validLoss < best - 1e-12) {
      best = validLoss;
      bestEpoch = epoch;
      bestParams = model.snapshot();
    }
    if (shouldStop(validLosses, options.patience)) {
      stoppedEarly = true;
      break;
    }
  }

  model.restore(bestParams);
  return { metrics, bestEpoch: bestEpoch || 1, stoppedEarly };
}

/** Load {id, tokens, target} JSONL into encoded pairs. */
export function loadPairs(path: string, model: Model): TrainPair[] {
  const pairs: TrainPair[] = [];
  const text = fs.readFileSync(path, 'utf-8');
  for (const line of text.split('\n')) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const record = JSON.parse(trimmed) as { id?: string; tokens?: string[]; target?: string };
    if (!record.tokens || typeof record.target !== 'string') continue;
    pairs.push({
      id: record.id ?? '',
      sourceIds: model.tokenizer.encodeSequence(record.tokens, model.config.maxSourceLength),
      targetIds: model.tokenizer.encodeSequence(record.target.split(/\s+/).filter(Boolean), model.config.maxTargetLength),
    });
  }
  return pairs;
}

function shuffled(n: number, rng: () => number): number[] {
  const order = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  return order;
}
