/**
 * Self-contained encoder-decoder at desk scale.
 *
 * The encoder is the source piece embedding table; the decoder attends
 * over it with a single dot-product attention head per step:
 *
 *   q_t   = tanh(Wq·E[y_{t-1}])
 *   alpha = softmax(q_t · E[src])
 *   ctx_t = alpha · E[src]
 *   h_t   = tanh(Wp·E[y_{t-1}] + Wc·ctx_t + b)
 *   p(y_t)= softmax(Wo·h_t)
 *
 * Everything is plain Float64Array math with hand-written backprop
 * (finite-difference-checked in the test suite), trained with minibatch
 * SGD on mean cross-entropy, so runs are bit-reproducible for a fixed
 * seed.
 */

import { Rng, mulberry32 } from './rng';
import { BOS, EOS, Tokenizer } from './tokenizer';

export interface BackendConfig {
  checkpoint: string;
  dim: number;
  maxSourceLength: number;
  maxTargetLength: number;
  beamWidth: number;
  decodingSeed: number;
  device: string;
}

export const DEFAULT_CONFIG: Omit<BackendConfig, 'checkpoint'> = {
  dim: 24,
  maxSourceLength: 512,
  maxTargetLength: 512,
  beamWidth: 0, // 0 = follow the requested k (which defaults to 10)
  decodingSeed: 0,
  device: 'cpu',
};

export function validateConfig(config: BackendConfig): void {
  if (config.maxSourceLength < 16 || config.maxTargetLength < 16) {
    throw new Error('sequence length limits must be >= 16');
  }
  if (config.beamWidth < 0) {
    throw new Error('beam width override must be >= 0');
  }
}

export interface Gradients {
  embed: Float64Array;
  wQuery: Float64Array;
  wPrev: Float64Array;
  wCtx: Float64Array;
  bias: Float64Array;
  wOut: Float64Array;
}

interface StepForward {
  query: Float64Array; // post-tanh
  alpha: Float64Array; // attention weights over source positions
  ctx: Float64Array;
  hidden: Float64Array; // post-tanh
  logProbs: Float64Array;
}

export class Model {
  readonly tokenizer: Tokenizer;
  readonly config: BackendConfig;
  readonly dim: number;
  embed: Float64Array; // V x d
  wQuery: Float64Array; // d x d
  wPrev: Float64Array; // d x d
  wCtx: Float64Array; // d x d
  bias: Float64Array; // d
  wOut: Float64Array; // V x d

  constructor(tokenizer: Tokenizer, config: BackendConfig, init?: Record<string, number[]>) {
    this.tokenizer = tokenizer;
    this.config = config;
    this.dim = config.dim;
    const v = tokenizer.size;
    const d = config.dim;
    if (init) {
      this.embed = Float64Array.from(init.embed);
      this.wQuery = Float64Array.from(init.wQuery);
      this.wPrev = Float64Array.from(init.wPrev);
      this.wCtx = Float64Array.from(init.wCtx);
      this.bias = Float64Array.from(init.bias);
      this.wOut = Float64Array.from(init.wOut);
    } else {
      const rng = mulberry32(config.decodingSeed + 0x5eed);
      this.embed = randomArray(v * d, rng, 0.1);
      this.wQuery = randomArray(d * d, rng, 0.3);
      this.wPrev = randomArray(d * d, rng, 0.3);
      this.wCtx = randomArray(d * d, rng, 0.3);
      this.bias = new Float64Array(d);
      this.wOut = randomArray(v * d, rng, 0.1);
    }
  }

  private stepForward(prevId: number, sourceIds: number[]): StepForward {
    const d = this.dim;
    const v = this.tokenizer.size;
    const n = sourceIds.length;

    const query = new Float64Array(d);
    for (let i = 0; i < d; i++) {
      let acc = 0;
      for (let j = 0; j < d; j++) acc += this.wQuery[i * d + j] * this.embed[prevId * d + j];
      query[i] = Math.tanh(acc);
    }

    const alpha = new Float64Array(n);
    const ctx = new Float64Array(d);
    if (n > 0) {
      let maxScore = -Infinity;
      for (let s = 0; s < n; s++) {
        let score = 0;
        const base = sourceIds[s] * d;
        for (let j = 0; j < d; j++) score += query[j] * this.embed[base + j];
        alpha[s] = score;
        if (score > maxScore) maxScore = score;
      }
      let z = 0;
      for (let s = 0; s < n; s++) {
        alpha[s] = Math.exp(alpha[s] - maxScore);
        z += alpha[s];
      }
      for (let s = 0; s < n; s++) {
        alpha[s] /= z;
        const base = sourceIds[s] * d;
        for (let j = 0; j < d; j++) ctx[j] += alpha[s] * this.embed[base + j];
      }
    }

    const hidden = new Float64Array(d);
    for (let i = 0; i < d; i++) {
      let acc = this.bias[i];
      for (let j = 0; j < d; j++) {
        acc += this.wPrev[i * d + j] * this.embed[prevId * d + j];
        acc += this.wCtx[i * d + j] * ctx[j];
      }
      hidden[i] = Math.tanh(acc);
    }

    const logProbs = new Float64Array(v);
    let maxLogit = -Infinity;
    for (let t = 0; t < v; t++) {
      let acc = 0;
      for (let j = 0; j < d; j++) acc += this.wOut[t * d + j] * hidden[j];
      logProbs[t] = acc;
      if (acc > maxLogit) maxLogit = acc;
    }
    let z = 0;
    for (let t = 0; t < v; t++) z += Math.exp(logProbs[t] - maxLogit);
    const logZ = maxLogit + Math.log(z);
    for (let t = 0; t < v; t++) logProbs[t] -= logZ;
    return { query, alpha, ctx, hidden, logProbs };
  }

  /** log-softmax over the vocabulary for one decode step. */
  stepLogProbs(prevId: number, sourceIds: number[]): Float64Array {
    return this.stepForward(prevId, sourceIds).logProbs;
  }

  /** Teacher-forced mean negative log-likelihood of one pair; optionally
   * accumulates matching gradients into `grads`. */
  pairLoss(sourceIds: number[], targetIds: number[], grads?: Gradients): number {
    const eos = this.tokenizer.id(EOS);
    const bos = this.tokenizer.id(BOS);
    const sequence = [...targetIds, eos];
    const invLen = 1 / sequence.length;
    let loss = 0;
    let prev = bos;
    for (const gold of sequence) {
      const fwd = this.stepForward(prev, sourceIds);
      loss -= fwd.logProbs[gold];
      if (grads) this.stepBackward(prev, sourceIds, fwd, gold, invLen, grads);
      prev = gold;
    }
    return loss * invLen;
  }

  private stepBackward(
    prev: number,
    sourceIds: number[],
    fwd: StepForward,
    gold: number,
    scale: number,
    grads: Gradients,
  ): void {
    const d = this.dim;
    const v = this.tokenizer.size;
    const n = sourceIds.length;
    const { query, alpha, ctx, hidden, logProbs } = fwd;

    const dHidden = new Float64Array(d);
    for (let t = 0; t < v; t++) {
      const dLogit = (Math.exp(logProbs[t]) - (t === gold ? 1 : 0)) * scale;
      if (dLogit === 0) continue;
      const base = t * d;
      for (let j = 0; j < d; j++) {
        grads.wOut[base + j] += dLogit * hidden[j];
        dHidden[j] += dLogit * this.wOut[base + j];
      }
    }

    const dPrevEmbed = new Float64Array(d);
    const dCtx = new Float64Array(d);
    for (let i = 0; i < d; i++) {
      const dPre = dHidden[i] * (1 - hidden[i] * hidden[i]);
      grads.bias[i] += dPre;
      const row = i * d;
      for (let j = 0; j < d; j++) {
        grads.wPrev[row + j] += dPre * this.embed[prev * d + j];
        dPrevEmbed[j] += dPre * this.wPrev[row + j];
        grads.wCtx[row + j] += dPre * ctx[j];
        dCtx[j] += dPre * this.wCtx[row + j];
      }
    }

    if (n > 0) {
      // ctx = sum_s alpha_s * E[src_s]
      const dAlpha = new Float64Array(n);
      for (let s = 0; s < n; s++) {
        const base = sourceIds[s] * d;
        let acc = 0;
        for (let j = 0; j < d; j++) {
          acc += dCtx[j] * this.embed[base + j];
          grads.embed[base + j] += alpha[s] * dCtx[j];
        }
        dAlpha[s] = acc;
      }
      // softmax jacobian
      let mix = 0;
      for (let s = 0; s < n; s++) mix += alpha[s] * dAlpha[s];
      const dQuery = new Float64Array(d);
      for (let s = 0; s < n; s++) {
        const dScore = alpha[s] * (dAlpha[s] - mix);
        if (dScore === 0) continue;
        const base = sourceIds[s] * d;
        for (let j = 0; j < d; j++) {
          dQuery[j] += dScore * this.embed[base + j];
          grads.embed[base + j] += dScore * query[j];
        }
      }
      for (let i = 0; i < d; i++) {
        const dPre = dQuery[i] * (1 - query[i] * query[i]);
        if (dPre === 0) continue;
        const row = i * d;
        for (let j = 0; j < d; j++) {
          grads.wQuery[row + j] += dPre * this.embed[prev * d + j];
          dPrevEmbed[j] += dPre * this.wQuery[row + j];
        }
      }
    }

    for (let j = 0; j < d; j++) grads.embed[prev * d + j] += dPrevEmbed[j];
  }

  applyGradients(grads: Gradients, lr: number, count: number): void {
    const step = lr / Math.max(1, count);
    subScaled(this.embed, grads.embed, step);
    subScaled(this.wQuery, grads.wQuery, step);
    subScaled(this.wPrev, grads.wPrev, step);
    subScaled(this.wCtx, grads.wCtx, step);
    subScaled(this.bias, grads.bias, step);
    subScaled(this.wOut, grads.wOut, step);
  }

  snapshot(): Record<string, number[]> {
    return {
      embed: [...this.embed],
      wQuery: [...this.wQuery],
      wPrev: [...this.wPrev],
      wCtx: [...this.wCtx],
      bias: [...this.bias],
      wOut: [...this.wOut],
    };
  }

  restore(params: Record<string, number[]>): void {
    this.embed = Float64Array.from(params.embed);
    this.wQuery = Float64Array.from(params.wQuery);
    this.wPrev = Float64Array.from(params.wPrev);
    this.wCtx = Float64Array.from(params.wCtx);
    this.bias = Float64Array.from(params.bias);
    this.wOut = Float64Array.from(params.wOut);
  }
}

export function zeroGradients(model: Model): Gradients {
  return {
    embed: new Float64Array(model.embed.length),
    wQuery: new Float64Array(model.wQuery.length),
    wPrev: new Float64Array(model.wPrev.length),
    wCtx: new Float64Array(model.wCtx.length),
    bias: new Float64Array(model.bias.length),
    wOut: new Float64Array(model.wOut.length),
  };
}

function randomArray(n: number, rng: Rng, scale: number): Float64Array {
  const arr = new Float64Array(n);
  for (let i = 0; i < n; i++) arr[i] = (rng() * 2 - 1) * scale;
  return arr;
}

function subScaled(target: Float64Array, grad: Float64Array, step: number): void {
  for (let i = 0; i < target.length; i++) target[i] -= step * grad[i];
}
