import assert from 'node:assert/strict';
import { test } from 'node:test';

import { Model, zeroGradients, DEFAULT_CONFIG, BackendConfig } from '../model';
import { Tokenizer } from '../tokenizer';

function tinyModel(seed: number): Model {
  const tokenizer = Tokenizer.fromCorpus(['x', 'y', '=', ';', '1', '+']);
  const config: BackendConfig = { checkpoint: '', ...DEFAULT_CONFIG, dim: 5, decodingSeed: seed };
  return new Model(tokenizer, config);
}

function numericGradient(model: Model, tensor: Float64Array, index: number, src: number[], tgt: number[]): number {
  const eps = 1e-6;
  const original = tensor[index];
  tensor[index] = original + eps;
  const up = model.pairLoss(src, tgt);
  tensor[index] = original - eps;
  const down = model.pairLoss(src, tgt);
  tensor[index] = original;
  return (up - down) / (2 * eps);
}

test('analytic gradients match finite differences on every tensor', () => {
  const model = tinyModel(42);
  const src = model.tokenizer.encodeSequence(['x', '=', '1', ';'], 512);
  const tgt = model.tokenizer.encodeSequence(['x', '=', '1', '+', '1', ';'], 512);

  const grads = zeroGradients(model);
  model.pairLoss(src, tgt, grads);

  const tensors: Array<[string, Float64Array, Float64Array]> = [
    ['embed', model.embed, grads.embed],
    ['wQuery', model.wQuery, grads.wQuery],
    ['wPrev', model.wPrev, grads.wPrev],
    ['wCtx', model.wCtx, grads.wCtx],
    ['bias', model.bias, grads.bias],
    ['wOut', model.wOut, grads.wOut],
  ];
  for (const [name, tensor, grad] of tensors) {
    // probe a spread of indices rather than every entry
    const stride = Math.max(1, Math.floor(tensor.length / 17));
    for (let i = 0; i < tensor.length; i += stride) {
      const numeric = numericGradient(model, tensor, i, src, tgt);
      const analytic = grad[i];
      const diff = Math.abs(numeric - analytic);
      const scale = Math.max(Math.abs(numeric), Math.abs(analytic));
      // absolute floor absorbs central-difference noise on ~0 gradients
      assert.ok(
        diff < 1e-8 + 1e-5 * scale,
        `${name}[${i}]: analytic ${analytic} vs numeric ${numeric} (diff ${diff})`,
      );
    }
  }
});

test('gradients handle an empty source (no attention path)', () => {
  const model = tinyModel(7);
  const tgt = model.tokenizer.encodeSequence(['x', ';'], 512);
  const grads = zeroGradients(model);
  const loss = model.pairLoss([], tgt, grads);
  assert.ok(Number.isFinite(loss));
  const numeric = numericGradient(model, model.wPrev, 0, [], tgt);
  const denom = Math.max(1e-6, Math.abs(numeric) + Math.abs(grads.wPrev[0]));
  assert.ok(Math.abs(numeric - grads.wPrev[0]) / denom < 1e-5);
  // attention weights receive no gradient without a source
  assert.ok(grads.wQuery.every((g) => g === 0));
});

test('one SGD step on a batch reduces its own loss', () => {
  const model = tinyModel(3);
  const pairs = [
    { src: model.tokenizer.encodeSequence(['x', '=', '1', ';'], 512), tgt: model.tokenizer.encodeSequence(['x', '=', '1', '+', '1', ';'], 512) },
    { src: model.tokenizer.encodeSequence(['y', '=', '1', ';'], 512), tgt: model.tokenizer.encodeSequence(['y', '=', '1', '+', '1', ';'], 512) },
  ];
  const before = pairs.reduce((acc, p) => acc + model.pairLoss(p.src, p.tgt), 0);
  const grads = zeroGradients(model);
  for (const p of pairs) model.pairLoss(p.src, p.tgt, grads);
  model.applyGradients(grads, 0.5, pairs.length);
  const after = pairs.reduce((acc, p) => acc + model.pairLoss(p.src, p.tgt), 0);
  assert.ok(after < before, `loss went ${before} -> ${after}`);
});
