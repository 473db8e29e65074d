/**
 * Deterministic beam-search decoding with length-normalized scores.
 */

import { Model } from './model';
import { BOS, EOS } from './tokenizer';

export interface DecodedCandidate {
  text: string;
  score: number; // length-normalized log-likelihood, higher is better
}

interface Beam {
  pieces: number[];
  logProb: number;
  done: boolean;
}

export function beamSearch(model: Model, sourceIds: number[], width: number, maxSteps: number): DecodedCandidate[] {
  const eos = model.tokenizer.id(EOS);
  const bos = model.tokenizer.id(BOS);
  let beams: Beam[] = [{ pieces: [], logProb: 0, done: false }];

  for (let step = 0; step < maxSteps; step++) {
    if (beams.every((b) => b.done)) break;
    const expanded: Beam[] = [];
    for (const beam of beams) {
      if (beam.done) {
        expanded.push(beam);
        continue;
      }
      const prev = beam.pieces.length === 0 ? bos : beam.pieces[beam.pieces.length - 1];
      const logProbs = model.stepLogProbs(prev, sourceIds);
      // only the top `width` extensions per beam can survive the prune
      const order = topIndices(logProbs, Math.min(width, logProbs.length));
      for (const tok of order) {
        expanded.push({
          pieces: [...beam.pieces, tok],
          logProb: beam.logProb + logProbs[tok],
          done: tok === eos,
        });
      }
    }
    expanded.sort(compareBeams);
    beams = expanded.slice(0, width);
  }

  const candidates = beams.map((beam) => {
    const withoutEos = beam.pieces.filter((p) => p !== eos);
    return {
      text: model.tokenizer.decode(withoutEos),
      score: beam.logProb / Math.max(1, beam.pieces.length),
    };
  });
  candidates.sort((a, b) => b.score - a.score || (a.text < b.text ? -1 : a.text > b.text ? 1 : 0));
  return candidates;
}

function compareBeams(a: Beam, b: Beam): number {
  if (b.logProb !== a.logProb) return b.logProb - a.logProb;
  const la = a.pieces.join(',');
  const lb = b.pieces.join(',');
  return la < lb ? -1 : la > lb ? 1 : 0;
}

function topIndices(values: Float64Array, count: number): number[] {
  const order = Array.from(values.keys());
  order.sort((i, j) => values[j] - values[i] || i - j);
  return order.slice(0, count);
}
