/**
 * Subword tokenizer with greedy longest-match segmentation.
 *
 * The vocabulary holds whole whitespace tokens observed in the corpus plus
 * every single character in standalone ("c") and continuation ("##c")
 * form, so any input token segments without loss. Unseen characters fall
 * back to <unk>.
 */

export const PAD = '<pad>';
export const BOS = '<s>';
export const EOS = '</s>';
export const UNK = '<unk>';

const SPECIALS = [PAD, BOS, EOS, UNK];
const CONT = '##';

export class Tokenizer {
  readonly pieces: string[];
  private readonly index: Map<string, number>;

  constructor(pieces: string[]) {
    this.pieces = pieces;
    this.index = new Map(pieces.map((p, i) => [p, i]));
    for (const special of SPECIALS) {
      if (!this.index.has(special)) {
        throw new Error(`vocabulary is missing ${special}`);
      }
    }
  }

  static fromCorpus(tokens: Iterable<string>, maxVocab = 4000): Tokenizer {
    const freq = new Map<string, number>();
    const chars = new Set<string>();
    for (const token of tokens) {
      if (!token) continue;
      freq.set(token, (freq.get(token) ?? 0) + 1);
      for (const ch of token) chars.add(ch);
    }
    const ranked = [...freq.entries()]
      .sort((a, b) => b[1] - a[1] || (a[0] < b[0] ? -1 : 1))
      .slice(0, maxVocab)
      .map(([tok]) => tok);
    const charPieces = [...chars].sort();
    const pieces = [
      ...SPECIALS,
      ...ranked,
      ...charPieces.filter((c) => !freq.has(c)),
      ...charPieces.map((c) => CONT + c),
    ];
    return new Tokenizer([...new Set(pieces)]);
  }

  get size(): number {
    return this.pieces.length;
  }

  id(piece: string): number {
    return this.index.get(piece) ?? this.index.get(UNK)!;
  }

  /** Segment one whitespace token into piece ids. */
  encodeToken(token: string): number[] {
    const direct = this.index.get(token);
    if (direct !== undefined) return [direct];
    const ids: number[] = [];
    let pos = 0;
    let first = true;
    while (pos < token.length) {
      let end = token.length;
      let found = -1;
      while (end > pos) {
        const piece = (first ? '' : CONT) + token.slice(pos, end);
        const id = this.index.get(piece);
        if (id !== undefined) {
          found = id;
          break;
        }
        end -= 1;
      }
      if (found < 0) {
        ids.push(this.id(UNK));
        pos += 1;
      } else {
        ids.push(found);
        pos = end;
      }
      first = false;
    }
    return ids;
  }

  /** Encode a token sequence, truncating to maxLen subword units. */
  encodeSequence(tokens: string[], maxLen: number): number[] {
    const out: number[] = [];
    for (const token of tokens) {
      for (const id of this.encodeToken(token)) {
        if (out.length >= maxLen) return out;
        out.push(id);
      }
    }
    return out;
  }

  /** Merge pieces back into whitespace-separated text. */
  decode(ids: number[]): string {
    const words: string[] = [];
    for (const id of ids) {
      const piece = this.pieces[id];
      if (piece === undefined || SPECIALS.includes(piece)) continue;
      if (piece.startsWith(CONT) && words.length > 0) {
        words[words.length - 1] += piece.slice(CONT.length);
      } else {
        words.push(piece.startsWith(CONT) ? piece.slice(CONT.length) : piece);
      }
    }
    return words.join(' ');
  }
}
