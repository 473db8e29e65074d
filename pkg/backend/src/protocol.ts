/**
 * Wire protocol: newline-delimited JSON, one request and one response per
 * line, in request order.
 *
 *   request:  {"id": string, "input_tokens": string[], "k": number}
 *   response: {"id": string, "candidates": [{rank, text, score}]}
 *             {"id": string|null, "error": string}
 */

export interface ProtocolRequest {
  id: string;
  input_tokens: string[];
  k: number;
}

export interface ProtocolCandidate {
  rank: number;
  text: string;
  score: number;
}

export interface ProtocolResponse {
  id: string | null;
  candidates?: ProtocolCandidate[];
  error?: string;
}

const BOL = '<BOL>';
const EOL = '<EOL>';

export function parseRequest(line: string): ProtocolRequest {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    throw new Error('invalid JSON request');
  }
  if (typeof obj !== 'object' || obj === null) {
    throw new Error('request is not an object');
  }
  const record = obj as Record<string, unknown>;
  if (typeof record.id !== 'string') {
    throw new Error('request id must be a string');
  }
  if (!Array.isArray(record.input_tokens) || !record.input_tokens.every((t) => typeof t === 'string')) {
    throw new Error('input_tokens must be a string array');
  }
  const k = record.k;
  if (typeof k !== 'number' || !Number.isInteger(k) || k < 1) {
    throw new Error('k must be a positive integer');
  }
  return { id: record.id, input_tokens: record.input_tokens as string[], k };
}

/** The content tokens between <BOL> and <EOL>; null when absent/empty. */
export function buggySegment(tokens: string[]): string[] | null {
  const start = tokens.indexOf(BOL);
  const end = tokens.indexOf(EOL);
  if (start < 0 || end < 0 || end <= start + 1) return null;
  return tokens.slice(start + 1, end);
}

/** Contract check mirrored from the consumer side: ranks 1..n, scores
 * non-increasing, at most k entries. */
export function assertResponseContract(candidates: ProtocolCandidate[], k: number): void {
  if (candidates.length > k) {
    throw new Error(`response carries ${candidates.length} candidates for k=${k}`);
  }
  let prev = Infinity;
  candidates.forEach((c, i) => {
    if (c.rank !== i + 1) throw new Error(`rank ${c.rank} at position ${i + 1}`);
    if (c.score > prev) throw new Error(`score increases at rank ${c.rank}`);
    prev = c.score;
  });
}
