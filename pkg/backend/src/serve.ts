/**
 * Stdio server: one NDJSON response per request line, in order. Requests
 * with an empty buggy segment or malformed fields get a per-id error
 * response; the process keeps serving. Status goes to stderr.
 */

import { createInterface } from 'readline';

import { beamSearch } from './beam';
import { Model } from './model';
import { ProtocolResponse, assertResponseContract, buggySegment, parseRequest } from './protocol';

export function handleRequestLine(model: Model, line: string): ProtocolResponse {
  let request;
  try {
    request = parseRequest(line);
  } catch (err) {
    return { id: null, error: (err as Error).message };
  }
  try {
    if (buggySegment(request.input_tokens) === null) {
      return { id: request.id, error: 'empty buggy segment' };
    }
    const sourceIds = model.tokenizer.encodeSequence(request.input_tokens, model.config.maxSourceLength);
    // beam width follows the requested k unless the config overrides it
    const width = model.config.beamWidth > 0 ? Math.max(model.config.beamWidth, request.k) : request.k;
    const decoded = beamSearch(model, sourceIds, width, model.config.maxTargetLength);
    const candidates = decoded.slice(0, request.k).map((c, i) => ({
      rank: i + 1,
      text: c.text,
      score: c.score,
    }));
    assertResponseContract(candidates, request.k);
    return { id: request.id, candidates };
  } catch (err) {
    return { id: request.id, error: (err as Error).message };
  }
}

export async function serve(model: Model): Promise<void> {
  process.stderr.write(
    `slicefix-backend: serving NDJSON over stdio (vocab=${model.tokenizer.size}, dim=${model.dim}, seed=${model.config.decodingSeed})\n`,
  );
  const rl = createInterface({ input: process.stdin });
  for await (const line of rl) {
    if (!line.trim()) continue;
    const response = handleRequestLine(model, line);
    process.stdout.write(JSON.stringify(response) + '\n');
  }
}
