import assert from 'node:assert/strict';
import { test } from 'node:test';
import * as path from 'path';

import { askServer, runCli, tmpdir, toyCorpus, writeJsonl } from './helpers';

interface Candidate {
  rank: number;
  text: string;
  score: number;
}

function initCheckpoint(dir: string, seed = 7): string {
  const corpus = path.join(dir, 'inputs.jsonl');
  writeJsonl(corpus, toyCorpus(50));
  const ckpt = path.join(dir, 'ckpt.json');
  const result = runCli(['init', '--corpus', corpus, '--out', ckpt, '--seed', String(seed), '--dim', '16']);
  assert.equal(result.status, 0, result.stderr);
  return ckpt;
}

test('serves 10 protocol requests with schema-valid, deterministic responses', async () => {
  const dir = tmpdir();
  const ckpt = initCheckpoint(dir);
  const requests = toyCorpus(10).map((rec) =>
    JSON.stringify({ id: rec.id, input_tokens: rec.tokens, k: 10 }),
  );

  const first = await askServer(['--checkpoint', ckpt, '--seed', '7'], requests);
  assert.equal(first.length, 10);
  for (const [i, line] of first.entries()) {
    const response = JSON.parse(line) as { id: string; candidates?: Candidate[]; error?: string };
    assert.equal(response.id, `b${i}`); // responses in request order
    assert.equal(response.error, undefined);
    const candidates = response.candidates!;
    assert.ok(candidates.length >= 1 && candidates.length <= 10);
    candidates.forEach((c, idx) => {
      assert.equal(c.rank, idx + 1, 'ranks 1..n without gaps');
      assert.equal(typeof c.text, 'string');
      if (idx > 0) {
        assert.ok(c.score <= candidates[idx - 1].score, 'scores non-increasing');
      }
    });
  }

  const second = await askServer(['--checkpoint', ckpt, '--seed', '7'], requests);
  assert.deepEqual(second, first, 'fixed seed must reproduce responses exactly');
});

test('empty buggy segment gets a per-request protocol error', async () => {
  const dir = tmpdir();
  const ckpt = initCheckpoint(dir);
  const bad = JSON.stringify({ id: 'bad', input_tokens: ['<GLB>', '<CTX>', '<BOL>', '<EOL>'], k: 5 });
  const good = JSON.stringify({ id: 'ok', input_tokens: ['<BOL>', 'x', '=', '1', ';', '<EOL>'], k: 5 });
  const [badLine, goodLine] = await askServer(['--checkpoint', ckpt], [bad, good]);
  const badResponse = JSON.parse(badLine);
  assert.equal(badResponse.id, 'bad');
  assert.match(badResponse.error, /empty buggy segment/);
  const goodResponse = JSON.parse(goodLine);
  assert.equal(goodResponse.error, undefined); // the server survived
});

test('malformed request line answers with a null-id error', async () => {
  const dir = tmpdir();
  const ckpt = initCheckpoint(dir);
  const [line] = await askServer(['--checkpoint', ckpt], ['this is not json']);
  const response = JSON.parse(line);
  assert.equal(response.id, null);
  assert.ok(response.error);
});

test('missing checkpoint is a startup error', () => {
  const result = runCli(['serve', '--checkpoint', '/nonexistent/ckpt.json']);
  assert.notEqual(result.status, 0);
  assert.match(result.stderr, /cannot read checkpoint/);
});
