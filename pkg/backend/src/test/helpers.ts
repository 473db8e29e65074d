import { spawn, spawnSync } from 'child_process';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

export const CLI = path.resolve(__dirname, '..', 'main.js');

export function tmpdir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), 'slicefix-backend-'));
}

export interface InputRecord {
  id: string;
  tokens: string[];
  target?: string;
}

/** Toy single-line repair pairs: "x = <n> ;" fixed by "x = <n> + 1 ;". */
export function toyCorpus(count: number): InputRecord[] {
  const records: InputRecord[] = [];
  for (let i = 0; i < count; i++) {
    const v = ['x', 'y', 'z'][i % 3];
    const n = String(i % 7);
    const buggy = [v, '=', n, ';'];
    const ctx = ['int', v, '=', '0', ';'];
    records.push({
      id: `b${i}`,
      tokens: ['<GLB>', '<CTX>', ...ctx, '<BOL>', ...buggy, '<EOL>'],
      target: `${v} = ${n} + 1 ;`,
    });
  }
  return records;
}

export function writeJsonl(file: string, records: object[]): void {
  fs.writeFileSync(file, records.map((r) => JSON.stringify(r)).join('\n') + '\n');
}

export function runCli(args: string[]): { status: number; stdout: string; stderr: string } {
  const result = spawnSync(process.execPath, [CLI, ...args], { encoding: 'utf-8' });
  return { status: result.status ?? -1, stdout: result.stdout, stderr: result.stderr };
}

/** Spawn `serve`, send each request line, await one response per request. */
export function askServer(serveArgs: string[], requestLines: string[]): Promise<string[]> {
  return new Promise((resolve, reject) => {
    const child = spawn(process.execPath, [CLI, 'serve', ...serveArgs], {
      stdio: ['pipe', 'pipe', 'ignore'],
    });
    const responses: string[] = [];
    let buffer = '';
    const timer = setTimeout(() => {
      child.kill();
      reject(new Error(`timed out after ${responses.length}/${requestLines.length} responses`));
    }, 60_000);
    child.stdout.on('data', (chunk: Buffer) => {
      buffer += chunk.toString();
      let newline;
      while ((newline = buffer.indexOf('\n')) >= 0) {
        responses.push(buffer.slice(0, newline));
        buffer = buffer.slice(newline + 1);
      }
      if (responses.length >= requestLines.length) {
        clearTimeout(timer);
        child.stdin.end();
        child.kill();
        resolve(responses.slice(0, requestLines.length));
      }
    });
    child.on('error', (err) => {
      clearTimeout(timer);
      reject(err);
    });
    child.stdin.write(requestLines.join('\n') + '\n');
  });
}
