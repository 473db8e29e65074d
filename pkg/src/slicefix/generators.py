"""Patch-generator contract, built-in deterministic generators, and the
bridge to external backends.

Wire protocol (newline-delimited JSON over a child process's stdio or
HTTP POST, one object per line):

    request:  {"id": str, "input_tokens": [str], "k": int}
    response: {"id": str, "candidates": [{"rank": int, "text": str, "score": float}]}
              or {"id": str, "error": str}

Every response is contract-checked before use: at most k candidates,
ranks 1..n without gaps, scores non-increasing with rank.
"""

from __future__ import annotations

import json
import selectors
import shlex
import subprocess
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .encoder import ModelInput

DEFAULT_K = 10
DEFAULT_TIMEOUT = 30.0


class GeneratorError(Exception):
    """Backend failure or contract violation; carries the instance id."""

    def __init__(self, message: str, instance_id: str = ""):
        super().__init__(message)
        self.instance_id = instance_id


@dataclass(frozen=True)
class CandidatePatch:
    rank: int
    text: str
    score: float
    generator: str


@dataclass
class GeneratorSpec:
    kind: str  # identity | replay | mutate | external
    name: str
    table: dict = field(default_factory=dict)  # replay: id -> [patch texts]
    rules: list = field(default_factory=list)  # mutate rule dicts
    command: str | None = None  # external: child process command line
    url: str | None = None  # external: HTTP endpoint
    timeout: float = DEFAULT_TIMEOUT
    deterministic: bool = True


def parse_spec(text: str, name: str | None = None) -> GeneratorSpec:
    """Parse a CLI backend spec: ``identity``, ``replay:FILE``,
    ``mutate:FILE``, ``cmd:COMMAND`` or ``http:URL``."""
    if text == "identity":
        return GeneratorSpec(kind="identity", name=name or "identity")
    if text.startswith("replay:"):
        path = text.split(":", 1)[1]
        with open(path, encoding="utf-8") as fh:
            table = json.load(fh)
        return GeneratorSpec(kind="replay", name=name or "replay", table=table)
    if text.startswith("mutate:"):
        path = text.split(":", 1)[1]
        with open(path, encoding="utf-8") as fh:
            rules = json.load(fh)
        return GeneratorSpec(kind="mutate", name=name or "mutate", rules=rules)
    if text.startswith("cmd:"):
        return GeneratorSpec(kind="external", name=name or "cmd", command=text.split(":", 1)[1])
    if text.startswith(("http://", "https://")):
        return GeneratorSpec(kind="external", name=name or "http", url=text)
    if text.startswith(("http:", "https:")):
        return GeneratorSpec(kind="external", name=name or "http", url=text.split(":", 1)[1])
    raise ValueError(f"unrecognized generator spec {text!r}")


def check_candidates(raw: list, k: int, generator: str, instance_id: str = "") -> list[CandidatePatch]:
    """Validate the response contract and freeze it into CandidatePatch objects."""
    if len(raw) > k:
        raise GeneratorError(f"{generator}: returned {len(raw)} candidates for k={k}", instance_id)
    out: list[CandidatePatch] = []
    prev_score: float | None = None
    for i, item in enumerate(raw, start=1):
        try:
            rank, text, score = int(item["rank"]), str(item["text"]), float(item["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise GeneratorError(f"{generator}: malformed candidate {item!r}: {exc}", instance_id)
        if rank != i:
            raise GeneratorError(f"{generator}: rank {rank} at position {i} (gap or disorder)", instance_id)
        if prev_score is not None and score > prev_score:
            raise GeneratorError(f"{generator}: score increases at rank {rank}", instance_id)
        prev_score = score
        out.append(CandidatePatch(rank=rank, text=text, score=score, generator=generator))
    return out


# --------------------------------------------------------------------------
# Built-in generators
# --------------------------------------------------------------------------


class IdentityGenerator:
    """Echoes the buggy statement; useful as an always-unaltered control."""

    def __init__(self, name: str = "identity"):
        self.name = name

    def generate(self, input: ModelInput, k: int, instance_id: str = "") -> list[CandidatePatch]:
        raw = [{"rank": 1, "text": input.buggy_text(), "score": 1.0}]
        return check_candidates(raw, k, self.name, instance_id)

    def close(self) -> None:
        pass


class ReplayGenerator:
    """Returns pre-recorded candidates from an id -> [texts] table."""

    def __init__(self, table: dict, name: str = "replay"):
        self.table = table
        self.name = name

    def generate(self, input: ModelInput, k: int, instance_id: str = "") -> list[CandidatePatch]:
        texts = list(self.table.get(instance_id, []))[:k]
        raw = [
            {"rank": i, "text": t, "score": 1.0 / i}
            for i, t in enumerate(texts, start=1)
        ]
        return check_candidates(raw, k, self.name, instance_id)

    def close(self) -> None:
        pass


class MutateGenerator:
    """Applies an ordered rule set to the buggy statement's tokens.

    Rules: {"op": "flip", "from": TOK, "to": TOK} rewrites one occurrence
    at a time (leftmost first); {"op": "delete", "token": TOK} drops one
    occurrence at a time. Candidates are deduplicated in rule order.
    """

    def __init__(self, rules: list, name: str = "mutate"):
        self.rules = rules
        self.name = name

    def _variants(self, tokens: list[str]) -> list[str]:
        seen: set[str] = set()
        out: list[str] = []
        for rule in self.rules:
            op = rule.get("op")
            if op == "flip":
                src, dst = rule["from"], rule["to"]
                for i, tok in enumerate(tokens):
                    if tok == src:
                        variant = " ".join(tokens[:i] + [dst] + tokens[i + 1 :])
                        if variant not in seen:
                            seen.add(variant)
                            out.append(variant)
            elif op == "delete":
                target = rule["token"]
                for i, tok in enumerate(tokens):
                    if tok == target:
                        variant = " ".join(tokens[:i] + tokens[i + 1 :])
                        if variant not in seen:
                            seen.add(variant)
                            out.append(variant)
            else:
                raise GeneratorError(f"{self.name}: unknown mutate op {op!r}")
        return out

    def generate(self, input: ModelInput, k: int, instance_id: str = "") -> list[CandidatePatch]:
        variants = self._variants(input.buggy_text().split())[:k]
        raw = [
            {"rank": i, "text": t, "score": 1.0 / i}
            for i, t in enumerate(variants, start=1)
        ]
        return check_candidates(raw, k, self.name, instance_id)

    def close(self) -> None:
        pass


# --------------------------------------------------------------------------
# External backends
# --------------------------------------------------------------------------


class CommandBackend:
    """Child process speaking the NDJSON protocol over its stdio.

    Requests are issued sequentially per connection; the pipeline may hold
    one connection and serialize access.
    """

    def __init__(self, command: str, name: str = "cmd", timeout: float = DEFAULT_TIMEOUT):
        self.command = command
        self.name = name
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                shlex.split(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        return self._proc

    def _read_line(self, proc: subprocess.Popen, instance_id: str) -> str:
        sel = selectors.DefaultSelector()
        sel.register(proc.stdout, selectors.EVENT_READ)
        deadline = time.monotonic() + self.timeout
        buf = ""
        try:
            while True:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise GeneratorError(f"{self.name}: timeout after {self.timeout}s", instance_id)
                if not sel.select(timeout=remaining):
                    continue
                line = proc.stdout.readline()
                if line == "":
                    raise GeneratorError(f"{self.name}: backend closed its stdout", instance_id)
                buf = line
                if buf.endswith("\n"):
                    return buf
        finally:
            sel.close()

    def generate(self, input: ModelInput, k: int, instance_id: str = "") -> list[CandidatePatch]:
        proc = self._ensure_started()
        request = {"id": instance_id, "input_tokens": list(input.tokens), "k": k}
        try:
            proc.stdin.write(json.dumps(request) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise GeneratorError(f"{self.name}: cannot write request: {exc}", instance_id)
        line = self._read_line(proc, instance_id)
        return _parse_response(line, k, self.name, instance_id)

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
            self._proc = None


class HttpBackend:
    """HTTP endpoint accepting one protocol request per POST."""

    def __init__(self, url: str, name: str = "http", timeout: float = DEFAULT_TIMEOUT):
        self.url = url
        self.name = name
        self.timeout = timeout

    def generate(self, input: ModelInput, k: int, instance_id: str = "") -> list[CandidatePatch]:
        request = {"id": instance_id, "input_tokens": list(input.tokens), "k": k}
        data = json.dumps(request).encode("utf-8")
        req = urllib.request.Request(self.url, data=data, headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                body = resp.read().decode("utf-8")
        except (urllib.error.URLError, OSError) as exc:
            raise GeneratorError(f"{self.name}: request failed: {exc}", instance_id)
        return _parse_response(body, k, self.name, instance_id)

    def close(self) -> None:
        pass


def _parse_response(body: str, k: int, name: str, instance_id: str) -> list[CandidatePatch]:
    try:
        obj = json.loads(body)
    except json.JSONDecodeError as exc:
        raise GeneratorError(f"{name}: invalid response JSON: {exc}", instance_id)
    if not isinstance(obj, dict):
        raise GeneratorError(f"{name}: response is not an object", instance_id)
    if obj.get("error"):
        raise GeneratorError(f"{name}: backend error: {obj['error']}", instance_id)
    if obj.get("id") != instance_id:
        raise GeneratorError(f"{name}: response id {obj.get('id')!r} != request id {instance_id!r}", instance_id)
    candidates = obj.get("candidates")
    if not isinstance(candidates, list):
        raise GeneratorError(f"{name}: missing candidates list", instance_id)
    return check_candidates(candidates, k, name, instance_id)


def make_generator(spec: GeneratorSpec):
    if spec.kind == "identity":
        return IdentityGenerator(spec.name)
    if spec.kind == "replay":
        return ReplayGenerator(spec.table, spec.name)
    if spec.kind == "mutate":
        return MutateGenerator(spec.rules, spec.name)
    if spec.kind == "external":
        if spec.command:
            return CommandBackend(spec.command, spec.name, spec.timeout)
        if spec.url:
            return HttpBackend(spec.url, spec.name, spec.timeout)
        raise ValueError("external spec needs a command or url")
    raise ValueError(f"unknown generator kind {spec.kind!r}")


def generate(spec: GeneratorSpec, input: ModelInput, k: int = DEFAULT_K, instance_id: str = "") -> list[CandidatePatch]:
    """One-shot convenience wrapper around :func:`make_generator`."""
    if k < 1:
        raise ValueError("k must be >= 1")
    gen = make_generator(spec)
    try:
        return gen.generate(input, k, instance_id)
    finally:
        gen.close()
