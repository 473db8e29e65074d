"""Ingestion, validation, and repo-disjoint splitting of bug corpora.

On-disk format is JSON Lines: one object per line with keys ``id``,
``repo``, ``class_source``, ``method_source``, ``buggy_line``,
``fixed_line``, ``benchmark``. Method (and class) text is canonicalized to
the one-statement-per-line form on ingestion; ``buggy_line`` is a 0-based
physical line index into that normalized method text, so producers should
store methods already normalized (ingestion is idempotent either way).
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .evaluation import normalize
from .frontend import normalize_source

KNOWN_BENCHMARKS = ("BFP", "Bugs.jar", "Defects4J", "Bears", "QuixBugs")

SUPPORTED_FORMATS = ("jsonl",)


@dataclass(frozen=True)
class BugInstance:
    id: str
    repo: str
    class_source: str | None
    method_source: str
    buggy_line: int
    fixed_line: str
    benchmark: str = "user"

    def buggy_text(self) -> str:
        return self.method_source.split("\n")[self.buggy_line]


@dataclass(frozen=True)
class ValidationIssue:
    record: int  # 0-based line number in the corpus file
    instance_id: str | None
    reason: str


@dataclass
class IngestResult:
    instances: list[BugInstance]
    rejected: list[ValidationIssue] = field(default_factory=list)


def _validate_record(obj: dict, record_no: int) -> BugInstance | ValidationIssue:
    instance_id = obj.get("id")
    for key in ("id", "repo", "method_source", "buggy_line", "fixed_line"):
        if key not in obj:
            return ValidationIssue(record_no, instance_id, f"missing key {key!r}")
    if not isinstance(obj["buggy_line"], int):
        return ValidationIssue(record_no, instance_id, "buggy_line must be an integer")
    method = normalize_source(str(obj["method_source"]))
    lines = method.split("\n") if method else []
    buggy_line = obj["buggy_line"]
    if not (0 <= buggy_line < len(lines)):
        return ValidationIssue(
            record_no, instance_id, f"buggy_line {buggy_line} out of range (method has {len(lines)} lines)"
        )
    fixed = str(obj["fixed_line"])
    if normalize(lines[buggy_line]) == normalize(fixed):
        return ValidationIssue(record_no, instance_id, "fixed line is token-identical to the buggy line")
    class_source = obj.get("class_source")
    if class_source is not None:
        class_source = normalize_source(str(class_source)) or None
    return BugInstance(
        id=str(obj["id"]),
        repo=str(obj["repo"]),
        class_source=class_source,
        method_source=method,
        buggy_line=buggy_line,
        fixed_line=fixed,
        benchmark=str(obj.get("benchmark", "user")),
    )


def ingest(path: str | Path, format: str = "jsonl") -> IngestResult:
    """Load a corpus file, keeping valid instances and reporting the rest."""
    if format not in SUPPORTED_FORMATS:
        raise ValueError(f"unsupported corpus format {format!r} (supported: {SUPPORTED_FORMATS})")
    path = Path(path)
    result = IngestResult(instances=[])
    with path.open(encoding="utf-8") as fh:
        for record_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                result.rejected.append(ValidationIssue(record_no, None, f"invalid JSON: {exc}"))
                continue
            if not isinstance(obj, dict):
                result.rejected.append(ValidationIssue(record_no, None, "record is not an object"))
                continue
            outcome = _validate_record(obj, record_no)
            if isinstance(outcome, ValidationIssue):
                result.rejected.append(outcome)
            else:
                result.instances.append(outcome)
    return result


def write_corpus(instances: list[BugInstance], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(asdict(inst), sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# Repo-disjoint splitting
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusSplit:
    train: frozenset[str]
    valid: frozenset[str]
    test: frozenset[str]
    ratios: tuple[float, float, float]
    seed: int

    def sets(self) -> dict[str, frozenset[str]]:
        return {"train": self.train, "valid": self.valid, "test": self.test}


def split_by_repo(
    corpus: list[BugInstance], ratios: tuple[float, float, float], seed: int
) -> CorpusSplit:
    """Shuffle repositories with the seed, then greedily fill the most
    under-target split; every repository lands wholly in one split."""
    if not corpus:
        raise ValueError("corpus is empty")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    by_repo: dict[str, list[BugInstance]] = {}
    for inst in corpus:
        by_repo.setdefault(inst.repo, []).append(inst)
    nonzero = sum(1 for r in ratios if r > 0)
    if len(by_repo) < nonzero:
        raise ValueError(
            f"{len(by_repo)} repositories cannot fill {nonzero} nonzero splits without leakage"
        )
    total = len(corpus)
    names = ("train", "valid", "test")
    targets = {name: ratio * total for name, ratio in zip(names, ratios)}
    counts = {name: 0 for name in names}
    assignment: dict[str, set[str]] = {name: set() for name in names}

    repos = sorted(by_repo)
    random.Random(seed).shuffle(repos)
    for repo in repos:
        eligible = [n for n, r in zip(names, ratios) if r > 0]
        best = max(eligible, key=lambda n: (targets[n] - counts[n], -names.index(n)))
        assignment[best].add(repo)
        counts[best] += len(by_repo[repo])

    ids = {
        name: frozenset(inst.id for repo in assignment[name] for inst in by_repo[repo])
        for name in names
    }
    return CorpusSplit(
        train=ids["train"], valid=ids["valid"], test=ids["test"],
        ratios=tuple(ratios), seed=seed,
    )


def split_report(corpus: list[BugInstance], split: CorpusSplit, tolerance: float = 0.02) -> dict:
    """Achieved shares versus targets, with a tolerance verdict per split."""
    total = len(corpus)
    by_id = {inst.id: inst for inst in corpus}
    out: dict = {"total": total, "splits": {}, "within_tolerance": True}
    for name, ratio in zip(("train", "valid", "test"), split.ratios):
        ids = split.sets()[name]
        share = len(ids) / total if total else 0.0
        repos = sorted({by_id[i].repo for i in ids if i in by_id})
        ok = abs(share - ratio) <= tolerance
        out["splits"][name] = {
            "instances": len(ids),
            "share": share,
            "target": ratio,
            "repos": len(repos),
            "within_tolerance": ok,
        }
        if not ok:
            out["within_tolerance"] = False
    return out
