"""Unaltered-patch filtering and generator-ensemble composition.

A candidate token-identical to the input buggy statement (an unaltered
patch) can never be the human-written fix, because valid corpus instances
guarantee buggy != fixed. The filter drops such candidates without ground
truth and routes affected bugs to the next generator.

Two policies:

* ``refill`` (default): keep generator 1's candidates minus unaltered and
  duplicate entries; if anything was dropped, append the next generators'
  filtered candidates until the list reaches k. Fix@k never decreases
  versus generator 1 alone.
* ``route-bug``: if generator 1's rank-1 candidate is unaltered, the whole
  list is replaced by the next generator's filtered list, recursively.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from .encoder import ModelInput
from .evaluation import normalize
from .generators import CandidatePatch, GeneratorError, GeneratorSpec, make_generator

POLICIES = ("refill", "route-bug")


class Verdict(str, Enum):
    CORRECT = "CORRECT"
    UNALTERED = "UNALTERED"
    INCORRECT_OTHER = "INCORRECT_OTHER"
    OTHER = "OTHER"  # inference time: anything not unaltered


def classify_candidate(candidate, buggy: str, ground_truth: str | None = None) -> Verdict:
    """Unaltered/other at inference time; correct/unaltered/other with truth."""
    text = candidate.text if isinstance(candidate, CandidatePatch) else str(candidate)
    if normalize(text) == normalize(buggy):
        return Verdict.UNALTERED
    if ground_truth is None:
        return Verdict.OTHER
    if normalize(text) == normalize(ground_truth):
        return Verdict.CORRECT
    return Verdict.INCORRECT_OTHER


@dataclass
class FilteredCandidate:
    generator: str
    rank: int
    text: str
    reason: str  # unaltered | duplicate | routed


@dataclass
class BugOutcome:
    bug_id: str
    final: list[CandidatePatch] = field(default_factory=list)
    consulted: list[str] = field(default_factory=list)
    filtered: list[FilteredCandidate] = field(default_factory=list)
    error: str | None = None


@dataclass
class EnsembleResult:
    policy: str
    k: int
    outcomes: dict[str, BugOutcome] = field(default_factory=dict)

    def candidates_by_bug(self) -> dict[str, list[str]]:
        return {bug_id: [c.text for c in o.final] for bug_id, o in self.outcomes.items()}


class _LockedGenerator:
    """Serializes access to one backend connection across worker threads."""

    def __init__(self, gen):
        self.gen = gen
        self.name = gen.name
        self._lock = threading.Lock()

    def generate(self, input: ModelInput, k: int, instance_id: str):
        with self._lock:
            return self.gen.generate(input, k, instance_id)

    def close(self) -> None:
        self.gen.close()


def _refill(gens, input: ModelInput, k: int, outcome: BugOutcome) -> None:
    buggy_norm = normalize(input.buggy_text())
    kept: list[CandidatePatch] = []
    kept_norms: set[tuple[str, ...]] = set()

    def absorb(cands: list[CandidatePatch], cap: int | None) -> bool:
        dropped = False
        for c in cands:
            if cap is not None and len(kept) >= cap:
                break
            norm = normalize(c.text)
            if norm == buggy_norm:
                outcome.filtered.append(FilteredCandidate(c.generator, c.rank, c.text, "unaltered"))
                dropped = True
            elif norm in kept_norms:
                outcome.filtered.append(FilteredCandidate(c.generator, c.rank, c.text, "duplicate"))
                dropped = True
            else:
                kept.append(c)
                kept_norms.add(norm)
        return dropped

    first = gens[0]
    outcome.consulted.append(first.name)
    dropped_any = absorb(first.generate(input, k, outcome.bug_id), cap=None)
    if dropped_any:
        for gen in gens[1:]:
            if len(kept) >= k:
                break
            outcome.consulted.append(gen.name)
            absorb(gen.generate(input, k, outcome.bug_id), cap=k)
    outcome.final = [
        CandidatePatch(rank=i, text=c.text, score=c.score, generator=c.generator)
        for i, c in enumerate(kept[:k], start=1)
    ]


def _route_bug(gens, input: ModelInput, k: int, outcome: BugOutcome) -> None:
    buggy_norm = normalize(input.buggy_text())
    chosen: list[CandidatePatch] = []
    for idx, gen in enumerate(gens):
        outcome.consulted.append(gen.name)
        cands = gen.generate(input, k, outcome.bug_id)
        rank1_unaltered = bool(cands) and normalize(cands[0].text) == buggy_norm
        if rank1_unaltered and idx + 1 < len(gens):
            outcome.filtered.append(FilteredCandidate(gen.name, 1, cands[0].text, "routed"))
            continue
        chosen = cands
        break
    kept: list[CandidatePatch] = []
    kept_norms: set[tuple[str, ...]] = set()
    for c in chosen:
        if len(kept) >= k:
            break
        norm = normalize(c.text)
        if norm == buggy_norm:
            outcome.filtered.append(FilteredCandidate(c.generator, c.rank, c.text, "unaltered"))
        elif norm in kept_norms:
            outcome.filtered.append(FilteredCandidate(c.generator, c.rank, c.text, "duplicate"))
        else:
            kept.append(c)
            kept_norms.add(norm)
    outcome.final = [
        CandidatePatch(rank=i, text=c.text, score=c.score, generator=c.generator)
        for i, c in enumerate(kept, start=1)
    ]


def run_pipeline(
    generators,
    inputs: dict[str, ModelInput],
    k: int = 10,
    policy: str = "refill",
    workers: int = 1,
) -> EnsembleResult:
    """Run the ordered generator sequence over encoded inputs.

    ``generators`` is a sequence of GeneratorSpec or ready generator
    objects. A generator error marks the bug unprocessed (empty final
    list, error recorded); the pipeline continues with the other bugs.
    """
    if not generators:
        raise ValueError("at least one generator required")
    if k < 1:
        raise ValueError("k must be >= 1")
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r} (choose from {POLICIES})")

    gens = [
        _LockedGenerator(make_generator(g) if isinstance(g, GeneratorSpec) else g)
        for g in generators
    ]
    result = EnsembleResult(policy=policy, k=k)

    def process(bug_id: str) -> BugOutcome:
        outcome = BugOutcome(bug_id=bug_id)
        try:
            if policy == "refill":
                _refill(gens, inputs[bug_id], k, outcome)
            else:
                _route_bug(gens, inputs[bug_id], k, outcome)
        except GeneratorError as exc:
            outcome.final = []
            outcome.error = str(exc)
        return outcome

    bug_ids = sorted(inputs)
    try:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(process, bug_ids))
        else:
            outcomes = [process(b) for b in bug_ids]
    finally:
        for g in gens:
            g.close()
    for outcome in outcomes:
        result.outcomes[outcome.bug_id] = outcome
    return result


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def outcome_to_dict(o: BugOutcome) -> dict:
    return {
        "id": o.bug_id,
        "final": [
            {"rank": c.rank, "text": c.text, "score": c.score, "generator": c.generator}
            for c in o.final
        ],
        "consulted": o.consulted,
        "filtered": [
            {"generator": f.generator, "rank": f.rank, "text": f.text, "reason": f.reason}
            for f in o.filtered
        ],
        "error": o.error,
    }


def outcome_from_dict(d: dict) -> BugOutcome:
    return BugOutcome(
        bug_id=d["id"],
        final=[
            CandidatePatch(rank=c["rank"], text=c["text"], score=c["score"], generator=c["generator"])
            for c in d.get("final", [])
        ],
        consulted=list(d.get("consulted", [])),
        filtered=[
            FilteredCandidate(f["generator"], f["rank"], f["text"], f["reason"])
            for f in d.get("filtered", [])
        ],
        error=d.get("error"),
    )
