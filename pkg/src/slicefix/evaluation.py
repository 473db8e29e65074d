"""Exact-match assessment, Fix@k, bug-type classification, and overlap.

A candidate is "identical" to the human-written patch under token
normalization: lexical tokens with all inter-token whitespace collapsed,
case preserved. Raw-text equality is exposed as a stricter flag.

Bug types follow the Simple Delete / Simple Insert / Simple Replace /
Mixed taxonomy over a minimal token-level edit script. Ties between
equal-cost scripts are broken deterministically: keep > replace > delete >
insert, scanning left to right, which prefers replacements over
insert+delete pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .lexer import tokenize


def normalize(text: str) -> tuple[str, ...]:
    """Lexical tokens of a single line, whitespace-insensitive."""
    return tuple(tokenize(text, strict=False))


def exact_match(candidate: str, ground_truth: str, raw: bool = False) -> bool:
    if raw:
        return candidate == ground_truth
    return normalize(candidate) == normalize(ground_truth)


def fix_at_k(candidates_by_bug: dict, truths: dict, k: int, raw: bool = False) -> float:
    """Fraction of bugs with an exact-match candidate among the top k.

    Bugs present in ``truths`` but absent from ``candidates_by_bug`` (e.g.
    unprocessed due to generator errors) count as unfixed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not truths:
        return 0.0
    fixed = 0
    for bug_id, truth in truths.items():
        top = list(candidates_by_bug.get(bug_id, []))[:k]
        if any(exact_match(c, truth, raw=raw) for c in top):
            fixed += 1
    return fixed / len(truths)


class BugType(str, Enum):
    SIMPLE_DELETE = "Simple Delete"
    SIMPLE_INSERT = "Simple Insert"
    SIMPLE_REPLACE = "Simple Replace"
    MIXED = "Mixed"


def edit_script(a: tuple[str, ...], b: tuple[str, ...]) -> list[tuple]:
    """One minimal token edit script a -> b.

    Ops are ("delete", i), ("insert", i, token), ("replace", i, token) with
    i indexing into ``a``. Deterministic per the module tie-break rule.
    """
    n, m = len(a), len(b)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][m] = n - i
    for j in range(m + 1):
        dist[n][j] = m - j
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                dist[i][j] = dist[i + 1][j + 1]
            else:
                dist[i][j] = 1 + min(dist[i + 1][j + 1], dist[i + 1][j], dist[i][j + 1])
    ops: list[tuple] = []
    i = j = 0
    while i < n or j < m:
        if i < n and j < m and a[i] == b[j] and dist[i][j] == dist[i + 1][j + 1]:
            i += 1
            j += 1
        elif i < n and j < m and dist[i][j] == 1 + dist[i + 1][j + 1]:
            ops.append(("replace", i, b[j]))
            i += 1
            j += 1
        elif i < n and dist[i][j] == 1 + dist[i + 1][j]:
            ops.append(("delete", i))
            i += 1
        else:
            ops.append(("insert", i, b[j]))
            j += 1
    return ops


def classify_bug_type(buggy: str, fixed: str) -> BugType:
    a = normalize(buggy)
    b = normalize(fixed)
    if a == b:
        raise ValueError("buggy and fixed lines are token-identical")
    kinds = {op[0] for op in edit_script(a, b)}
    if kinds == {"delete"}:
        return BugType.SIMPLE_DELETE
    if kinds == {"insert"}:
        return BugType.SIMPLE_INSERT
    if kinds == {"replace"}:
        return BugType.SIMPLE_REPLACE
    return BugType.MIXED


def overlap_matrix(correct_sets: dict) -> tuple[dict, dict]:
    """Pairwise overlap ratios and unique-fix counts.

    ratio[(i, j)] = |CPi ∩ CPj| / |CPi| (0 when CPi empty);
    unique[i] = |CPi minus the union of every other model's set|.
    """
    if not correct_sets:
        raise ValueError("at least one model required")
    models = list(correct_sets)
    ratios: dict[tuple[str, str], float] = {}
    uniques: dict[str, int] = {}
    for i in models:
        cpi = set(correct_sets[i])
        for j in models:
            inter = cpi & set(correct_sets[j])
            ratios[(i, j)] = (len(inter) / len(cpi)) if cpi else 0.0
        others: set = set()
        for j in models:
            if j != i:
                others |= set(correct_sets[j])
        uniques[i] = len(cpi - others)
    return ratios, uniques


@dataclass
class EvalReport:
    models: list[str]
    total_bugs: int
    correct_sets: dict = field(default_factory=dict)  # model -> sorted bug ids
    fix_at_k: dict = field(default_factory=dict)  # model -> {k: rate}
    bug_types: dict = field(default_factory=dict)  # model -> {type: count}
    bug_type_totals: dict = field(default_factory=dict)  # type -> corpus count
    overlap: dict = field(default_factory=dict)  # model -> {model: ratio}
    unique_fixes: dict = field(default_factory=dict)  # model -> count

    def to_json_dict(self) -> dict:
        return {
            "models": self.models,
            "total_bugs": self.total_bugs,
            "correct_sets": {m: sorted(v) for m, v in self.correct_sets.items()},
            "fix_at_k": {m: {str(k): v for k, v in table.items()} for m, table in self.fix_at_k.items()},
            "bug_types": self.bug_types,
            "bug_type_totals": self.bug_type_totals,
            "overlap": self.overlap,
            "unique_fixes": self.unique_fixes,
        }


def build_report(
    candidates_by_model: dict,
    truths: dict,
    buggy_by_bug: dict,
    max_k: int = 10,
    raw: bool = False,
) -> EvalReport:
    """Assemble the full report for one or more named candidate sets.

    ``candidates_by_model`` maps model name -> {bug id -> ordered candidate
    texts}; ``truths``/``buggy_by_bug`` map bug id -> line text.
    """
    models = list(candidates_by_model)
    report = EvalReport(models=models, total_bugs=len(truths))

    type_of: dict[str, BugType] = {}
    for bug_id, truth in truths.items():
        buggy = buggy_by_bug.get(bug_id)
        if buggy is not None and normalize(buggy) != normalize(truth):
            type_of[bug_id] = classify_bug_type(buggy, truth)
    totals: dict[str, int] = {t.value: 0 for t in BugType}
    for t in type_of.values():
        totals[t.value] += 1
    report.bug_type_totals = totals

    for model in models:
        cands = candidates_by_model[model]
        correct = {
            bug_id
            for bug_id, truth in truths.items()
            if any(exact_match(c, truth, raw=raw) for c in cands.get(bug_id, []))
        }
        report.correct_sets[model] = sorted(correct)
        report.fix_at_k[model] = {k: fix_at_k(cands, truths, k, raw=raw) for k in range(1, max_k + 1)}
        per_type = {t.value: 0 for t in BugType}
        for bug_id in correct:
            t = type_of.get(bug_id)
            if t is not None:
                per_type[t.value] += 1
        report.bug_types[model] = per_type

    ratios, uniques = overlap_matrix({m: set(v) for m, v in report.correct_sets.items()})
    report.overlap = {i: {j: ratios[(i, j)] for j in models} for i in models}
    report.unique_fixes = uniques
    return report


def render_markdown(report: EvalReport) -> str:
    lines = ["# Evaluation report", ""]
    lines.append(f"Total bugs: {report.total_bugs}")
    lines.append("")
    lines.append("## Correct patches")
    lines.append("")
    lines.append("| Model | Correct |")
    lines.append("| --- | ---: |")
    for m in report.models:
        lines.append(f"| {m} | {len(report.correct_sets[m])} |")
    lines.append("")
    lines.append("## Fix@k")
    lines.append("")
    ks = sorted(next(iter(report.fix_at_k.values())).keys()) if report.fix_at_k else []
    header = "| Model | " + " | ".join(f"Fix@{k}" for k in ks) + " |"
    lines.append(header)
    lines.append("| --- |" + " ---: |" * len(ks))
    for m in report.models:
        row = " | ".join(f"{report.fix_at_k[m][k] * 100:.2f}%" for k in ks)
        lines.append(f"| {m} | {row} |")
    lines.append("")
    lines.append("## Bug types")
    lines.append("")
    type_names = [t.value for t in BugType]
    lines.append("| Model | " + " | ".join(type_names) + " |")
    lines.append("| --- |" + " ---: |" * len(type_names))
    totals_row = " | ".join(str(report.bug_type_totals.get(t, 0)) for t in type_names)
    lines.append(f"| (corpus) | {totals_row} |")
    for m in report.models:
        row = " | ".join(str(report.bug_types[m].get(t, 0)) for t in type_names)
        lines.append(f"| {m} | {row} |")
    lines.append("")
    lines.append("## Overlap (row ∩ column / row) and unique fixes")
    lines.append("")
    lines.append("| Model | " + " | ".join(report.models) + " | Unique |")
    lines.append("| --- |" + " ---: |" * (len(report.models) + 1))
    for i in report.models:
        cells = " | ".join(f"{report.overlap[i][j] * 100:.0f}%" for j in report.models)
        lines.append(f"| {i} | {cells} | {report.unique_fixes[i]} |")
    lines.append("")
    return "\n".join(lines)
