"""Dependency-context extraction around a buggy statement.

The context is the bidirectional transitive closure over both control and
data dependence edges from the buggy node (synthetic ENTRY/EXIT filtered),
plus every public field or public method signature of the enclosing class
whose name matches an ingredient occurring in the buggy statement or its
sliced context.
"""

from __future__ import annotations

from dataclasses import dataclass

from .depgraph import ENTRY, EXIT, Pdg
from .frontend import ClassContext, MethodAst, Statement, collect_ingredients


class UnknownNodeError(KeyError):
    pass


@dataclass(frozen=True)
class GlobalItem:
    kind: str  # "field" | "method"
    name: str
    text: str


@dataclass
class SliceContext:
    buggy: Statement
    intra: list[Statement]  # source order, buggy excluded
    global_items: list[GlobalItem]  # class declaration order


def _closure(pdg: Pdg, start: int, forward: bool) -> set[int]:
    step = pdg.successors if forward else pdg.predecessors
    seen: set[int] = set()
    stack = [start]
    while stack:
        n = stack.pop()
        for nxt in step(n):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def bidirectional_slice(pdg: Pdg, n: int) -> set[int]:
    """Transitive dependence predecessors and successors of ``n``.

    ``n`` itself is excluded from the returned set; synthetic nodes never
    appear.
    """
    if n not in pdg.nodes:
        raise UnknownNodeError(f"statement {n} is not a graph node")
    reached = _closure(pdg, n, forward=False) | _closure(pdg, n, forward=True)
    return {s for s in reached if s != n and s not in (ENTRY, EXIT)}


def extract_dependency_context(
    pdg: Pdg, m: MethodAst, cc: ClassContext, buggy: int
) -> SliceContext:
    buggy_stmt = m.statement(buggy)
    sids = bidirectional_slice(pdg, buggy)
    intra = sorted((m.statement(s) for s in sids), key=lambda s: s.line)

    used: set[str] = set()
    called: set[tuple[str, int]] = set()
    for stmt in [buggy_stmt, *intra]:
        ing = collect_ingredients(stmt)
        used |= ing.vars_used
        called |= ing.invocations

    items: list[tuple[int, GlobalItem]] = []
    for f in cc.public_fields:
        if f.name in used:
            items.append((f.span, GlobalItem("field", f.name, f.text)))
    for s in cc.public_method_signatures:
        if (s.name, s.arity) in called:
            items.append((s.span, GlobalItem("method", s.name, s.text)))
    items.sort(key=lambda pair: pair[0])
    return SliceContext(buggy=buggy_stmt, intra=intra, global_items=[g for _, g in items])


def context_to_dict(sc: SliceContext) -> dict:
    return {
        "buggy": {"line": sc.buggy.line, "text": sc.buggy.text},
        "intra": [{"line": s.line, "text": s.text} for s in sc.intra],
        "global": [{"kind": g.kind, "name": g.name, "text": g.text} for g in sc.global_items],
    }


def _plain_statement(line: int, text: str) -> Statement:
    from .frontend import StatementKind

    return Statement(sid=line, line=line, text=text, kind=StatementKind.EXPRESSION, tokens=tuple(text.split()))


def context_from_dict(d: dict) -> SliceContext:
    """Rebuild enough of a SliceContext for encoding from its JSON form."""
    return SliceContext(
        buggy=_plain_statement(d["buggy"]["line"], d["buggy"]["text"]),
        intra=[_plain_statement(s["line"], s["text"]) for s in d.get("intra", [])],
        global_items=[GlobalItem(g["kind"], g["name"], g["text"]) for g in d.get("global", [])],
    )
