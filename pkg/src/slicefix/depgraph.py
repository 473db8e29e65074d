"""Control-flow and dependence graphs for one parsed method.

Nodes are statement ids plus the synthetic ENTRY/EXIT markers. Control
dependence follows the classic postdominance formulation restricted to
branch-labeled (true/false) CFG edges; data dependence is a standard
reaching-definitions fixpoint with kills on redefinition, parameters acting
as definitions at ENTRY. Loop-carried dependencies are included. try/catch
is modeled as sequential flow plus an exceptional edge from every try-body
statement to each catch head.
"""

from __future__ import annotations

from dataclasses import dataclass

from .frontend import (
    IfItem,
    IngredientSet,
    LoopItem,
    MethodAst,
    StatementKind,
    StmtItem,
    TryItem,
    collect_ingredients,
)

ENTRY = -1
EXIT = -2

CfgEdge = tuple[int, int, "str | None"]
PdgEdge = tuple[int, int, str, "str | None"]

BRANCH_LABELS = ("true", "false")


class StructuralError(Exception):
    """The graph violates a structural invariant (e.g. EXIT unreachable)."""


@dataclass(frozen=True)
class Cfg:
    nodes: frozenset[int]
    edges: frozenset[CfgEdge]

    def successors(self, n: int) -> list[tuple[int, str | None]]:
        return sorted(
            ((dst, label) for src, dst, label in self.edges if src == n),
            key=lambda e: (e[0], str(e[1])),
        )

    def predecessors(self, n: int) -> list[tuple[int, str | None]]:
        return sorted(
            ((src, label) for src, dst, label in self.edges if dst == n),
            key=lambda e: (e[0], str(e[1])),
        )


@dataclass(frozen=True)
class Pdg:
    nodes: frozenset[int]
    edges: frozenset[PdgEdge]

    def predecessors(self, n: int) -> list[int]:
        return sorted({src for src, dst, _, _ in self.edges if dst == n})

    def successors(self, n: int) -> list[int]:
        return sorted({dst for src, dst, _, _ in self.edges if src == n})


# --------------------------------------------------------------------------
# CFG
# --------------------------------------------------------------------------


def _subtree_nodes(items: list) -> list[int]:
    out: list[int] = []
    for item in items:
        if isinstance(item, StmtItem):
            out.append(item.stmt.sid)
        elif isinstance(item, IfItem):
            out.append(item.predicate.sid)
            out.extend(_subtree_nodes(item.then_items))
            out.extend(_subtree_nodes(item.else_items))
        elif isinstance(item, LoopItem):
            out.append(item.head.sid)
            out.extend(_subtree_nodes(item.body))
        elif isinstance(item, TryItem):
            out.extend(_subtree_nodes(item.try_body))
            for head, body in item.catches:
                out.append(head.sid)
                out.extend(_subtree_nodes(body))
            out.extend(_subtree_nodes(item.finally_body))
    return out


def _reachable(edge_map: dict[int, list[int]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for s in edge_map.get(n, []):
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return seen


def build_cfg(m: MethodAst) -> Cfg:
    edges: set[CfgEdge] = set()
    nodes = {s.sid for s in m.statements if s.is_graph_node}

    def connect(incoming: list[tuple[int, str | None]], dst: int) -> None:
        for src, label in incoming:
            edges.add((src, dst, label))

    def wire_seq(items: list, incoming: list[tuple[int, str | None]]) -> list[tuple[int, str | None]]:
        cur = incoming
        for item in items:
            cur = wire_item(item, cur)
        return cur

    def wire_item(item, incoming: list[tuple[int, str | None]]) -> list[tuple[int, str | None]]:
        if isinstance(item, StmtItem):
            sid = item.stmt.sid
            connect(incoming, sid)
            if item.stmt.kind in (StatementKind.RETURN, StatementKind.THROW):
                edges.add((sid, EXIT, None))
                return []
            return [(sid, None)]
        if isinstance(item, IfItem):
            p = item.predicate.sid
            connect(incoming, p)
            out = wire_seq(item.then_items, [(p, "true")])
            if item.else_items:
                out = out + wire_seq(item.else_items, [(p, "false")])
            else:
                out = out + [(p, "false")]
            return out
        if isinstance(item, LoopItem):
            h = item.head.sid
            connect(incoming, h)
            back = wire_seq(item.body, [(h, "true")])
            connect(back, h)
            return [(h, "false")]
        if isinstance(item, TryItem):
            cur = wire_seq(item.try_body, incoming)
            try_nodes = _subtree_nodes(item.try_body)
            for head, body in item.catches:
                c = head.sid
                connect(cur, c)
                for t in try_nodes:
                    edges.add((t, c, "exc"))
                cur = wire_seq(body, [(c, None)])
            cur = wire_seq(item.finally_body, cur)
            return cur
        raise TypeError(f"unknown item {item!r}")

    out = wire_seq(m.body, [(ENTRY, None)])
    connect(out, EXIT)

    all_nodes = nodes | {ENTRY, EXIT}
    fwd: dict[int, list[int]] = {}
    rev: dict[int, list[int]] = {}
    for src, dst, _ in edges:
        fwd.setdefault(src, []).append(dst)
        rev.setdefault(dst, []).append(src)

    # Dead code (e.g. statements after a return) gets a synthetic entry edge
    # so that every node stays reachable; infinite loops keep a syntactic
    # false exit edge, but guard EXIT reachability the same way.
    while True:
        missing = sorted(all_nodes - _reachable(fwd, ENTRY))
        if not missing:
            break
        edges.add((ENTRY, missing[0], None))
        fwd.setdefault(ENTRY, []).append(missing[0])
    while True:
        missing = sorted(all_nodes - _reachable(rev, EXIT))
        if not missing:
            break
        edges.add((missing[0], EXIT, None))
        rev.setdefault(EXIT, []).append(missing[0])

    return Cfg(nodes=frozenset(all_nodes), edges=frozenset(edges))


# --------------------------------------------------------------------------
# Postdominators and control dependence
# --------------------------------------------------------------------------


def postdominator_sets(g: Cfg) -> dict[int, frozenset[int]]:
    """Fixpoint postdominator sets over the reverse CFG."""
    nodes = sorted(g.nodes)
    succ = {n: [d for d, _ in g.successors(n)] for n in nodes}
    for n in nodes:
        if n != EXIT and not succ[n]:
            raise StructuralError(f"node {n} cannot reach EXIT")
    full = frozenset(nodes)
    pdom: dict[int, frozenset[int]] = {n: full for n in nodes}
    pdom[EXIT] = frozenset({EXIT})
    changed = True
    while changed:
        changed = False
        for n in nodes:
            if n == EXIT:
                continue
            inter: frozenset[int] | None = None
            for s in succ[n]:
                inter = pdom[s] if inter is None else inter & pdom[s]
            new = frozenset({n}) | (inter or frozenset())
            if new != pdom[n]:
                pdom[n] = new
                changed = True
    for n in nodes:
        if n != EXIT and EXIT not in pdom[n]:
            raise StructuralError(f"EXIT unreachable from node {n}")
    return pdom


def postdominators(g: Cfg) -> dict[int, int]:
    """Immediate postdominator of every node except EXIT."""
    pdom = postdominator_sets(g)
    ipdom: dict[int, int] = {}
    for n in sorted(g.nodes):
        if n == EXIT:
            continue
        candidates = sorted(pdom[n] - {n}, key=lambda c: (-len(pdom[c]), c))
        if not candidates:
            raise StructuralError(f"node {n} has no postdominator")
        best = candidates[0]
        # The strict postdominators of a node form a chain; the closest one
        # is the candidate with the largest own postdominator set.
        if len(candidates) > 1 and len(pdom[candidates[1]]) == len(pdom[best]):
            raise StructuralError(f"ambiguous immediate postdominator for {n}")
        ipdom[n] = best
    return ipdom


def build_cdg(g: Cfg) -> frozenset[PdgEdge]:
    """Control edges per the postdominance definition over branch edges."""
    pdom = postdominator_sets(g)
    stmt_nodes = sorted(g.nodes - {ENTRY, EXIT})
    edges: set[PdgEdge] = set()
    for src, dst, label in g.edges:
        if label not in BRANCH_LABELS:
            continue
        for y in stmt_nodes:
            if y in pdom[dst] and not (y != src and y in pdom[src]):
                edges.add((src, y, "control", label))
    with_parent = {dst for _, dst, _, _ in edges}
    for y in stmt_nodes:
        if y not in with_parent:
            edges.add((ENTRY, y, "control", None))
    return frozenset(edges)


# --------------------------------------------------------------------------
# Data dependence
# --------------------------------------------------------------------------


def ingredient_map(m: MethodAst) -> dict[int, IngredientSet]:
    return {s.sid: collect_ingredients(s) for s in m.statements if s.is_graph_node}


def build_ddg(m: MethodAst, g: Cfg) -> frozenset[PdgEdge]:
    """Data edges from a reaching-definitions fixpoint (worklist form)."""
    ing = ingredient_map(m)
    gen: dict[int, frozenset[tuple[int, str]]] = {
        n: frozenset((n, v) for v in ing[n].vars_defined) for n in ing
    }
    gen[ENTRY] = frozenset((ENTRY, name) for name, _ in m.params)
    gen[EXIT] = frozenset()
    defined_vars = {n: {v for _, v in gen[n]} for n in gen}

    preds = {n: [p for p, _ in g.predecessors(n)] for n in g.nodes}
    out: dict[int, frozenset[tuple[int, str]]] = {n: frozenset() for n in g.nodes}
    work = sorted(g.nodes)
    while work:
        n = work.pop(0)
        incoming: set[tuple[int, str]] = set()
        for p in preds[n]:
            incoming |= out[p]
        survives = frozenset(d for d in incoming if d[1] not in defined_vars.get(n, set()))
        new_out = gen.get(n, frozenset()) | survives
        if new_out != out[n]:
            out[n] = new_out
            for s, _ in g.successors(n):
                if s not in work:
                    work.append(s)

    edges: set[PdgEdge] = set()
    for n in sorted(g.nodes - {ENTRY, EXIT}):
        incoming = set()
        for p in preds[n]:
            incoming |= out[p]
        uses = ing[n].vars_used
        for d, v in incoming:
            if v in uses:
                edges.add((d, n, "data", v))
    return frozenset(edges)


def build_pdg(m: MethodAst) -> Pdg:
    """Union of control and data dependence over the method's CFG."""
    g = build_cfg(m)
    edges = build_cdg(g) | build_ddg(m, g)
    return Pdg(nodes=frozenset(g.nodes - {ENTRY, EXIT}), edges=edges)


# --------------------------------------------------------------------------
# Dumps
# --------------------------------------------------------------------------


def _node_label(m: MethodAst, n: int) -> str:
    if n == ENTRY:
        return "ENTRY"
    if n == EXIT:
        return "EXIT"
    s = m.statement(n)
    return f"S{n}: {s.text}"


def cfg_to_dot(m: MethodAst, g: Cfg) -> str:
    lines = ["digraph cfg {"]
    for n in sorted(g.nodes):
        lines.append(f'  n{n & 0xFFFF} [label="{_node_label(m, n)}"];')
    for src, dst, label in sorted(g.edges, key=lambda e: (e[0], e[1], str(e[2]))):
        attr = f' [label="{label}"]' if label else ""
        lines.append(f"  n{src & 0xFFFF} -> n{dst & 0xFFFF}{attr};")
    lines.append("}")
    return "\n".join(lines)


def pdg_to_dot(m: MethodAst, pdg: Pdg) -> str:
    # Dashed arrows for data flow, solid for control.
    lines = ["digraph pdg {"]
    nodes = sorted({ENTRY} | set(pdg.nodes))
    for n in nodes:
        lines.append(f'  n{n & 0xFFFF} [label="{_node_label(m, n)}"];')
    for src, dst, kind, label in sorted(pdg.edges, key=lambda e: (e[0], e[1], e[2], str(e[3]))):
        style = "dashed" if kind == "data" else "solid"
        attr = f', label="{label}"' if label else ""
        lines.append(f'  n{src & 0xFFFF} -> n{dst & 0xFFFF} [style={style}{attr}];')
    lines.append("}")
    return "\n".join(lines)


def pdg_to_json(m: MethodAst, pdg: Pdg) -> dict:
    return {
        "nodes": [
            {"sid": n, "line": m.statement(n).line, "text": m.statement(n).text}
            for n in sorted(pdg.nodes)
        ],
        "edges": [
            {"src": src, "dst": dst, "kind": kind, "label": label}
            for src, dst, kind, label in sorted(pdg.edges, key=lambda e: (e[0], e[1], e[2], str(e[3])))
        ],
    }
