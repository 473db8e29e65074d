"""Deterministic random method generator for the oracle suites.

Produces parseable methods in the grammar subset mixing straight-line
code, if/else, and while loops, with a bounded statement-node count and no
dead code (returns only appear as the final statement of the method).
"""

from __future__ import annotations

import random

VARS = ("a", "b", "c", "d")


def _expr(rng: random.Random, available: list[str]) -> str:
    choices: list[str] = [str(rng.randint(0, 9))]
    if available:
        v = rng.choice(available)
        w = rng.choice(available)
        choices += [v, f"{v} + {w}", f"{v} * 2", f"{v} - {rng.randint(1, 3)}"]
        if rng.random() < 0.2:
            choices.append(f"g ( {v} )")
    return rng.choice(choices)


def _cond(rng: random.Random, available: list[str]) -> str:
    if available:
        v = rng.choice(available)
        w = rng.choice(available)
        op = rng.choice(("<", ">", "==", "!=", "<=", ">="))
        return f"{v} {op} {w}" if rng.random() < 0.7 else f"{v} {op} {rng.randint(0, 5)}"
    return "1 < 2"


def _gen_block(rng: random.Random, budget: list[int], declared: set[str], depth: int) -> list[str]:
    lines: list[str] = []
    while budget[0] > 0 and rng.random() < (0.8 if not lines else 0.6):
        undeclared = [v for v in VARS if v not in declared]
        available = sorted(declared)
        kinds = ["assign", "call"]
        if undeclared:
            kinds += ["decl", "decl"]
        if depth < 2 and budget[0] >= 2:
            kinds += ["if", "while"]
        kind = rng.choice(kinds)
        if kind == "decl":
            v = rng.choice(undeclared)
            lines.append(f"int {v} = {_expr(rng, available)} ;")
            declared.add(v)
            budget[0] -= 1
        elif kind == "assign":
            if not available:
                continue
            v = rng.choice(available)
            if rng.random() < 0.2:
                lines.append(f"{v} += {_expr(rng, available)} ;")
            else:
                lines.append(f"{v} = {_expr(rng, available)} ;")
            budget[0] -= 1
        elif kind == "call":
            lines.append(f"use ( {_expr(rng, available)} ) ;")
            budget[0] -= 1
        elif kind == "if":
            budget[0] -= 1
            then_block = _gen_block(rng, budget, declared, depth + 1)
            lines.append(f"if ( {_cond(rng, available)} ) {{")
            lines.extend(then_block or ["use ( 0 ) ;"])
            if not then_block:
                budget[0] -= 1
            if rng.random() < 0.5 and budget[0] > 0:
                else_block = _gen_block(rng, budget, declared, depth + 1)
                if else_block:
                    lines.append("} else {")
                    lines.extend(else_block)
            lines.append("}")
        elif kind == "while":
            budget[0] -= 1
            body = _gen_block(rng, budget, declared, depth + 1)
            lines.append(f"while ( {_cond(rng, available)} ) {{")
            lines.extend(body or ["use ( 1 ) ;"])
            if not body:
                budget[0] -= 1
            lines.append("}")
    return lines


def gen_method(rng: random.Random, max_stmts: int = 10) -> str:
    params = [v for v in VARS if rng.random() < 0.4]
    declared = set(params)
    budget = [rng.randint(1, max_stmts - 1)]
    body = _gen_block(rng, budget, declared, depth=0)
    if not body:
        body = [f"int {VARS[0] if VARS[0] not in declared else 'z'} = 1 ;"]
    if rng.random() < 0.6:
        available = sorted(declared)
        body.append(f"return {_expr(rng, available)} ;")
    param_text = " , ".join(f"int {p}" for p in params)
    sig = f"int f ( {param_text} ) {{" if params else "int f ( ) {"
    return "\n".join([sig, *body, "}"])


def gen_corpus(seed: int, count: int, max_stmts: int = 10) -> list[str]:
    rng = random.Random(seed)
    return [gen_method(rng, max_stmts) for _ in range(count)]
