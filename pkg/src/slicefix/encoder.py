"""Consolidated single-sequence encoding of a slice context.

Grammar of the emitted token stream:

    <GLB> g* ( <SEP> g* )*  <CTX> c* ( <SEP> c* )*  <BOL> b+ <EOL>

where g/c/b are whitespace-granularity content tokens. One <SEP> follows
each global item and each context statement (an end-of-line marker), so a
single context statement encodes as ``<CTX> int a = 1 ; <SEP> <BOL> ...``.
Global items come first, then intra-procedural context statements in
source order, then the buggy statement. The buggy segment is never empty
and never truncated. Content tokens are escaped so they can never collide
with the markers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .slicer import SliceContext

GLB = "<GLB>"
CTX = "<CTX>"
BOL = "<BOL>"
EOL = "<EOL>"
SEP = "<SEP>"

MARKERS = frozenset({GLB, CTX, BOL, EOL, SEP})

DEFAULT_BUDGET = 512


class EncodingBudgetError(ValueError):
    """Budget cannot even hold the buggy statement plus markers."""


class MalformedInputError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at token {position}")
        self.position = position


def escape_token(tok: str) -> str:
    return tok.replace("\\", "\\\\").replace("<", "\\<")


def unescape_token(tok: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(tok):
        if tok[i] == "\\" and i + 1 < len(tok) and tok[i + 1] in ("\\", "<"):
            out.append(tok[i + 1])
            i += 2
        else:
            out.append(tok[i])
            i += 1
    return "".join(out)


def _content_tokens(text: str) -> list[str]:
    return [escape_token(t) for t in text.split()]


@dataclass(frozen=True)
class ModelInput:
    tokens: tuple[str, ...]
    parts: dict  # token-offset [start, end) per segment
    truncated: bool
    budget: int

    def buggy_text(self) -> str:
        start, end = self.parts["buggy"]
        return " ".join(unescape_token(t) for t in self.tokens[start:end])


def _assemble(globals_: list[list[str]], context: list[list[str]], buggy: list[str]) -> tuple[list[str], dict]:
    tokens: list[str] = [GLB]
    glb_start = len(tokens)
    for item in globals_:
        tokens.extend(item)
        tokens.append(SEP)
    glb_end = len(tokens)
    tokens.append(CTX)
    ctx_start = len(tokens)
    for item in context:
        tokens.extend(item)
        tokens.append(SEP)
    ctx_end = len(tokens)
    tokens.append(BOL)
    bol_start = len(tokens)
    tokens.extend(buggy)
    bol_end = len(tokens)
    tokens.append(EOL)
    parts = {
        "global": (glb_start, glb_end),
        "context": (ctx_start, ctx_end),
        "buggy": (bol_start, bol_end),
    }
    return tokens, parts


def encode_input(sc: SliceContext, budget: int = DEFAULT_BUDGET) -> ModelInput:
    """Encode a slice context, dropping whole items to honor the budget.

    Drop order: intra statements farthest from the buggy line first (ties
    drop the earlier statement), keeping at least one; then global items
    (last first); then the final intra statement. The buggy segment is
    never touched.
    """
    buggy_tokens = _content_tokens(sc.buggy.text)
    if not buggy_tokens:
        raise EncodingBudgetError("buggy statement has no tokens")
    if budget < len(buggy_tokens) + 4:
        raise EncodingBudgetError(
            f"budget {budget} cannot hold the buggy statement ({len(buggy_tokens)} tokens + 4 markers)"
        )

    buggy_line = sc.buggy.line
    context = [(s.line, _content_tokens(s.text)) for s in sorted(sc.intra, key=lambda s: s.line)]
    globals_ = [_content_tokens(g.text) for g in sc.global_items]

    def total() -> int:
        n = 4 + len(buggy_tokens)  # <GLB> <CTX> <BOL> <EOL>
        n += sum(len(t) + 1 for t in globals_)  # one trailing <SEP> per item
        n += sum(len(t) + 1 for _, t in context)
        return n

    truncated = False
    while total() > budget:
        truncated = True
        if len(context) > 1:
            # farthest line distance first; at equal distance the earlier
            # statement goes
            drop_at = max(
                range(len(context)),
                key=lambda i: (abs(context[i][0] - buggy_line), -context[i][0]),
            )
            context.pop(drop_at)
        elif globals_:
            globals_.pop()
        elif context:
            context.pop()
        else:  # pragma: no cover - excluded by the budget precondition
            raise EncodingBudgetError("cannot truncate below the buggy statement")

    tokens, parts = _assemble(globals_, [t for _, t in context], buggy_tokens)
    return ModelInput(tokens=tuple(tokens), parts=parts, truncated=truncated, budget=budget)


def input_to_dict(mi: ModelInput) -> dict:
    return {
        "tokens": list(mi.tokens),
        "parts": {k: list(v) for k, v in mi.parts.items()},
        "truncated": mi.truncated,
        "budget": mi.budget,
    }


def input_from_dict(d: dict) -> ModelInput:
    return ModelInput(
        tokens=tuple(d["tokens"]),
        parts={k: tuple(v) for k, v in d["parts"].items()},
        truncated=bool(d["truncated"]),
        budget=int(d["budget"]),
    )


def decode_parts(tokens: tuple[str, ...] | list[str]) -> tuple[list[str], list[str], str]:
    """Inverse of :func:`encode_input` on non-truncated inputs."""
    toks = list(tokens)
    if not toks or toks[0] != GLB:
        raise MalformedInputError(f"expected {GLB}", 0)

    positions: dict[str, int] = {}
    for marker in (GLB, CTX, BOL, EOL):
        found = [i for i, t in enumerate(toks) if t == marker]
        if not found:
            raise MalformedInputError(f"missing {marker}", len(toks))
        if len(found) > 1:
            raise MalformedInputError(f"repeated {marker}", found[1])
        positions[marker] = found[0]
    ctx_at, bol_at, eol_at = positions[CTX], positions[BOL], positions[EOL]
    if not (0 < ctx_at < bol_at < eol_at):
        raise MalformedInputError("markers out of order", min(ctx_at, bol_at, eol_at))
    if eol_at != len(toks) - 1:
        raise MalformedInputError(f"content after {EOL}", eol_at + 1)

    def split_items(region: list[str]) -> list[str]:
        if not region:
            return []
        items: list[list[str]] = [[]]
        for t in region:
            if t == SEP:
                items.append([])
            else:
                items[-1].append(t)
        # the canonical form carries one trailing <SEP> per item; tolerate
        # a missing final separator
        if items and not items[-1]:
            items.pop()
        return [" ".join(unescape_token(t) for t in item) for item in items]

    buggy_region = toks[bol_at + 1 : eol_at]
    if not buggy_region:
        raise MalformedInputError("empty buggy segment", bol_at + 1)
    if SEP in buggy_region:
        raise MalformedInputError(f"{SEP} inside buggy segment", bol_at + 1 + buggy_region.index(SEP))

    global_texts = split_items(toks[1:ctx_at])
    context_texts = split_items(toks[ctx_at + 1 : bol_at])
    buggy_text = " ".join(unescape_token(t) for t in buggy_region)
    return global_texts, context_texts, buggy_text
