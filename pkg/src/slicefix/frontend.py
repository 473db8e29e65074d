"""Statement-level parser for a documented Java-like subset.

The subset covers single-method bug instances: local declarations,
assignments (including compound operators and ++/--), expression and call
statements, braced if/else chains, while/for loops, return, throw, and
try/catch/finally treated as sequential blocks. Control bodies must be
braced. Anything else (lambdas, switch, anonymous classes, ...) raises
:class:`ParseFailure`; callers are expected to drop such instances.

Normalization produces the canonical one-statement-per-line text that line
indices refer to everywhere in the pipeline: every token separated by one
space, a line break after ``;`` (outside parentheses), after ``{``, and
around ``}`` except when it fuses with ``else``/``catch``/``finally``.
Normalization is idempotent and total; parsing is strict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from . import lexer
from .lexer import ASSIGNMENT_OPERATORS, MODIFIERS, is_identifier, tokenize


class ParseFailure(Exception):
    """Input outside the grammar subset; carries the offending line."""

    def __init__(self, message: str, line_no: int | None = None, line_text: str | None = None):
        detail = message
        if line_no is not None:
            detail += f" (line {line_no}: {line_text!r})"
        super().__init__(detail)
        self.line_no = line_no
        self.line_text = line_text


class StatementKind(str, Enum):
    DECLARATION = "declaration"
    ASSIGNMENT = "assignment"
    EXPRESSION = "expression"
    IF = "if"
    LOOP = "loop"
    RETURN = "return"
    THROW = "throw"
    BLOCK = "block"
    TRY = "try"


#: Kinds that always become dependence-graph nodes.
NODE_KINDS = frozenset(
    {
        StatementKind.DECLARATION,
        StatementKind.ASSIGNMENT,
        StatementKind.EXPRESSION,
        StatementKind.IF,
        StatementKind.LOOP,
        StatementKind.RETURN,
        StatementKind.THROW,
    }
)


@dataclass(frozen=True)
class Statement:
    """One line of the normalized method text."""

    sid: int
    line: int
    text: str
    kind: StatementKind
    tokens: tuple[str, ...]

    @property
    def is_graph_node(self) -> bool:
        # Catch heads carry the exception binding and receive exceptional
        # flow, so they are nodes; try/finally openers and braces are not.
        if self.kind in NODE_KINDS:
            return True
        return self.kind is StatementKind.TRY and "catch" in self.tokens[:2]


@dataclass(frozen=True)
class IngredientSet:
    vars_used: frozenset[str]
    vars_defined: frozenset[str]
    invocations: frozenset[tuple[str, int]]

    @staticmethod
    def empty() -> "IngredientSet":
        return IngredientSet(frozenset(), frozenset(), frozenset())


# Structural tree used by the CFG builder; every item references Statements
# that also appear in the flat MethodAst.statements list.


@dataclass
class StmtItem:
    stmt: Statement


@dataclass
class IfItem:
    predicate: Statement
    then_items: list
    else_items: list


@dataclass
class LoopItem:
    head: Statement
    body: list


@dataclass
class TryItem:
    try_body: list
    catches: list  # (catch-head Statement, body items)
    finally_body: list


@dataclass
class MethodAst:
    name: str
    params: list[tuple[str, str]]  # (name, type text)
    statements: list[Statement]  # every line of the normalized text
    source: str  # normalized method text
    body: list = field(default_factory=list)  # structural items

    def statement(self, sid: int) -> Statement:
        return self.statements[sid]

    def node_statements(self) -> list[Statement]:
        return [s for s in self.statements if s.is_graph_node]

    def statement_at_line(self, line: int) -> Statement:
        for s in self.statements:
            if s.line == line:
                return s
        raise KeyError(f"no statement at line {line}")


# --------------------------------------------------------------------------
# Normalization
# --------------------------------------------------------------------------


def _split_token_lines(tokens: list[str]) -> list[list[str]]:
    lines: list[list[str]] = []
    buf: list[str] = []
    paren = 0
    n = len(tokens)
    for i, tok in enumerate(tokens):
        if tok == "}" and buf:
            lines.append(buf)
            buf = []
        buf.append(tok)
        if tok in ("(", "["):
            paren += 1
        elif tok in (")", "]"):
            paren = max(0, paren - 1)
        elif tok == ";" and paren == 0:
            lines.append(buf)
            buf = []
        elif tok == "{":
            lines.append(buf)
            buf = []
        elif tok == "}":
            nxt = tokens[i + 1] if i + 1 < n else None
            if nxt not in ("else", "catch", "finally"):
                lines.append(buf)
                buf = []
    if buf:
        lines.append(buf)
    return lines


def normalize_source(text: str) -> str:
    """Canonical one-statement-per-line form; idempotent and total."""
    return "\n".join(" ".join(line) for line in _split_token_lines(tokenize(text)))


# --------------------------------------------------------------------------
# Method parsing
# --------------------------------------------------------------------------

_UNSUPPORTED_LEADING = frozenset(
    "break continue switch do case default synchronized assert class interface enum import package".split()
)
_UNSUPPORTED_TOKENS = frozenset({"->", "::"})


def _fail_if_unsupported(tokens: list[str], line_no: int, text: str) -> None:
    for tok in tokens:
        if tok in _UNSUPPORTED_TOKENS:
            raise ParseFailure(f"unsupported construct {tok!r}", line_no, text)


@dataclass
class _Line:
    no: int
    tokens: list[str]
    text: str


def _lines_of(source: str, strict: bool = True) -> list[_Line]:
    try:
        tokens = tokenize(source, strict=strict)
    except lexer.LexError as exc:
        raise ParseFailure(str(exc)) from exc
    token_lines = _split_token_lines(tokens)
    return [_Line(i, toks, " ".join(toks)) for i, toks in enumerate(token_lines)]


def _match_angle(tokens: list[str], i: int) -> int:
    """Index just past a balanced generic argument list starting at ``<``."""
    depth = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "<":
            depth += 1
        elif tok == ">":
            depth -= 1
        elif tok == ">>":
            depth -= 2
        elif tok == ">>>":
            depth -= 3
        elif tok in (";", "{", "}") or (depth == 0):
            return -1
        i += 1
        if depth == 0:
            return i
        if depth < 0:
            return -1
    return -1


def _parse_type(tokens: list[str], i: int) -> int:
    """Index just past a type starting at ``i``, or -1 if none parses."""
    n = len(tokens)
    if i >= n:
        return -1
    tok = tokens[i]
    if not (is_identifier(tok) or tok in lexer.PRIMITIVE_TYPES):
        return -1
    i += 1
    while i + 1 < n and tokens[i] == "." and is_identifier(tokens[i + 1]):
        i += 2
    if i < n and tokens[i] == "<":
        i = _match_angle(tokens, i)
        if i < 0:
            return -1
    while i + 1 < n and tokens[i] == "[" and tokens[i + 1] == "]":
        i += 2
    return i


def _try_parse_declaration(tokens: list[str]) -> list[tuple[str, list[str]]] | None:
    """Return [(name, initializer tokens)] if the line is a declaration."""
    body = list(tokens)
    if body and body[-1] == ";":
        body = body[:-1]
    i = 0
    while i < len(body) and body[i] == "final":
        i += 1
    j = _parse_type(body, i)
    if j < 0 or j >= len(body) or not is_identifier(body[j]):
        return None
    declarators: list[tuple[str, list[str]]] = []
    while True:
        if j >= len(body) or not is_identifier(body[j]):
            return None
        name = body[j]
        j += 1
        init: list[str] = []
        if j < len(body) and body[j] == "=":
            j += 1
            depth = 0
            while j < len(body) and not (depth == 0 and body[j] == ","):
                if body[j] in ("(", "["):
                    depth += 1
                elif body[j] in (")", "]"):
                    depth -= 1
                init.append(body[j])
                j += 1
        declarators.append((name, init))
        if j >= len(body):
            return declarators
        if body[j] == ",":
            j += 1
            continue
        return None


def _find_top_level_assign(tokens: list[str]) -> int:
    depth = 0
    for i, tok in enumerate(tokens):
        if tok in ("(", "["):
            depth += 1
        elif tok in (")", "]"):
            depth -= 1
        elif depth == 0 and tok in ASSIGNMENT_OPERATORS:
            return i
    return -1


def _is_lvalue(tokens: list[str]) -> bool:
    if not tokens or not is_identifier(tokens[0]) and tokens[0] != "this":
        return False
    i = 1
    while i < len(tokens):
        if tokens[i] == "." and i + 1 < len(tokens) and is_identifier(tokens[i + 1]):
            i += 2
        elif tokens[i] == "[":
            depth = 1
            i += 1
            while i < len(tokens) and depth:
                if tokens[i] == "[":
                    depth += 1
                elif tokens[i] == "]":
                    depth -= 1
                i += 1
        else:
            return False
    return True


def _classify_simple(tokens: list[str], line_no: int, text: str) -> StatementKind:
    head = tokens[0]
    if head in _UNSUPPORTED_LEADING:
        raise ParseFailure(f"unsupported statement {head!r}", line_no, text)
    if head == "return":
        return StatementKind.RETURN
    if head == "throw":
        return StatementKind.THROW
    if _try_parse_declaration(tokens) is not None:
        return StatementKind.DECLARATION
    body = tokens[:-1] if tokens[-1] == ";" else tokens
    assign_at = _find_top_level_assign(body)
    if assign_at > 0 and _is_lvalue(body[:assign_at]):
        return StatementKind.ASSIGNMENT
    if body and body[-1] in ("++", "--") and _is_lvalue(body[:-1]):
        return StatementKind.ASSIGNMENT
    if body and body[0] in ("++", "--") and _is_lvalue(body[1:]):
        return StatementKind.ASSIGNMENT
    return StatementKind.EXPRESSION


def _parse_signature(line: _Line) -> tuple[str, list[tuple[str, str]]]:
    toks = line.tokens
    if toks[-1] != "{" or "(" not in toks:
        raise ParseFailure("method signature must end with '{'", line.no, line.text)
    open_at = toks.index("(")
    if open_at == 0 or not is_identifier(toks[open_at - 1]):
        raise ParseFailure("cannot find method name", line.no, line.text)
    name = toks[open_at - 1]
    depth = 0
    close_at = -1
    for i in range(open_at, len(toks)):
        if toks[i] == "(":
            depth += 1
        elif toks[i] == ")":
            depth -= 1
            if depth == 0:
                close_at = i
                break
    if close_at < 0:
        raise ParseFailure("unbalanced parameter list", line.no, line.text)
    params: list[tuple[str, str]] = []
    group: list[str] = []
    depth = 0
    for tok in toks[open_at + 1 : close_at] + [","]:
        if tok in ("(", "[", "<"):
            depth += 1
        elif tok in (")", "]", ">"):
            depth -= 1
        if tok == "," and depth == 0:
            if group:
                names = [t for t in group if is_identifier(t)]
                if not names:
                    raise ParseFailure("malformed parameter", line.no, line.text)
                pname = names[-1]
                ptype = " ".join(t for t in group[:-1] if t not in ("final",))
                params.append((pname, ptype))
                group = []
        else:
            group.append(tok)
    return name, params


def _parse_seq(lines: list[_Line], i: int, method: "_Builder") -> tuple[list, int]:
    """Parse items until a line opening with ``}``; returns (items, closer index)."""
    items: list = []
    while i < len(lines):
        line = lines[i]
        toks = line.tokens
        _fail_if_unsupported(toks, line.no, line.text)
        if toks[0] == "}":
            return items, i
        if toks[0] == "if" or toks[:3] == ["}", "else", "if"]:
            item, i = _parse_if(lines, i, method)
            items.append(item)
            continue
        if toks[0] in ("while", "for"):
            if toks[-1] != "{":
                raise ParseFailure("loop body must be braced", line.no, line.text)
            head = method.add(line, StatementKind.LOOP)
            body, j = _parse_seq(lines, i + 1, method)
            method.expect_plain_closer(lines, j)
            items.append(LoopItem(head, body))
            i = j + 1
            continue
        if toks == ["try", "{"]:
            item, i = _parse_try(lines, i, method)
            items.append(item)
            continue
        if toks == ["{"]:
            method.add(line, StatementKind.BLOCK)
            inner, j = _parse_seq(lines, i + 1, method)
            method.expect_plain_closer(lines, j)
            items.extend(inner)
            i = j + 1
            continue
        if toks[-1] == ";":
            kind = _classify_simple(toks, line.no, line.text)
            items.append(StmtItem(method.add(line, kind)))
            i += 1
            continue
        raise ParseFailure("statement outside the grammar subset", line.no, line.text)
    raise ParseFailure("unexpected end of method (missing '}')")


def _parse_if(lines: list[_Line], i: int, method: "_Builder") -> tuple[IfItem, int]:
    line = lines[i]
    if line.tokens[-1] != "{":
        raise ParseFailure("if body must be braced", line.no, line.text)
    predicate = method.add(line, StatementKind.IF)
    then_items, j = _parse_seq(lines, i + 1, method)
    closer = lines[j]
    if closer.tokens == ["}"]:
        method.add(closer, StatementKind.BLOCK)
        return IfItem(predicate, then_items, []), j + 1
    if closer.tokens[:3] == ["}", "else", "if"]:
        nested, nxt = _parse_if(lines, j, method)
        return IfItem(predicate, then_items, [nested]), nxt
    if closer.tokens == ["}", "else", "{"]:
        method.add(closer, StatementKind.BLOCK)
        else_items, k = _parse_seq(lines, j + 1, method)
        method.expect_plain_closer(lines, k)
        return IfItem(predicate, then_items, else_items), k + 1
    raise ParseFailure("mismatched block closer", closer.no, closer.text)


def _parse_try(lines: list[_Line], i: int, method: "_Builder") -> tuple[TryItem, int]:
    method.add(lines[i], StatementKind.TRY)
    try_body, j = _parse_seq(lines, i + 1, method)
    catches: list = []
    finally_body: list = []
    closer = lines[j]
    while closer.tokens[:2] == ["}", "catch"]:
        if closer.tokens[-1] != "{":
            raise ParseFailure("catch body must be braced", closer.no, closer.text)
        head = method.add(closer, StatementKind.TRY)
        body, j = _parse_seq(lines, j + 1, method)
        catches.append((head, body))
        closer = lines[j]
    if closer.tokens[:2] == ["}", "finally"]:
        method.add(closer, StatementKind.TRY)
        finally_body, j = _parse_seq(lines, j + 1, method)
        closer = lines[j]
    if closer.tokens != ["}"]:
        raise ParseFailure("mismatched block closer", closer.no, closer.text)
    if not catches and not finally_body:
        raise ParseFailure("try without catch or finally", lines[i].no, lines[i].text)
    method.add(closer, StatementKind.BLOCK)
    return TryItem(try_body, catches, finally_body), j + 1


class _Builder:
    def __init__(self) -> None:
        self.statements: list[Statement] = []

    def add(self, line: _Line, kind: StatementKind) -> Statement:
        stmt = Statement(
            sid=len(self.statements),
            line=line.no,
            text=line.text,
            kind=kind,
            tokens=tuple(line.tokens),
        )
        self.statements.append(stmt)
        return stmt

    def expect_plain_closer(self, lines: list[_Line], j: int) -> None:
        if j >= len(lines) or lines[j].tokens != ["}"]:
            where = lines[j] if j < len(lines) else lines[-1]
            raise ParseFailure("expected plain '}'", where.no, where.text)
        self.add(lines[j], StatementKind.BLOCK)


def parse_method(source: str) -> MethodAst:
    """Parse normalized (or normalizable) method text into a MethodAst."""
    if not source or not source.strip():
        raise ParseFailure("empty method source")
    normalized = normalize_source(source)
    lines = _lines_of(normalized)
    if not lines:
        raise ParseFailure("empty method source")
    builder = _Builder()
    name, params = _parse_signature(lines[0])
    builder.add(lines[0], StatementKind.BLOCK)
    body, j = _parse_seq(lines, 1, builder)
    if j != len(lines) - 1 or lines[j].tokens != ["}"]:
        raise ParseFailure("unbalanced method body", lines[j].no, lines[j].text)
    builder.add(lines[j], StatementKind.BLOCK)
    ast = MethodAst(name=name, params=params, statements=builder.statements, source=normalized, body=body)
    # Statements are one per line by construction; keep the contract checked.
    assert [s.line for s in ast.statements] == list(range(len(lines)))
    return ast


# --------------------------------------------------------------------------
# Ingredients
# --------------------------------------------------------------------------


def _call_arity(tokens: list[str], open_at: int) -> int:
    depth = 0
    commas = 0
    saw_content = False
    for i in range(open_at, len(tokens)):
        tok = tokens[i]
        if tok in ("(", "["):
            depth += 1
        elif tok in (")", "]"):
            depth -= 1
            if depth == 0:
                break
        elif depth == 1 and tok == ",":
            commas += 1
        elif depth >= 1:
            saw_content = True
    if not saw_content and commas == 0:
        return 0
    return commas + 1


def _scan_expression(tokens: list[str]) -> tuple[set[str], set[tuple[str, int]]]:
    """Identifier uses and invocations in an expression token stream."""
    uses: set[str] = set()
    calls: set[tuple[str, int]] = set()
    for i, tok in enumerate(tokens):
        if not is_identifier(tok):
            continue
        if i + 1 < len(tokens) and tokens[i + 1] == "(":
            calls.add((tok, _call_arity(tokens, i + 1)))
        else:
            uses.add(tok)
    return uses, calls


def _declaration_ingredients(tokens: list[str]) -> IngredientSet:
    declarators = _try_parse_declaration(list(tokens))
    assert declarators is not None
    defs = {name for name, _ in declarators}
    uses: set[str] = set()
    calls: set[tuple[str, int]] = set()
    for _, init in declarators:
        u, c = _scan_expression(init)
        uses |= u
        calls |= c
    return IngredientSet(frozenset(uses), frozenset(defs), frozenset(calls))


def _lvalue_ingredients(lvalue: list[str]) -> tuple[str, set[str], set[tuple[str, int]]]:
    """Defined name plus uses appearing inside the lvalue itself.

    The last identifier of the dot chain before any indexing is the defined
    name (name-based tracking); every other identifier, including index
    expressions, is a use.
    """
    bracket_at = lvalue.index("[") if "[" in lvalue else len(lvalue)
    chain = [t for t in lvalue[:bracket_at] if is_identifier(t)]
    target = chain[-1]
    rest = set(chain[:-1])
    rest |= {t for t in lvalue[bracket_at:] if is_identifier(t)}
    _, calls = _scan_expression(lvalue)
    return target, rest, calls


def _assignment_ingredients(tokens: list[str]) -> IngredientSet:
    body = list(tokens[:-1]) if tokens[-1] == ";" else list(tokens)
    if body and body[-1] in ("++", "--"):
        target, extra, calls = _lvalue_ingredients(body[:-1])
        return IngredientSet(frozenset(extra | {target}), frozenset({target}), frozenset(calls))
    if body and body[0] in ("++", "--"):
        target, extra, calls = _lvalue_ingredients(body[1:])
        return IngredientSet(frozenset(extra | {target}), frozenset({target}), frozenset(calls))
    at = _find_top_level_assign(body)
    target, extra, lcalls = _lvalue_ingredients(body[:at])
    uses, calls = _scan_expression(body[at + 1 :])
    uses |= extra
    calls |= lcalls
    if body[at] != "=":  # compound assignment reads the target too
        uses.add(target)
    return IngredientSet(frozenset(uses), frozenset({target}), frozenset(calls))


def _loop_head_ingredients(tokens: list[str]) -> IngredientSet:
    inner = list(tokens)
    open_at = inner.index("(")
    depth = 0
    close_at = len(inner) - 1
    for i in range(open_at, len(inner)):
        if inner[i] == "(":
            depth += 1
        elif inner[i] == ")":
            depth -= 1
            if depth == 0:
                close_at = i
                break
    inner = inner[open_at + 1 : close_at]
    if tokens[0] == "while":
        uses, calls = _scan_expression(inner)
        return IngredientSet(frozenset(uses), frozenset(), frozenset(calls))
    # for: init ; cond ; update  |  for-each: Type name : iterable
    segments: list[list[str]] = [[]]
    depth = 0
    colon_at = -1
    for i, tok in enumerate(inner):
        if tok in ("(", "["):
            depth += 1
        elif tok in (")", "]"):
            depth -= 1
        if tok == ";" and depth == 0:
            segments.append([])
            continue
        if tok == ":" and depth == 0 and len(segments) == 1:
            colon_at = i
        segments[-1].append(tok)
    if colon_at >= 0 and len(segments) == 1:
        decl = inner[:colon_at]
        names = [t for t in decl if is_identifier(t)]
        uses, calls = _scan_expression(inner[colon_at + 1 :])
        return IngredientSet(frozenset(uses), frozenset({names[-1]} if names else set()), frozenset(calls))
    defs: set[str] = set()
    uses: set[str] = set()
    calls: set[tuple[str, int]] = set()
    for idx, seg in enumerate(segments):
        if not seg:
            continue
        if idx == 0:
            decl = _try_parse_declaration(seg)
            if decl is not None:
                defs |= {n for n, _ in decl}
                for _, init in decl:
                    u, c = _scan_expression(init)
                    uses |= u
                    calls |= c
                continue
        seg_stmt = seg + [";"]
        kind = StatementKind.EXPRESSION
        at = _find_top_level_assign(seg)
        if (at > 0 and _is_lvalue(seg[:at])) or (seg[-1] in ("++", "--") and _is_lvalue(seg[:-1])):
            kind = StatementKind.ASSIGNMENT
        if kind is StatementKind.ASSIGNMENT:
            ing = _assignment_ingredients(seg_stmt)
            defs |= set(ing.vars_defined)
            uses |= set(ing.vars_used)
            calls |= set(ing.invocations)
        else:
            u, c = _scan_expression(seg)
            uses |= u
            calls |= c
    return IngredientSet(frozenset(uses), frozenset(defs), frozenset(calls))


def _catch_head_ingredients(tokens: list[str]) -> IngredientSet:
    inner = list(tokens)
    open_at = inner.index("(")
    close_at = len(inner) - 1 - inner[::-1].index(")")
    names = [t for t in inner[open_at + 1 : close_at] if is_identifier(t)]
    defined = frozenset({names[-1]}) if names else frozenset()
    return IngredientSet(frozenset(), defined, frozenset())


def collect_ingredients(stmt: Statement) -> IngredientSet:
    """Def/use/invocation sets for one statement, per the name-based rules."""
    tokens = list(stmt.tokens)
    if stmt.kind is StatementKind.DECLARATION:
        return _declaration_ingredients(tokens)
    if stmt.kind is StatementKind.ASSIGNMENT:
        return _assignment_ingredients(tokens)
    if stmt.kind is StatementKind.LOOP:
        return _loop_head_ingredients(tokens)
    if stmt.kind is StatementKind.IF:
        uses, calls = _scan_expression(tokens)
        return IngredientSet(frozenset(uses), frozenset(), frozenset(calls))
    if stmt.kind in (StatementKind.RETURN, StatementKind.THROW, StatementKind.EXPRESSION):
        uses, calls = _scan_expression(tokens[1:] if stmt.kind is not StatementKind.EXPRESSION else tokens)
        return IngredientSet(frozenset(uses), frozenset(), frozenset(calls))
    if stmt.kind is StatementKind.TRY and stmt.is_graph_node:
        return _catch_head_ingredients(tokens)
    return IngredientSet.empty()


# --------------------------------------------------------------------------
# Class context
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldDecl:
    name: str
    text: str
    span: int  # line in the normalized class text


@dataclass(frozen=True)
class MethodSig:
    name: str
    arity: int
    text: str
    span: int


@dataclass
class ClassContext:
    public_fields: list[FieldDecl] = field(default_factory=list)
    public_method_signatures: list[MethodSig] = field(default_factory=list)

    @staticmethod
    def empty() -> "ClassContext":
        return ClassContext([], [])


def _field_names(tokens: list[str]) -> list[str]:
    body = [t for t in tokens if t not in MODIFIERS]
    decl = _try_parse_declaration(body)
    if decl is None:
        return []
    return [name for name, _ in decl]


def extract_class_context(class_source: str | None, exclude_method: str) -> ClassContext:
    """Public fields and public method signatures of the enclosing class.

    ``exclude_method`` names the buggy method, whose signature is skipped.
    Absent class source degrades to an empty context.
    """
    if not class_source or not class_source.strip():
        return ClassContext.empty()
    lines = _lines_of(class_source)
    depth = 0
    class_name = None
    fields: list[FieldDecl] = []
    sigs: dict[tuple[str, int], MethodSig] = {}
    balance = 0
    for line in lines:
        toks = line.tokens
        balance += toks.count("{") - toks.count("}")
        if balance < 0:
            raise ParseFailure("unbalanced class body", line.no, line.text)
        opens = toks[-1] == "{"
        closes = toks[0] == "}"
        level = depth - (1 if closes else 0)
        if depth == 0 and opens and "class" in toks:
            class_name = toks[toks.index("class") + 1] if toks.index("class") + 1 < len(toks) else None
        elif level == 1 and "public" in toks:
            if opens and "(" in toks:
                try:
                    name, params = _parse_signature(line)
                except ParseFailure:
                    name = None
                if name and name != exclude_method and name != class_name:
                    text = " ".join(toks[:-1])
                    sigs.setdefault((name, len(params)), MethodSig(name, len(params), text, line.no))
            elif toks[-1] == ";":
                for fname in _field_names(toks):
                    fields.append(FieldDecl(fname, line.text, line.no))
        if opens:
            depth += 1
        if closes:
            depth -= 1
    if balance != 0:
        raise ParseFailure("unbalanced class body")
    if class_name is None:
        raise ParseFailure("no class declaration found")
    seen: set[str] = set()
    unique_fields = []
    for f in fields:
        if f.name not in seen:
            seen.add(f.name)
            unique_fields.append(f)
    return ClassContext(unique_fields, sorted(sigs.values(), key=lambda s: s.span))
