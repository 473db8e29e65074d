"""Token-level lexer for the Java-like statement subset.

Two modes share one scanner:

* lenient (default) is total: any character the scanner does not know
  becomes a single-character token. This backs the whitespace-insensitive
  normalization used for exact-match comparison and corpus validation.
* strict raises :class:`LexError` on unknown characters and unterminated
  literals, and backs the statement parser.

Comments never survive tokenization in either mode.
"""

from __future__ import annotations

KEYWORDS = frozenset(
    """
    abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package
    private protected public return short static strictfp super switch
    synchronized this throw throws transient try void volatile while
    true false null var
    """.split()
)

MODIFIERS = frozenset(
    "public private protected static final abstract native synchronized transient volatile strictfp".split()
)

PRIMITIVE_TYPES = frozenset("boolean byte char short int long float double void var".split())

# Longest-match operator table; order within each length bucket is irrelevant.
_OPERATORS = sorted(
    [
        ">>>=", "<<=", ">>=", ">>>", "...", "->", "::",
        "==", "!=", "<=", ">=", "&&", "||", "++", "--",
        "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
        "+", "-", "*", "/", "%", "=", "<", ">", "!", "&", "|", "^", "~", "?",
        ":", ";", ",", ".", "(", ")", "[", "]", "{", "}", "@",
    ],
    key=len,
    reverse=True,
)

ASSIGNMENT_OPERATORS = frozenset(
    ["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="]
)


class LexError(ValueError):
    """Raised in strict mode on input outside the token grammar."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch in "_$"


def _is_ident_part(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


def tokenize(text: str, strict: bool = False) -> list[str]:
    """Split source text into a flat list of tokens, dropping comments."""
    tokens: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("//", i):
            end = text.find("\n", i)
            i = n if end < 0 else end + 1
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                if strict:
                    raise LexError("unterminated block comment", i)
                i = n
            else:
                i = end + 2
            continue
        if ch in "\"'":
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == ch:
                    break
                j += 1
            if j >= n:
                if strict:
                    raise LexError("unterminated literal", i)
                tokens.append(text[i:])
                break
            tokens.append(text[i : j + 1])
            i = j + 1
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "._"):
                # ``1.foo()`` never occurs on numeric literals in the subset;
                # dots inside a number are fraction separators (1.5f, 1e-3).
                if text[j] == "." and not (j + 1 < n and (text[j + 1].isdigit() or text[j + 1] in "eEfFdD")):
                    break
                j += 1
                if j < n and text[j - 1] in "eE" and text[j] in "+-":
                    j += 1
            tokens.append(text[i:j])
            i = j
            continue
        if _is_ident_start(ch):
            j = i + 1
            while j < n and _is_ident_part(text[j]):
                j += 1
            tokens.append(text[i:j])
            i = j
            continue
        for op in _OPERATORS:
            if text.startswith(op, i):
                tokens.append(op)
                i += len(op)
                break
        else:
            if strict:
                raise LexError(f"unexpected character {ch!r}", i)
            tokens.append(ch)
            i += 1
    return tokens


def is_identifier(token: str) -> bool:
    """True for identifier tokens that are not reserved words."""
    return bool(token) and _is_ident_start(token[0]) and all(_is_ident_part(c) for c in token) and token not in KEYWORDS


def is_literal(token: str) -> bool:
    if not token:
        return False
    return token[0] in "\"'" or token[0].isdigit() or token in ("true", "false", "null")
