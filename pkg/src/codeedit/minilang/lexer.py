"""Lexer for the Java-subset teaching language.

Whitespace and comments are trivia: they are skipped but never lost, because
every token records its span and the gaps between spans are exactly the
trivia. Offsets are byte offsets into the UTF-8 encoding of the source.
"""
from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = frozenset({
    "public", "private", "protected", "static", "final",
    "int", "boolean", "char", "String", "void",
    "if", "else", "for", "while", "return", "break", "continue", "new",
})
BOOL_LITERALS = frozenset({"true", "false"})

# longest first so that maximal munch works with a simple prefix scan
OPERATORS = sorted(
    ["+", "-", "*", "/", "%", "++", "--", "+=", "-=", "*=", "/=", "%=", "=",
     "==", "!=", "<", "<=", ">", ">=", "&&", "||", "!", "?", ":"],
    key=len, reverse=True,
)
PUNCTUATION = frozenset("(){}[];,.")

KINDS = ("keyword", "identifier", "int-literal", "string-literal",
         "char-literal", "bool-literal", "operator", "punctuation", "error")


class LexError(Exception):
    def __init__(self, offset: int, message: str):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset
        self.message = message


@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    start: int
    end: int

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def __repr__(self) -> str:
        return f"Token({self.kind} {self.lexeme!r} @{self.start})"


def _scan_quoted(source: str, i: int, quote: str) -> int:
    """Return the index just past the closing quote, or -1 if unterminated."""
    n = len(source)
    j = i + 1
    while j < n:
        c = source[j]
        if c == "\\":
            j += 2
            continue
        if c == quote:
            return j + 1
        if c == "\n":
            return -1
        j += 1
    return -1


def tokenize(source: str, lenient: bool = False) -> list[Token]:
    """Split ``source`` into tokens.

    With ``lenient=True`` illegal characters and unterminated literals become
    ``error`` tokens instead of raising, so arbitrary text (e.g. decoder
    output) can always be tokenized.
    """
    tokens: list[tuple[str, str, int, int]] = []
    n = len(source)
    i = 0
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            i = n if j < 0 else j
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                if not lenient:
                    raise LexError(_byte_offset(source, i), "unterminated comment")
                tokens.append(("error", source[i:], i, n))
                break
            i = j + 2
            continue
        if c.isalpha() or c == "_" or c == "$":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] in "_$"):
                j += 1
            word = source[i:j]
            if word in KEYWORDS:
                kind = "keyword"
            elif word in BOOL_LITERALS:
                kind = "bool-literal"
            else:
                kind = "identifier"
            tokens.append((kind, word, i, j))
            i = j
            continue
        if c.isdigit():
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(("int-literal", source[i:j], i, j))
            i = j
            continue
        if c == '"' or c == "'":
            j = _scan_quoted(source, i, c)
            if j < 0:
                if not lenient:
                    what = "string" if c == '"' else "char"
                    raise LexError(_byte_offset(source, i), f"unterminated {what} literal")
                end = source.find("\n", i)
                end = n if end < 0 else end
                tokens.append(("error", source[i:end], i, end))
                i = end
                continue
            kind = "string-literal" if c == '"' else "char-literal"
            tokens.append((kind, source[i:j], i, j))
            i = j
            continue
        if c in PUNCTUATION:
            tokens.append(("punctuation", c, i, i + 1))
            i += 1
            continue
        for op in OPERATORS:
            if source.startswith(op, i):
                tokens.append(("operator", op, i, i + len(op)))
                i += len(op)
                break
        else:
            if not lenient:
                raise LexError(_byte_offset(source, i), f"illegal character {c!r}")
            tokens.append(("error", c, i, i + 1))
            i += 1
    if source.isascii():
        return [Token(k, lx, s, e) for k, lx, s, e in tokens]
    offsets = _byte_offsets(source)
    return [Token(k, lx, offsets[s], offsets[e]) for k, lx, s, e in tokens]


def _byte_offsets(source: str) -> list[int]:
    out = [0] * (len(source) + 1)
    acc = 0
    for idx, ch in enumerate(source):
        out[idx] = acc
        acc += len(ch.encode("utf-8"))
    out[len(source)] = acc
    return out


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def reassemble(tokens: list[Token], source: str) -> str:
    """Interleave lexemes with the original trivia; yields ``source`` back."""
    data = source.encode("utf-8")
    parts: list[bytes] = []
    pos = 0
    for tok in tokens:
        parts.append(data[pos:tok.start])
        parts.append(tok.lexeme.encode("utf-8"))
        pos = tok.end
    parts.append(data[pos:])
    return b"".join(parts).decode("utf-8")


def canonical_text(tokens: list[Token]) -> str:
    """Single-space layout used by the vocabulary round trip and the decoder."""
    return " ".join(t.lexeme for t in tokens)
