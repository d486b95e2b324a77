"""Runtime values.

Ints, booleans and strings are plain Python ``int``/``bool``/``str``; chars
and arrays get small wrapper classes so the interpreter can tell them apart.
"""
from __future__ import annotations

from typing import Any, Union

INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1


class Char:
    __slots__ = ("c",)

    def __init__(self, c: str):
        self.c = c

    def __eq__(self, other):
        return isinstance(other, Char) and other.c == self.c

    def __hash__(self):
        return hash(("char", self.c))

    def __repr__(self):
        return f"Char({self.c!r})"


class Array:
    """Fixed-length array; ``elem`` is the element type name."""
    __slots__ = ("elem", "items")

    def __init__(self, elem: str, items: list):
        self.elem = elem
        self.items = items

    def __eq__(self, other):
        return isinstance(other, Array) and other.elem == self.elem and other.items == self.items

    def __hash__(self):
        return hash((self.elem, tuple(self.items)))

    def __repr__(self):
        return f"Array({self.elem}, {self.items!r})"


Value = Union[int, bool, str, Char, Array]


def wrap_int(v: int) -> int:
    if INT_MIN <= v <= INT_MAX:
        return v
    return ((v - INT_MIN) % (1 << 64)) + INT_MIN


def type_of(v: Any) -> str:
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, int):
        return "int"
    if isinstance(v, str):
        return "String"
    if isinstance(v, Char):
        return "char"
    if isinstance(v, Array):
        return v.elem + "[]"
    return "null"


def values_equal(a: Any, b: Any) -> bool:
    """Deep structural equality with exact string comparison."""
    if type_of(a) != type_of(b):
        return False
    return a == b


def from_literal(lit: Any, type_name: str) -> Value:
    """Decode a JSON literal according to a declared type."""
    if type_name.endswith("[]"):
        if not isinstance(lit, list):
            raise ValueError(f"expected array literal for {type_name}, got {lit!r}")
        elem = type_name[:-2]
        return Array(elem, [from_literal(x, elem) for x in lit])
    if type_name == "int":
        if isinstance(lit, bool) or not isinstance(lit, int):
            raise ValueError(f"expected int literal, got {lit!r}")
        return wrap_int(lit)
    if type_name == "boolean":
        if not isinstance(lit, bool):
            raise ValueError(f"expected boolean literal, got {lit!r}")
        return lit
    if type_name == "String":
        if not isinstance(lit, str):
            raise ValueError(f"expected string literal, got {lit!r}")
        return lit
    if type_name == "char":
        if not isinstance(lit, str) or len(lit) != 1:
            raise ValueError(f"expected one-character string for char, got {lit!r}")
        return Char(lit)
    raise ValueError(f"unknown type {type_name!r}")


def to_literal(v: Value) -> Any:
    if isinstance(v, Array):
        return [to_literal(x) for x in v.items]
    if isinstance(v, Char):
        return v.c
    return v
