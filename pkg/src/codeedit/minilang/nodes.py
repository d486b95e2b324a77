"""AST node types.

Spans are carried on every node but excluded from equality, so two trees are
equal when they have the same structure regardless of layout.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterator, Optional, Union

Span = tuple[int, int]
NO_SPAN: Span = (0, 0)

TYPES = ("int", "boolean", "char", "String", "int[]", "String[]", "char[]", "boolean[]")


@dataclass(eq=True)
class Node:
    def children(self) -> Iterator["Node"]:
        for f in fields(self):
            if f.name == "span":
                continue
            value = getattr(self, f.name)
            if isinstance(value, Node):
                yield value
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Node):
                        yield item

    def walk(self) -> Iterator["Node"]:
        yield self
        for child in self.children():
            yield from child.walk()


# -- expressions -------------------------------------------------------------

@dataclass(eq=True)
class IntLit(Node):
    value: int
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class BoolLit(Node):
    value: bool
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class StrLit(Node):
    value: str
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class CharLit(Node):
    value: str
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Name(Node):
    ident: str
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Unary(Node):
    op: str
    operand: Node
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Binary(Node):
    op: str
    left: Node
    right: Node
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Conditional(Node):
    cond: Node
    then: Node
    other: Node
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Assign(Node):
    op: str  # "=", "+=", ...
    target: Node  # Name or Index
    value: Node
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class IncDec(Node):
    op: str  # "++" or "--"
    prefix: bool
    target: Node
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Index(Node):
    array: Node
    index: Node
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Call(Node):
    """Method call on a receiver value, e.g. ``str.charAt(i)``."""
    receiver: Node
    method: str
    args: list
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class StaticCall(Node):
    """Call of a library static such as ``Math.max(a, b)``."""
    owner: str
    method: str
    args: list
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Length(Node):
    """``arr.length`` field access."""
    array: Node
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class NewArray(Node):
    elem_type: str
    size: Node
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class ArrayLit(Node):
    elem_type: Optional[str]  # None for a bare ``{...}`` initializer
    items: list
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


# -- statements --------------------------------------------------------------

@dataclass(eq=True)
class Block(Node):
    stmts: list
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Declarator(Node):
    name: str
    init: Optional[Node]
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class VarDecl(Node):
    type: str
    decls: list  # of Declarator
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class ExprStmt(Node):
    expr: Node
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class If(Node):
    cond: Node
    then: Node
    other: Optional[Node]
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class For(Node):
    init: list  # VarDecl or ExprStmt items
    cond: Optional[Node]
    update: list  # expressions
    body: Node
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class While(Node):
    cond: Node
    body: Node
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Return(Node):
    value: Optional[Node]
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Break(Node):
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Continue(Node):
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Param(Node):
    name: str
    type: str
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(eq=True)
class Function(Node):
    modifiers: list
    return_type: str
    name: str
    params: list
    body: Block
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


Expr = Union[IntLit, BoolLit, StrLit, CharLit, Name, Unary, Binary, Conditional,
             Assign, IncDec, Index, Call, StaticCall, Length, NewArray, ArrayLit]
