"""Recursive-descent parser producing a single :class:`Function` AST."""
from __future__ import annotations

from typing import Optional

from . import nodes as N
from .lexer import Token, tokenize

BASE_TYPES = ("int", "boolean", "char", "String")
MODIFIERS = ("public", "private", "protected", "static", "final")
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=", "%=")
STATIC_OWNERS = {"Math": ("abs", "max", "min")}

# binary operator precedence, higher binds tighter
BINARY_PREC = {
    "||": 3, "&&": 4,
    "==": 5, "!=": 5,
    "<": 6, "<=": 6, ">": 6, ">=": 6,
    "+": 7, "-": 7,
    "*": 8, "/": 8, "%": 8,
}

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "0": "\0", "\\": "\\", "'": "'", '"': '"'}


class ParseError(Exception):
    def __init__(self, offset: int, expected, message: str = ""):
        self.offset = offset
        self.expected = frozenset(expected)
        self.message = message or "expected one of " + ", ".join(sorted(self.expected))
        super().__init__(f"{self.message} at byte {offset}")


def unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.scopes: list[set[str]] = []

    # -- token helpers ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Optional[Token]:
        i = self.pos + ahead
        return self.toks[i] if i < len(self.toks) else None

    def at(self, lexeme: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok is not None and tok.lexeme == lexeme and tok.kind in ("keyword", "operator", "punctuation")

    def error(self, expected, message: str = "") -> ParseError:
        tok = self.peek()
        if tok is None:
            offset = self.toks[-1].end if self.toks else 0
        else:
            offset = tok.start
        return ParseError(offset, expected, message)

    def advance(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.error({"<more input>"}, "unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, lexeme: str) -> Token:
        if not self.at(lexeme):
            raise self.error({lexeme})
        return self.advance()

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != "identifier":
            raise self.error({"identifier"})
        return self.advance()

    def span_from(self, start_tok: Token) -> N.Span:
        last = self.toks[self.pos - 1]
        return (start_tok.start, last.end)

    # -- scopes -------------------------------------------------------------

    def declare(self, name: str) -> None:
        if self.is_declared(name):
            raise self.error({"fresh identifier"}, f"variable {name!r} is already defined")
        self.scopes[-1].add(name)

    def is_declared(self, name: str) -> bool:
        return any(name in s for s in self.scopes)

    # -- grammar ------------------------------------------------------------

    def at_type(self) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "keyword" and tok.lexeme in BASE_TYPES

    def parse_type(self, allow_void: bool = False) -> str:
        tok = self.peek()
        if tok is not None and tok.kind == "keyword" and (
                tok.lexeme in BASE_TYPES or (allow_void and tok.lexeme == "void")):
            self.advance()
            name = tok.lexeme
            if self.at("[") and self.at("]", 1):
                self.advance()
                self.advance()
                name += "[]"
            return name
        raise self.error(set(BASE_TYPES) | ({"void"} if allow_void else set()))

    def parse_function(self) -> N.Function:
        first = self.peek()
        if first is None:
            raise self.error({"function definition"}, "empty input")
        modifiers = []
        while self.peek() is not None and self.peek().lexeme in MODIFIERS and self.peek().kind == "keyword":
            modifiers.append(self.advance().lexeme)
        ret = self.parse_type(allow_void=True)
        name = self.expect_ident().lexeme
        self.expect("(")
        self.scopes.append(set())
        params = []
        if not self.at(")"):
            while True:
                ptok = self.peek()
                ptype = self.parse_type()
                pname = self.expect_ident().lexeme
                self.declare(pname)
                params.append(N.Param(pname, ptype, span=self.span_from(ptok)))
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")")
        body = self.parse_block()
        self.scopes.pop()
        if self.peek() is not None:
            raise self.error({"<end of input>"}, "trailing tokens after function")
        return N.Function(modifiers, ret, name, params, body, span=self.span_from(first))

    def parse_block(self) -> N.Block:
        start = self.expect("{")
        self.scopes.append(set())
        stmts = []
        while not self.at("}"):
            if self.peek() is None:
                raise self.error({"}"})
            stmts.append(self.parse_statement())
        self.advance()
        self.scopes.pop()
        return N.Block(stmts, span=self.span_from(start))

    def parse_statement(self) -> N.Node:
        tok = self.peek()
        if self.at("{"):
            return self.parse_block()
        if self.at(";"):
            self.advance()
            return N.Block([], span=self.span_from(tok))
        if self.at_type():
            decl = self.parse_var_decl()
            self.expect(";")
            decl.span = self.span_from(tok)
            return decl
        if tok.kind == "keyword":
            kw = tok.lexeme
            if kw == "if":
                return self.parse_if()
            if kw == "for":
                return self.parse_for()
            if kw == "while":
                self.advance()
                self.expect("(")
                cond = self.parse_expr()
                self.expect(")")
                body = self.parse_scoped_statement()
                return N.While(cond, body, span=self.span_from(tok))
            if kw == "return":
                self.advance()
                value = None if self.at(";") else self.parse_expr()
                self.expect(";")
                return N.Return(value, span=self.span_from(tok))
            if kw == "break":
                self.advance()
                self.expect(";")
                return N.Break(span=self.span_from(tok))
            if kw == "continue":
                self.advance()
                self.expect(";")
                return N.Continue(span=self.span_from(tok))
        expr = self.parse_expr()
        self.expect(";")
        return N.ExprStmt(expr, span=self.span_from(tok))

    def parse_scoped_statement(self) -> N.Node:
        self.scopes.append(set())
        try:
            return self.parse_statement()
        finally:
            self.scopes.pop()

    def parse_var_decl(self) -> N.VarDecl:
        start = self.peek()
        vtype = self.parse_type()
        decls = []
        while True:
            ntok = self.expect_ident()
            init = None
            if self.at("="):
                self.advance()
                if self.at("{"):
                    init = self.parse_array_items(None)
                else:
                    init = self.parse_expr()
            # the name is in scope only after its initializer
            self.declare(ntok.lexeme)
            decls.append(N.Declarator(ntok.lexeme, init, span=self.span_from(ntok)))
            if self.at(","):
                self.advance()
                continue
            break
        return N.VarDecl(vtype, decls, span=self.span_from(start))

    def parse_if(self) -> N.If:
        start = self.advance()
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_scoped_statement()
        other = None
        if self.at("else"):
            self.advance()
            other = self.parse_scoped_statement()
        return N.If(cond, then, other, span=self.span_from(start))

    def parse_for(self) -> N.For:
        start = self.advance()
        self.expect("(")
        self.scopes.append(set())
        init: list = []
        if not self.at(";"):
            if self.at_type():
                init.append(self.parse_var_decl())
            else:
                while True:
                    etok = self.peek()
                    e = self.parse_expr()
                    init.append(N.ExprStmt(e, span=self.span_from(etok)))
                    if self.at(","):
                        self.advance()
                        continue
                    break
        self.expect(";")
        cond = None if self.at(";") else self.parse_expr()
        self.expect(";")
        update = []
        if not self.at(")"):
            while True:
                update.append(self.parse_expr())
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")")
        body = self.parse_scoped_statement()
        self.scopes.pop()
        return N.For(init, cond, update, body, span=self.span_from(start))

    # -- expressions --------------------------------------------------------

    def parse_expr(self) -> N.Node:
        return self.parse_assignment()

    def parse_assignment(self) -> N.Node:
        start = self.peek()
        left = self.parse_conditional()
        tok = self.peek()
        if tok is not None and tok.kind == "operator" and tok.lexeme in ASSIGN_OPS:
            if not isinstance(left, (N.Name, N.Index)):
                raise self.error({"assignable expression"}, "invalid assignment target")
            self.advance()
            value = self.parse_assignment()
            return N.Assign(tok.lexeme, left, value, span=self.span_from(start))
        return left

    def parse_conditional(self) -> N.Node:
        start = self.peek()
        cond = self.parse_binary(3)
        if self.at("?"):
            self.advance()
            then = self.parse_assignment()
            self.expect(":")
            other = self.parse_conditional()
            return N.Conditional(cond, then, other, span=self.span_from(start))
        return cond

    def parse_binary(self, min_prec: int) -> N.Node:
        start = self.peek()
        left = self.parse_unary()
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "operator":
                break
            prec = BINARY_PREC.get(tok.lexeme)
            if prec is None or prec < min_prec:
                break
            self.advance()
            right = self.parse_binary(prec + 1)
            left = N.Binary(tok.lexeme, left, right, span=self.span_from(start))
        return left

    def parse_unary(self) -> N.Node:
        tok = self.peek()
        if tok is not None and tok.kind == "operator":
            if tok.lexeme in ("!", "-", "+"):
                self.advance()
                operand = self.parse_unary()
                if tok.lexeme == "-" and isinstance(operand, N.IntLit):
                    return N.IntLit(-operand.value, span=self.span_from(tok))
                return N.Unary(tok.lexeme, operand, span=self.span_from(tok))
            if tok.lexeme in ("++", "--"):
                self.advance()
                target = self.parse_unary()
                if not isinstance(target, (N.Name, N.Index)):
                    raise self.error({"assignable expression"}, "invalid increment target")
                return N.IncDec(tok.lexeme, True, target, span=self.span_from(tok))
        return self.parse_postfix()

    def parse_postfix(self) -> N.Node:
        start = self.peek()
        expr = self.parse_primary()
        while True:
            if self.at("["):
                self.advance()
                idx = self.parse_expr()
                self.expect("]")
                expr = N.Index(expr, idx, span=self.span_from(start))
            elif self.at("."):
                self.advance()
                name = self.expect_ident().lexeme
                if self.at("("):
                    args = self.parse_args()
                    expr = N.Call(expr, name, args, span=self.span_from(start))
                elif name == "length":
                    expr = N.Length(expr, span=self.span_from(start))
                else:
                    raise self.error({"("}, f"unknown field {name!r}")
            elif self.at("++") or self.at("--"):
                if not isinstance(expr, (N.Name, N.Index)):
                    break
                op = self.advance().lexeme
                expr = N.IncDec(op, False, expr, span=self.span_from(start))
            else:
                break
        return expr

    def parse_args(self) -> list:
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.parse_expr())
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")")
        return args

    def parse_array_items(self, elem_type: Optional[str]) -> N.ArrayLit:
        start = self.expect("{")
        items = []
        if not self.at("}"):
            while True:
                items.append(self.parse_expr())
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect("}")
        return N.ArrayLit(elem_type, items, span=self.span_from(start))

    def parse_primary(self) -> N.Node:
        tok = self.peek()
        if tok is None:
            raise self.error({"expression"}, "unexpected end of input")
        kind = tok.kind
        if kind == "int-literal":
            self.advance()
            return N.IntLit(int(tok.lexeme), span=tok.span)
        if kind == "bool-literal":
            self.advance()
            return N.BoolLit(tok.lexeme == "true", span=tok.span)
        if kind == "string-literal":
            self.advance()
            return N.StrLit(unescape(tok.lexeme[1:-1]), span=tok.span)
        if kind == "char-literal":
            value = unescape(tok.lexeme[1:-1])
            if len(value) != 1:
                raise self.error({"char literal"}, "char literal must hold one character")
            self.advance()
            return N.CharLit(value, span=tok.span)
        if kind == "identifier":
            if tok.lexeme in STATIC_OWNERS and not self.is_declared(tok.lexeme) and self.at(".", 1):
                self.advance()
                self.advance()
                method = self.expect_ident().lexeme
                if method not in STATIC_OWNERS[tok.lexeme]:
                    raise self.error(set(STATIC_OWNERS[tok.lexeme]), f"unknown method {tok.lexeme}.{method}")
                args = self.parse_args()
                return N.StaticCall(tok.lexeme, method, args, span=self.span_from(tok))
            if not self.is_declared(tok.lexeme):
                raise self.error({"declared identifier"}, f"undeclared variable {tok.lexeme!r}")
            self.advance()
            return N.Name(tok.lexeme, span=tok.span)
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if self.at("new"):
            self.advance()
            ttok = self.peek()
            if ttok is None or ttok.kind != "keyword" or ttok.lexeme not in BASE_TYPES:
                raise self.error(set(BASE_TYPES))
            self.advance()
            self.expect("[")
            if self.at("]"):
                self.advance()
                lit = self.parse_array_items(ttok.lexeme)
                lit.span = self.span_from(tok)
                return lit
            size = self.parse_expr()
            self.expect("]")
            return N.NewArray(ttok.lexeme, size, span=self.span_from(tok))
        raise self.error({"expression"}, f"unexpected token {tok.lexeme!r}")


def parse(tokens: list[Token]) -> N.Function:
    return _Parser(list(tokens)).parse_function()


def parse_source(source: str) -> N.Function:
    return parse(tokenize(source))
