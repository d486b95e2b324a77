"""Canonical pretty printer; ``parse(print(ast)) == ast`` for every AST."""
from __future__ import annotations

from . import nodes as N
from .parser import BINARY_PREC

_PREC_ASSIGN, _PREC_COND, _PREC_UNARY, _PREC_POSTFIX, _PREC_ATOM = 1, 2, 9, 10, 11
_ESCAPE_OUT = {"\n": "\\n", "\t": "\\t", "\r": "\\r", "\0": "\\0", "\\": "\\\\"}


def _quote(value: str, quote: str) -> str:
    out = []
    for ch in value:
        if ch == quote:
            out.append("\\" + ch)
        else:
            out.append(_ESCAPE_OUT.get(ch, ch))
    return quote + "".join(out) + quote


def _prec(e: N.Node) -> int:
    if isinstance(e, N.Assign):
        return _PREC_ASSIGN
    if isinstance(e, N.Conditional):
        return _PREC_COND
    if isinstance(e, N.Binary):
        return BINARY_PREC[e.op]
    if isinstance(e, N.Unary) or (isinstance(e, N.IncDec) and e.prefix):
        return _PREC_UNARY
    if isinstance(e, N.IntLit) and e.value < 0:
        return _PREC_UNARY
    if isinstance(e, (N.Index, N.Call, N.Length)) or isinstance(e, N.IncDec):
        return _PREC_POSTFIX
    return _PREC_ATOM


def _wrap(e: N.Node, min_prec: int) -> str:
    text = expr_to_str(e)
    return f"({text})" if _prec(e) < min_prec else text


def expr_to_str(e: N.Node) -> str:
    if isinstance(e, N.IntLit):
        return str(e.value)
    if isinstance(e, N.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, N.StrLit):
        return _quote(e.value, '"')
    if isinstance(e, N.CharLit):
        return _quote(e.value, "'")
    if isinstance(e, N.Name):
        return e.ident
    if isinstance(e, N.Unary):
        inner = _wrap(e.operand, _PREC_UNARY)
        # keep "- -x" and "+ +x" from fusing into one operator token
        if inner[:1] == e.op:
            inner = " " + inner
        return e.op + inner
    if isinstance(e, N.Binary):
        p = BINARY_PREC[e.op]
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p + 1)}"
    if isinstance(e, N.Conditional):
        return f"{_wrap(e.cond, 3)} ? {expr_to_str(e.then)} : {_wrap(e.other, _PREC_COND)}"
    if isinstance(e, N.Assign):
        return f"{_wrap(e.target, _PREC_POSTFIX)} {e.op} {_wrap(e.value, _PREC_ASSIGN)}"
    if isinstance(e, N.IncDec):
        target = _wrap(e.target, _PREC_POSTFIX)
        return e.op + target if e.prefix else target + e.op
    if isinstance(e, N.Index):
        return f"{_wrap(e.array, _PREC_POSTFIX)}[{expr_to_str(e.index)}]"
    if isinstance(e, N.Call):
        args = ", ".join(expr_to_str(a) for a in e.args)
        return f"{_wrap(e.receiver, _PREC_POSTFIX)}.{e.method}({args})"
    if isinstance(e, N.StaticCall):
        args = ", ".join(expr_to_str(a) for a in e.args)
        return f"{e.owner}.{e.method}({args})"
    if isinstance(e, N.Length):
        return f"{_wrap(e.array, _PREC_POSTFIX)}.length"
    if isinstance(e, N.NewArray):
        return f"new {e.elem_type}[{expr_to_str(e.size)}]"
    if isinstance(e, N.ArrayLit):
        items = ", ".join(expr_to_str(a) for a in e.items)
        if e.elem_type is None:
            return "{" + items + "}"
        return f"new {e.elem_type}[] {{{items}}}"
    raise TypeError(f"not an expression: {type(e).__name__}")


def _decl_to_str(d: N.VarDecl) -> str:
    parts = []
    for item in d.decls:
        if item.init is None:
            parts.append(item.name)
        else:
            parts.append(f"{item.name} = {_wrap(item.init, _PREC_ASSIGN)}")
    return f"{d.type} {', '.join(parts)}"


def _stmt_lines(s: N.Node, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(s, N.Block):
        out.append(pad + "{")
        _block_body(s, indent, out)
        out.append(pad + "}")
    elif isinstance(s, N.VarDecl):
        out.append(pad + _decl_to_str(s) + ";")
    elif isinstance(s, N.ExprStmt):
        out.append(pad + expr_to_str(s.expr) + ";")
    elif isinstance(s, N.Return):
        out.append(pad + ("return;" if s.value is None else f"return {expr_to_str(s.value)};"))
    elif isinstance(s, N.Break):
        out.append(pad + "break;")
    elif isinstance(s, N.Continue):
        out.append(pad + "continue;")
    elif isinstance(s, N.If):
        _headed(pad + f"if ({expr_to_str(s.cond)})", s.then, indent, out)
        other = s.other
        while other is not None:
            closer = out[-1].strip() == "}"
            prefix = out.pop() + " " if closer else pad
            if isinstance(other, N.If):
                _headed(prefix + f"else if ({expr_to_str(other.cond)})", other.then, indent, out)
                other = other.other
            else:
                _headed(prefix + "else", other, indent, out)
                other = None
    elif isinstance(s, N.While):
        _headed(pad + f"while ({expr_to_str(s.cond)})", s.body, indent, out)
    elif isinstance(s, N.For):
        init = ", ".join(
            _decl_to_str(i) if isinstance(i, N.VarDecl) else expr_to_str(i.expr) for i in s.init)
        cond = "" if s.cond is None else expr_to_str(s.cond)
        update = ", ".join(expr_to_str(u) for u in s.update)
        _headed(pad + f"for ({init}; {cond}; {update})", s.body, indent, out)
    else:
        raise TypeError(f"not a statement: {type(s).__name__}")


def _block_body(b: N.Block, indent: int, out: list[str]) -> None:
    for st in b.stmts:
        _stmt_lines(st, indent + 1, out)


def _headed(header: str, body: N.Node, indent: int, out: list[str]) -> None:
    if isinstance(body, N.Block):
        out.append(header + " {")
        _block_body(body, indent, out)
        out.append("  " * indent + "}")
    else:
        out.append(header)
        _stmt_lines(body, indent + 1, out)


def pretty(fn: N.Function) -> str:
    params = ", ".join(f"{p.type} {p.name}" for p in fn.params)
    mods = " ".join(fn.modifiers)
    head = f"{mods} {fn.return_type}" if mods else fn.return_type
    lines: list[str] = []
    _headed(f"{head} {fn.name}({params})", fn.body, 0, lines)
    return "\n".join(lines) + "\n"
