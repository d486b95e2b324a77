"""Big-step tree-walking interpreter with step accounting.

Every evaluated node costs one step. Runtime faults never escape
:func:`execute`; they are reported through :class:`ExecOutcome.status`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from . import nodes as N
from .values import Array, Char, type_of, wrap_int

DEFAULT_STEP_LIMIT = 1_000_000

VALUE, RUNTIME_ERROR, STEP_LIMIT = "value", "runtime-error", "step-limit-exceeded"


@dataclass(frozen=True)
class ExecOutcome:
    status: str
    result: Any = None
    steps_used: int = 0
    error: str = ""


class _Fault(Exception):
    pass


class _OutOfSteps(Exception):
    pass


_UNSET = object()
_BREAK = object()
_CONTINUE = object()


class _Return:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


_DEFAULTS = {"int": 0, "boolean": False, "char": Char("\0"), "String": None}


def _num(v) -> int:
    if isinstance(v, bool):
        raise _Fault("expected a number, got boolean")
    if isinstance(v, int):
        return v
    if isinstance(v, Char):
        return ord(v.c)
    raise _Fault(f"expected a number, got {type_of(v)}")


def _to_java_string(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Char):
        return v.c
    if v is None:
        return "null"
    raise _Fault(f"cannot convert {type_of(v)} to String")


def _java_div(a: int, b: int) -> int:
    if b == 0:
        raise _Fault("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _java_mod(a: int, b: int) -> int:
    if b == 0:
        raise _Fault("division by zero")
    return a - b * _java_div(a, b)


def _coerce(v, type_name: str):
    """Check ``v`` against a declared type, widening char to int."""
    if type_name == "int":
        if isinstance(v, Char):
            return ord(v.c)
        if isinstance(v, int) and not isinstance(v, bool):
            return v
    elif type_name == "boolean":
        if isinstance(v, bool):
            return v
    elif type_name == "char":
        if isinstance(v, Char):
            return v
    elif type_name == "String":
        if isinstance(v, str) or v is None:
            return v
    elif type_name.endswith("[]"):
        if isinstance(v, Array) and v.elem == type_name[:-2]:
            return v
    raise _Fault(f"type mismatch: {type_of(v)} is not {type_name}")


def _str_method(s: str, name: str, args: list):
    n = len(args)
    if name == "length" and n == 0:
        return len(s)
    if name == "charAt" and n == 1:
        i = _num(args[0])
        if not 0 <= i < len(s):
            raise _Fault(f"string index {i} out of bounds for length {len(s)}")
        return Char(s[i])
    if name == "substring" and n in (1, 2):
        a = _num(args[0])
        b = _num(args[1]) if n == 2 else len(s)
        if a < 0 or b > len(s) or a > b:
            raise _Fault(f"substring({a}, {b}) out of bounds for length {len(s)}")
        return s[a:b]
    if name in ("indexOf", "lastIndexOf") and n in (1, 2):
        needle = args[0]
        if isinstance(needle, Char):
            needle = needle.c
        if not isinstance(needle, str):
            raise _Fault(f"{name} expects a String or char")
        if name == "indexOf":
            start = max(_num(args[1]), 0) if n == 2 else 0
            return s.find(needle, start)
        if n == 2:
            frm = _num(args[1])
            if frm < 0:
                return -1
            return s.rfind(needle, 0, frm + len(needle))
        return s.rfind(needle)
    if name in ("equals", "equalsIgnoreCase") and n == 1:
        other = args[0]
        if not isinstance(other, str):
            return False
        if name == "equals":
            return s == other
        return s.lower() == other.lower()
    if name in ("contains", "startsWith", "endsWith") and n == 1:
        other = args[0]
        if not isinstance(other, str):
            raise _Fault(f"{name} expects a String")
        if name == "contains":
            return other in s
        if name == "startsWith":
            return s.startswith(other)
        return s.endswith(other)
    if name == "isEmpty" and n == 0:
        return len(s) == 0
    if name == "toUpperCase" and n == 0:
        return s.upper()
    if name == "toLowerCase" and n == 0:
        return s.lower()
    if name == "trim" and n == 0:
        return s.strip(" \t\n\r\0")
    if name == "concat" and n == 1 and isinstance(args[0], str):
        return s + args[0]
    raise _Fault(f"unknown String method {name}/{n}")


class _Machine:
    def __init__(self, step_limit: int):
        self.limit = step_limit
        self.steps = 0
        self.env: dict[str, Any] = {}
        self.types: dict[str, str] = {}

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.limit:
            raise _OutOfSteps()

    # -- statements ---------------------------------------------------------

    def run_block(self, stmts: list):
        declared: list[str] = []
        try:
            for st in stmts:
                if isinstance(st, N.VarDecl):
                    self.tick()
                    self.declare(st, declared)
                    continue
                sig = self.run(st)
                if sig is not None:
                    return sig
            return None
        finally:
            for name in declared:
                self.env.pop(name, None)
                self.types.pop(name, None)

    def declare(self, st: N.VarDecl, declared: list[str]) -> None:
        for d in st.decls:
            if d.init is None:
                value = _UNSET
            elif isinstance(d.init, N.ArrayLit) and d.init.elem_type is None:
                if not st.type.endswith("[]"):
                    raise _Fault("array initializer for non-array variable")
                value = self.array_lit(st.type[:-2], d.init.items)
            else:
                value = _coerce(self.eval(d.init), st.type)
            self.env[d.name] = value
            self.types[d.name] = st.type
            declared.append(d.name)

    def run(self, st: N.Node):
        self.tick()
        t = type(st)
        if t is N.ExprStmt:
            self.eval(st.expr)
            return None
        if t is N.If:
            if self.cond(st.cond):
                return self.run_scoped(st.then)
            if st.other is not None:
                return self.run_scoped(st.other)
            return None
        if t is N.Return:
            return _Return(None if st.value is None else self.eval(st.value))
        if t is N.Block:
            return self.run_block(st.stmts)
        if t is N.For:
            return self.run_for(st)
        if t is N.While:
            while self.cond(st.cond):
                sig = self.run_scoped(st.body)
                if sig is _BREAK:
                    break
                if sig is _CONTINUE:
                    continue
                if sig is not None:
                    return sig
            return None
        if t is N.Break:
            return _BREAK
        if t is N.Continue:
            return _CONTINUE
        if t is N.VarDecl:
            # a declaration as the sole body of if/while has no visible effect
            self.declare(st, [])
            for d in st.decls:
                self.env.pop(d.name, None)
                self.types.pop(d.name, None)
            return None
        raise _Fault(f"cannot execute {t.__name__}")

    def run_scoped(self, st: N.Node):
        if type(st) is N.Block:
            self.tick()
            return self.run_block(st.stmts)
        return self.run(st)

    def run_for(self, st: N.For):
        declared: list[str] = []
        try:
            for item in st.init:
                self.tick()
                if isinstance(item, N.VarDecl):
                    self.declare(item, declared)
                else:
                    self.eval(item.expr)
            while st.cond is None or self.cond(st.cond):
                sig = self.run_scoped(st.body)
                if sig is _BREAK:
                    break
                if sig is not None and sig is not _CONTINUE:
                    return sig
                for u in st.update:
                    self.eval(u)
            return None
        finally:
            for name in declared:
                self.env.pop(name, None)
                self.types.pop(name, None)

    def cond(self, e: N.Node) -> bool:
        v = self.eval(e)
        if not isinstance(v, bool):
            raise _Fault(f"condition must be boolean, got {type_of(v)}")
        return v

    # -- expressions --------------------------------------------------------

    def eval(self, e: N.Node):
        self.tick()
        t = type(e)
        if t is N.Name:
            v = self.env.get(e.ident, _UNSET)
            if v is _UNSET:
                raise _Fault(f"variable {e.ident} used before assignment")
            return v
        if t is N.IntLit:
            return wrap_int(e.value)
        if t is N.Binary:
            return self.binary(e)
        if t is N.Call:
            recv = self.eval(e.receiver)
            args = [self.eval(a) for a in e.args]
            if isinstance(recv, str):
                return _str_method(recv, e.method, args)
            if recv is None:
                raise _Fault("null dereference")
            raise _Fault(f"{type_of(recv)} has no method {e.method}")
        if t is N.Index:
            arr = self.eval(e.array)
            i = _num(self.eval(e.index))
            if not isinstance(arr, Array):
                raise _Fault(f"cannot index {type_of(arr)}")
            if not 0 <= i < len(arr.items):
                raise _Fault(f"array index {i} out of bounds for length {len(arr.items)}")
            return arr.items[i]
        if t is N.Assign:
            return self.assign(e)
        if t is N.IncDec:
            old = _num(self.eval(e.target))
            new = wrap_int(old + 1 if e.op == "++" else old - 1)
            self.store(e.target, new)
            return new if e.prefix else old
        if t is N.StrLit:
            return e.value
        if t is N.CharLit:
            return Char(e.value)
        if t is N.BoolLit:
            return e.value
        if t is N.Unary:
            v = self.eval(e.operand)
            if e.op == "!":
                if not isinstance(v, bool):
                    raise _Fault("! expects boolean")
                return not v
            n = _num(v)
            return wrap_int(-n) if e.op == "-" else n
        if t is N.Length:
            arr = self.eval(e.array)
            if not isinstance(arr, Array):
                raise _Fault(f"{type_of(arr)} has no length field")
            return len(arr.items)
        if t is N.Conditional:
            return self.eval(e.then) if self.cond(e.cond) else self.eval(e.other)
        if t is N.StaticCall:
            args = [_num(self.eval(a)) for a in e.args]
            if e.method == "abs" and len(args) == 1:
                return wrap_int(abs(args[0]))
            if e.method == "max" and len(args) == 2:
                return max(args)
            if e.method == "min" and len(args) == 2:
                return min(args)
            raise _Fault(f"bad call {e.owner}.{e.method}/{len(args)}")
        if t is N.NewArray:
            size = _num(self.eval(e.size))
            if size < 0:
                raise _Fault("negative array size")
            return Array(e.elem_type, [_DEFAULTS[e.elem_type]] * size)
        if t is N.ArrayLit:
            if e.elem_type is None:
                raise _Fault("bare array initializer outside a declaration")
            return self.array_lit(e.elem_type, e.items)
        raise _Fault(f"cannot evaluate {t.__name__}")

    def array_lit(self, elem: str, items: list) -> Array:
        return Array(elem, [_coerce(self.eval(x), elem) for x in items])

    def binary(self, e: N.Binary):
        op = e.op
        if op == "&&":
            return self.cond(e.left) and self.cond(e.right)
        if op == "||":
            return self.cond(e.left) or self.cond(e.right)
        a = self.eval(e.left)
        b = self.eval(e.right)
        return self.apply(op, a, b)

    def apply(self, op: str, a, b):
        if op == "+" and (isinstance(a, str) or isinstance(b, str)):
            return _to_java_string(a) + _to_java_string(b)
        if op in ("==", "!="):
            if isinstance(a, bool) or isinstance(b, bool):
                if not (isinstance(a, bool) and isinstance(b, bool)):
                    raise _Fault("incomparable types")
                eq = a == b
            elif isinstance(a, (int, Char)) and isinstance(b, (int, Char)):
                eq = _num(a) == _num(b)
            elif isinstance(a, Array) or isinstance(b, Array):
                eq = a is b
            elif (isinstance(a, str) or a is None) and (isinstance(b, str) or b is None):
                eq = a == b
            else:
                raise _Fault("incomparable types")
            return eq if op == "==" else not eq
        x = _num(a)
        y = _num(b)
        if op == "+":
            return wrap_int(x + y)
        if op == "-":
            return wrap_int(x - y)
        if op == "*":
            return wrap_int(x * y)
        if op == "/":
            return wrap_int(_java_div(x, y))
        if op == "%":
            return _java_mod(x, y)
        if op == "<":
            return x < y
        if op == "<=":
            return x <= y
        if op == ">":
            return x > y
        if op == ">=":
            return x >= y
        raise _Fault(f"unknown operator {op}")

    def assign(self, e: N.Assign):
        if e.op == "=":
            value = self.eval(e.value)
        else:
            current = self.eval(e.target)
            value = self.apply(e.op[0], current, self.eval(e.value))
            if isinstance(current, Char) and not isinstance(value, str):
                # compound assignment narrows back to char
                value = Char(chr(value % 0x110000))
        return self.store(e.target, value)

    def store(self, target: N.Node, value):
        if isinstance(target, N.Name):
            value = _coerce(value, self.types[target.ident])
            self.env[target.ident] = value
            return value
        arr = self.eval(target.array)
        i = _num(self.eval(target.index))
        if not isinstance(arr, Array):
            raise _Fault(f"cannot index {type_of(arr)}")
        if not 0 <= i < len(arr.items):
            raise _Fault(f"array index {i} out of bounds for length {len(arr.items)}")
        value = _coerce(value, arr.elem)
        arr.items[i] = value
        return value


def _copy_in(v):
    if isinstance(v, Array):
        return Array(v.elem, list(v.items))
    return v


def execute(fn: N.Function, inputs: list, step_limit: int = DEFAULT_STEP_LIMIT) -> ExecOutcome:
    """Run ``fn`` on ``inputs``; runtime faults are encoded in the status."""
    if step_limit <= 0:
        raise ValueError("step_limit must be positive")
    m = _Machine(step_limit)
    try:
        if len(inputs) != len(fn.params):
            raise _Fault(f"expected {len(fn.params)} arguments, got {len(inputs)}")
        for p, v in zip(fn.params, inputs):
            m.env[p.name] = _coerce(_copy_in(v), p.type)
            m.types[p.name] = p.type
        m.tick()
        sig = m.run_block(fn.body.stmts)
        if isinstance(sig, _Return):
            if fn.return_type == "void":
                return ExecOutcome(VALUE, None, m.steps)
            if sig.value is None:
                raise _Fault("missing return value")
            return ExecOutcome(VALUE, _coerce(sig.value, fn.return_type), m.steps)
        if fn.return_type == "void":
            return ExecOutcome(VALUE, None, m.steps)
        raise _Fault("missing return statement")
    except _Fault as exc:
        return ExecOutcome(RUNTIME_ERROR, None, min(m.steps, step_limit), str(exc))
    except _OutOfSteps:
        return ExecOutcome(STEP_LIMIT, None, step_limit)
    except RecursionError:
        return ExecOutcome(RUNTIME_ERROR, None, min(m.steps, step_limit), "nesting too deep")
