"""Bug injectors: small AST rewrites that model common student mistakes.

A site is addressed by its path from the function root, a tuple of
``(field, index)`` steps, so a site found on the reference can be located
again on any copy of it.
"""
from __future__ import annotations

import copy
from dataclasses import fields
from typing import Callable, Iterator

from ..minilang import nodes as N

Path = tuple

RELATIONAL = ("<", "<=", ">", ">=")
FLIP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "==": "!=", "!=": "=="}
INDEX_METHODS = ("charAt", "substring")


def iter_paths(node: N.Node, path: Path = ()) -> Iterator[tuple[Path, N.Node]]:
    yield path, node
    for f in fields(node):
        if f.name == "span":
            continue
        value = getattr(node, f.name)
        if isinstance(value, N.Node):
            yield from iter_paths(value, path + ((f.name, None),))
        elif isinstance(value, list):
            for i, item in enumerate(value):
                if isinstance(item, N.Node):
                    yield from iter_paths(item, path + ((f.name, i),))


def node_at(root: N.Node, path: Path) -> N.Node:
    node = root
    for name, idx in path:
        node = getattr(node, name)
        if idx is not None:
            node = node[idx]
    return node


def replace_at(root: N.Node, path: Path, new: N.Node) -> None:
    parent = node_at(root, path[:-1])
    name, idx = path[-1]
    if idx is None:
        setattr(parent, name, new)
    else:
        getattr(parent, name)[idx] = new


def _bump_literal(e: N.Node):
    """Return a copy of ``e`` with its trailing int constant moved by one, or None."""
    if isinstance(e, N.IntLit):
        return N.IntLit(e.value + 1)
    if isinstance(e, N.Binary) and e.op in ("+", "-") and isinstance(e.right, N.IntLit):
        return N.Binary(e.op, e.left, N.IntLit(e.right.value + 1))
    return None


# -- off-by-one loop bound ----------------------------------------------------

def _loop_bound_sites(fn: N.Function) -> list:
    out = []
    for path, node in iter_paths(fn):
        if isinstance(node, (N.For, N.While)):
            cond = node.cond
            if isinstance(cond, N.Binary) and cond.op in RELATIONAL:
                out.append(path + (("cond", None),))
    return out


def _off_by_one(fn: N.Function, path: Path) -> None:
    cond = node_at(fn, path)
    bumped = _bump_literal(cond.right)
    if bumped is None:
        bumped = N.Binary("-", cond.right, N.IntLit(1))
    cond.right = bumped


# -- flipped comparison in a branch condition --------------------------------

def _if_comparison_sites(fn: N.Function) -> list:
    out = []
    for path, node in iter_paths(fn):
        if isinstance(node, N.If):
            base = path + (("cond", None),)
            for sub, e in iter_paths(node.cond, base):
                if isinstance(e, N.Binary) and e.op in FLIP:
                    out.append(sub)
    return out


def _flip(fn: N.Function, path: Path) -> None:
    e = node_at(fn, path)
    e.op = FLIP[e.op]


# -- wrong constant in index arithmetic --------------------------------------

def _index_sites(fn: N.Function) -> list:
    out = []
    for path, node in iter_paths(fn):
        if isinstance(node, N.Index):
            cands = [(path + (("index", None),), node.index)]
        elif isinstance(node, N.Call) and node.method in INDEX_METHODS:
            cands = [(path + (("args", i),), a) for i, a in enumerate(node.args)]
        else:
            continue
        for p, e in cands:
            if _bump_literal(e) is not None:
                out.append(p)
    return out


def _index_constant(fn: N.Function, path: Path) -> None:
    replace_at(fn, path, _bump_literal(node_at(fn, path)))


# -- missing else branch ------------------------------------------------------

def _else_sites(fn: N.Function) -> list:
    return [path for path, node in iter_paths(fn) if isinstance(node, N.If) and node.other is not None]


def _drop_else(fn: N.Function, path: Path) -> None:
    node_at(fn, path).other = None


# -- wrong literal in a return -----------------------------------------------

_LITERALS = (N.IntLit, N.BoolLit, N.StrLit, N.CharLit)


def _return_literal_sites(fn: N.Function) -> list:
    return [path + (("value", None),) for path, node in iter_paths(fn)
            if isinstance(node, N.Return) and isinstance(node.value, _LITERALS)]


def _wrong_literal(fn: N.Function, path: Path) -> None:
    lit = node_at(fn, path)
    if isinstance(lit, N.BoolLit):
        new = N.BoolLit(not lit.value)
    elif isinstance(lit, N.IntLit):
        new = N.IntLit(lit.value + 1)
    elif isinstance(lit, N.StrLit):
        new = N.StrLit(" " if lit.value == "" else lit.value[:-1])
    else:
        new = N.CharLit(chr(ord(lit.value) + 1))
    replace_at(fn, path, new)


class Injector:
    def __init__(self, name: str, sites: Callable, apply: Callable, removes_subtree: bool = False):
        self.name = name
        self.sites = sites
        self.apply = apply
        self.removes_subtree = removes_subtree

    def __repr__(self) -> str:
        return f"Injector({self.name})"


INJECTORS = {
    "off_by_one": Injector("off_by_one", _loop_bound_sites, _off_by_one),
    "flip_comparison": Injector("flip_comparison", _if_comparison_sites, _flip),
    "index_constant": Injector("index_constant", _index_sites, _index_constant),
    "missing_else": Injector("missing_else", _else_sites, _drop_else, removes_subtree=True),
    "wrong_return_literal": Injector("wrong_return_literal", _return_literal_sites, _wrong_literal),
}

# subtree-removing rewrites go last so every other site path stays valid
APPLY_ORDER = ["off_by_one", "flip_comparison", "index_constant", "wrong_return_literal", "missing_else"]


def _prefix(a: Path, b: Path) -> bool:
    return len(a) <= len(b) and b[:len(a)] == a


def compatible(bugs: list) -> bool:
    """Bugs are (injector name, path); sites must not overlap or nest."""
    for i, (na, pa) in enumerate(bugs):
        for nb, pb in bugs[i + 1:]:
            if _prefix(pa, pb) or _prefix(pb, pa):
                return False
            # a dropped else branch must not contain another site
            if na == "missing_else" and _prefix(pa + (("other", None),), pb):
                return False
            if nb == "missing_else" and _prefix(pb + (("other", None),), pa):
                return False
    return True


def apply_bugs(reference: N.Function, bugs) -> N.Function:
    fn = copy.deepcopy(reference)
    for name in APPLY_ORDER:
        for bname, path in bugs:
            if bname == name:
                INJECTORS[name].apply(fn, path)
    return fn
