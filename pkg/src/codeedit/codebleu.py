"""CodeBLEU for the teaching language.

Four components, each in [0, 1]: BLEU over lexer tokens, BLEU with keyword
tokens up-weighted, matching of anonymized AST subtrees, and matching of
normalized def-use edges.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union

from .minilang import nodes as N
from .minilang.lexer import KEYWORDS, Token, tokenize
from .minilang.problems import try_parse

DEFAULT_WEIGHTS = (0.25, 0.25, 0.25, 0.25)
DEFAULT_KEYWORD_WEIGHT = 4.0


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class CodeBleuReport:
    ngram: float
    weighted_ngram: float
    syntax: float
    dataflow: float
    combined: float

    def to_dict(self) -> dict:
        return asdict(self)


def _lexemes(x) -> list[str]:
    if isinstance(x, str):
        return [t.lexeme for t in tokenize(x, lenient=True)]
    return [t.lexeme if isinstance(t, Token) else str(t) for t in x]


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _bleu(cand: list[str], ref: list[str], max_n: int, weight) -> float:
    if not cand or not ref:
        raise EmptyInput("candidate and reference must both contain tokens")
    log_p = 0.0
    for n in range(1, max_n + 1):
        c = _ngram_counts(cand, n)
        r = _ngram_counts(ref, n)
        matched = 0.0
        total = 0.0
        for gram, cnt in c.items():
            w = sum(weight(t) for t in gram) / n
            matched += min(cnt, r.get(gram, 0)) * w
            total += cnt * w
        # add-one smoothing applies only to orders with no match
        p = matched / total if matched > 0 else 1.0 / (total + 1.0)
        log_p += math.log(p) / max_n
    bp = 1.0 if len(cand) > len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return bp * math.exp(log_p)


def ngram_match(candidate, reference, max_n: int = 4) -> float:
    """Sentence BLEU with uniform weights, brevity penalty, add-one smoothing."""
    return _bleu(_lexemes(candidate), _lexemes(reference), max_n, lambda t: 1.0)


def weighted_ngram_match(candidate, reference, keyword_weight: float = DEFAULT_KEYWORD_WEIGHT,
                         max_n: int = 4) -> float:
    """BLEU where each n-gram counts with the mean weight of its tokens."""
    kw = float(keyword_weight)

    def weight(t: str) -> float:
        return kw if t in KEYWORDS else 1.0

    return _bleu(_lexemes(candidate), _lexemes(reference), max_n, weight)


# -- syntax ---------------------------------------------------------------

def _label(node: N.Node) -> str:
    name = type(node).__name__
    if isinstance(node, (N.Binary, N.Unary, N.Assign)):
        return f"{name}{node.op}"
    if isinstance(node, N.IncDec):
        return f"{name}{node.op}{'pre' if node.prefix else 'post'}"
    if isinstance(node, N.Call):
        return f"{name}.{node.method}"
    if isinstance(node, N.StaticCall):
        return f"{name}.{node.owner}.{node.method}"
    if isinstance(node, (N.VarDecl, N.Param)):
        return f"{name}:{node.type}"
    if isinstance(node, N.Function):
        return f"{name}:{node.return_type}"
    if isinstance(node, (N.NewArray, N.ArrayLit)):
        return f"{name}:{node.elem_type}"
    if isinstance(node, N.If):
        return f"{name}:{'else' if node.other is not None else 'noelse'}"
    return name


def _subtrees(fn: N.Function) -> Counter:
    """Canonical strings of every subtree with at least one child."""
    out: Counter = Counter()

    def visit(node: N.Node) -> str:
        kids = [visit(c) for c in node.children()]
        text = _label(node) + ("(" + ",".join(kids) + ")" if kids else "")
        if kids:
            out[text] += 1
        return text

    visit(fn)
    return out


def _as_ast(x) -> Optional[N.Function]:
    if isinstance(x, N.Function):
        return x
    if isinstance(x, str):
        return try_parse(x)
    raise TypeError(f"expected source text or Function, got {type(x).__name__}")


def _reference_ast(x) -> N.Function:
    fn = _as_ast(x)
    if fn is None:
        raise ValueError("reference program does not parse")
    return fn


def syntax_match(candidate, reference) -> float:
    ref = _subtrees(_reference_ast(reference))
    cand_fn = _as_ast(candidate)
    if cand_fn is None:
        return 0.0
    cand = _subtrees(cand_fn)
    total = sum(ref.values())
    matched = sum(min(cnt, cand.get(t, 0)) for t, cnt in ref.items())
    return matched / total if total else 1.0


# -- dataflow -------------------------------------------------------------

class _DefUse:
    def __init__(self):
        self.order: dict = {}
        self.last_def: dict = {}
        self.edges: Counter = Counter()

    def var(self, name: str) -> str:
        if name not in self.order:
            self.order[name] = f"var_{len(self.order)}"
        return self.order[name]

    def define(self, name: str, kind: str) -> None:
        self.last_def[self.var(name)] = kind

    def use(self, name: str, context: str) -> None:
        v = self.var(name)
        d = self.last_def.get(v)
        if d is not None:
            self.edges[(v, d, context)] += 1

    def expr(self, e: Optional[N.Node], ctx: str) -> None:
        if e is None:
            return
        if isinstance(e, N.Name):
            self.use(e.ident, ctx)
        elif isinstance(e, N.Assign):
            self.expr(e.value, f"Assign{e.op}:value")
            if isinstance(e.target, N.Name):
                if e.op != "=":
                    self.use(e.target.ident, f"Assign{e.op}:target")
                self.define(e.target.ident, f"Assign{e.op}")
            else:
                self.expr(e.target.array, "Assign:element")
                self.expr(e.target.index, "Assign:index")
        elif isinstance(e, N.IncDec):
            if isinstance(e.target, N.Name):
                self.use(e.target.ident, f"IncDec{e.op}")
                self.define(e.target.ident, f"IncDec{e.op}")
            else:
                self.expr(e.target, f"IncDec{e.op}")
        else:
            label = _label(e)
            for k, child in enumerate(e.children()):
                self.expr(child, f"{label}#{k}")

    def stmt(self, s: Optional[N.Node]) -> None:
        if s is None:
            return
        if isinstance(s, N.Block):
            for st in s.stmts:
                self.stmt(st)
        elif isinstance(s, N.VarDecl):
            for d in s.decls:
                self.expr(d.init, "Declarator:init")
                self.define(d.name, "decl" if d.init is not None else "decl-empty")
        elif isinstance(s, N.ExprStmt):
            self.expr(s.expr, "ExprStmt")
        elif isinstance(s, N.If):
            self.expr(s.cond, "If:cond")
            self.stmt(s.then)
            self.stmt(s.other)
        elif isinstance(s, N.While):
            self.expr(s.cond, "While:cond")
            self.stmt(s.body)
        elif isinstance(s, N.For):
            for item in s.init:
                self.stmt(item)
            self.expr(s.cond, "For:cond")
            self.stmt(s.body)
            for u in s.update:
                self.expr(u, "For:update")
        elif isinstance(s, N.Return):
            self.expr(s.value, "Return")


def dataflow_edges(fn: N.Function) -> Counter:
    """Multiset of ``(var_k, definition kind, use context)`` edges."""
    du = _DefUse()
    for p in fn.params:
        du.define(p.name, f"param:{p.type}")
    du.stmt(fn.body)
    return du.edges


def dataflow_match(candidate, reference) -> float:
    ref = dataflow_edges(_reference_ast(reference))
    cand_fn = _as_ast(candidate)
    if cand_fn is None:
        return 0.0
    cand = dataflow_edges(cand_fn)
    total = sum(ref.values())
    if total == 0:
        return 1.0 if sum(cand.values()) == 0 else 0.0
    matched = sum(min(cnt, cand.get(e, 0)) for e, cnt in ref.items())
    return matched / total


def _check_weights(weights) -> tuple:
    w = tuple(float(x) for x in weights)
    if len(w) != 4 or any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
        raise ValueError(f"weights must be four non-negative reals summing to 1, got {weights}")
    return w


def codebleu(candidate: Union[str, N.Function], reference: Union[str, N.Function],
             weights=DEFAULT_WEIGHTS, keyword_weight: float = DEFAULT_KEYWORD_WEIGHT) -> CodeBleuReport:
    a, b, g, d = _check_weights(weights)
    cand_text = candidate if isinstance(candidate, str) else _print(candidate)
    ref_text = reference if isinstance(reference, str) else _print(reference)
    ng = ngram_match(cand_text, ref_text)
    wng = weighted_ngram_match(cand_text, ref_text, keyword_weight)
    syn = syntax_match(candidate, reference)
    df = dataflow_match(candidate, reference)
    return CodeBleuReport(ng, wng, syn, df, a * ng + b * wng + g * syn + d * df)


def _print(fn: N.Function) -> str:
    from .minilang.printer import pretty
    return pretty(fn)
