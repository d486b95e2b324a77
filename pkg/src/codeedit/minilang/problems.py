"""Problems, test suites and test-case masks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from . import nodes as N
from .interp import DEFAULT_STEP_LIMIT, VALUE, execute
from .lexer import LexError, tokenize
from .parser import ParseError, parse
from .values import from_literal, to_literal, values_equal


@dataclass(frozen=True)
class TestCaseMask:
    """Pass/fail bits in the problem's canonical test order."""
    bits: tuple
    __test__ = False

    @classmethod
    def from_string(cls, text: str) -> "TestCaseMask":
        if not text or any(c not in "01" for c in text):
            raise ValueError(f"mask must be a nonempty bit string, got {text!r}")
        return cls(tuple(int(c) for c in text))

    @classmethod
    def zeros(cls, n: int) -> "TestCaseMask":
        return cls((0,) * n)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def all_pass(self) -> bool:
        return all(self.bits)


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # keep pytest from collecting this class

    test_id: str
    inputs: tuple
    expected: Any


@dataclass(frozen=True)
class Signature:
    name: str
    params: tuple  # of (name, type)
    return_type: str


@dataclass
class Problem:
    problem_id: str
    signature: Signature
    tests: list
    topic: Optional[str] = None
    reference: Optional[str] = None
    extra: dict = field(default_factory=dict)

    @property
    def test_count(self) -> int:
        return len(self.tests)

    @classmethod
    def from_json(cls, data: dict) -> "Problem":
        sig = data["signature"]
        params = tuple((p["name"], p["type"]) for p in sig["params"])
        signature = Signature(sig["name"], params, sig["return_type"])
        tests = []
        for t in data["tests"]:
            if len(t["inputs"]) != len(params):
                raise ValueError(f"{data['problem_id']}/{t['test_id']}: arity mismatch")
            inputs = tuple(from_literal(v, ty) for v, (_, ty) in zip(t["inputs"], params))
            tests.append(TestCase(str(t["test_id"]), inputs, from_literal(t["expected"], signature.return_type)))
        return cls(data["problem_id"], signature, tests, data.get("topic"), data.get("reference"))

    def to_json(self) -> dict:
        out = {
            "problem_id": self.problem_id,
            "signature": {
                "name": self.signature.name,
                "params": [{"name": n, "type": t} for n, t in self.signature.params],
                "return_type": self.signature.return_type,
            },
            "tests": [
                {"test_id": t.test_id, "inputs": [to_literal(v) for v in t.inputs],
                 "expected": to_literal(t.expected)}
                for t in self.tests
            ],
        }
        if self.topic is not None:
            out["topic"] = self.topic
        if self.reference is not None:
            out["reference"] = self.reference
        return out


def run_tests(ast: Optional[N.Function], tests: list, step_limit: int = DEFAULT_STEP_LIMIT) -> TestCaseMask:
    """Bit i is 1 iff test i returns a value equal to its expected value."""
    if ast is None:
        return TestCaseMask.zeros(len(tests))
    bits = []
    for t in tests:
        out = execute(ast, list(t.inputs), step_limit)
        bits.append(int(out.status == VALUE and values_equal(out.result, t.expected)))
    return TestCaseMask(tuple(bits))


def try_parse(source: str) -> Optional[N.Function]:
    try:
        return parse(tokenize(source))
    except (LexError, ParseError):
        return None


def mask_for_source(source: str, problem: Problem, step_limit: int = DEFAULT_STEP_LIMIT) -> TestCaseMask:
    """Total: non-parsing code gets the all-zero mask."""
    return run_tests(try_parse(source), problem.tests, step_limit)


def load_problem(path: Union[str, Path]) -> Problem:
    with open(path, encoding="utf-8") as fh:
        return Problem.from_json(json.load(fh))


def load_problems(problems_dir: Union[str, Path]) -> dict:
    problems = {}
    for path in sorted(Path(problems_dir).glob("*.json")):
        p = load_problem(path)
        problems[p.problem_id] = p
    return problems


def save_problems(problems: Iterable[Problem], problems_dir: Union[str, Path]) -> None:
    out = Path(problems_dir)
    out.mkdir(parents=True, exist_ok=True)
    for p in problems:
        (out / f"{p.problem_id}.json").write_text(
            json.dumps(p.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
