"""Desk-scale synthetic submission histories.

Each simulated student attempts a subset of the bank problems. A trajectory
starts from the reference solution with several injected bugs, written in the
student's own naming style, and removes the bugs one per submission. Most
trajectories stop before the code is fully fixed.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Optional

from ..minilang import nodes as N
from ..minilang import parse_source, pretty
from ..minilang.lexer import KEYWORDS
from .bank import BANK, make_problem
from .inject import INJECTORS, apply_bugs, compatible

log = logging.getLogger(__name__)

SYNONYMS = {
    "str": ["s", "word", "text", "input"],
    "result": ["res", "out", "ans", "newStr"],
    "length": ["len", "n", "size", "strLen"],
    "i": ["j", "k", "idx", "index"],
    "count": ["cnt", "total", "evens", "num"],
    "nums": ["arr", "array", "values", "a"],
    "lastX": ["xPos", "lastIndex", "posX", "x"],
    "first": ["start", "firstBread", "begin", "f"],
    "last": ["end", "lastBread", "stop", "l"],
    "frontLen": ["len", "count", "numChars", "size"],
    "front": ["prefix", "head", "part", "sub"],
    "largest": ["max", "big", "high", "maxVal"],
    "smallest": ["min", "small", "low", "minVal"],
    "bonus": ["extra", "limit", "add", "offset"],
    "speed": ["sp", "mph", "velocity", "v"],
    "isBirthday": ["birthday", "bday", "isBday", "b"],
    "sum": ["total", "s", "result", "added"],
    "you": ["me", "a", "mine", "myStyle"],
    "date": ["other", "b", "them", "dateStyle"],
    "a": ["x", "first", "num1", "m"],
    "b": ["y", "second", "num2", "n"],
    "n": ["times", "count", "reps", "k"],
}


class ConfigError(ValueError):
    pass


@dataclass
class SynthConfig:
    n_students: int = 120
    problems: Optional[list] = None  # bank ids; None = whole bank
    injectors: dict = field(default_factory=dict)  # problem id -> injector names
    attempt_prob: float = 0.8
    min_bugs: int = 2
    max_bugs: int = 4
    p_full_fix: float = 0.1
    rename_prob: float = 0.5
    start_time: str = "2019-01-07T09:00:00"


def _collect_names(fn: N.Function) -> list[str]:
    seen: list[str] = []
    for node in fn.walk():
        name = None
        if isinstance(node, (N.Param, N.Declarator)):
            name = node.name
        elif isinstance(node, N.Name):
            name = node.ident
        if name is not None and name not in seen:
            seen.append(name)
    return seen


def rename(fn: N.Function, mapping: dict) -> None:
    for node in fn.walk():
        if isinstance(node, (N.Param, N.Declarator)) and node.name in mapping:
            node.name = mapping[node.name]
        elif isinstance(node, N.Name) and node.ident in mapping:
            node.ident = mapping[node.ident]


def style_mapping(names: list[str], rng: random.Random, prob: float) -> dict:
    """Pick a collision-free renaming that models one student's habits."""
    taken = set(names)
    mapping: dict = {}
    for name in names:
        if rng.random() >= prob:
            continue
        options = [c for c in SYNONYMS.get(name, [name + "2", "my" + name[:1].upper() + name[1:]])
                   if c not in taken and c not in KEYWORDS and c not in ("Math", "length")]
        if not options:
            continue
        choice = rng.choice(options)
        mapping[name] = choice
        taken.add(choice)
    # an unmapped name may collide with a new one; resolve by keeping originals unique
    final = {}
    used = set()
    for name in names:
        new = mapping.get(name, name)
        if new in used:
            new = name
        used.add(new)
        final[name] = new
    if len(set(final.values())) != len(names):
        return {}
    return {k: v for k, v in final.items() if k != v}


def _choose_bugs(reference: N.Function, allowed: list[str], n: int, rng: random.Random):
    sites = {name: INJECTORS[name].sites(reference) for name in allowed}
    for _ in range(50):
        names = rng.sample(allowed, n)
        bugs = [(name, rng.choice(sites[name])) for name in names]
        if compatible(bugs):
            return bugs
    return None


def synthesize_corpus(config: SynthConfig, seed: int):
    """Return ``(problems, rows)``; rows follow the submissions-file schema."""
    rng = random.Random(seed)
    ids = list(config.problems) if config.problems else list(BANK)
    problems = []
    references = {}
    allowed = {}
    for pid in ids:
        if pid not in BANK:
            raise ConfigError(f"unknown bank problem {pid!r}")
        problems.append(make_problem(pid))
        ref = parse_source(BANK[pid]["reference"])
        references[pid] = ref
        names = list(config.injectors.get(pid, BANK[pid]["injectors"]))
        for name in names:
            if name not in INJECTORS:
                raise ConfigError(f"unknown injector {name!r}")
            if not INJECTORS[name].sites(ref):
                raise ConfigError(f"injector {name!r} cannot apply to problem {pid!r}")
        if not names:
            raise ConfigError(f"problem {pid!r} has no injectors")
        allowed[pid] = names

    base = datetime.fromisoformat(config.start_time)
    rows = []
    for s in range(config.n_students):
        student = f"s{s:04d}"
        style_rng = random.Random(rng.getrandbits(64))
        clock = base + timedelta(minutes=rng.randrange(0, 60 * 24 * 14))
        for pid in ids:
            if rng.random() >= config.attempt_prob:
                continue
            ref = references[pid]
            hi = min(config.max_bugs, len(allowed[pid]))
            lo = min(config.min_bugs, hi)
            n_bugs = rng.randint(lo, hi)
            bugs = _choose_bugs(ref, allowed[pid], n_bugs, rng)
            while bugs is None and n_bugs > 1:
                n_bugs -= 1
                bugs = _choose_bugs(ref, allowed[pid], n_bugs, rng)
            if bugs is None:
                raise ConfigError(f"no compatible bug set for problem {pid!r}")
            order = list(bugs)
            rng.shuffle(order)
            if rng.random() < config.p_full_fix:
                fixes = n_bugs
            else:
                fixes = rng.randint(1, max(1, n_bugs - 1)) if n_bugs > 1 else 1
            mapping = style_mapping(_collect_names(ref), style_rng, config.rename_prob)
            active = list(bugs)
            for step in range(fixes + 1):
                fn = apply_bugs(ref, active)
                rename(fn, mapping)
                clock += timedelta(seconds=rng.randrange(30, 900))
                rows.append({
                    "student_id": student,
                    "problem_id": pid,
                    "timestamp": clock.isoformat(),
                    "code": pretty(fn),
                    "bugs": sorted(name for name, _ in active),
                })
                if step < fixes:
                    active.remove(order[step])
    log.info("synthesized %d submissions for %d students", len(rows), config.n_students)
    return problems, rows
