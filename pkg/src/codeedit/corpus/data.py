"""Submissions, code-edit pairs, labeled quadruples and student splits."""
from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Optional, Union

from ..minilang import TestCaseMask, load_problems, mask_for_source
from ..minilang.interp import DEFAULT_STEP_LIMIT


class FormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownProblem(KeyError):
    pass


class ProblemMismatch(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class Submission:
    student_id: str
    problem_id: str
    seq_index: int
    code: str
    mask: TestCaseMask
    timestamp: str = ""
    bugs: tuple = ()

    @property
    def ref(self) -> tuple:
        return (self.student_id, self.problem_id, self.seq_index)

    def to_json(self) -> dict:
        return {"student_id": self.student_id, "problem_id": self.problem_id,
                "seq_index": self.seq_index, "timestamp": self.timestamp,
                "code": self.code, "mask": str(self.mask), "bugs": list(self.bugs)}

    @classmethod
    def from_json(cls, d: dict) -> "Submission":
        return cls(d["student_id"], d["problem_id"], int(d["seq_index"]), d["code"],
                   TestCaseMask.from_string(d["mask"]), d.get("timestamp", ""),
                   tuple(d.get("bugs", ())))


@dataclass(frozen=True)
class EditPair:
    first: Submission
    second: Submission

    @property
    def problem_id(self) -> str:
        return self.first.problem_id

    @property
    def student_id(self) -> str:
        return self.first.student_id

    @property
    def transition(self) -> tuple:
        return (str(self.first.mask), str(self.second.mask))

    @property
    def key(self) -> tuple:
        return (self.problem_id,) + self.transition

    @property
    def ref(self) -> tuple:
        return self.first.ref

    @property
    def fixed_bugs(self) -> tuple:
        """Injector tags present before the edit and gone after it."""
        return tuple(sorted(set(self.first.bugs) - set(self.second.bugs)))


@dataclass(frozen=True)
class Quadruple:
    pair_a: EditPair
    pair_b: EditPair
    label: int


@dataclass
class DatasetSplit:
    train: list
    validation: list
    test: list
    seed: int = 0
    quadruples: dict = field(default_factory=dict)

    def split_of(self, student_id: str) -> Optional[str]:
        for name in ("train", "validation", "test"):
            if student_id in getattr(self, name):
                return name
        return None

    def to_json(self) -> dict:
        return {"train": list(self.train), "validation": list(self.validation),
                "test": list(self.test), "seed": self.seed}


_REQUIRED = ("student_id", "problem_id", "timestamp", "code")


def read_submission_rows(path: Union[str, Path]) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(row, dict):
                raise FormatError(lineno, "expected a JSON object")
            if "_meta" in row:
                # provenance header written by the pipeline
                continue
            for key in _REQUIRED:
                if key not in row:
                    raise FormatError(lineno, f"missing field {key!r}")
                if not isinstance(row[key], str):
                    raise FormatError(lineno, f"field {key!r} must be a string")
            row["_line"] = lineno
            rows.append(row)
    return rows


def ingest_rows(rows: list[dict], problems: dict, step_limit: int = DEFAULT_STEP_LIMIT) -> list[Submission]:
    seen = {}
    for row in rows:
        line = row.get("_line", 0)
        if row["problem_id"] not in problems:
            raise UnknownProblem(f"line {line}: no problem file for {row['problem_id']!r}")
        k = (row["student_id"], row["problem_id"], row["timestamp"])
        if k in seen:
            raise FormatError(line, f"duplicate submission {k} (first on line {seen[k]})")
        seen[k] = line
    ordered = sorted(rows, key=lambda r: (r["student_id"], r["problem_id"], r["timestamp"]))
    out = []
    counters: dict = defaultdict(int)
    for row in ordered:
        hk = (row["student_id"], row["problem_id"])
        seq = counters[hk]
        counters[hk] += 1
        mask = mask_for_source(row["code"], problems[row["problem_id"]], step_limit)
        out.append(Submission(row["student_id"], row["problem_id"], seq, row["code"], mask,
                              row["timestamp"], tuple(row.get("bugs", ()))))
    return out


def ingest(submissions_file, problems_dir, step_limit: int = DEFAULT_STEP_LIMIT) -> list[Submission]:
    """Read a submissions JSONL file and compute every submission's mask."""
    problems = load_problems(problems_dir)
    return ingest_rows(read_submission_rows(submissions_file), problems, step_limit)


def build_edit_pairs(submissions: Iterable[Submission]) -> list[EditPair]:
    histories: dict = defaultdict(list)
    for s in submissions:
        histories[(s.student_id, s.problem_id)].append(s)
    pairs = []
    for hk in sorted(histories):
        hist = sorted(histories[hk], key=lambda s: s.seq_index)
        for a, b in zip(hist, hist[1:]):
            if a.code == b.code:
                continue
            pairs.append(EditPair(a, b))
    return pairs


def similarity_label(pair_a: EditPair, pair_b: EditPair) -> int:
    if pair_a.problem_id != pair_b.problem_id:
        raise ProblemMismatch(f"{pair_a.problem_id} vs {pair_b.problem_id}")
    same = pair_a.first.mask == pair_b.first.mask and pair_a.second.mask == pair_b.second.mask
    return int(same)


def _couples(pairs: list[EditPair]):
    """All unordered same-problem index couples, split by label."""
    by_problem: dict = defaultdict(list)
    for i, p in enumerate(pairs):
        by_problem[p.problem_id].append(i)
    pos, neg = [], []
    for pid in sorted(by_problem):
        for i, j in combinations(by_problem[pid], 2):
            (pos if pairs[i].transition == pairs[j].transition else neg).append((i, j))
    return pos, neg


def build_quadruples(pairs: list[EditPair], target_count: int, balance: float = 0.5,
                     seed: int = 0) -> list[Quadruple]:
    """Sample same-problem pair couples with a fixed positive fraction."""
    if target_count <= 0:
        return []
    rng = random.Random(seed)
    n_pos = round(target_count * balance)
    n_neg = target_count - n_pos
    pos, neg = _couples(pairs)
    if len(pos) < n_pos:
        raise InsufficientData(f"need {n_pos} positive couples, only {len(pos)} exist")
    if len(neg) < n_neg:
        raise InsufficientData(f"need {n_neg} negative couples, only {len(neg)} exist")
    chosen = [(c, 1) for c in rng.sample(pos, n_pos)] + [(c, 0) for c in rng.sample(neg, n_neg)]
    rng.shuffle(chosen)
    out = []
    for (i, j), label in chosen:
        if rng.random() < 0.5:
            i, j = j, i
        out.append(Quadruple(pairs[i], pairs[j], label))
    return out


def split_by_student(students: Iterable[str], fractions=(0.9, 0.05, 0.05), seed: int = 0,
                     quadruples: Optional[list] = None) -> DatasetSplit:
    """Random disjoint partition of students.

    Quadruples, when given, are kept only if both students share a split.
    """
    if abs(sum(fractions) - 1.0) > 1e-9 or any(f < 0 for f in fractions):
        raise ValueError(f"fractions must be non-negative and sum to 1, got {fractions}")
    ids = sorted(set(students))
    random.Random(seed).shuffle(ids)
    n = len(ids)
    n_train = round(n * fractions[0])
    n_val = round(n * fractions[1])
    n_val = min(n_val, n - n_train)
    split = DatasetSplit(sorted(ids[:n_train]), sorted(ids[n_train:n_train + n_val]),
                         sorted(ids[n_train + n_val:]), seed)
    if quadruples is not None:
        buckets: dict = {"train": [], "validation": [], "test": []}
        for q in quadruples:
            sa, sb = split.split_of(q.pair_a.student_id), split.split_of(q.pair_b.student_id)
            if sa is not None and sa == sb:
                buckets[sa].append(q)
        split.quadruples = buckets
    return split


def quadruple_to_json(q: Quadruple) -> dict:
    return {"a": [list(q.pair_a.first.ref), list(q.pair_a.second.ref)],
            "b": [list(q.pair_b.first.ref), list(q.pair_b.second.ref)],
            "label": q.label}


def quadruple_from_json(d: dict, index: dict) -> Quadruple:
    def pair(refs):
        return EditPair(index[tuple(refs[0])], index[tuple(refs[1])])
    return Quadruple(pair(d["a"]), pair(d["b"]), int(d["label"]))


def write_jsonl(path: Union[str, Path], records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def read_jsonl(path: Union[str, Path]) -> list[dict]:
    """Records of a JSONL file, skipping any ``_meta`` header record."""
    with open(path, encoding="utf-8") as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    return [r for r in rows if not (isinstance(r, dict) and "_meta" in r)]


def read_jsonl_meta(path: Union[str, Path]) -> Optional[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                first = json.loads(line)
                return first.get("_meta") if isinstance(first, dict) else None
    return None
