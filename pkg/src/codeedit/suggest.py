"""Retrieval-based next-step suggestion and its evaluation protocols.

A history index groups training-split edit embeddings by test-case
transition. To suggest a next step for a new submission, the nearest
historical edit with the wanted transition is added to the submission's
code embedding and decoded; the output is then executed to learn which
tests it really passes.
"""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

import torch

from .codebleu import codebleu
from .corpus.data import Submission
from .corpus.vocab import Vocab, decode, encode
from .embedder.model import EditModel, pad_batch
from .minilang import Problem, TestCaseMask, mask_for_source


class NoHistoryMatch(LookupError):
    pass


@dataclass(frozen=True)
class HistoryEntry:
    edit: torch.Tensor
    e_first: torch.Tensor
    source_ref: tuple
    first_mask: str
    second_mask: str
    second_code: str


@dataclass(frozen=True)
class Retrieval:
    entry: HistoryEntry
    fallback: bool


class HistoryIndex:
    """Immutable map ``(problem, T1, T2) -> entries``."""

    def __init__(self, groups: dict):
        self._groups = {k: tuple(v) for k, v in groups.items()}
        by_t2 = defaultdict(list)
        for (pid, _t1, t2), entries in self._groups.items():
            by_t2[(pid, t2)].extend(entries)
        self._by_t2 = {k: tuple(v) for k, v in by_t2.items()}

    def __len__(self) -> int:
        return sum(len(v) for v in self._groups.values())

    def keys(self):
        return self._groups.keys()

    def entries(self, problem_id: str, t1: str, t2: str) -> tuple:
        return self._groups.get((problem_id, str(t1), str(t2)), ())

    def entries_t2(self, problem_id: str, t2: str) -> tuple:
        return self._by_t2.get((problem_id, str(t2)), ())

    def source_refs(self) -> set:
        return {e.source_ref for v in self._groups.values() for e in v}


@torch.no_grad()
def embed_codes(model: EditModel, vocab: Vocab, codes: list, chunk: int = 64) -> torch.Tensor:
    model.eval()
    max_len = model.cfg.max_len
    out = []
    for i in range(0, len(codes), chunk):
        ids = [encode(c, vocab, max_len) for c in codes[i:i + chunk]]
        out.append(model.encode(pad_batch(ids)))
    if not out:
        return torch.zeros(0, model.cfg.d)
    return torch.cat(out)


@torch.no_grad()
def build_history_index(train_pairs: list, model: EditModel, vocab: Vocab) -> HistoryIndex:
    pairs = list(train_pairs)
    if not pairs:
        return HistoryIndex({})
    e1 = embed_codes(model, vocab, [p.first.code for p in pairs])
    e2 = embed_codes(model, vocab, [p.second.code for p in pairs])
    D = model.edit(e1, e2)
    groups = defaultdict(list)
    for i, p in enumerate(pairs):
        groups[p.key].append(HistoryEntry(D[i].clone(), e1[i].clone(), p.ref, p.transition[0],
                                          p.transition[1], p.second.code))
    return HistoryIndex(groups)


def _nearest(entries: tuple, e_query: torch.Tensor) -> HistoryEntry:
    firsts = torch.stack([e.e_first for e in entries]).to(e_query.dtype)
    dist = ((firsts - e_query[None]) ** 2).sum(-1).tolist()
    best = min(range(len(entries)), key=lambda i: (dist[i], entries[i].source_ref))
    return entries[best]


def retrieve_edit(index: HistoryIndex, problem_id: str, t1, t2, e_query: torch.Tensor) -> Retrieval:
    """Nearest-``e_first`` entry under the exact transition, else under ``T2`` alone."""
    exact = index.entries(problem_id, str(t1), str(t2))
    if exact:
        return Retrieval(_nearest(exact, e_query), False)
    loose = index.entries_t2(problem_id, str(t2))
    if loose:
        return Retrieval(_nearest(loose, e_query), True)
    raise NoHistoryMatch(f"no history for problem {problem_id!r} reaching mask {t2}")


@dataclass(frozen=True)
class SuggestionResult:
    generated_code: str
    achieved_mask: TestCaseMask
    desired_mask: TestCaseMask
    cbh: float
    history_ref: tuple
    fallback: bool
    cbp: Optional[float] = None

    def to_json(self) -> dict:
        return {"generated_code": self.generated_code, "achieved_mask": str(self.achieved_mask),
                "desired_mask": str(self.desired_mask), "cbp": self.cbp, "cbh": self.cbh,
                "history_ref": list(self.history_ref), "fallback": self.fallback}


def _score(candidate: str, reference: str) -> float:
    # an empty generation has no tokens; it shares nothing with the reference
    if not candidate.strip():
        return 0.0
    return codebleu(candidate, reference).combined


def _check_mask(mask: TestCaseMask, problem: Problem, what: str) -> None:
    if len(mask) != problem.test_count:
        raise ValueError(f"{what} has {len(mask)} bits, problem {problem.problem_id} "
                         f"has {problem.test_count} tests")


@torch.no_grad()
def suggest_batch(model: EditModel, vocab: Vocab, index: HistoryIndex, firsts: list,
                  desired: list, problems: dict, gold: Optional[list] = None) -> list:
    """Suggestions for many ``(A1, desired mask)`` requests.

    Entries without history come back as ``None``.
    """
    if not firsts:
        return []
    e1 = embed_codes(model, vocab, [a.code for a in firsts])
    hits = []
    for i, (a1, want) in enumerate(zip(firsts, desired)):
        _check_mask(want, problems[a1.problem_id], "desired mask")
        try:
            hits.append(retrieve_edit(index, a1.problem_id, a1.mask, want, e1[i]))
        except NoHistoryMatch:
            hits.append(None)
    live = [i for i, h in enumerate(hits) if h is not None]
    results: list = [None] * len(firsts)
    if not live:
        return results
    cond = torch.stack([e1[i] + hits[i].entry.edit.to(e1.dtype) for i in live])
    decoded = []
    for s in range(0, len(live), 64):
        decoded.extend(model.greedy(cond[s:s + 64]))
    for i, ids in zip(live, decoded):
        code = decode(ids, vocab)
        a1 = firsts[i]
        hit = hits[i]
        achieved = mask_for_source(code, problems[a1.problem_id])
        cbp = _score(code, gold[i]) if gold is not None else None
        results[i] = SuggestionResult(code, achieved, desired[i], _score(code, hit.entry.second_code),
                                      hit.entry.source_ref, hit.fallback, cbp)
    return results


def suggest_next_step(model: EditModel, vocab: Vocab, index: HistoryIndex, a1: Submission,
                      desired_mask: TestCaseMask, problem: Problem,
                      gold_next: Optional[str] = None) -> SuggestionResult:
    _check_mask(desired_mask, problem, "desired mask")
    out = suggest_batch(model, vocab, index, [a1], [desired_mask], {a1.problem_id: problem},
                        None if gold_next is None else [gold_next])[0]
    if out is None:
        raise NoHistoryMatch(f"no history for problem {a1.problem_id!r} reaching mask {desired_mask}")
    return out


# -- evaluation -----------------------------------------------------------

def _mean(xs) -> Optional[float]:
    xs = list(xs)
    return sum(xs) / len(xs) if xs else None


def _block(rows: list, skipped: int) -> dict:
    return {"cbp": _mean(r["cbp"] for r in rows), "cbh": _mean(r["cbh"] for r in rows),
            "exact_mask_rate": _mean(float(r["exact"]) for r in rows),
            "pass_all_rate": _mean(float(r["pass_all"]) for r in rows),
            "n": len(rows), "skipped": skipped, "fallback": sum(1 for r in rows if r["fallback"])}


@torch.no_grad()
def _reconstruction_scores(model: EditModel, vocab: Vocab, starts: list, edits: torch.Tensor,
                           targets: list) -> list:
    if not starts:
        return []
    e = embed_codes(model, vocab, starts)
    cond = e + edits.to(e.dtype)
    out = []
    for s in range(0, len(starts), 64):
        out.extend(model.greedy(cond[s:s + 64]))
    return [_score(decode(ids, vocab), t) for ids, t in zip(out, targets)]


@torch.no_grad()
def evaluate_suite(model: EditModel, vocab: Vocab, index: HistoryIndex, test_pairs: list,
                   problems: dict, test_quadruples: Optional[list] = None) -> tuple:
    """Run the suggestion, edit-embedding and cross-transformation protocols.

    Returns ``(report, rows)``; ``rows`` holds one audit record per test pair.
    """
    model.eval()
    pairs = list(test_pairs)
    results = suggest_batch(model, vocab, index, [p.first for p in pairs],
                            [p.second.mask for p in pairs], problems, [p.second.code for p in pairs])
    rows, skipped_topic = [], defaultdict(int)
    for p, r in zip(pairs, results):
        topic = problems[p.problem_id].topic or "unknown"
        if r is None:
            skipped_topic[topic] += 1
            continue
        rows.append({
            "student_id": p.student_id, "problem_id": p.problem_id, "seq_index": p.first.seq_index,
            "topic": topic, "t1": str(p.first.mask), "desired": str(p.second.mask),
            "achieved": str(r.achieved_mask), "exact": r.achieved_mask == p.second.mask,
            "pass_all": r.achieved_mask.all_pass, "cbp": r.cbp, "cbh": r.cbh,
            "history_ref": "/".join(str(x) for x in r.history_ref), "fallback": r.fallback,
            "copy_exact": p.first.mask == p.second.mask, "generated_code": r.generated_code,
        })

    topics = sorted({r["topic"] for r in rows} | set(skipped_topic))
    report = {
        "overall": _block(rows, sum(skipped_topic.values())),
        "per_topic": {t: _block([r for r in rows if r["topic"] == t], skipped_topic[t]) for t in topics},
    }
    # the trivial suggestion: resubmit A1 unchanged
    report["baseline_copy_a1"] = {
        "exact_mask_rate": _mean(float(r["copy_exact"]) for r in rows),
        "pass_all_rate": _mean(float(p.first.mask.all_pass) for p, r in zip(pairs, results) if r is not None),
        "cbp": _mean(_score(p.first.code, p.second.code) for p, r in zip(pairs, results) if r is not None),
    }

    # EE: each pair decoded with its own edit embedding
    if pairs:
        e1 = embed_codes(model, vocab, [p.first.code for p in pairs])
        e2 = embed_codes(model, vocab, [p.second.code for p in pairs])
        ee = _reconstruction_scores(model, vocab, [p.first.code for p in pairs], model.edit(e1, e2),
                                    [p.second.code for p in pairs])
    else:
        ee = []
    report["ee"] = {"codebleu": _mean(ee), "n": len(ee)}

    # CT: a similar partner's edit applied to each side of a positive quadruple
    ct = []
    positives = [q for q in (test_quadruples or []) if q.label == 1]
    if positives:
        starts, targets, donors = [], [], []
        for q in positives:
            for mine, other in ((q.pair_a, q.pair_b), (q.pair_b, q.pair_a)):
                starts.append(mine.first.code)
                targets.append(mine.second.code)
                donors.append(other)
        d1 = embed_codes(model, vocab, [p.first.code for p in donors])
        d2 = embed_codes(model, vocab, [p.second.code for p in donors])
        ct = _reconstruction_scores(model, vocab, starts, model.edit(d1, d2), targets)
    report["ct"] = {"codebleu": _mean(ct), "n": len(ct)}
    return report, rows


AUDIT_COLUMNS = ("student_id", "problem_id", "seq_index", "topic", "t1", "desired", "achieved",
                 "exact", "pass_all", "cbp", "cbh", "history_ref", "fallback", "copy_exact",
                 "generated_code")


def write_audit_csv(path, rows: list, header_comment: Optional[str] = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(AUDIT_COLUMNS)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in AUDIT_COLUMNS])


def format_report(report: dict) -> str:
    """Plain-text rendering shaped like the paper's result tables."""
    def f(x, pct=False):
        if x is None:
            return "-"
        return f"{100 * x:.1f}%" if pct else f"{x:.3f}"

    lines = [f"{'topic':<12}{'CBP':>8}{'CBH':>8}{'exact':>9}{'pass-all':>10}{'n':>6}{'skip':>6}"]
    blocks = [("All", report["overall"])] + sorted(report["per_topic"].items())
    for name, b in blocks:
        lines.append(f"{name:<12}{f(b['cbp']):>8}{f(b['cbh']):>8}{f(b['exact_mask_rate'], True):>9}"
                     f"{f(b['pass_all_rate'], True):>10}{b['n']:>6}{b['skipped']:>6}")
    base = report["baseline_copy_a1"]
    lines.append(f"copy-A1 baseline: exact {f(base['exact_mask_rate'], True)}, "
                 f"pass-all {f(base['pass_all_rate'], True)}, CBP {f(base['cbp'])}")
    lines.append(f"EE CodeBLEU {f(report['ee']['codebleu'])} (n={report['ee']['n']}), "
                 f"CT CodeBLEU {f(report['ct']['codebleu'])} (n={report['ct']['n']})")
    return "\n".join(lines)


__all__ = ["HistoryEntry", "HistoryIndex", "NoHistoryMatch", "Retrieval", "SuggestionResult",
           "build_history_index", "embed_codes", "evaluate_suite", "format_report", "retrieve_edit",
           "suggest_batch", "suggest_next_step", "write_audit_csv"]
