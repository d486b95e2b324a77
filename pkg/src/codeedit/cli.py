"""Command-line entry point for the whole pipeline.

Configuration is one YAML file of flat dotted keys (``train.lambda_c: 0.5``).
Any key can be overridden on the command line with a flag of the same name,
for example ``--train.lambda_c 0``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from contextlib import contextmanager
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .corpus import ConfigError

log = logging.getLogger("codeedit")

DEFAULTS: dict = {
    "seed": 0,
    "paths.output_dir": "codeedit-out",
    "paths.problems_dir": None,
    "paths.submissions": None,
    "paths.run": "main",
    "runtime.threads": 1,
    "corpus.n_students": 120,
    "corpus.problems": None,
    "corpus.attempt_prob": 0.8,
    "corpus.min_bugs": 2,
    "corpus.max_bugs": 4,
    "corpus.p_full_fix": 0.1,
    "corpus.rename_prob": 0.5,
    "exec.step_limit": 1_000_000,
    "dataset.fractions": [0.9, 0.05, 0.05],
    "dataset.train_quadruples": 560,
    "dataset.validation_quadruples": 40,
    "dataset.test_quadruples": 40,
    "dataset.balance": 0.5,
    "dataset.max_len": 128,
    "model.d": 64,
    "model.layers": 2,
    "model.heads": 4,
    "model.ff_dim": 256,
    "train.lambda_c": 0.5,
    "train.lambda_rec": 2.0,
    "train.lambda_reg": 0.5,
    "train.margin": 1.0,
    "train.lr": 2e-3,
    "train.warmup": 0.1,
    "train.batch_size": 8,
    "train.accum_steps": 1,
    "train.epochs": 12,
    "train.weight_decay": 0.01,
    "train.clip_norm": 1.0,
    "train.rec_edit_transform": True,
    "cluster.k": 10,
    "cluster.max_iters": 300,
    "cluster.representatives": 3,
    "cluster.split": "all",
    "cluster.sweep": False,
    "cluster.sweep_min": 2,
    "cluster.sweep_max": 20,
    "codebleu.weights": [0.25, 0.25, 0.25, 0.25],
    "codebleu.keyword_weight": 4.0,
}

# config prefixes that determine each stage's outputs
STAGES = {
    "corpus": ("seed", "corpus."),
    "ingest": ("seed", "corpus.", "exec."),
    "dataset": ("seed", "corpus.", "exec.", "dataset."),
    "train": ("seed", "corpus.", "exec.", "dataset.", "model.", "train."),
}


class MissingArtifact(FileNotFoundError):
    pass


class ArtifactMismatch(ValueError):
    pass


class LockHeld(RuntimeError):
    pass


# -- configuration ----------------------------------------------------------

def _flatten(data: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in data.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key: str, value):
    default = DEFAULTS[key]
    if value is None or default is None:
        return value
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if isinstance(default, float):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if isinstance(default, list):
            if isinstance(value, str):
                value = [yaml.safe_load(x) for x in value.split(",")]
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return [float(x) for x in value]
        if isinstance(default, str):
            return str(value)
    except (TypeError, ValueError):
        pass
    raise ConfigError(f"{key}: expected {type(default).__name__}, got {value!r}")


def load_config(path=None, overrides: Optional[dict] = None) -> dict:
    """Defaults, then the file, then command-line overrides."""
    cfg = dict(DEFAULTS)
    layers = []
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        layers.append(_flatten(data))
    layers.append(dict(overrides or {}))
    for layer in layers:
        for k, v in layer.items():
            if k not in DEFAULTS:
                raise ConfigError(f"unknown config key {k!r}")
            cfg[k] = _coerce(k, v)
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    fr = cfg["dataset.fractions"]
    if len(fr) != 3 or any(x < 0 for x in fr) or abs(sum(fr) - 1) > 1e-9:
        raise ConfigError(f"dataset.fractions must be three non-negative numbers summing to 1, got {fr}")
    if not 0 <= cfg["dataset.balance"] <= 1:
        raise ConfigError("dataset.balance must lie in [0, 1]")
    if cfg["cluster.split"] not in ("all", "train", "validation", "test"):
        raise ConfigError("cluster.split must be one of all, train, validation, test")
    if cfg["runtime.threads"] < 1:
        raise ConfigError("runtime.threads must be >= 1")
    problems = cfg["corpus.problems"]
    if problems is not None and not (isinstance(problems, list) and all(isinstance(p, str) for p in problems)):
        raise ConfigError("corpus.problems must be a list of problem ids or null")


def stage_hash(cfg: dict, stage: str) -> str:
    prefixes = STAGES[stage]
    items = {k: v for k, v in cfg.items() if any(k == p or k.startswith(p) for p in prefixes if p)}
    blob = json.dumps({"stage": stage, **items}, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def bundled_config_path() -> Path:
    return Path(str(resources.files("codeedit") / "data" / "demo.yaml"))


# -- artifacts --------------------------------------------------------------

class Layout:
    def __init__(self, cfg: dict):
        self.out = Path(cfg["paths.output_dir"])
        self.problems = Path(cfg["paths.problems_dir"]) if cfg["paths.problems_dir"] else self.out / "problems"
        self.submissions = (Path(cfg["paths.submissions"]) if cfg["paths.submissions"]
                            else self.out / "submissions.jsonl")
        self.ingested = self.out / "ingested.jsonl"
        self.test_results = self.out / "test_results.csv"
        self.dataset = self.out / "dataset"
        self.run = self.out / "runs" / cfg["paths.run"]
        self.checkpoint = self.run / "model.npz"

    def quads(self, split: str) -> Path:
        return self.dataset / f"quadruples_{split}.jsonl"


def require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise MissingArtifact(f"{path} not found; run `{producer}` first")
    return path


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _jsonl(path: Path, meta: dict, records) -> None:
    from .corpus import write_jsonl
    path.parent.mkdir(parents=True, exist_ok=True)
    write_jsonl(path, [{"_meta": meta}] + list(records))


def _expect(found: Optional[str], wanted: str, what: str, fix: str) -> None:
    if found != wanted:
        raise ArtifactMismatch(f"{what} was produced by config {found}, current config is {wanted}; {fix}")


@contextmanager
def output_lock(out_dir: Path):
    """Exclusive marker file; a second writer fails instead of interleaving."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / ".codeedit.lock"
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockHeld(f"{path} exists; another command is writing to {out_dir} "
                       f"(delete the file if that process is gone)") from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        path.unlink(missing_ok=True)


# -- loaders shared by several commands ---------------------------------------

def load_submissions(lay: Layout, cfg: dict) -> list:
    from .corpus import Submission, read_jsonl, read_jsonl_meta
    require(lay.ingested, "ingest")
    meta = read_jsonl_meta(lay.ingested) or {}
    _expect(meta.get("config_hash"), stage_hash(cfg, "ingest"), str(lay.ingested), "rerun `ingest`")
    return [Submission.from_json(r) for r in read_jsonl(lay.ingested)]


class Dataset:
    def __init__(self, lay: Layout, cfg: dict):
        from .corpus import Vocab, build_edit_pairs, quadruple_from_json, read_jsonl, read_jsonl_meta
        from .minilang import load_problems
        manifest_path = require(lay.dataset / "manifest.json", "build-dataset")
        self.manifest = read_json(manifest_path)
        self.hash = stage_hash(cfg, "dataset")
        _expect(self.manifest.get("config_hash"), self.hash, "the dataset", "rerun `build-dataset`")
        self.problems = load_problems(require(lay.problems, "gen-corpus"))
        self.submissions = load_submissions(lay, cfg)
        index = {s.ref: s for s in self.submissions}
        split = read_json(lay.dataset / "split.json")
        self.students = {name: set(split[name]) for name in ("train", "validation", "test")}
        pairs = build_edit_pairs(self.submissions)
        self.pairs = {name: [p for p in pairs if p.student_id in ids] for name, ids in self.students.items()}
        self.quads = {}
        for name in ("train", "validation", "test"):
            path = lay.quads(name)
            _expect((read_jsonl_meta(path) or {}).get("config_hash"), self.hash, str(path),
                    "rerun `build-dataset`")
            self.quads[name] = [quadruple_from_json(r, index) for r in read_jsonl(path)]
        self.vocab = Vocab.from_json(read_json(lay.dataset / "vocab.json"))


def load_trained(lay: Layout, cfg: dict):
    from .embedder import load_checkpoint
    data = Dataset(lay, cfg)
    model, meta = load_checkpoint(require(lay.checkpoint, "train"))
    _expect(meta.get("dataset_hash"), data.hash, str(lay.checkpoint), "retrain on the current dataset")
    _expect(meta.get("config_hash"), stage_hash(cfg, "train"), str(lay.checkpoint),
            "pass the same overrides used for `train`, or retrain")
    if meta.get("vocab_hash") != data.vocab.digest():
        raise ArtifactMismatch(f"{lay.checkpoint} was trained with a different vocabulary")
    return data, model, meta


def _set_threads(cfg: dict) -> None:
    import torch
    torch.set_num_threads(cfg["runtime.threads"])


# -- subcommands ------------------------------------------------------------

def cmd_gen_corpus(cfg, lay, args) -> tuple:
    from .corpus import SynthConfig, synthesize_corpus
    sc = SynthConfig(n_students=cfg["corpus.n_students"], problems=cfg["corpus.problems"],
                     attempt_prob=cfg["corpus.attempt_prob"], min_bugs=cfg["corpus.min_bugs"],
                     max_bugs=cfg["corpus.max_bugs"], p_full_fix=cfg["corpus.p_full_fix"],
                     rename_prob=cfg["corpus.rename_prob"])
    problems, rows = synthesize_corpus(sc, cfg["seed"])
    h = stage_hash(cfg, "corpus")
    for p in problems:
        path = lay.problems / f"{p.problem_id}.json"
        write_json(path, {**p.to_json(), "config_hash": h})
    _jsonl(lay.submissions, {"config_hash": h, "kind": "submissions"}, rows)
    result = {"config_hash": h, "problems": len(problems), "submissions": len(rows),
              "students": len({r["student_id"] for r in rows}),
              "problems_dir": str(lay.problems), "submissions_file": str(lay.submissions)}
    write_json(lay.out / "corpus_manifest.json", result)
    text = (f"wrote {len(problems)} problems to {lay.problems} and {len(rows)} submissions "
            f"from {result['students']} students to {lay.submissions}")
    return result, text


def cmd_ingest(cfg, lay, args) -> tuple:
    from .corpus import ingest
    subs = ingest(require(lay.submissions, "gen-corpus"), require(lay.problems, "gen-corpus"),
                  cfg["exec.step_limit"])
    h = stage_hash(cfg, "ingest")
    _jsonl(lay.ingested, {"config_hash": h, "kind": "ingested"}, (s.to_json() for s in subs))
    per_problem: dict = {}
    for s in subs:
        per_problem[s.problem_id] = per_problem.get(s.problem_id, 0) + 1
    passing = sum(s.mask.all_pass for s in subs)
    result = {"config_hash": h, "submissions": len(subs), "students": len({s.student_id for s in subs}),
              "per_problem": dict(sorted(per_problem.items())),
              "all_pass_fraction": passing / len(subs) if subs else 0.0}
    write_json(lay.out / "ingest_manifest.json", result)
    return result, f"ingested {len(subs)} submissions into {lay.ingested}"


def cmd_exec_tests(cfg, lay, args) -> tuple:
    from .minilang import execute, load_problems, mask_for_source, try_parse
    from .minilang.interp import VALUE
    from .minilang.values import to_literal, values_equal
    if args.code_file:
        if not args.problem:
            raise ConfigError("--code-file needs --problem")
        problems = load_problems(require(lay.problems, "gen-corpus"))
        if args.problem not in problems:
            raise ConfigError(f"unknown problem {args.problem!r}")
        prob = problems[args.problem]
        source = Path(require(Path(args.code_file), "a code file")).read_text(encoding="utf-8")
        fn = try_parse(source)
        tests = []
        for t in prob.tests:
            if fn is None:
                tests.append({"test_id": t.test_id, "status": "parse-error", "passed": False})
                continue
            out = execute(fn, list(t.inputs), cfg["exec.step_limit"])
            ok = out.status == VALUE and values_equal(out.result, t.expected)
            tests.append({"test_id": t.test_id, "status": out.status, "passed": bool(ok),
                          "result": to_literal(out.result) if out.result is not None else None,
                          "expected": to_literal(t.expected), "steps": out.steps_used})
        mask = mask_for_source(source, prob, cfg["exec.step_limit"])
        result = {"problem": prob.problem_id, "parsed": fn is not None, "mask": str(mask), "tests": tests}
        lines = [f"{t['test_id']:<10}{'pass' if t['passed'] else 'FAIL':<6}{t['status']}" for t in tests]
        return result, "\n".join(lines + [f"mask {mask}"])

    problems = load_problems(require(lay.problems, "gen-corpus"))
    subs = load_submissions(lay, cfg)
    h = stage_hash(cfg, "ingest")
    mismatches = 0
    with open(lay.test_results, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_hash={h}\n")
        w = csv.writer(fh)
        w.writerow(("student_id", "problem_id", "seq_index", "stored_mask", "recomputed_mask", "match"))
        for s in subs:
            m = mask_for_source(s.code, problems[s.problem_id], cfg["exec.step_limit"])
            mismatches += m != s.mask
            w.writerow((s.student_id, s.problem_id, s.seq_index, str(s.mask), str(m), int(m == s.mask)))
    result = {"config_hash": h, "submissions": len(subs), "mismatches": mismatches,
              "results_file": str(lay.test_results)}
    return result, f"re-executed {len(subs)} submissions, {mismatches} mask mismatches"


def cmd_build_dataset(cfg, lay, args) -> tuple:
    from .corpus import build_edit_pairs, build_quadruples, build_vocab, quadruple_to_json, split_by_student
    subs = load_submissions(lay, cfg)
    seed = cfg["seed"]
    h = stage_hash(cfg, "dataset")
    split = split_by_student({s.student_id for s in subs}, tuple(cfg["dataset.fractions"]), seed)
    pairs = build_edit_pairs(subs)
    counts = {"train": cfg["dataset.train_quadruples"], "validation": cfg["dataset.validation_quadruples"],
              "test": cfg["dataset.test_quadruples"]}
    summary = {}
    lay.dataset.mkdir(parents=True, exist_ok=True)
    for k, name in enumerate(("train", "validation", "test")):
        ids = set(getattr(split, name))
        split_pairs = [p for p in pairs if p.student_id in ids]
        quads = build_quadruples(split_pairs, counts[name], cfg["dataset.balance"], seed=seed * 1000 + k + 1)
        _jsonl(lay.quads(name), {"config_hash": h, "split": name}, (quadruple_to_json(q) for q in quads))
        summary[name] = {"students": len(ids), "pairs": len(split_pairs), "quadruples": len(quads),
                         "positive_fraction": (sum(q.label for q in quads) / len(quads)) if quads else None}
    train_ids = set(split.train)
    vocab = build_vocab(s.code for s in subs if s.student_id in train_ids)
    write_json(lay.dataset / "vocab.json", {**vocab.to_json(), "config_hash": h})
    write_json(lay.dataset / "split.json", {**split.to_json(), "config_hash": h})
    manifest = {"config_hash": h, "vocab_hash": vocab.digest(), "vocab_size": len(vocab), "splits": summary}
    write_json(lay.dataset / "manifest.json", manifest)
    text = "\n".join(f"{n:<11} students {s['students']:>4}  pairs {s['pairs']:>5}  quadruples "
                     f"{s['quadruples']:>4}" for n, s in summary.items())
    return manifest, text + f"\nvocabulary {len(vocab)} tokens"


def _configs(cfg: dict, vocab_size: int):
    from .embedder import ModelConfig, TrainConfig
    mc = ModelConfig(vocab_size=vocab_size, d=cfg["model.d"], layers=cfg["model.layers"],
                     heads=cfg["model.heads"], ff_dim=cfg["model.ff_dim"], max_len=cfg["dataset.max_len"],
                     seed=cfg["seed"])
    tc = TrainConfig(lambda_c=cfg["train.lambda_c"], lambda_rec=cfg["train.lambda_rec"],
                     lambda_reg=cfg["train.lambda_reg"], margin=cfg["train.margin"], lr=cfg["train.lr"],
                     warmup=cfg["train.warmup"], batch_size=cfg["train.batch_size"],
                     accum_steps=cfg["train.accum_steps"], epochs=cfg["train.epochs"],
                     weight_decay=cfg["train.weight_decay"], clip_norm=cfg["train.clip_norm"],
                     rec_edit_transform=cfg["train.rec_edit_transform"], seed=cfg["seed"])
    return mc, tc


def cmd_train(cfg, lay, args) -> tuple:
    from .embedder import encode_quadruples, save_checkpoint, train, write_history
    _set_threads(cfg)
    data = Dataset(lay, cfg)
    try:
        mc, tc = _configs(cfg, len(data.vocab))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    max_len = cfg["dataset.max_len"]
    tr = encode_quadruples(data.quads["train"], data.vocab, max_len)
    va = encode_quadruples(data.quads["validation"], data.vocab, max_len)
    res = train(tr, va, mc, tc)
    h = stage_hash(cfg, "train")
    lay.run.mkdir(parents=True, exist_ok=True)
    save_checkpoint(lay.checkpoint, res.model, tc, data.vocab.digest(), config_hash=h,
                    dataset_hash=data.hash, best_epoch=res.best_epoch)
    write_history(lay.run / "history.csv", res.history, header_comment=f"config_hash={h}")
    val = [r for r in res.history if r["split"] == "validation"]
    result = {"config_hash": h, "dataset_hash": data.hash, "best_epoch": res.best_epoch,
              "optimizer_steps": res.optimizer_steps, "val_l_total_initial": val[0]["l_total"],
              "val_l_total_best": min(r["l_total"] for r in val), "checkpoint": str(lay.checkpoint)}
    write_json(lay.run / "train_manifest.json", result)
    text = (f"trained {cfg['train.epochs']} epochs ({res.optimizer_steps} steps); validation l_total "
            f"{val[0]['l_total']:.4f} -> {result['val_l_total_best']:.4f} (best epoch {res.best_epoch})")
    return result, text


def cmd_eval(cfg, lay, args) -> tuple:
    from .suggest import build_history_index, evaluate_suite, format_report, write_audit_csv
    _set_threads(cfg)
    data, model, meta = load_trained(lay, cfg)
    index = build_history_index(data.pairs["train"], model, data.vocab)
    report, rows = evaluate_suite(model, data.vocab, index, data.pairs["test"], data.problems,
                                  data.quads["test"])
    h = meta["config_hash"]
    report = {"config_hash": h, "dataset_hash": data.hash, **report}
    write_json(lay.run / "eval_report.json", report)
    write_audit_csv(lay.run / "eval_instances.csv", rows, header_comment=f"config_hash={h}")
    return report, format_report(report)


def _embeddings_for(data: Dataset, model, which: str):
    import torch
    from .suggest import embed_codes
    names = ("train", "validation", "test") if which == "all" else (which,)
    pairs = [p for n in names for p in data.pairs[n]]
    with torch.no_grad():
        e1 = embed_codes(model, data.vocab, [p.first.code for p in pairs])
        e2 = embed_codes(model, data.vocab, [p.second.code for p in pairs])
        D = model.edit(e1, e2).double().numpy()
    return pairs, D


def cmd_cluster(cfg, lay, args) -> tuple:
    from .cluster import (DegenerateClustering, cluster_report, export_llm_prompt, k_sweep, kmeans_fit,
                          project2d, silhouette, write_projection_csv)
    _set_threads(cfg)
    data, model, meta = load_trained(lay, cfg)
    pairs, D = _embeddings_for(data, model, cfg["cluster.split"])
    refs = ["/".join(str(x) for x in p.ref) for p in pairs]
    h = meta["config_hash"]
    out = lay.run / "cluster"
    km = kmeans_fit(D, cfg["cluster.k"], cfg["seed"], cfg["cluster.max_iters"], refs)
    report = cluster_report(km, D, pairs, cfg["cluster.representatives"])
    keys = sorted({p.key for p in pairs})
    groups = [keys.index(p.key) for p in pairs]
    for name, labels in (("silhouette_kmeans", km.labels), ("silhouette_transitions", groups)):
        try:
            report[name] = silhouette(D, labels)
        except DegenerateClustering:
            report[name] = None
    report.update({"config_hash": h, "split": cfg["cluster.split"], "backend": _backend()})
    if cfg["cluster.sweep"]:
        report["sweep"] = k_sweep(D, range(cfg["cluster.sweep_min"], cfg["cluster.sweep_max"] + 1),
                                  cfg["seed"], cfg["cluster.max_iters"])
    write_json(out / "report.json", report)
    with open(out / "assignments.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_hash={h}\n")
        w = csv.writer(fh)
        w.writerow(("pair_ref", "cluster"))
        w.writerows((r, int(c)) for r, c in zip(refs, km.labels))
    write_projection_csv(out / "projection.csv", project2d(D), km.labels, refs, header_comment=f"config_hash={h}")
    prompts = out / "prompts"
    for c in range(km.k):
        if report["clusters"][c]["size"]:
            path = export_llm_prompt(km, D, pairs, c, cfg["cluster.representatives"], prompts)
            path.write_text(f"# config_hash={h}\n" + path.read_text(encoding="utf-8"), encoding="utf-8")
    lines = [f"k={km.k} inertia={km.inertia:.4f} silhouette={_fmt(report['silhouette_kmeans'])} "
             f"(transition groups {_fmt(report['silhouette_transitions'])})"]
    for c in report["clusters"]:
        mix = ", ".join(f"{k}:{v}" for k, v in c.get("problems", {}).items())
        lines.append(f"cluster {c['cluster']:>2}  size {c['size']:>4}  {mix}")
    return report, "\n".join(lines)


def _backend() -> str:
    from .cluster import BACKEND
    return BACKEND


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.4f}"


def cmd_suggest(cfg, lay, args) -> tuple:
    from .corpus import Submission
    from .minilang import TestCaseMask, mask_for_source
    from .suggest import build_history_index, suggest_next_step
    if not (args.code_file and args.problem and args.desired_mask):
        raise ConfigError("suggest needs --code-file, --problem and --desired-mask")
    _set_threads(cfg)
    data, model, meta = load_trained(lay, cfg)
    if args.problem not in data.problems:
        raise ConfigError(f"unknown problem {args.problem!r}")
    prob = data.problems[args.problem]
    bits = args.desired_mask.strip()
    if not bits or set(bits) - {"0", "1"}:
        raise ConfigError(f"desired mask must be a bit string, got {bits!r}")
    if len(bits) != prob.test_count:
        raise ConfigError(f"desired mask has {len(bits)} bits, {prob.problem_id} has {prob.test_count} tests")
    desired = TestCaseMask.from_string(bits)
    code = Path(require(Path(args.code_file), "a code file")).read_text(encoding="utf-8")
    a1 = Submission("cli", prob.problem_id, 0, code, mask_for_source(code, prob, cfg["exec.step_limit"]))
    index = build_history_index(data.pairs["train"], model, data.vocab)
    res = suggest_next_step(model, data.vocab, index, a1, desired, prob)
    result = {"config_hash": meta["config_hash"], "current_mask": str(a1.mask), **res.to_json()}
    text = (f"{res.generated_code}\n\ncurrent mask  {a1.mask}\ndesired mask  {desired}\n"
            f"achieved mask {res.achieved_mask}\nCBH {res.cbh:.3f}  history "
            f"{'/'.join(map(str, res.history_ref))}{'  (fallback on desired mask only)' if res.fallback else ''}")
    return result, text


def cmd_codebleu(cfg, lay, args) -> tuple:
    from .codebleu import codebleu
    cand = Path(require(Path(args.candidate), "a candidate file")).read_text(encoding="utf-8")
    ref = Path(require(Path(args.reference), "a reference file")).read_text(encoding="utf-8")
    weights = cfg["codebleu.weights"] if args.weights is None else _coerce("codebleu.weights", args.weights)
    try:
        rep = codebleu(cand, ref, weights, cfg["codebleu.keyword_weight"])
    except ValueError as exc:
        if type(exc) is ValueError:
            raise ConfigError(str(exc)) from None
        raise
    result = rep.to_dict()
    return result, json.dumps(result, indent=2, sort_keys=True)


COMMANDS = {
    "gen-corpus": (cmd_gen_corpus, True, "generate the synthetic problems and submission histories"),
    "ingest": (cmd_ingest, True, "validate submissions, order histories and compute test-case masks"),
    "exec-tests": (cmd_exec_tests, True, "run test suites on one code file or re-check every submission"),
    "build-dataset": (cmd_build_dataset, True, "split students, sample labeled quadruples, build vocabulary"),
    "train": (cmd_train, True, "train the edit-embedding model"),
    "eval": (cmd_eval, True, "suggestion, EE and CT evaluation on the test split"),
    "suggest": (cmd_suggest, False, "suggest a next step for one code file"),
    "codebleu": (cmd_codebleu, False, "score a candidate file against a reference file"),
    "cluster": (cmd_cluster, True, "k-means over edit embeddings with report, projection and prompts"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config (default: the bundled demo config)")
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(
        prog="codeedit", description="Contrastive code-edit embeddings for next-step suggestions.",
        epilog="Any config key may be overridden with a flag of the same name, e.g. --train.lambda_c 0.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, _, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in ("exec-tests", "suggest"):
            p.add_argument("--code-file")
            p.add_argument("--problem")
        if name == "suggest":
            p.add_argument("--desired-mask", help="bit string in canonical test order, e.g. 110100")
        if name == "codebleu":
            p.add_argument("candidate")
            p.add_argument("reference")
            p.add_argument("--weights", help="alpha,beta,gamma,delta")
    return parser


def split_overrides(argv: list) -> tuple:
    """Separate ``--dotted.key value`` pairs from ordinary arguments."""
    rest, overrides = [], {}
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and tok[2:].split("=", 1)[0] in DEFAULTS:
            if "=" in tok:
                key, raw = tok[2:].split("=", 1)
            else:
                if i + 1 >= len(argv):
                    raise ConfigError(f"{tok} needs a value")
                key, raw = tok[2:], argv[i + 1]
                i += 1
            overrides[key] = yaml.safe_load(raw)
        elif tok.startswith("--") and "." in tok[2:].split("=", 1)[0]:
            raise ConfigError(f"unknown config key {tok[2:].split('=', 1)[0]!r}")
        else:
            rest.append(tok)
        i += 1
    return rest, overrides


def _error(exc: BaseException, as_json: bool) -> int:
    name = type(exc).__name__
    if as_json:
        print(json.dumps({"error": name, "message": str(exc)}), file=sys.stderr)
    else:
        print(f"error [{name}]: {exc}", file=sys.stderr)
    return 2 if isinstance(exc, (ConfigError, MissingArtifact, ArtifactMismatch, LockHeld)) else 1


def main(argv: Optional[list] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    as_json = "--json" in argv
    try:
        rest, overrides = split_overrides(argv)
    except ConfigError as exc:
        return _error(exc, as_json)
    args = build_parser().parse_args(rest)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from .cluster import BadK, DegenerateClustering
    from .codebleu import EmptyInput
    from .corpus import FormatError, InsufficientData, UnknownProblem
    from .embedder import CheckpointError, DivergenceError
    from .minilang import LexError, ParseError
    from .suggest import NoHistoryMatch
    handled = (ConfigError, MissingArtifact, ArtifactMismatch, LockHeld, FormatError, UnknownProblem,
               InsufficientData, CheckpointError, DivergenceError, NoHistoryMatch, LexError, ParseError,
               EmptyInput, BadK, DegenerateClustering)
    try:
        cfg = load_config(args.config or bundled_config_path(), overrides)
        lay = Layout(cfg)
        fn, writes, _ = COMMANDS[args.command]
        if writes:
            with output_lock(lay.out):
                result, text = fn(cfg, lay, args)
        else:
            result, text = fn(cfg, lay, args)
    except handled as exc:
        return _error(exc, args.json)
    print(json.dumps(result, sort_keys=True) if args.json else text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
