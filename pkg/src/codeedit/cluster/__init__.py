"""K-means over edit embeddings, silhouette scoring, 2-D projection and
prompt bundles for summarizing each cluster."""
from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .kernels import BACKEND


class BadK(ValueError):
    pass


class DegenerateClustering(ValueError):
    pass


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    seed: int
    refs: list = field(default_factory=list)
    n_iter: int = 0
    inertia_trace: list = field(default_factory=list)

    @property
    def assignments(self) -> dict:
        return {ref: int(c) for ref, c in zip(self.refs, self.labels)}

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster_id)


def _as_points(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array of points, got shape {X.shape}")
    return np.ascontiguousarray(X)


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # every point coincides with a centroid already; take any unused index
            nxt = next(i for i in range(n) if i not in chosen)
        chosen.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(1))
    return X[chosen].copy()


def kmeans_fit(X, k: int, seed: int = 0, max_iters: int = 300,
               refs: Optional[Sequence] = None) -> ClusterModel:
    """k-means++ seeding followed by Lloyd iterations until the labels stop changing."""
    X = _as_points(X)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise BadK(f"k={k} must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    C = _kmeanspp(X, k, rng)
    labels, d2 = kernels.assign_labels(X, C)
    trace = [float(d2.sum())]
    it = 0
    for it in range(1, max_iters + 1):
        newC = np.empty_like(C)
        taken = set()
        for j in range(k):
            members = labels == j
            if members.any():
                newC[j] = X[members].mean(0)
            else:
                # reseed an empty cluster at the point worst served so far
                order = np.argsort(-d2, kind="stable")
                far = next(int(i) for i in order if int(i) not in taken)
                taken.add(far)
                newC[j] = X[far]
        C = newC
        new_labels, d2 = kernels.assign_labels(X, C)
        trace.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return ClusterModel(k, C, labels, float(d2.sum()), seed,
                        list(refs) if refs is not None else list(range(n)), it, trace)


def silhouette_samples(X, labels) -> np.ndarray:
    X = _as_points(X)
    uniq, dense = np.unique(np.asarray(labels), return_inverse=True)
    if len(uniq) < 2:
        raise DegenerateClustering("silhouette needs at least two clusters")
    return kernels.silhouette_samples(X, dense.astype(np.int64), len(uniq))


def silhouette(X, labels) -> float:
    """Mean silhouette with Euclidean distance; a 0/0 ratio counts as 0."""
    return float(silhouette_samples(X, labels).mean())


def project2d(X) -> np.ndarray:
    """Projection onto the top two principal directions.

    Each axis is signed so that its largest-magnitude loading is positive,
    which makes the output independent of the SVD's sign choice.
    """
    X = _as_points(X)
    if X.shape[0] < 2:
        raise ValueError("projection needs at least two points")
    centered = X - X.mean(0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    axes = vt[:2]
    for row in axes:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    pts = centered @ axes.T
    if pts.shape[1] < 2:
        pts = np.hstack([pts, np.zeros((pts.shape[0], 2 - pts.shape[1]))])
    return pts


def write_projection_csv(path, points: np.ndarray, labels, refs, header_comment: Optional[str] = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(("x", "y", "cluster", "pair_ref"))
        for (x, y), c, ref in zip(points, labels, refs):
            w.writerow((repr(float(x)), repr(float(y)), int(c), _ref_text(ref)))


def _ref_text(ref) -> str:
    return "/".join(str(x) for x in ref) if isinstance(ref, (tuple, list)) else str(ref)


def representatives(model: ClusterModel, X, cluster_id: int, n: int = 3) -> list:
    """Member indices nearest the centroid, ties broken by index."""
    X = _as_points(X)
    idx = model.members(cluster_id)
    if len(idx) == 0:
        raise ValueError(f"cluster {cluster_id} is empty")
    d2 = ((X[idx] - model.centroids[cluster_id]) ** 2).sum(1)
    order = np.lexsort((idx, d2))
    return [int(idx[i]) for i in order[:n]]


def cluster_report(model: ClusterModel, X, pairs: Optional[Sequence] = None, n_repr: int = 3) -> dict:
    """Per-cluster size, representatives, per-problem mix and mean distance to centroid.

    ``pairs`` (edit pairs aligned with ``X``) adds problem and injector provenance.
    """
    X = _as_points(X)
    clusters = []
    for c in range(model.k):
        idx = model.members(c)
        entry = {"cluster": c, "size": int(len(idx))}
        if len(idx):
            dist = np.sqrt(((X[idx] - model.centroids[c]) ** 2).sum(1))
            entry["mean_distance"] = float(dist.mean())
            entry["representatives"] = [_ref_text(model.refs[i]) for i in representatives(model, X, c, n_repr)]
        else:
            entry["mean_distance"] = None
            entry["representatives"] = []
        if pairs is not None:
            entry["problems"] = dict(sorted(Counter(pairs[i].problem_id for i in idx).items()))
            entry["fixed_bugs"] = dict(sorted(Counter(
                "+".join(pairs[i].fixed_bugs) or "none" for i in idx).items()))
        clusters.append(entry)
    return {"k": model.k, "seed": model.seed, "inertia": model.inertia, "n_iter": model.n_iter,
            "n_points": int(X.shape[0]), "clusters": clusters}


def k_sweep(X, ks=range(2, 21), seed: int = 0, max_iters: int = 300) -> list:
    """Inertia and silhouette for each feasible k."""
    X = _as_points(X)
    out = []
    for k in ks:
        if k > X.shape[0]:
            break
        m = kmeans_fit(X, k, seed, max_iters)
        try:
            sil = silhouette(X, m.labels)
        except DegenerateClustering:
            sil = None
        out.append({"k": int(k), "inertia": m.inertia, "silhouette": sil})
    return out


PROMPT_INSTRUCTIONS = """\
Each example below shows a student's initial code and the next code they
submitted for the same problem. All examples were grouped together because
their code changes look alike.

Describe in two or three sentences the common error in the initial code and
the debugging pattern the students followed to change it.
"""


def format_prompt(examples: Sequence, cluster_id: int) -> str:
    """Prompt text for ``(problem_id, initial code, next code)`` examples."""
    parts = [f"Cluster {cluster_id}", "", PROMPT_INSTRUCTIONS]
    for i, (pid, first, second) in enumerate(examples, 1):
        parts += [f"Example {i} ({pid})", "Initial code:", first.rstrip(), "", "Next code:", second.rstrip(), ""]
    return "\n".join(parts)


def export_llm_prompt(model: ClusterModel, X, pairs: Sequence, cluster_id: int, n: int, out_dir) -> Path:
    """Write the prompt bundle for one cluster; no model is contacted."""
    reps = representatives(model, X, cluster_id, n)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"cluster_{cluster_id:02d}.txt"
    examples = [(pairs[i].problem_id, pairs[i].first.code, pairs[i].second.code) for i in reps]
    path.write_text(format_prompt(examples, cluster_id), encoding="utf-8")
    return path


def write_report_json(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


__all__ = ["BACKEND", "BadK", "ClusterModel", "DegenerateClustering", "cluster_report",
           "export_llm_prompt", "format_prompt", "k_sweep", "kmeans_fit", "project2d",
           "representatives", "silhouette", "silhouette_samples", "write_projection_csv",
           "write_report_json"]
