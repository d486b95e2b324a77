import csv
import subprocess
import sys

import numpy as np
import pytest
from sklearn.metrics import silhouette_samples as sk_silhouette_samples

from codeedit.cluster import (BACKEND, BadK, DegenerateClustering, cluster_report, export_llm_prompt,
                              k_sweep, kmeans_fit, project2d, representatives, silhouette,
                              silhouette_samples, write_projection_csv)
from codeedit.cluster import _kernels_py
from codeedit.cluster.kernels import _impl


def blobs(seed=0, k=3, n=40, d=5, spread=0.3):
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=10, size=(k, d))
    X = np.vstack([c + rng.normal(scale=spread, size=(n, d)) for c in centers])
    return X, np.repeat(np.arange(k), n)


def test_k1_centroid_is_mean():
    X, _ = blobs()
    m = kmeans_fit(X, 1)
    np.testing.assert_allclose(m.centroids[0], X.mean(0), rtol=1e-12)
    assert m.inertia == pytest.approx(((X - X.mean(0)) ** 2).sum())


def test_k_equal_distinct_points_has_zero_inertia():
    X = np.array([[0.0, 0], [1, 0], [0, 1], [5, 5], [0, 1]])
    m = kmeans_fit(X, 4, seed=2)
    assert m.inertia == 0.0
    assert m.labels[2] == m.labels[4]


def test_bad_k():
    X, _ = blobs()
    for k in (0, -1, len(X) + 1):
        with pytest.raises(BadK):
            kmeans_fit(X, k)


def test_seeded_determinism():
    X, _ = blobs(1)
    a, b = kmeans_fit(X, 4, seed=7), kmeans_fit(X, 4, seed=7)
    assert np.array_equal(a.labels, b.labels) and np.array_equal(a.centroids, b.centroids)


def test_lloyd_inertia_is_monotone_and_fixpoint_is_optimal():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(200, 4))
    m = kmeans_fit(X, 6, seed=0)
    trace = m.inertia_trace
    assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))
    # at the fixpoint each point sits with its nearest centroid and each centroid is its members' mean
    d2 = ((X[:, None, :] - m.centroids[None]) ** 2).sum(-1)
    assert np.array_equal(d2.argmin(1), m.labels)
    for j in range(6):
        np.testing.assert_allclose(m.centroids[j], X[m.labels == j].mean(0), rtol=1e-10, atol=1e-12)


def test_recovers_separated_blobs():
    X, truth = blobs(4)
    m = kmeans_fit(X, 3, seed=0)
    # same partition up to relabelling
    pairs = set(zip(truth.tolist(), m.labels.tolist()))
    assert len(pairs) == 3
    assert silhouette(X, m.labels) > 0.5


def test_empty_cluster_is_reseeded(monkeypatch):
    import codeedit.cluster as cl
    X = np.array([[0.0, 0.0]] * 5 + [[10.0, 0.0]] * 5 + [[0.0, 10.0]])
    # two coincident seeds leave one cluster empty after the first assignment
    monkeypatch.setattr(cl, "_kmeanspp", lambda X, k, rng: X[[0, 0, 5]].copy())
    m = cl.kmeans_fit(X, 3, seed=0)
    assert sorted(np.bincount(m.labels, minlength=3).tolist()) == [1, 5, 5]
    assert m.inertia == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_silhouette_matches_sklearn(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 3))
    labels = rng.integers(0, 4, size=60)
    labels[:4] = [0, 1, 2, 3]
    np.testing.assert_allclose(silhouette_samples(X, labels), sk_silhouette_samples(X, labels),
                               rtol=1e-9, atol=1e-12)


def test_silhouette_singleton_and_label_gaps():
    X = np.array([[0.0], [0.1], [5.0], [5.2], [9.0]])
    labels = np.array([3, 3, 7, 7, 11])
    s = silhouette_samples(X, labels)
    assert s[4] == 0.0
    np.testing.assert_allclose(s, sk_silhouette_samples(X, labels), rtol=1e-12)


def test_silhouette_identical_points_is_zero():
    X = np.zeros((6, 3))
    assert silhouette(X, [0, 0, 0, 1, 1, 1]) == 0.0


def test_degenerate_clustering():
    X, _ = blobs()
    with pytest.raises(DegenerateClustering):
        silhouette(X, np.zeros(len(X), dtype=int))


def test_projection_matches_centered_rotation_invariants():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(80, 6)) * np.array([5, 3, 1, 0.5, 0.2, 0.1])
    P = project2d(X)
    assert P.shape == (80, 2)
    np.testing.assert_allclose(P.mean(0), 0, atol=1e-10)
    # the two axes capture the two largest variances
    ev = np.linalg.eigvalsh(np.cov(X.T))[::-1]
    np.testing.assert_allclose(P.var(0, ddof=1), ev[:2], rtol=1e-9)
    # any rotation of the input gives the same projection up to axis sign, which is normalized away
    Q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    P2 = project2d(X @ Q)
    np.testing.assert_allclose(np.abs(P2), np.abs(P), atol=1e-8)


def test_projection_of_planar_data_is_rigid():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(30, 2)) * [3, 1]
    P = project2d(X)
    d_in = np.linalg.norm(X[:, None] - X[None], axis=-1)
    d_out = np.linalg.norm(P[:, None] - P[None], axis=-1)
    np.testing.assert_allclose(d_out, d_in, atol=1e-10)
    np.testing.assert_allclose(P.var(0).sum(), X.var(0).sum(), rtol=1e-12)


def test_duplicated_points_project_to_duplicated_rows():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(10, 4))
    P = project2d(np.vstack([X, X]))
    np.testing.assert_allclose(P[:10], P[10:], atol=1e-12)


def test_projection_of_one_dimensional_data():
    P = project2d(np.array([[0.0], [1.0], [3.0]]))
    assert P.shape == (3, 2) and np.all(P[:, 1] == 0)


@pytest.mark.skipif(BACKEND != "compiled", reason="compiled kernels not built")
def test_backends_agree():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(150, 8))
    C = rng.normal(size=(5, 8))
    la, da = _impl.assign_labels(X, C)
    lb, db = _kernels_py.assign_labels(X, C)
    assert np.array_equal(la, lb)
    np.testing.assert_allclose(da, db, rtol=1e-12)
    lab = la.astype(np.int64)
    np.testing.assert_allclose(_impl.silhouette_samples(X, lab, 5),
                               _kernels_py.silhouette_samples(X, lab, 5), rtol=1e-10, atol=1e-14)


def test_pure_python_fallback_can_be_forced():
    code = ("import numpy as np; from codeedit.cluster import BACKEND, kmeans_fit; "
            "print(BACKEND, kmeans_fit(np.arange(20.0).reshape(10, 2), 2).inertia)")
    out = subprocess.run([sys.executable, "-c", code], env={"CODEEDIT_PURE_PYTHON": "1", "PATH": ""},
                         capture_output=True, text=True, check=True).stdout.split()
    assert out[0] == "python"
    assert float(out[1]) == kmeans_fit(np.arange(20.0).reshape(10, 2), 2).inertia


def test_representatives_are_nearest_centroid():
    X, _ = blobs(7)
    m = kmeans_fit(X, 3)
    for c in range(3):
        reps = representatives(m, X, c, 4)
        idx = m.members(c)
        d = ((X[idx] - m.centroids[c]) ** 2).sum(1)
        assert reps == [int(i) for i in idx[np.argsort(d, kind="stable")[:4]]]


def test_prompt_with_more_requested_than_members(tmp_path, small_corpus):
    _, _, pairs = small_corpus
    X = np.vstack([np.zeros((3, 2)), np.full((len(pairs) - 3, 2), 50.0)])
    X[:3, 0] = [0.0, 0.1, 0.2]
    m = kmeans_fit(X, 2)
    small = int(m.labels[0])
    text = export_llm_prompt(m, X, pairs, small, 10, tmp_path).read_text()
    assert text.count("Initial code:") == 3
    with pytest.raises(ValueError):
        representatives(kmeans_fit(X, 2), X, 5)


def test_k_sweep_reports_each_k():
    X, _ = blobs(8, k=4)
    rows = k_sweep(X, ks=range(2, 7))
    assert [r["k"] for r in rows] == [2, 3, 4, 5, 6]
    best = max(rows, key=lambda r: r["silhouette"])
    assert best["k"] == 4


def test_report_and_prompt_export(tmp_path, small_corpus):
    _, _, pairs = small_corpus
    rng = np.random.default_rng(9)
    X = rng.normal(size=(len(pairs), 4))
    m = kmeans_fit(X, 3, refs=[p.ref for p in pairs])
    rep = cluster_report(m, X, pairs, n_repr=2)
    assert sum(c["size"] for c in rep["clusters"]) == len(pairs)
    assert all(sum(c["problems"].values()) == c["size"] for c in rep["clusters"])
    path = export_llm_prompt(m, X, pairs, 1, 2, tmp_path)
    text = path.read_text()
    assert path.name == "cluster_01.txt"
    assert text.count("Initial code:") == 2 and "debugging pattern" in text
    first = pairs[representatives(m, X, 1, 1)[0]]
    assert first.first.code.rstrip() in text and first.second.code.rstrip() in text

    write_projection_csv(tmp_path / "p.csv", project2d(X), m.labels, m.refs, header_comment="h=1")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "# h=1"
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == len(pairs) and rows[0].keys() == {"x", "y", "cluster", "pair_ref"}
