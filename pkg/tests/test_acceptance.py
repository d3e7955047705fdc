"""Acceptance gate: one test per release criterion, each printing a
single [PASS]/[FAIL] line so the suite output doubles as a checklist."""

import contextlib
import hashlib
import itertools
import json
import math
import os
import time

import numpy as np
import pytest

from lcprune import (DataValidationError, FeaturePack, KnnConfig, LayerMatrix,
                     apportion, budget_size, cd_select, diversity,
                     easy_diverse_select, herding_select, kcenter_greedy_select,
                     kmeans, knn_confidence, layer_confidences, load_pack,
                     lc_classification_score, lc_regression_score,
                     random_select, reference_spec, prop31_check, spearman,
                     top_k_select, validate_pack, write_pack)
from lcprune.cli import main as cli_main
from conftest import make_pack

# Floor for the density-vs-confidence rank correlation of the reference
# mixture run. Pinned from the exact oracle value 0.15891827979396148; the
# normalized confidence saturates at 1.0 for most samples of this
# well-separated mixture, which caps the achievable correlation.
PROP31_RHO_FLOOR = 0.15


RESULTS: list = []  # (status, name); echoed in the terminal summary


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        RESULTS.append(("FAIL", name))
        print(f"[FAIL] {name}", flush=True)
        raise
    RESULTS.append(("PASS", name))
    print(f"[PASS] {name}", flush=True)


def test_knn_confidence_oracle_equivalence():
    with criterion("weighted-KNN confidence matches exhaustive oracle (100 instances, <=1e-9)"):
        rng = np.random.default_rng(20260823)
        for _ in range(100):
            n = int(rng.integers(3, 65))
            d = int(rng.integers(1, 9))
            k = int(rng.integers(1, min(10, n) + 1))
            refs = rng.standard_normal((n, d))
            labels = rng.integers(0, 3, size=n)
            query = rng.standard_normal(d)
            ql = int(rng.integers(0, 3))
            got = knn_confidence(query, ql, refs, labels, KnnConfig(k=k))
            # oracle: sort (distance, index) pairs explicitly, pure python
            pairs = sorted((math.dist(query, refs[i]), i) for i in range(n))
            num = den = 0.0
            for dist, i in pairs[:k]:
                w = 1.0 / (dist + 1e-12)
                den += w
                if labels[i] == ql:
                    num += w
            assert abs(got - num / den) <= 1e-9


def test_lc_score_is_mean_of_layer_confidences():
    with criterion("LC classification score equals mean of per-layer confidences (1e-12)"):
        rng = np.random.default_rng(11)
        for trial in range(10):
            n = int(rng.integers(8, 40))
            n_layers = int(rng.integers(1, 5))
            labels = rng.integers(0, 2, size=n)
            feats = [rng.standard_normal((n, 3)) for _ in range(n_layers)]
            pack = make_pack(feats, labels)
            cfg = KnnConfig(k=3)
            sv = lc_classification_score(pack, cfg)
            want = np.mean([layer_confidences(pack, li, cfg)
                            for li in range(n_layers)], axis=0)
            np.testing.assert_allclose(sv.values, want, atol=1e-12)
            if n_layers == 1:
                np.testing.assert_array_equal(
                    sv.values, layer_confidences(pack, 0, cfg))


def test_lc_regression_oracle():
    with criterion("LC regression score matches direct formula (100 rows, 1e-12); [2,4] -> 0.375"):
        assert lc_regression_score(np.array([[2.0, 4.0]])).values[0] == \
            pytest.approx(0.375, abs=1e-15)
        rng = np.random.default_rng(5)
        pp = rng.random((100, 6)) + 0.1
        got = lc_regression_score(pp).values
        want = np.array([sum(1.0 / v for v in row) / len(row) for row in pp])
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_confidence_tracks_density():
    with criterion("confidence-vs-density suite: rho positive and >= pinned floor, "
                   "decile inequality, null |rho| < 0.1, runtime < 10 s"):
        start = time.monotonic()
        result = prop31_check(reference_spec(seed=7), 2000, KnnConfig(k=10))
        assert result["rho"] > 0
        assert result["rho"] >= PROP31_RHO_FLOOR
        order = np.argsort(result["density"], kind="stable")
        n10 = len(order) // 10
        assert result["confidences"][order[-n10:]].mean() > \
            result["confidences"][order[:n10]].mean()
        for seed in range(20):
            shuffled = np.random.default_rng(seed).permutation(result["density"])
            assert abs(spearman(result["confidences"], shuffled)) < 0.1
        assert time.monotonic() - start < 10.0


def test_spearman_correctness():
    with criterion("spearman: identity 1, reversal -1, tie case 0.866025 +-1e-6, "
                   "permutation-null mean within +-0.05"):
        a = np.array([3.0, 1.0, 4.0, 1.5, 5.0])
        assert spearman(a, a) == pytest.approx(1.0, abs=1e-12)
        assert spearman(a, -a) == pytest.approx(-1.0, abs=1e-12)
        rho = spearman(np.array([1.0, 1.0, 2.0]), np.array([1.0, 2.0, 3.0]))
        assert rho == pytest.approx(0.866025, abs=1e-6)
        rng = np.random.default_rng(4)
        base = np.arange(1000.0)
        rhos = [spearman(rng.permutation(base), rng.permutation(base))
                for _ in range(100)]
        assert abs(np.mean(rhos)) < 0.05


def _all_selectors(pack, scores, probs, eta):
    yield easy_diverse_select(pack, scores, cluster_layer=0, k_clusters=4,
                              eta=eta, seed=1)
    yield top_k_select(scores, eta)
    yield herding_select(pack.layers[0].data, pack.labels, eta)
    yield kcenter_greedy_select(pack.layers[0].data, eta, seed=2)
    yield cd_select(probs, eta, seed=3)
    yield random_select(pack.n_samples, eta, seed=4)


def test_selection_invariants():
    with criterion("selection invariants: exact floor(eta*N) budgets, k=1 easy-diverse == "
                   "top-k, quota sums on 1000 profiles, k-center 2-approx, seeded "
                   "byte-reproducibility"):
        rng = np.random.default_rng(9)
        n = 40
        labels = rng.integers(0, 3, size=n)
        pack = make_pack([rng.standard_normal((n, 4))], labels)
        scores = lc_classification_score(pack, KnnConfig(k=3))
        probs = rng.random((n, 3))
        probs /= probs.sum(axis=1, keepdims=True)

        for eta in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]:
            m = budget_size(eta, n)
            assert m == math.floor(eta * n + 1e-9)
            for res in _all_selectors(pack, scores, probs, eta):
                assert len(res.indices) == m
                assert len(set(res.indices.tolist())) == m
                assert ((0 <= res.indices) & (res.indices < n)).all()

        single = easy_diverse_select(pack, scores, cluster_layer=0,
                                     k_clusters=1, eta=0.3, seed=0)
        np.testing.assert_array_equal(single.indices,
                                      top_k_select(scores, 0.3).indices)

        for _ in range(1000):
            sizes = rng.integers(0, 50, size=int(rng.integers(1, 8)))
            if sizes.sum() == 0:
                continue
            total = int(rng.integers(0, sizes.sum() + 1))
            q = apportion(total, sizes)
            assert q.sum() == total and (q <= sizes).all() and (q >= 0).all()

        def radius(feats, subset):
            d = np.linalg.norm(feats[:, None, :] - feats[subset][None], axis=2)
            return d.min(axis=1).max()

        for seed in range(5):
            r2 = np.random.default_rng(seed)
            for n_small, m_small in itertools.product((5, 8, 12), (2, 3, 4)):
                feats = r2.standard_normal((n_small, 2))
                got = kcenter_greedy_select(feats, m_small / n_small, initial=0)
                best = min(radius(feats, list(c)) for c in
                           itertools.combinations(range(n_small), m_small))
                assert radius(feats, got.indices) <= 2.0 * best + 1e-12

        for res in _all_selectors(pack, scores, probs, 0.4):
            rerun = next(r for r in _all_selectors(pack, scores, probs, 0.4)
                         if r.method == res.method)
            assert res.indices.tobytes() == rerun.indices.tobytes()


def test_kmeans_properties():
    with criterion("k-means: inertia non-increasing over 50 seeded runs, two-blob "
                   "partition recovered, k=n zero inertia"):
        rng = np.random.default_rng(13)
        for seed in range(50):
            feats = np.random.default_rng(seed).standard_normal((30, 3))
            model = kmeans(feats, 4, seed=seed)
            hist = np.asarray(model.inertia_history)
            assert (np.diff(hist) <= 1e-9).all()
        blob_a = rng.standard_normal((20, 2)) * 0.1
        blob_b = rng.standard_normal((20, 2)) * 0.1 + 10.0
        feats = np.vstack([blob_a, blob_b])
        model = kmeans(feats, 2, seed=0)
        assert len(set(model.assignments[:20])) == 1
        assert len(set(model.assignments[20:])) == 1
        assert model.assignments[0] != model.assignments[20]
        exact = kmeans(rng.standard_normal((12, 2)), 12, seed=0)
        assert exact.inertia == pytest.approx(0.0, abs=1e-12)


def test_file_format_round_trip_and_validation(tmp_path):
    with criterion("pack round-trip bit-exact with all optional fields; every "
                   "validation error fires on a corrupted fixture"):
        rng = np.random.default_rng(17)
        n = 12
        labels = rng.integers(0, 3, size=n)
        probs = rng.random((n, 3)).astype(np.float32)
        probs /= probs.sum(axis=1, keepdims=True)
        pp = (rng.random((n, 4)) + 0.5).astype(np.float32)
        pack = make_pack([rng.standard_normal((n, 5)),
                          rng.standard_normal((n, 2))],
                         labels, probs=probs, perplexities=pp, split="train")
        manifest = write_pack(pack, str(tmp_path / "full"))
        loaded = load_pack(manifest)
        assert loaded.digest() == pack.digest()
        for a, b in zip(loaded.layers, pack.layers):
            assert a.data.tobytes() == b.data.tobytes()
        assert loaded.labels.tobytes() == pack.labels.tobytes()
        assert loaded.probs.tobytes() == pack.probs.tobytes()
        assert loaded.perplexities.tobytes() == pack.perplexities.tobytes()

        def corrupt(mutate, match):
            d = str(tmp_path / hashlib.sha256(match.encode()).hexdigest()[:8])
            m = write_pack(pack, d)
            mutate(d, m)
            with pytest.raises(DataValidationError, match=match):
                load_pack(m)

        corrupt(lambda d, m: open(os.path.join(d, "layer_l0.f32"), "ab").close()
                or os.truncate(os.path.join(d, "layer_l0.f32"), 8), "bytes")
        corrupt(lambda d, m: os.remove(os.path.join(d, "labels.u32")), "missing")
        corrupt(lambda d, m: open(m, "w").write("{not json"), "invalid JSON")

        def bump_version(d, m):
            man = json.load(open(m))
            man["version"] = 99
            json.dump(man, open(m, "w"))
        corrupt(bump_version, "version")

        def scale_probs(d, m):
            p = np.fromfile(os.path.join(d, "probs.f32"), dtype="<f4") * 2
            p.tofile(os.path.join(d, "probs.f32"))
        corrupt(scale_probs, "sums to")

        def poison_feature(d, m):
            path = os.path.join(d, "layer_l1.f32")
            z = np.fromfile(path, dtype="<f4")
            z[5] = np.nan
            z.tofile(path)
        corrupt(poison_feature, "non-finite")

        def negate_pp(d, m):
            path = os.path.join(d, "perplexities.f32")
            z = np.fromfile(path, dtype="<f4")
            z[0] = -1.0
            z.tofile(path)
        corrupt(negate_pp, "nonpositive")

        def bad_label(d, m):
            path = os.path.join(d, "labels.u32")
            z = np.fromfile(path, dtype="<u4")
            z[2] = 7
            z.tofile(path)
        corrupt(bad_label, ">= K")

        with pytest.raises(DataValidationError, match="not found"):
            load_pack(str(tmp_path / "nowhere" / "pack.json"))
        bad_split = FeaturePack(layers=pack.layers, split="test")
        with pytest.raises(DataValidationError, match="split"):
            validate_pack(bad_split)


def _tree_digest(root):
    h = hashlib.sha256()
    for dirpath, dirnames, filenames in sorted(os.walk(root)):
        dirnames.sort()
        for name in sorted(filenames):
            path = os.path.join(dirpath, name)
            h.update(os.path.relpath(path, root).encode())
            h.update(open(path, "rb").read())
    return h.hexdigest()


def test_cli_end_to_end(tmp_path):
    with criterion("CLI synth -> score -> select -> eval deterministic across reruns; "
                   "self-eval reports rho = 1, jaccard = 1"):
        def pipeline(root):
            root.mkdir()
            args = [
                ["synth", "--out", root / "data", "--seed", "7",
                 "--n", "2000", "--k", "10"],
                ["score", "--method", "lc", "--train", root / "data" / "pack.json",
                 "--k", "10", "--out", root / "scores.csv"],
                ["select", "--method", "lc", "--train", root / "data" / "pack.json",
                 "--scores", root / "scores.csv", "--eta", "0.3",
                 "--clusters", "8", "--seed", "1", "--out", root / "sel"],
                ["eval", "--scores-a", root / "scores.csv",
                 "--scores-b", root / "scores.csv", "--eta-list", "0.1,0.5",
                 "--out", root / "report.json"],
            ]
            for argv in args:
                assert cli_main([str(a) for a in argv]) == 0

        pipeline(tmp_path / "run1")
        pipeline(tmp_path / "run2")
        assert _tree_digest(tmp_path / "run1") == _tree_digest(tmp_path / "run2")
        rep = json.loads((tmp_path / "run1" / "report.json").read_text())
        assert rep["rho"] == pytest.approx(1.0, abs=1e-12)
        assert all(v == 1.0 for v in rep["jaccard_at_budget"].values())
        sel = json.loads((tmp_path / "run1" / "sel" / "lc_eta0.3.json").read_text())
        assert len(sel["indices"]) == 600
