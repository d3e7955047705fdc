"""Budgeted subset selectors: top-k / level-set over scores, the
easy-and-diverse cluster-quota method, and the inference-based baselines
(herding, k-center greedy, contextual diversity, random)."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .clustering import kmeans
from .errors import NumericalError, UsageError
from .feature_store import FeaturePack
from .knn_scoring import ScoreVector

KL_FLOOR = 1e-12


@dataclass
class SelectionResult:
    indices: np.ndarray
    budget_fraction: float
    method: str
    n_total: int
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def __len__(self) -> int:
        return len(self.indices)

    def to_json(self) -> str:
        return json.dumps({
            "method": self.method,
            "params": self.params,
            "seed": self.seed,
            "budget_fraction": self.budget_fraction,
            "n_total": self.n_total,
            "indices": [int(i) for i in self.indices],
        }, sort_keys=True)


@dataclass(frozen=True)
class LevelSet:
    tau: float
    keep_below: bool


def budget_size(eta: float, n: int) -> int:
    """M = floor(eta * n), with an epsilon absorbing decimal-float error."""
    if not 0 < eta <= 1:
        raise UsageError(f"eta must be in (0, 1], got {eta}")
    return int(math.floor(eta * n + 1e-9))


def apportion(total: int, sizes: Sequence[int]) -> np.ndarray:
    """Largest-remainder quotas proportional to sizes, capped at the sizes.

    Remainder ties go to the group with the smaller floor quota, then the
    lower group index. Surplus from capped groups is re-apportioned over
    the rest, so the quotas always sum to `total` (requires sum(sizes) >=
    total).
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.sum() < total:
        raise UsageError(f"cannot seat {total} in groups of total size {sizes.sum()}")
    quotas = np.zeros(len(sizes), dtype=np.int64)
    active = sizes > 0
    remaining = total
    while remaining > 0:
        share = np.zeros(len(sizes), dtype=np.float64)
        weights = sizes[active].astype(np.float64)
        share[active] = remaining * weights / weights.sum()
        floors = np.floor(share).astype(np.int64)
        floors = np.minimum(floors, sizes - quotas)
        rema = share - floors
        rema[~active] = -1.0
        rema[(sizes - quotas - floors) <= 0] = -1.0
        add = floors.copy()
        seats_left = remaining - int(floors.sum())
        if seats_left > 0:
            order = sorted(range(len(sizes)),
                           key=lambda i: (-rema[i], quotas[i] + floors[i], i))
            for i in order:
                if seats_left == 0:
                    break
                if rema[i] < 0:
                    continue
                add[i] += 1
                seats_left -= 1
        quotas += add
        over = quotas > sizes
        quotas = np.minimum(quotas, sizes)
        remaining = total - int(quotas.sum())
        # groups at capacity leave the pool for the next round
        active = active & (quotas < sizes)
        if remaining > 0 and not active.any():
            raise UsageError("apportionment cannot place all seats")
    return quotas


def _ordered_by_score(values: np.ndarray, keep_highest: bool) -> np.ndarray:
    """Indices sorted best-first with ties to the lower sample index."""
    key = -values if keep_highest else values
    return np.lexsort((np.arange(len(values)), key))


def top_k_select(scores: ScoreVector, eta: float,
                 keep: str = "highest") -> SelectionResult:
    """Keep the floor(eta*N) most extreme scores in the given direction."""
    if keep not in ("highest", "lowest"):
        raise UsageError(f"keep must be 'highest' or 'lowest', got {keep!r}")
    n = len(scores)
    m = budget_size(eta, n)
    order = _ordered_by_score(scores.values, keep == "highest")
    kept = np.sort(order[:m])
    return SelectionResult(indices=kept, budget_fraction=eta, method="top_k",
                           n_total=n, params={"keep": keep, "order": "ascending"})


def threshold_from_budget(scores: ScoreVector, eta: float,
                          keep: str = "highest") -> LevelSet:
    """Score threshold whose level set (plus the index tie rule) has size M."""
    if keep not in ("highest", "lowest"):
        raise UsageError(f"keep must be 'highest' or 'lowest', got {keep!r}")
    n = len(scores)
    m = budget_size(eta, n)
    if m == 0:
        raise UsageError("budget rounds to zero samples; no threshold exists")
    order = _ordered_by_score(scores.values, keep == "highest")
    tau = float(scores.values[order[m - 1]])
    return LevelSet(tau=tau, keep_below=(keep == "lowest"))


def apply_level_set(scores: ScoreVector, level: LevelSet, eta: float) -> np.ndarray:
    """Indices kept by the level set; ties at tau resolve by lower index."""
    n = len(scores)
    m = budget_size(eta, n)
    v = scores.values
    strict = np.flatnonzero(v < level.tau if level.keep_below else v > level.tau)
    at_tau = np.flatnonzero(v == level.tau)
    need = m - len(strict)
    if need < 0 or need > len(at_tau):
        raise NumericalError("level set does not match the budget")
    return np.sort(np.concatenate([strict, at_tau[:need]]).astype(np.int64))


def easy_diverse_select(pack: FeaturePack, scores: ScoreVector,
                        cluster_layer: int, k_clusters: int, eta: float,
                        seed: int, max_iters: int = 300,
                        tol: float = 1e-4) -> SelectionResult:
    """Cluster the chosen layer, then keep each cluster's easiest samples
    under largest-remainder quotas proportional to cluster size."""
    n = pack.n_samples
    if len(scores) != n:
        raise UsageError("score vector length does not match the pack")
    m = budget_size(eta, n)
    model = kmeans(pack.layers[cluster_layer].data, k_clusters, seed=seed,
                   max_iters=max_iters, tol=tol)
    sizes = np.bincount(model.assignments, minlength=k_clusters)
    quotas = apportion(m, sizes)
    best_first = _ordered_by_score(scores.values, scores.higher_is_easier)
    rank = np.empty(n, dtype=np.int64)
    rank[best_first] = np.arange(n)
    kept: list[int] = []
    for c in range(k_clusters):
        members = np.flatnonzero(model.assignments == c)
        members = members[np.argsort(rank[members], kind="stable")]
        kept.extend(members[: quotas[c]].tolist())
    return SelectionResult(indices=np.sort(np.asarray(kept, dtype=np.int64)),
                           budget_fraction=eta, method="easy_diverse",
                           n_total=n, seed=seed,
                           params={"k_clusters": k_clusters,
                                   "cluster_layer": cluster_layer,
                                   "score_method": scores.method,
                                   "order": "ascending"})


def herding_select(features: np.ndarray, labels: Optional[np.ndarray],
                   eta: float, per_class: bool = True) -> SelectionResult:
    """Greedy herding: each pick drives the running subset mean toward the
    group mean. Class-wise with largest-remainder class budgets when labels
    are present and per_class is set; otherwise one global group."""
    feats = np.asarray(features, dtype=np.float64)
    n = feats.shape[0]
    m = budget_size(eta, n)
    if per_class and labels is None:
        raise UsageError("per-class herding needs labels")
    if per_class:
        classes = np.unique(labels)
        groups = [np.flatnonzero(labels == c) for c in classes]
    else:
        groups = [np.arange(n)]
    budgets = apportion(m, [len(g) for g in groups])
    picked: list[int] = []
    for g, mg in zip(groups, budgets):
        sub = feats[g]
        mu = sub.mean(axis=0)
        w = mu.copy()
        taken = np.zeros(len(g), dtype=bool)
        for _ in range(mg):
            gains = sub @ w
            gains[taken] = -np.inf
            pick = int(np.argmax(gains))
            taken[pick] = True
            picked.append(int(g[pick]))
            w += mu - sub[pick]
    return SelectionResult(indices=np.asarray(picked, dtype=np.int64),
                           budget_fraction=eta, method="herding", n_total=n,
                           params={"per_class": per_class, "order": "greedy"})


def _greedy_max_min(n: int, m: int, initial: int,
                    dist_to: "callable") -> np.ndarray:
    """Generic k-center greedy: dist_to(i) = distances from point i to all."""
    picked = [initial]
    min_dist = dist_to(initial)
    while len(picked) < m:
        masked = min_dist.copy()
        masked[picked] = -np.inf
        nxt = int(np.argmax(masked))
        picked.append(nxt)
        min_dist = np.minimum(min_dist, dist_to(nxt))
    return np.asarray(picked, dtype=np.int64)


def kcenter_greedy_select(features: np.ndarray, eta: float,
                          seed: Optional[int] = None,
                          initial: Optional[int] = None) -> SelectionResult:
    """Greedy max-min cover: repeatedly add the point farthest from the
    selected set (2-approximation to the optimal k-center radius)."""
    feats = np.asarray(features, dtype=np.float64)
    n = feats.shape[0]
    m = budget_size(eta, n)
    if initial is None:
        if seed is None:
            raise UsageError("k-center greedy needs a seed or an initial index")
        initial = int(np.random.default_rng(seed).integers(n))
    if not 0 <= initial < n:
        raise UsageError(f"initial index {initial} out of range")
    if m == 0:
        picked = np.empty(0, dtype=np.int64)
    else:
        picked = _greedy_max_min(
            n, m, initial, lambda i: np.linalg.norm(feats - feats[i], axis=1))
    return SelectionResult(indices=picked, budget_fraction=eta, method="kcg",
                           n_total=n, seed=seed,
                           params={"initial": initial, "order": "greedy"})


def symmetric_kl_matrix(probs: np.ndarray) -> np.ndarray:
    """Pairwise KL(p||q) + KL(q||p) between probability rows, entries
    floored at 1e-12 before the log."""
    p = np.clip(np.asarray(probs, dtype=np.float64), KL_FLOOR, None)
    logp = np.log(p)
    self_term = np.sum(p * logp, axis=1)
    cross = p @ logp.T
    d = self_term[:, None] + self_term[None, :] - cross - cross.T
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def cd_select(probs: np.ndarray, eta: float, seed: Optional[int] = None,
              initial: Optional[int] = None) -> SelectionResult:
    """Contextual-diversity baseline: k-center greedy under the symmetric
    KL divergence between predicted class distributions."""
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.shape[0]
    m = budget_size(eta, n)
    dists = symmetric_kl_matrix(probs)
    if initial is None:
        if seed is None:
            raise UsageError("cd needs a seed or an initial index")
        initial = int(np.random.default_rng(seed).integers(n))
    if not 0 <= initial < n:
        raise UsageError(f"initial index {initial} out of range")
    if m == 0:
        picked = np.empty(0, dtype=np.int64)
    else:
        picked = _greedy_max_min(n, m, initial, lambda i: dists[i].copy())
    return SelectionResult(indices=picked, budget_fraction=eta, method="cd",
                           n_total=n, seed=seed,
                           params={"initial": initial, "order": "greedy",
                                   "distance": "symmetric_kl"})


def random_select(n: int, eta: float, seed: int) -> SelectionResult:
    """Seeded uniform draw without replacement, output sorted ascending."""
    m = budget_size(eta, n)
    picked = np.sort(np.random.default_rng(seed).permutation(n)[:m])
    return SelectionResult(indices=picked.astype(np.int64), budget_fraction=eta,
                           method="random", n_total=n, seed=seed,
                           params={"order": "ascending"})


def save_selection(result: SelectionResult, json_path: str) -> None:
    """Write the JSON record plus a one-index-per-line text file."""
    tmp = json_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(result.to_json())
        fh.write("\n")
    os.replace(tmp, json_path)
    txt_path = os.path.splitext(json_path)[0] + ".txt"
    tmp = txt_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for i in result.indices:
            fh.write(f"{int(i)}\n")
    os.replace(tmp, txt_path)


def load_selection(json_path: str) -> SelectionResult:
    with open(json_path, encoding="utf-8") as fh:
        rec = json.load(fh)
    return SelectionResult(indices=np.asarray(rec["indices"], dtype=np.int64),
                           budget_fraction=rec["budget_fraction"],
                           method=rec["method"], n_total=rec["n_total"],
                           params=rec.get("params", {}), seed=rec.get("seed"))
