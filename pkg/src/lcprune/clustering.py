"""Seeded k-means (k-means++ init, Lloyd iterations) and the subset
diversity metric (mean nearest-neighbor distance within the subset)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericalError, UsageError


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    iterations_run: int
    seed: int
    inertia_history: tuple = ()

    def to_json(self) -> str:
        return json.dumps({
            "k": self.k,
            "seed": self.seed,
            "iterations_run": self.iterations_run,
            "inertia": self.inertia,
            "centroids": self.centroids.tolist(),
            "assignments": self.assignments.tolist(),
        }, sort_keys=True)


def _pairwise_sq(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeans_pp_init(feats: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = feats.shape[0]
    centers = np.empty((k, feats.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = feats[first]
    closest = np.sum((feats - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            # all remaining points coincide with a chosen center
            idx = int(rng.integers(n))
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(closest), r))
            idx = min(idx, n - 1)
        centers[j] = feats[idx]
        closest = np.minimum(closest, np.sum((feats - centers[j]) ** 2, axis=1))
    return centers


def kmeans(features: np.ndarray, k: int, seed: int, max_iters: int = 300,
           tol: float = 1e-4) -> ClusterModel:
    """Lloyd's algorithm from a seeded k-means++ start.

    Stops when the max centroid movement (L2) drops below tol or after
    max_iters. Empty clusters are repaired by moving the point currently
    farthest from its centroid into the empty cluster. Assignment ties go
    to the lower centroid id. Bit-reproducible given the seed.
    """
    feats = np.ascontiguousarray(features, dtype=np.float64)
    n = feats.shape[0]
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    if k > n:
        raise NumericalError(f"k={k} exceeds sample count {n}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(feats, k, rng)
    history = []
    iterations = 0
    assignments = np.zeros(n, dtype=np.int64)
    for _ in range(max_iters):
        iterations += 1
        sq = _pairwise_sq(feats, centers)
        assignments = np.argmin(sq, axis=1)
        # empty-cluster repair: relocate the centroid onto the point
        # currently farthest from its own centroid (donor keeps >= 1 member)
        for j in range(k):
            if not (assignments == j).any():
                own = sq[np.arange(n), assignments].copy()
                counts = np.bincount(assignments, minlength=k)
                own[counts[assignments] <= 1] = -np.inf
                worst = int(np.argmax(own))
                centers[j] = feats[worst]
                assignments[worst] = j
        history.append(float(np.sum(
            np.sum((feats - centers[assignments]) ** 2, axis=1))))
        new_centers = np.empty_like(centers)
        for j in range(k):
            members = feats[assignments == j]
            new_centers[j] = members.mean(axis=0)
        move = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        if move < tol:
            break
    # final assignment so the nearest-centroid invariant holds exactly
    sq = _pairwise_sq(feats, centers)
    assignments = np.argmin(sq, axis=1)
    inertia = float(np.sum(sq[np.arange(n), assignments]))
    history.append(inertia)
    return ClusterModel(k=k, centroids=centers, assignments=assignments,
                        inertia=inertia, iterations_run=iterations, seed=seed,
                        inertia_history=tuple(history))


def diversity(features: np.ndarray, subset: Sequence[int]) -> float:
    """Mean distance from each subset point to its nearest subset neighbor."""
    subset = list(subset)
    if len(subset) < 2:
        raise UsageError("diversity needs a subset of size >= 2")
    if len(set(subset)) != len(subset):
        raise UsageError("duplicate index in subset")
    pts = np.asarray(features, dtype=np.float64)[subset]
    diff = pts[:, None, :] - pts[None, :, :]
    dists = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(dists, np.inf)
    return float(np.mean(dists.min(axis=1)))
