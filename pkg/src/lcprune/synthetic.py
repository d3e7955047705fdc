"""Seeded Gaussian-mixture generator with an exact density oracle.

Used to verify that the weighted-KNN confidence tracks the data density
(high-confidence samples sit in high-density regions), and as the fixture
source for the rest of the suite. Covariances are diagonal only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericalError, UsageError
from .evaluation import spearman
from .feature_store import FeaturePack, LayerMatrix
from .knn_scoring import KnnConfig, layer_confidences


@dataclass(frozen=True)
class GmmComponent:
    class_id: int
    weight: float
    mean: tuple
    cov_diag: tuple


@dataclass(frozen=True)
class GmmSpec:
    components: tuple
    dimension: int
    seed: int

    def __post_init__(self):
        if not self.components:
            raise UsageError("mixture needs at least one component")
        w = np.array([c.weight for c in self.components])
        if (w <= 0).any():
            raise UsageError("component weights must be positive")
        if abs(w.sum() - 1.0) > 1e-9:
            raise UsageError(f"component weights sum to {w.sum()}, expected 1")
        for c in self.components:
            if len(c.mean) != self.dimension or len(c.cov_diag) != self.dimension:
                raise UsageError("component dimension mismatch")
            if any(v <= 0 for v in c.cov_diag):
                raise UsageError("covariance entries must be positive")

    @property
    def class_ids(self) -> list:
        return sorted({c.class_id for c in self.components})


def reference_spec(seed: int = 7, classes: int = 2,
                   separation: float = 6.0, dimension: int = 2) -> GmmSpec:
    """Equal-weight unit-covariance classes spread `separation` apart on
    the first axis (default: two classes at (-3,0) and (3,0))."""
    comps = []
    offset = -(classes - 1) / 2.0
    for c in range(classes):
        mean = [0.0] * dimension
        mean[0] = (offset + c) * separation
        comps.append(GmmComponent(class_id=c, weight=1.0 / classes,
                                  mean=tuple(mean),
                                  cov_diag=(1.0,) * dimension))
    return GmmSpec(components=tuple(comps), dimension=dimension, seed=seed)


@dataclass(frozen=True)
class SyntheticPack:
    pack: FeaturePack
    true_density: np.ndarray
    true_class_density: np.ndarray


def _component_pdf(points: np.ndarray, mean: np.ndarray,
                   cov_diag: np.ndarray) -> np.ndarray:
    diff = points - mean
    quad = np.sum(diff * diff / cov_diag, axis=-1)
    norm = np.prod(2.0 * np.pi * cov_diag) ** -0.5
    return norm * np.exp(-0.5 * quad)


def gmm_density(spec: GmmSpec, points: np.ndarray):
    """Exact mixture density p(z) and per-class conditional densities.

    Accepts one point or a batch; returns (p, p_class) where p_class has
    one column per class id in sorted order, each normalized within its
    class.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    class_ids = spec.class_ids
    per_class = np.zeros((pts.shape[0], len(class_ids)))
    class_weight = np.zeros(len(class_ids))
    total = np.zeros(pts.shape[0])
    for comp in spec.components:
        ci = class_ids.index(comp.class_id)
        pdf = _component_pdf(pts, np.asarray(comp.mean),
                             np.asarray(comp.cov_diag))
        per_class[:, ci] += comp.weight * pdf
        class_weight[ci] += comp.weight
        total += comp.weight * pdf
    per_class /= class_weight
    if np.ndim(points) == 1:
        return float(total[0]), per_class[0]
    return total, per_class


def sample_gmm(spec: GmmSpec, n: int) -> SyntheticPack:
    """Draw n samples (component by weight, then diagonal Gaussian) with
    exact densities attached; deterministic given spec.seed."""
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(spec.seed)
    weights = np.array([c.weight for c in spec.components])
    means = np.array([c.mean for c in spec.components])
    covs = np.array([c.cov_diag for c in spec.components])
    labels_of = np.array([c.class_id for c in spec.components])
    comp = rng.choice(len(spec.components), size=n, p=weights)
    noise = rng.standard_normal((n, spec.dimension))
    # densities are evaluated at the float32 features that get serialized
    samples = (means[comp] + noise * np.sqrt(covs[comp])).astype("<f4")
    labels = labels_of[comp].astype("<u4")
    density, per_class = gmm_density(spec, samples.astype(np.float64))
    class_ids = spec.class_ids
    col = np.array([class_ids.index(l) for l in labels])
    own_class_density = per_class[np.arange(n), col]
    pack = FeaturePack(layers=[LayerMatrix("z", samples.astype("<f4"))],
                       labels=labels, split="unsplit")
    return SyntheticPack(pack=pack, true_density=density,
                         true_class_density=own_class_density)


def prop31_check(spec: GmmSpec, n: int, cfg: KnnConfig) -> dict:
    """Rank correlation between weighted-KNN confidence and true density.

    Samples a pack from the spec, scores it against itself (self excluded),
    and returns rho plus the per-sample table.
    """
    syn = sample_gmm(spec, n)
    confidences = layer_confidences(syn.pack, 0, cfg)
    rho = spearman(confidences, syn.true_density)
    return {"rho": rho, "confidences": confidences,
            "density": syn.true_density,
            "class_density": syn.true_class_density,
            "labels": syn.pack.labels, "synthetic": syn}
