"""Learning-complexity scores and uncertainty baselines.

Classification LC: the mean over layers of a weighted KNN confidence,
where each neighbor votes with weight 1/(distance + tie_epsilon).
Regression LC: the mean reciprocal perplexity across dropout subnets.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataValidationError, NumericalError, UsageError
from .feature_store import FeaturePack, LayerMatrix, PROB_ROWSUM_TOL


@dataclass(frozen=True)
class KnnConfig:
    k: int
    exclude_self: bool = True
    tie_epsilon: float = 1e-12

    def __post_init__(self):
        if self.k < 1:
            raise UsageError(f"k must be >= 1, got {self.k}")
        if self.tie_epsilon <= 0:
            raise UsageError("tie_epsilon must be > 0")


@dataclass
class ScoreVector:
    """One float64 score per sample plus provenance metadata."""

    values: np.ndarray
    method: str
    params: dict = field(default_factory=dict)
    higher_is_easier: bool = True
    pack_digest: Optional[str] = None

    def __len__(self) -> int:
        return len(self.values)


def _neighbor_weights(dists: np.ndarray, k: int, tie_epsilon: float):
    """Indices and inverse-distance weights of the k nearest references.

    Equal distances resolve to the lower reference index (stable sort).
    """
    order = np.argsort(dists, kind="stable")[:k]
    return order, 1.0 / (dists[order] + tie_epsilon)


def knn_confidence(query: np.ndarray, query_label: int, refs: np.ndarray,
                   ref_labels: np.ndarray, cfg: KnnConfig) -> float:
    """Weighted-KNN confidence that `query` belongs to `query_label`.

    Returns sum of weights over label-matching neighbors divided by the
    sum over all k neighbors, weights = 1/(L2 distance + tie_epsilon).
    """
    refs = np.asarray(refs, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    if query.shape[-1] != refs.shape[1]:
        raise NumericalError(
            f"dimension mismatch: query d={query.shape[-1]}, refs d={refs.shape[1]}")
    if cfg.k > refs.shape[0]:
        raise NumericalError(
            f"k={cfg.k} exceeds available references ({refs.shape[0]})")
    dists = np.linalg.norm(refs - query, axis=1)
    idx, w = _neighbor_weights(dists, cfg.k, cfg.tie_epsilon)
    match = (np.asarray(ref_labels)[idx] == query_label)
    return float(np.sum(w * match) / np.sum(w))


def layer_confidences(pack: FeaturePack, layer_index: int,
                      cfg: KnnConfig) -> np.ndarray:
    """Per-sample weighted-KNN confidence of a pack against itself."""
    if pack.labels is None:
        raise DataValidationError("pack has no labels; cannot score")
    if not 0 <= layer_index < pack.num_layers:
        raise UsageError(f"layer index {layer_index} out of range "
                         f"(pack has {pack.num_layers} layers)")
    feats = np.asarray(pack.layers[layer_index].data, dtype=np.float64)
    labels = pack.labels
    n = feats.shape[0]
    avail = n - 1 if cfg.exclude_self else n
    if cfg.k > avail:
        raise NumericalError(f"k={cfg.k} exceeds available references ({avail})")
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        dists = np.linalg.norm(feats - feats[i], axis=1)
        if cfg.exclude_self:
            dists[i] = np.inf
        idx, w = _neighbor_weights(dists, cfg.k, cfg.tie_epsilon)
        match = (labels[idx] == labels[i])
        out[i] = np.sum(w * match) / np.sum(w)
    return out


def lc_classification_score(pack: FeaturePack, cfg: KnnConfig,
                            layer_subset: Optional[Sequence[int]] = None
                            ) -> ScoreVector:
    """Classification learning complexity: mean confidence over layers."""
    layers = list(range(pack.num_layers)) if layer_subset is None else list(layer_subset)
    if not layers:
        raise UsageError("layer subset is empty")
    acc = np.zeros(pack.n_samples, dtype=np.float64)
    for li in layers:
        acc += layer_confidences(pack, li, cfg)
    return ScoreVector(values=acc / len(layers), method="lc",
                       params={"k": cfg.k, "layers": layers,
                               "tie_epsilon": cfg.tie_epsilon},
                       higher_is_easier=True, pack_digest=pack.digest())


def lc_regression_score(perplexities: np.ndarray) -> ScoreVector:
    """Regression learning complexity: mean reciprocal perplexity per row."""
    pp = np.asarray(perplexities, dtype=np.float64)
    if (pp <= 0).any():
        row = int(np.argwhere((pp <= 0).any(axis=1))[0, 0])
        raise NumericalError(f"nonpositive perplexity at row {row}")
    values = np.mean(1.0 / pp, axis=1)
    return ScoreVector(values=values, method="lc-reg",
                       params={"num_subnets": pp.shape[1]},
                       higher_is_easier=True)


def knn_val_accuracy(train: FeaturePack, val: FeaturePack, layer_index: int,
                     cfg: KnnConfig) -> float:
    """Accuracy of the weighted-KNN vote on val queries against train refs.

    Class ties resolve to the lower class id; self-exclusion does not apply
    (val rows are not members of the reference set).
    """
    if train.labels is None or val.labels is None:
        raise DataValidationError("both packs need labels")
    refs = np.asarray(train.layers[layer_index].data, dtype=np.float64)
    queries = np.asarray(val.layers[layer_index].data, dtype=np.float64)
    if refs.shape[1] != queries.shape[1]:
        raise NumericalError(
            f"dimension mismatch: train d={refs.shape[1]}, val d={queries.shape[1]}")
    if cfg.k > refs.shape[0]:
        raise NumericalError(f"k={cfg.k} exceeds available references ({refs.shape[0]})")
    k_classes = int(max(train.labels.max(), val.labels.max())) + 1
    correct = 0
    for i in range(queries.shape[0]):
        dists = np.linalg.norm(refs - queries[i], axis=1)
        idx, w = _neighbor_weights(dists, cfg.k, cfg.tie_epsilon)
        votes = np.zeros(k_classes, dtype=np.float64)
        np.add.at(votes, train.labels[idx].astype(np.intp), w)
        if int(np.argmax(votes)) == int(val.labels[i]):
            correct += 1
    return correct / queries.shape[0]


def tune_k(train: FeaturePack, val: FeaturePack, layer_index: int,
           candidates: Sequence[int],
           tie_epsilon: float = 1e-12) -> int:
    """Pick the k with the best validation accuracy; ties go to smaller k."""
    if not candidates:
        raise UsageError("empty k candidate list")
    best_k, best_acc = None, -1.0
    for k in sorted(set(candidates)):
        acc = knn_val_accuracy(train, val, layer_index,
                               KnnConfig(k=k, exclude_self=False,
                                         tie_epsilon=tie_epsilon))
        if acc > best_acc:
            best_k, best_acc = k, acc
    return best_k


def select_cluster_layer(train: FeaturePack, val: FeaturePack,
                         cfg: KnnConfig) -> int:
    """Intermediate layer with the best validation accuracy.

    The final layer is excluded when the pack has more than one layer;
    ties go to the shallower layer. Returns a 0-based index.
    """
    n_layers = train.num_layers
    if n_layers == 1:
        return 0
    cfg = KnnConfig(k=cfg.k, exclude_self=False, tie_epsilon=cfg.tie_epsilon)
    best_layer, best_acc = None, -1.0
    for li in range(n_layers - 1):
        acc = knn_val_accuracy(train, val, li, cfg)
        if acc > best_acc:
            best_layer, best_acc = li, acc
    return best_layer


def _check_probs(probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise DataValidationError("probs must be a 2-D matrix")
    if not np.isfinite(probs).all() or (probs < 0).any():
        raise DataValidationError("probs contain negative or non-finite entries")
    off = np.abs(probs.sum(axis=1) - 1.0) > PROB_ROWSUM_TOL
    if off.any():
        raise DataValidationError(
            f"probs row {int(np.argwhere(off)[0, 0])} does not sum to 1")
    return probs


def least_confidence_score(probs: np.ndarray) -> ScoreVector:
    """1 - max class probability; higher means more uncertain."""
    p = _check_probs(probs)
    return ScoreVector(values=1.0 - p.max(axis=1), method="least-conf",
                       higher_is_easier=False)


def entropy_score(probs: np.ndarray) -> ScoreVector:
    """Shannon entropy of each row in nats, with 0*ln(0) := 0."""
    p = _check_probs(probs)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return ScoreVector(values=-terms.sum(axis=1), method="entropy",
                       higher_is_easier=False)


def margin_score(probs: np.ndarray) -> ScoreVector:
    """1 - (top1 - top2 probability); higher means more uncertain."""
    p = _check_probs(probs)
    if p.shape[1] < 2:
        raise DataValidationError("margin needs at least 2 classes")
    top2 = -np.partition(-p, 1, axis=1)[:, :2]
    return ScoreVector(values=1.0 - (top2[:, 0] - top2[:, 1]), method="margin",
                       higher_is_easier=False)


def save_score_vector(sv: ScoreVector, csv_path: str) -> None:
    """Write `index,score` CSV plus a JSON sidecar with the metadata."""
    tmp = csv_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("index,score\n")
        for i, v in enumerate(sv.values):
            fh.write(f"{i},{float(v):.17g}\n")
    os.replace(tmp, csv_path)
    sidecar = {"method": sv.method, "params": sv.params,
               "higher_is_easier": sv.higher_is_easier,
               "pack_digest": sv.pack_digest}
    tmp = csv_path + ".json.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, _sidecar_path(csv_path))


def _sidecar_path(csv_path: str) -> str:
    return csv_path + ".json"


def load_score_vector(csv_path: str) -> ScoreVector:
    """Read a score CSV (and its sidecar when present) back into memory."""
    values = []
    with open(csv_path, encoding="utf-8") as fh:
        header = fh.readline()
        if header.strip() != "index,score":
            raise DataValidationError(f"{csv_path}: expected 'index,score' header")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                idx_s, val_s = line.split(",")
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise DataValidationError(f"{csv_path}: bad row at line {lineno}")
            if idx != len(values):
                raise DataValidationError(
                    f"{csv_path}: out-of-order index at line {lineno}")
            values.append(val)
    if not values:
        raise DataValidationError(f"{csv_path}: no scores")
    meta = {"method": "external", "params": {}, "higher_is_easier": True,
            "pack_digest": None}
    if os.path.isfile(_sidecar_path(csv_path)):
        with open(_sidecar_path(csv_path), encoding="utf-8") as fh:
            meta.update(json.load(fh))
    return ScoreVector(values=np.asarray(values, dtype=np.float64),
                       method=meta["method"], params=meta["params"],
                       higher_is_easier=bool(meta["higher_is_easier"]),
                       pack_digest=meta.get("pack_digest"))
