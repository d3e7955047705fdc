"""Agreement metrics between scoring functions (Spearman's rho on
fractional ranks, selection Jaccard) and selection summaries."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .clustering import diversity
from .errors import NumericalError, UsageError
from .feature_store import FeaturePack
from .selection import SelectionResult


@dataclass
class EvalReport:
    rho: Optional[float] = None
    jaccard_at_budget: Optional[dict] = None
    diversity_delta: Optional[float] = None
    class_histogram: Optional[dict] = None
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "rho": self.rho,
            "jaccard_at_budget": self.jaccard_at_budget,
            "diversity_delta": self.diversity_delta,
            "class_histogram": self.class_histogram,
            "metadata": self.metadata,
        }, sort_keys=True)

    def to_csv(self) -> str:
        """Flat one-metric-per-row CSV for plotting scripts."""
        rows = ["metric,value"]
        if self.rho is not None:
            rows.append(f"rho,{self.rho:.17g}")
        if self.jaccard_at_budget:
            for eta in sorted(self.jaccard_at_budget):
                rows.append(f"jaccard@{eta},{self.jaccard_at_budget[eta]:.17g}")
        if self.diversity_delta is not None:
            rows.append(f"diversity_delta,{self.diversity_delta:.17g}")
        if self.class_histogram:
            for c in sorted(self.class_histogram, key=int):
                rows.append(f"class_{c},{self.class_histogram[c]}")
        return "\n".join(rows) + "\n"


def rank_vector(values: np.ndarray) -> np.ndarray:
    """Fractional ranks 1..n; ties get the mean of their positions."""
    v = np.asarray(values, dtype=np.float64)
    n = len(v)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation of the fractional rank vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError("spearman needs two 1-D vectors of equal length")
    if len(a) < 2:
        raise UsageError("spearman needs at least 2 samples")
    ra, rb = rank_vector(a), rank_vector(b)
    da, db = ra - ra.mean(), rb - rb.mean()
    sa, sb = np.sqrt(np.sum(da * da)), np.sqrt(np.sum(db * db))
    if sa == 0 or sb == 0:
        raise NumericalError("spearman undefined for a constant vector")
    return float(np.sum(da * db) / (sa * sb))


def selection_jaccard(s1: SelectionResult, s2: SelectionResult) -> float:
    a, b = set(map(int, s1.indices)), set(map(int, s2.indices))
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def summarize(selection: SelectionResult, pack: FeaturePack,
              layer: int) -> EvalReport:
    """Diversity and class composition of a selection over a pack layer."""
    idx = selection.indices
    delta = None
    if len(idx) >= 2:
        delta = diversity(pack.layers[layer].data, idx.tolist())
    histogram = None
    if pack.labels is not None:
        counts = np.bincount(pack.labels[idx].astype(np.intp),
                             minlength=pack.num_classes or 0)
        histogram = {str(c): int(v) for c, v in enumerate(counts)}
    return EvalReport(diversity_delta=delta, class_histogram=histogram,
                      metadata={"method": selection.method,
                                "params": selection.params,
                                "budget_fraction": selection.budget_fraction,
                                "n_selected": len(idx),
                                "layer": layer})


def save_report(report: EvalReport, json_path: str) -> None:
    """Write the JSON report and a flat CSV alongside it."""
    tmp = json_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    os.replace(tmp, json_path)
    csv_path = os.path.splitext(json_path)[0] + ".csv"
    tmp = csv_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    os.replace(tmp, csv_path)
