"""Lorenz curves and Gini / concentration indices."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..errors import AllZero

CHECKPOINTS = (0.9, 0.4)


@dataclass
class GiniResult:
    points: np.ndarray          # (n + 1, 2): cumulative share of regions, cumulative share of value
    gini: float                 # 1 - 2 * area under the curve, regions ordered by the rank key
    classical_gini: float       # same, regions ordered by value
    order: list                 # region ids, lowest rank first

    def share_at(self, region_share: float) -> float:
        """Cumulative value share held by the lowest-ranked ``region_share`` of regions."""
        if not 0.0 <= region_share <= 1.0:
            raise ValueError("region_share must lie in [0, 1]")
        return float(np.interp(region_share, self.points[:, 0], self.points[:, 1]))

    def checkpoints(self, shares=CHECKPOINTS) -> dict[float, float]:
        return {s: self.share_at(s) for s in shares}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["cum_share_regions", "cum_share_value"])
            for x, y in self.points:
                w.writerow([repr(float(x)), repr(float(y))])

    def summary(self) -> dict:
        out = {"gini": self.gini, "classical_gini": self.classical_gini, "n": len(self.order)}
        for s, v in self.checkpoints().items():
            out[f"value_share_at_{s:g}"] = v
        return out


def lorenz_points(values_sorted) -> np.ndarray:
    v = np.asarray(values_sorted, dtype=float)
    n = len(v)
    total = math.fsum(v)
    cum = np.concatenate([[0.0], np.cumsum(v)]) / total
    cum[-1] = 1.0
    cum = np.maximum.accumulate(np.clip(cum, 0.0, 1.0))
    return np.column_stack([np.arange(n + 1) / n, cum])


def _area_gini(points) -> float:
    y = points[:, 1]
    n = len(y) - 1
    return 1.0 - math.fsum(y[1:] + y[:-1]) / n


def gini_by_rank(values, rank_key=None, ids=None) -> GiniResult:
    """Concentration of ``values`` with units ordered ascending by ``rank_key`` (ties by id).

    Without a rank key the order is by value, giving the classical Gini.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or not len(v):
        raise ValueError("values must be a non-empty vector")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise ValueError("values must be finite and non-negative")
    if not np.any(v > 0):
        raise AllZero("all values are zero")
    ids = list(range(len(v))) if ids is None else list(ids)
    key = v if rank_key is None else np.asarray(rank_key, dtype=float)
    if len(key) != len(v) or len(ids) != len(v):
        raise ValueError("values, rank_key and ids must align")
    tie = np.argsort(np.array(ids, dtype=object), kind="stable")
    tie_rank = np.empty(len(v), dtype=np.int64)
    tie_rank[tie] = np.arange(len(v))
    order = np.lexsort((tie_rank, key))
    pts = lorenz_points(v[order])
    by_value = lorenz_points(np.sort(v, kind="stable"))
    return GiniResult(pts, _area_gini(pts), _area_gini(by_value), [ids[i] for i in order])
