"""Historic images relative to potential revisits, per group and GSD bin."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..errors import GroupMismatch


@dataclass(frozen=True)
class RatioRow:
    group: str
    gsd_bin: str
    avg_daily_revisits: float
    avg_daily_historic: float
    ratio_of_averages: float | None
    mean_of_ratios: float | None
    units: int


def _as_series(value) -> np.ndarray:
    return np.atleast_1d(np.asarray(value, dtype=float))


def ratio_table(revisits: dict, historic: dict) -> list[RatioRow]:
    """Both ratio definitions for every (group, bin) in ``historic``.

    ``historic`` maps (group, bin) to per-unit daily image averages (units are
    tiles, regions or days; a scalar is one unit). ``revisits`` maps the same
    keys, or just the group, to per-unit daily revisit averages aligned with
    the historic units. ``ratio_of_averages`` is mean(historic)/mean(revisits);
    ``mean_of_ratios`` averages historic/revisits over units with revisits > 0.
    Zero revisits make the ratio undefined (None).
    """
    hist_groups = {g for g, _ in historic}
    rev_groups = {k if isinstance(k, str) else k[0] for k in revisits}
    if hist_groups != rev_groups:
        raise GroupMismatch(f"groups differ: only revisits {sorted(rev_groups - hist_groups)}, "
                            f"only historic {sorted(hist_groups - rev_groups)}")
    rows = []
    for group, label in sorted(historic):
        h = _as_series(historic[(group, label)])
        r = revisits.get((group, label), revisits.get(group))
        if r is None:
            raise GroupMismatch(f"no revisits for {(group, label)}")
        r = _as_series(r)
        if r.shape != h.shape:
            if r.size != 1:
                raise GroupMismatch(f"{(group, label)}: {r.size} revisit units vs {h.size} historic units")
            r = np.full(h.shape, r[0])
        mean_r = math.fsum(r) / len(r)
        mean_h = math.fsum(h) / len(h)
        roa = mean_h / mean_r if mean_r > 0 else None
        pos = r > 0
        mor = math.fsum(h[pos] / r[pos]) / int(pos.sum()) if pos.any() else None
        rows.append(RatioRow(group, label, mean_r, mean_h, roa, mor, len(h)))
    return rows


def write_ratio_csv(rows, path) -> None:
    fmt = lambda v: "" if v is None else f"{v:.6f}"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["group", "gsd_bin", "avg_daily_revisits", "avg_daily_historic", "ratio_of_averages",
                    "mean_of_ratios", "units"])
        for r in rows:
            w.writerow([r.group, r.gsd_bin, fmt(r.avg_daily_revisits), fmt(r.avg_daily_historic),
                        fmt(r.ratio_of_averages), fmt(r.mean_of_ratios), r.units])
