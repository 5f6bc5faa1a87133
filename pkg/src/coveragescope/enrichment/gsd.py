"""Right-open ground-sampling-distance bins."""
from __future__ import annotations

import math
from enum import Enum

import numpy as np

from ..errors import NonPositiveGsd

EDGES = (0.5, 1.0, 3.0)


class GsdBin(str, Enum):
    VHR = "0-0.5"
    HIGH = "0.5-1.0"
    MEDIUM = "1.0-3.0"
    LOW = ">3.0"

    @property
    def bounds(self) -> tuple[float, float]:
        lo = (0.0,) + EDGES
        hi = EDGES + (math.inf,)
        k = list(GsdBin).index(self)
        return lo[k], hi[k]


BINS = tuple(GsdBin)
LABELS = tuple(b.value for b in BINS)


def gsd_bin(gsd_m: float) -> GsdBin:
    """[0, 0.5), [0.5, 1), [1, 3), [3, inf)."""
    try:
        g = float(gsd_m)
    except (TypeError, ValueError):
        raise NonPositiveGsd(f"gsd must be a positive number, got {gsd_m!r}") from None
    if not g > 0:
        raise NonPositiveGsd(f"gsd must be positive, got {gsd_m!r}")
    return BINS[int(np.searchsorted(EDGES, g, side="right"))]


def gsd_codes(gsd_m) -> np.ndarray:
    """Vectorised bin index (0..3) per value."""
    g = np.asarray(gsd_m, dtype=float)
    if np.any(~(g > 0)):
        raise NonPositiveGsd("all gsd values must be positive")
    return np.searchsorted(EDGES, g, side="right")
