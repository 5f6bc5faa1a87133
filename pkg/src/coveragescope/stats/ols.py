"""Min-max scaling, least squares with classical inference, and fixed-effect dummies."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr, solve_triangular

from ..errors import ConstantColumn, RankDeficient, SingletonGroupWarning
from .special import f_sf, t_two_sided_p

INTERCEPT = "const"
STAR_LEVELS = ((0.01, "***"), (0.05, "**"), (0.1, "*"))


def minmax_normalize(column) -> np.ndarray:
    x = np.asarray(column, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("column holds non-finite values")
    lo, hi = x.min(), x.max()
    if not hi > lo:
        raise ConstantColumn(f"column is constant ({lo})")
    out = (x - lo) / (hi - lo)
    out[x == lo] = 0.0
    out[x == hi] = 1.0
    return out


def stars(p: float) -> str:
    for level, mark in STAR_LEVELS:
        if p < level:
            return mark
    return ""


@dataclass
class DesignMatrix:
    y: np.ndarray
    X: np.ndarray
    column_names: list[str]
    intercept: bool = True

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.y), -1)
        self.column_names = list(self.column_names)
        if self.X.shape[1] != len(self.column_names):
            raise ValueError("column_names do not match X")
        if len(set(self.column_names)) != len(self.column_names) or INTERCEPT in self.column_names:
            raise ValueError("column names must be unique and must not shadow the intercept")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))):
            raise ValueError("design holds non-finite entries")
        if not len(self.y) > self.n_params:
            raise ValueError(f"need more rows ({len(self.y)}) than parameters ({self.n_params})")

    @property
    def n_obs(self) -> int:
        return len(self.y)

    @property
    def n_params(self) -> int:
        return self.X.shape[1] + int(self.intercept)

    @property
    def terms(self) -> list[str]:
        return ([INTERCEPT] if self.intercept else []) + self.column_names

    def full(self) -> np.ndarray:
        if self.intercept:
            return np.column_stack([np.ones(self.n_obs), self.X])
        return self.X


@dataclass
class RegressionFit:
    terms: list[str]
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r2: float
    adj_r2: float
    residual_se: float
    df_resid: int
    df_model: int
    f_stat: float | None
    f_p_value: float | None
    residuals: np.ndarray
    fitted: np.ndarray
    n_obs: int
    cov_type: str = "classical"
    meta: dict = field(default_factory=dict)

    @property
    def stars(self) -> list[str]:
        return [stars(p) for p in self.p_values]

    def coef(self, term: str) -> float:
        return float(self.coefficients[self.terms.index(term)])

    def rows(self) -> list[dict]:
        return [{"term": t, "coefficient": float(b), "std_error": float(s), "t": float(tv), "p": float(p),
                 "stars": stars(p)}
                for t, b, s, tv, p in zip(self.terms, self.coefficients, self.std_errors, self.t_stats,
                                          self.p_values)]


def _rank(r_diag: np.ndarray, shape) -> int:
    if not len(r_diag):
        return 0
    tol = max(shape) * np.finfo(float).eps * abs(r_diag[0])
    return int(np.sum(np.abs(r_diag) > tol))


def ols_fit(design: DesignMatrix, robust: bool = False) -> RegressionFit:
    """Least squares by column-pivoted QR.

    Standard errors are classical (sigma^2 (X'X)^-1) unless ``robust``, which
    switches to HC1. The F statistic tests all slopes against the
    intercept-only model (or against zero without an intercept).
    """
    X = design.full()
    y = design.y
    n, p = X.shape
    Q, R, piv = qr(X, mode="economic", pivoting=True)
    rank = _rank(np.diag(R), X.shape)
    if rank < p:
        names = [design.terms[j] for j in sorted(piv[rank:])]
        raise RankDeficient(f"design is rank deficient ({rank} < {p}); collinear: {', '.join(names)}", names)
    beta_piv = solve_triangular(R, Q.T @ y)
    beta = np.empty(p)
    beta[piv] = beta_piv
    fitted = X @ beta
    resid = y - fitted
    df = n - p
    ssr = float(resid @ resid)
    sigma2 = ssr / df
    r_inv = solve_triangular(R, np.eye(p))
    xtx_inv = np.empty((p, p))
    xtx_inv[np.ix_(piv, piv)] = r_inv @ r_inv.T
    if robust:
        meat = (X * resid[:, None] ** 2).T @ X
        cov = xtx_inv @ meat @ xtx_inv * (n / df)
    else:
        cov = sigma2 * xtx_inv
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    pvals = np.array([t_two_sided_p(float(v), df) for v in t])

    k0 = 1 if design.intercept else 0
    sst = float(np.sum((y - y.mean()) ** 2)) if design.intercept else float(y @ y)
    r2 = 0.0 if sst == 0 else max(0.0, 1.0 - ssr / sst)
    adj = 1.0 - (1.0 - r2) * (n - k0) / df
    df_model = p - k0
    if df_model > 0 and sst > 0:
        f = math.inf if ssr == 0 else ((sst - ssr) / df_model) / sigma2
        fp = f_sf(f, df_model, df)
    else:
        f = fp = None
    return RegressionFit(design.terms, beta, se, t, pvals, r2, adj, math.sqrt(sigma2), df, df_model, f, fp,
                         resid, fitted, n, "HC1" if robust else "classical")


def with_fixed_effects(design: DesignMatrix, groups, full_set: bool = False, prefix: str = "fe") -> DesignMatrix:
    """Append group indicator columns; the first sorted group is the omitted reference.

    ``full_set`` keeps all G indicators, which is collinear with the
    intercept and makes :func:`ols_fit` raise :class:`RankDeficient`.
    """
    groups = np.asarray([str(g) for g in groups], dtype=object)
    if len(groups) != design.n_obs:
        raise ValueError("one group label per row is required")
    levels = sorted(set(groups.tolist()))
    if len(levels) < 2:
        raise ValueError("fixed effects need at least two groups")
    sizes = {g: int(np.sum(groups == g)) for g in levels}
    singles = [g for g, k in sizes.items() if k == 1]
    if singles:
        warnings.warn(f"{len(singles)} group(s) have a single row: {singles[:5]}", SingletonGroupWarning,
                      stacklevel=2)
    keep = levels if full_set else levels[1:]
    dummies = np.column_stack([(groups == g).astype(float) for g in keep])
    names = [f"{prefix}[{g}]" for g in keep]
    return DesignMatrix(design.y, np.column_stack([design.X, dummies]), design.column_names + names,
                        design.intercept)
