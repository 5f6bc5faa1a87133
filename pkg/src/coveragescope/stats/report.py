"""Regression model ladder over the regional table and its publication-style layout."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .forest import rf_fit, rf_importance
from .ols import INTERCEPT, DesignMatrix, RegressionFit, minmax_normalize, ols_fit, stars, with_fixed_effects

TERM_LABELS = {
    INTERCEPT: "Constant",
    "shdi": "Subnational HDI",
    "income_index": "Income index",
    "abs_lat": "Latitude (abs.)",
    "abs_lon": "Longitude (abs.)",
    "households": "# of households",
    "area_km2": "Area size",
    "cloud_cover_mean": "Cloud coverage",
}
LADDER = (
    ("{dev}",),
    ("{dev}", "abs_lat", "abs_lon"),
    ("{dev}", "abs_lat", "abs_lon", "households", "area_km2"),
    ("{dev}", "abs_lat", "abs_lon", "households", "area_km2", "cloud_cover_mean"),
)
STAR_NOTE = "*p < 0.1; **p < 0.05; ***p < 0.01"
FE_NOTE = "Country-level fixed effects included."


@dataclass(frozen=True)
class Variant:
    name: str
    providers: str = "exclude-planet"     # exclude-planet | all | planet-only
    bins: tuple[str, ...] | None = None
    development: str = "shdi"
    fixed_effects: bool = False
    dependent: str = "Historic image count"


VARIANTS = {
    "main": Variant("main"),
    "all-providers": Variant("all-providers", providers="all"),
    "planet-only": Variant("planet-only", providers="planet-only", dependent="Historic image count (Planet only)"),
    "fixed-effects": Variant("fixed-effects", fixed_effects=True),
    "income-index": Variant("income-index", development="income_index"),
    "vhr-only": Variant("vhr-only", bins=("0-0.5",), dependent="Historic image count (0-0.5 m resolution)"),
}


def model_terms(variant: Variant, model: int) -> list[str]:
    if not 1 <= model <= len(LADDER):
        raise ConfigError(f"model must be 1..{len(LADDER)}")
    return [t.format(dev=variant.development) for t in LADDER[model - 1]]


def dependent_counts(table, variant: Variant, planet_providers=("planet",)) -> np.ndarray:
    planet = {p for p in table.providers if p.lower() in {q.lower() for q in planet_providers}}
    if variant.providers == "all":
        sel = dict(providers=None)
    elif variant.providers == "planet-only":
        sel = dict(providers=planet)
    else:
        sel = dict(exclude=planet)
    return table.monthly_average(bins=variant.bins, **sel)


def build_design(table, variant: Variant, model: int, planet_providers=("planet",)) -> tuple[DesignMatrix, list]:
    """Normalised design for one ladder column; rows lacking any ladder covariate are dropped first."""
    used = sorted({t for k in range(1, len(LADDER) + 1) for t in model_terms(variant, k)})
    rows = table.complete_rows(used)
    y = dependent_counts(table, variant, planet_providers)[rows]
    terms = model_terms(variant, model)
    X = np.column_stack([minmax_normalize(table.covariates[t][rows]) for t in terms])
    design = DesignMatrix(minmax_normalize(y), X, terms)
    groups = [c for c, keep in zip(table.country_code, rows) if keep]
    return design, groups


def fit_ladder(table, variant: Variant | str, planet_providers=("planet",), robust=False) -> list[RegressionFit]:
    variant = VARIANTS[variant] if isinstance(variant, str) else variant
    fits = []
    for k in range(1, len(LADDER) + 1):
        design, groups = build_design(table, variant, k, planet_providers)
        if variant.fixed_effects:
            design = with_fixed_effects(design, groups)
        fit = ols_fit(design, robust=robust)
        fit.meta.update(variant=variant.name, model=k)
        fits.append(fit)
    return fits


def fit_forest(table, variant: Variant | str, planet_providers=("planet",), seed=0, n_jobs=1, **params):
    variant = VARIANTS[variant] if isinstance(variant, str) else variant
    design, _ = build_design(table, variant, len(LADDER), planet_providers)
    model = rf_fit(design, seed=seed, n_jobs=n_jobs, **params)
    return design, model, rf_importance(model)


# -- exports -----------------------------------------------------------------

def _num(v) -> str:
    return "" if v is None else repr(float(v))


def write_coefficients(fits, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["model", "term", "coefficient", "std_error", "t", "p", "stars"])
        for k, fit in enumerate(fits, 1):
            for r in fit.rows():
                w.writerow([k, r["term"], _num(r["coefficient"]), _num(r["std_error"]), _num(r["t"]),
                            _num(r["p"]), r["stars"]])


def write_summary(fits, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["model", "n_obs", "r2", "adj_r2", "residual_se", "df_resid", "f_stat", "df_model", "f_p_value"])
        for k, f in enumerate(fits, 1):
            w.writerow([k, f.n_obs, _num(f.r2), _num(f.adj_r2), _num(f.residual_se), f.df_resid, _num(f.f_stat),
                        f.df_model, _num(f.f_p_value)])


def layout_rows(fits, variant: Variant | None = None) -> list[list[str]]:
    """Rows of the side-by-side table: coefficient/SE pairs per displayed term, then fit statistics."""
    variant = variant or VARIANTS["main"]
    shown = [t for t in TERM_LABELS if any(t in f.terms for f in fits)]
    cols = [f"({k})" for k in range(1, len(fits) + 1)]
    rows = [["", f"Dependent variable: {variant.dependent}"] + [""] * (len(fits) - 1), [""] + cols]
    for term in shown:
        coef, se = [TERM_LABELS[term]], [""]
        for f in fits:
            if term in f.terms:
                i = f.terms.index(term)
                coef.append(f"{f.coefficients[i]:.3f}{stars(f.p_values[i])}")
                se.append(f"({f.std_errors[i]:.3f})")
            else:
                coef.append("")
                se.append("")
        rows += [coef, se]
    rows.append(["Observations"] + [str(f.n_obs) for f in fits])
    rows.append(["R2"] + [f"{f.r2:.3f}" for f in fits])
    rows.append(["Adjusted R2"] + [f"{f.adj_r2:.3f}" for f in fits])
    rows.append(["Residual Std. Error"] + [f"{f.residual_se:.3f} (df={f.df_resid})" for f in fits])
    rows.append(["F Statistic"] + [
        "" if f.f_stat is None else f"{f.f_stat:.3f}{stars(f.f_p_value)} (df={f.df_model}; {f.df_resid})"
        for f in fits])
    note = STAR_NOTE if not variant.fixed_effects else f"{FE_NOTE} {STAR_NOTE}"
    rows.append(["Note:", note] + [""] * (len(fits) - 1))
    return rows


def write_layout_csv(fits, path, variant: Variant | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\r\n").writerows(layout_rows(fits, variant))


def layout_markdown(fits, variant: Variant | None = None) -> str:
    rows = layout_rows(fits, variant)
    head, body = rows[1], rows[2:]
    width = len(head)
    out = [f"Dependent variable: {(variant or VARIANTS['main']).dependent}", "",
           "| " + " | ".join(head) + " |", "|" + "---|" * width]
    for r in body:
        out.append("| " + " | ".join(c.replace("|", "/") for c in r + [""] * (width - len(r))) + " |")
    return "\n".join(out) + "\n"
