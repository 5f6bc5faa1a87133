"""Regenerate synthetic_regress_oracle.csv with statsmodels.

The design is rebuilt here from the raw CSV with plain numpy so the frozen
values do not depend on the package's own design code.

    python3 tests/fixtures/make_regress_oracle.py
"""
import csv
from pathlib import Path

import numpy as np
import statsmodels.api as sm

HERE = Path(__file__).parent
DATA = HERE.parent.parent / "src" / "coveragescope" / "data" / "synthetic_regional_dataset.csv"
LADDER = [["shdi"], ["shdi", "abs_lat", "abs_lon"], ["shdi", "abs_lat", "abs_lon", "households", "area_km2"],
          ["shdi", "abs_lat", "abs_lon", "households", "area_km2", "cloud_cover_mean"]]
USED = sorted(set(sum(LADDER, [])))


def load():
    with open(DATA, newline="") as fh:
        return list(csv.DictReader(fh))


def dependent(rows, keep_col):
    out = []
    for r in rows:
        total = sum(float(r[c] or 0) for c in r if c.startswith("count__") and keep_col(c))
        out.append(total / float(r["months"]))
    return np.array(out)


def scale(x):
    return (x - x.min()) / (x.max() - x.min())


VARIANTS = {
    "main": lambda c: "__planet__" not in c,
    "vhr-only": lambda c: "__planet__" not in c and c.endswith("__0-0.5"),
    "fixed-effects": lambda c: "__planet__" not in c,
}


def main():
    rows = load()
    ok = [all(r[c] != "" for c in USED) for r in rows]
    rows = [r for r, k in zip(rows, ok) if k]
    out = []
    for variant, keep_col in VARIANTS.items():
        y = scale(dependent(rows, keep_col))
        for k, terms in enumerate(LADDER, 1):
            X = np.column_stack([scale(np.array([float(r[t]) for r in rows])) for t in terms])
            names = ["const"] + terms
            X = sm.add_constant(X, has_constant="add")
            if variant == "fixed-effects":
                groups = sorted({r["country_code"] for r in rows})
                for g in groups[1:]:
                    X = np.column_stack([X, [1.0 if r["country_code"] == g else 0.0 for r in rows]])
                    names.append(f"fe[{g}]")
            for cov in (("nonrobust", "HC1") if variant == "main" else ("nonrobust",)):
                fit = sm.OLS(y, X).fit(cov_type=cov, use_t=True)
                for j, name in enumerate(names):
                    if name.startswith("fe[") and j % 25:
                        continue
                    for q, v in (("coef", fit.params[j]), ("se", fit.bse[j]), ("t", fit.tvalues[j]),
                                 ("p", fit.pvalues[j])):
                        out.append([variant, k, cov, q, name, repr(float(v))])
                for q, v in (("r2", fit.rsquared), ("adj_r2", fit.rsquared_adj), ("f", fit.fvalue),
                             ("f_p", fit.f_pvalue), ("df_resid", fit.df_resid), ("nobs", fit.nobs)):
                    out.append([variant, k, cov, q, "", repr(float(v))])
    with open(HERE / "synthetic_regress_oracle.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "model", "cov_type", "quantity", "term", "value"])
        w.writerows(out)


if __name__ == "__main__":
    main()
