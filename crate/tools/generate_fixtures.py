#!/usr/bin/env python3
"""Generate the synthetic fixture datasets and their frozen expected values.

Eight datasets are produced under crates/core/tests/fixtures/: seven
single-S-curve changes with different midpoints, rates and data volumes,
and one rise-and-fall competition. Counts are sampled once with a fixed
seed and committed; expected fit statistics are computed here with an
independent optimizer (scipy BFGS on the exact binomial cross-entropy)
and frozen into expected.json for the Rust acceptance suite.

Run from the repository root:  python3 tools/generate_fixtures.py
"""

import json
import math
import os

import numpy as np
from scipy import optimize

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "fixtures")
SEED = 20260823
ANCHOR = 1380

# name, t_half, rate, year range, base yearly attestation volume
S_CURVES = [
    ("alpha", 1545.0, 0.060, (1400, 1800), 18.0),
    ("beta", 1600.0, 0.035, (1400, 1830), 30.0),
    ("gamma", 1650.0, 0.050, (1420, 1850), 12.0),
    ("delta", 1680.0, 0.022, (1400, 1850), 25.0),
    ("epsilon", 1560.0, 0.090, (1400, 1780), 8.0),
    ("zeta", 1625.0, 0.045, (1440, 1840), 45.0),
    ("eta", 1700.0, 0.030, (1450, 1850), 15.0),
]


def logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def yearly_volume(rng, year, base):
    # volume grows roughly exponentially toward the present, with noise,
    # and some years have no attested texts at all
    growth = math.exp((year - 1400) / 220.0)
    mean = base * growth
    n = rng.poisson(mean)
    if rng.random() < 0.15:
        n = 0
    return int(n)


def gen_s_curve(rng, t_half, rate, years, base):
    rows = []
    for year in range(years[0], years[1] + 1):
        n = yearly_volume(rng, year, base)
        if n == 0:
            continue
        p = logistic(rate * (year - t_half))
        innovative = int(rng.binomial(n, p))
        rows.append((year, n - innovative, innovative))
    return rows


def gen_rise_fall(rng):
    # innovative form rises toward ~0.85, peaks around 1610, then declines
    rows = []
    for year in range(1400, 1850 + 1):
        n = yearly_volume(rng, year, 20.0)
        if n == 0:
            continue
        rise = logistic(0.05 * (year - 1500))
        fall = logistic(-0.045 * (year - 1720))
        p = min(max(0.9 * rise * fall + 0.02, 1e-4), 1 - 1e-4)
        innovative = int(rng.binomial(n, p))
        rows.append((year, n - innovative, innovative))
    return rows


def write_csv(name, rows):
    path = os.path.join(OUT_DIR, f"{name}.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("year,recessive,innovative\n")
        for year, rec, inn in rows:
            fh.write(f"{year},{rec},{inn}\n")


# ---------------------------------------------------------------------------
# independent re-implementation of the binning and fitting definitions


def make_bins(rows, window, overlap, anchor):
    step = window - overlap
    years = [r[0] for r in rows]
    lo, hi = min(years), max(years)
    start = anchor + ((lo - anchor) // step) * step
    bins = []
    while start <= hi:
        rec = sum(r[1] for r in rows if start <= r[0] < start + window)
        inn = sum(r[2] for r in rows if start <= r[0] < start + window)
        if rec + inn > 0:
            bins.append((start + window / 2.0, rec, inn))
        start += step
    return bins


def fit(bins, degree, weighted):
    mids = np.array([b[0] for b in bins])
    trials = np.array([b[1] + b[2] for b in bins], dtype=float)
    y = np.array([b[2] for b in bins], dtype=float) / trials
    w = trials if weighted else np.ones_like(trials)

    center = mids.mean()
    scale = mids.std(ddof=1)
    z = (mids - center) / scale
    X = np.vander(z, degree + 1, increasing=True)

    def negll(beta):
        eta = X @ beta
        # -sum w (y eta - log(1+e^eta)), stable softplus
        sp = np.logaddexp(0.0, eta)
        return -np.sum(w * (y * eta - sp))

    def grad(beta):
        p = logistic(X @ beta)
        return -(X.T @ (w * (y - p)))

    res = optimize.minimize(negll, np.zeros(degree + 1), jac=grad, method="BFGS",
                            options={"gtol": 1e-12, "maxiter": 2000})
    ll = -res.fun

    p_hat = np.sum(w * y) / np.sum(w)
    ll0 = np.sum(w * (np.where(y > 0, y * np.log(p_hat), 0.0)
                      + np.where(y < 1, (1 - y) * np.log(1 - p_hat), 0.0)))
    r2 = 1.0 - ll / ll0

    # raw-scale slope / crossing for degree 1
    extra = {}
    if degree == 1:
        b0, b1 = res.x
        beta1 = b1 / scale
        beta0 = b0 - b1 * center / scale
        extra = {"beta1_raw": beta1, "t_half": -beta0 / beta1}
    return {
        "loglik": ll,
        "loglik_null": ll0,
        "r2": r2,
        "n_bins": len(bins),
        "df_residual": len(bins) - (degree + 1),
        "lr_statistic": 2.0 * (ll - ll0),
        **extra,
    }


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    rng = np.random.default_rng(SEED)

    datasets = {}
    for name, t_half, rate, years, base in S_CURVES:
        rows = gen_s_curve(rng, t_half, rate, years, base)
        write_csv(name, rows)
        datasets[name] = rows
    risefall = gen_rise_fall(rng)
    write_csv("risefall", risefall)

    expected = {"s_curves": {}, "risefall": {}}
    for name, t_half, rate, years, base in S_CURVES:
        rows = datasets[name]
        bins_20_10 = make_bins(rows, 20, 10, ANCHOR)
        entry = {
            "generator": {"t_half": t_half, "rate": rate},
            "weighted_20_10": fit(bins_20_10, 1, True),
            "unweighted_20_10": fit(bins_20_10, 1, False),
            "unweighted_50_20": fit(make_bins(rows, 50, 20, ANCHOR), 1, False),
            "unweighted_20_5": fit(make_bins(rows, 20, 5, ANCHOR), 1, False),
        }
        expected["s_curves"][name] = entry

    bins_rf = make_bins(risefall, 20, 10, ANCHOR)
    split_year = 1610
    before = [r for r in risefall if r[0] < split_year]
    after = [r for r in risefall if r[0] >= split_year]
    expected["risefall"] = {
        "poly6_weighted_20_10": fit(bins_rf, 6, True),
        "poly6_unweighted_20_10": fit(bins_rf, 6, False),
        "poly3_weighted_20_10": fit(bins_rf, 3, True),
        "split_year": split_year,
        "split_before_weighted": fit(make_bins(before, 20, 10, split_year), 1, True),
        "split_after_weighted": fit(make_bins(after, 20, 10, split_year), 1, True),
    }

    with open(os.path.join(OUT_DIR, "expected.json"), "w") as fh:
        json.dump(expected, fh, indent=2, sort_keys=True)
        fh.write("\n")

    for name, entry in expected["s_curves"].items():
        print(f"{name}: weighted r2={entry['weighted_20_10']['r2']:.4f} "
              f"unweighted r2={entry['unweighted_20_10']['r2']:.4f} "
              f"t_half={entry['weighted_20_10']['t_half']:.1f} "
              f"df={entry['weighted_20_10']['df_residual']}")
    rf = expected["risefall"]
    print(f"risefall: poly6 weighted r2={rf['poly6_weighted_20_10']['r2']:.4f} "
          f"split r2 = {rf['split_before_weighted']['r2']:.3f} / "
          f"{rf['split_after_weighted']['r2']:.3f}")


if __name__ == "__main__":
    main()
