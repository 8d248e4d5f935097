#!/usr/bin/env python3
"""Smoke test for the Python bindings.

Builds the extension module with cargo, imports it from the build
directory, and exercises the main surface: dataset loading, binning,
fitting, prediction, and the grid search.
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "crates" / "core" / "tests" / "fixtures"


def build_and_import():
    subprocess.run(
        ["cargo", "build", "-p", "piotrowski-python"], cwd=ROOT, check=True
    )
    built = ROOT / "target" / "debug" / "libpiotrowski_py.so"
    if not built.exists():  # macOS
        built = ROOT / "target" / "debug" / "libpiotrowski_py.dylib"
    stage = Path(tempfile.mkdtemp(prefix="piotrowski_py_"))
    shutil.copy(built, stage / "piotrowski_py.so")
    sys.path.insert(0, str(stage))
    import piotrowski_py

    return piotrowski_py


def main():
    pio = build_and_import()

    # dataset loading and summaries
    ds = pio.Dataset.load(str(FIXTURES / "alpha.csv"))
    assert ds.name == "alpha"
    rec, inn, total = ds.totals()
    assert rec + inn == total > 0
    lo, hi = ds.year_range()
    assert lo < hi

    # construction from rows, with duplicate years summed
    tiny = pio.Dataset.from_rows("tiny", [(1500, 3, 1), (1500, 1, 0), (1510, 0, 4)])
    assert len(tiny) == 2
    assert tiny.totals() == (4, 5, 9)

    # binning
    bins = pio.make_bins(ds, window=20, overlap=10, anchor=1380)
    assert len(bins) > 10
    assert sum(b[3] + b[4] for b in bins.bins()) >= total
    assert all(0.0 <= p <= 1.0 for p in bins.proportions())
    raw = pio.raw_yearly_bins(ds)
    assert len(raw) == len(ds)

    # fitting and prediction
    fit = pio.fit_logistic(bins, degree=1, weighted=True)
    assert fit.converged and not fit.separation
    assert 0.0 < fit.r2 < 1.0
    assert fit.p_value < 1e-6
    assert fit.df_residual == len(bins) - 2
    t_half = fit.t_half()
    assert abs(fit.predict(t_half) - 0.5) < 1e-9
    assert 1500 < t_half < 1600  # the alpha fixture crosses around 1544
    a, r, t = fit.piotrowski_params()
    assert math.isclose(t, t_half) and math.isclose(r, fit.coeffs_raw[1])

    unweighted = pio.fit_logistic(bins, degree=1, weighted=False)
    assert abs(unweighted.t_half() - t_half) < 10

    # degree-1 errors are surfaced as exceptions where the API demands them
    poly = pio.fit_logistic(bins, degree=3, weighted=True)
    assert poly.r2 >= fit.r2 - 1e-9
    try:
        poly.t_half()
    except ValueError:
        pass
    else:
        raise AssertionError("t_half() on a degree-3 fit should raise")

    # grid search
    cells = pio.grid_search(ds, [20, 50], [5, 10, 20], weighted=True, anchor=1380)
    assert [(w, o) for w, o, *_ in cells] == [(20, 5), (20, 10), (50, 5), (50, 10), (50, 20)]
    r2_20_10 = next(c[2] for c in cells if (c[0], c[1]) == (20, 10))
    assert math.isclose(r2_20_10, fit.r2, rel_tol=1e-12)

    # diagnostics
    assert abs(pio.chi_square_sf(3.841459, 1) - 0.05) < 1e-6

    print("smoke test passed")


if __name__ == "__main__":
    main()
