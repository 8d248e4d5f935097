//! Python bindings for the core library: datasets, moving-window binning,
//! logistic fits, and the window/overlap grid search.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use piotrowski::analysis;
use piotrowski::binning::{self, BinSeries};
use piotrowski::dataset::{self, ChangeDataset};
use piotrowski::glm::{self, LogisticFit, Weighting};

fn to_py_err(e: piotrowski::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn weighting(weighted: bool) -> Weighting {
    if weighted {
        Weighting::Weighted
    } else {
        Weighting::Unweighted
    }
}

/// Per-year attestation counts of a recessive and an innovative form.
#[pyclass(frozen, name = "Dataset")]
struct Dataset {
    inner: ChangeDataset,
}

#[pymethods]
impl Dataset {
    /// Builds a dataset from `(year, recessive, innovative)` rows; counts
    /// for repeated years are summed.
    #[staticmethod]
    fn from_rows(name: &str, rows: Vec<(i32, u64, u64)>) -> PyResult<Self> {
        let inner = ChangeDataset::from_rows(name, rows).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Parses a `year,recessive,innovative` CSV file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
        let name = std::path::Path::new(path)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "change".to_string());
        let inner = dataset::parse_yearly_counts(file, &name).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    fn records(&self) -> Vec<(i32, u64, u64)> {
        self.inner
            .records()
            .iter()
            .map(|r| (r.year, r.recessive, r.innovative))
            .collect()
    }

    /// `(recessive, innovative, grand total)` over all years.
    fn totals(&self) -> (u64, u64, u64) {
        self.inner.totals()
    }

    fn year_range(&self) -> Option<(i32, i32)> {
        self.inner.year_range()
    }

    fn __len__(&self) -> usize {
        self.inner.records().len()
    }

    fn __repr__(&self) -> String {
        let (_, _, total) = self.inner.totals();
        format!(
            "Dataset(name={:?}, years={}, attestations={})",
            self.inner.name,
            self.inner.records().len(),
            total
        )
    }
}

/// A moving-window aggregation of a dataset.
#[pyclass(frozen, name = "Bins")]
struct Bins {
    inner: BinSeries,
}

#[pymethods]
impl Bins {
    /// `(start, end, midpoint, recessive, innovative)` per window.
    fn bins(&self) -> Vec<(i32, i32, f64, u64, u64)> {
        self.inner
            .bins()
            .iter()
            .map(|b| (b.start_year, b.end_year, b.midpoint, b.recessive, b.innovative))
            .collect()
    }

    fn proportions(&self) -> Vec<f64> {
        self.inner.bins().iter().map(|b| b.proportion()).collect()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A fitted polynomial logistic model.
#[pyclass(frozen, name = "Fit")]
struct Fit {
    inner: LogisticFit,
}

#[pymethods]
impl Fit {
    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree
    }

    #[getter]
    fn weighting(&self) -> &'static str {
        self.inner.weighting.label()
    }

    /// Coefficients of raw calendar-year powers, constant term first.
    #[getter]
    fn coeffs_raw(&self) -> Vec<f64> {
        self.inner.coeffs_raw.clone()
    }

    /// Coefficients on the standardized predictor scale.
    #[getter]
    fn coeffs_std(&self) -> Vec<f64> {
        self.inner.coeffs_std.clone()
    }

    #[getter]
    fn loglik(&self) -> f64 {
        self.inner.loglik
    }

    #[getter]
    fn loglik_null(&self) -> f64 {
        self.inner.loglik_null
    }

    /// McFadden pseudo-R² against the intercept-only model.
    #[getter]
    fn r2(&self) -> f64 {
        self.inner.mcfadden_r2
    }

    #[getter]
    fn p_value(&self) -> f64 {
        self.inner.p_value
    }

    #[getter]
    fn df_residual(&self) -> i64 {
        self.inner.df_residual
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn separation(&self) -> bool {
        self.inner.separation
    }

    /// Probability of the innovative form at a calendar year.
    fn predict(&self, year: f64) -> f64 {
        self.inner.predict(year)
    }

    /// Year at which the fitted probability crosses 0.5 (degree 1 only).
    fn t_half(&self) -> PyResult<f64> {
        self.inner.t_half().map_err(to_py_err)
    }

    /// `(a, r, t_half)` of the classical form `p(t) = 1 / (1 + a e^{-rt})`.
    fn piotrowski_params(&self) -> PyResult<(f64, f64, f64)> {
        let p = glm::to_piotrowski(&self.inner).map_err(to_py_err)?;
        Ok((p.a, p.r, p.t_half))
    }

    fn __repr__(&self) -> String {
        format!(
            "Fit(degree={}, weighting={:?}, r2={:.4}, converged={})",
            self.inner.degree,
            self.inner.weighting.label(),
            self.inner.mcfadden_r2,
            self.inner.converged
        )
    }
}

/// Aggregates a dataset into moving windows of `window` years advanced by
/// `window - overlap`, with the window phase fixed by `anchor`.
#[pyfunction]
#[pyo3(signature = (data, window=20, overlap=10, anchor=1380))]
fn make_bins(data: &Dataset, window: u32, overlap: u32, anchor: i32) -> PyResult<Bins> {
    let inner = binning::make_bins(&data.inner, window, overlap, anchor).map_err(to_py_err)?;
    Ok(Bins { inner })
}

/// One bin per attested year.
#[pyfunction]
fn raw_yearly_bins(data: &Dataset) -> Bins {
    Bins {
        inner: binning::raw_yearly_bins(&data.inner),
    }
}

/// Fits a polynomial logistic model to a bin series.
#[pyfunction]
#[pyo3(signature = (bins, degree=1, weighted=true))]
fn fit_logistic(bins: &Bins, degree: usize, weighted: bool) -> PyResult<Fit> {
    let inner = glm::fit_logistic(&bins.inner, degree, weighting(weighted)).map_err(to_py_err)?;
    Ok(Fit { inner })
}

/// Sweeps (window, overlap) combinations; returns
/// `(window, overlap, r2, p_value, converged)` rows in deterministic order.
/// Cells whose fit failed carry `None` statistics.
#[pyfunction]
#[pyo3(signature = (data, windows, overlaps, weighted=true, anchor=1380))]
fn grid_search(
    data: &Dataset,
    windows: Vec<u32>,
    overlaps: Vec<u32>,
    weighted: bool,
    anchor: i32,
) -> Vec<(u32, u32, Option<f64>, Option<f64>, bool)> {
    let grid = analysis::grid_search(&data.inner, &windows, &overlaps, weighting(weighted), 1, anchor);
    grid.entries
        .into_iter()
        .map(|e| (e.window, e.overlap, e.r2, e.p_value, e.converged))
        .collect()
}

/// Upper-tail probability of the chi-square distribution.
#[pyfunction]
fn chi_square_sf(x: f64, df: usize) -> f64 {
    piotrowski::diagnostics::chi_square_sf(x, df)
}

#[pymodule]
fn piotrowski_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Bins>()?;
    m.add_class::<Fit>()?;
    m.add_function(wrap_pyfunction!(make_bins, m)?)?;
    m.add_function(wrap_pyfunction!(raw_yearly_bins, m)?)?;
    m.add_function(wrap_pyfunction!(fit_logistic, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square_sf, m)?)?;
    Ok(())
}
