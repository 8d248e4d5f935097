//! Experiment orchestration: per-change model bundles, split-interval fits,
//! the composite view across changes, and the window/overlap grid search.

use rayon::prelude::*;

use crate::binning::{make_bins, raw_yearly_bins, BinSeries};
use crate::dataset::ChangeDataset;
use crate::error::{Error, Result};
use crate::glm::{fit_logistic, LogisticFit, Weighting};

/// Defaults reproduce the headline setup: 20-year windows with a 10-year
/// overlap, anchored at 1380, degree-1 models in both weightings, plus
/// raw one-year fits.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub window_years: u32,
    pub overlap_years: u32,
    pub anchor_year: i32,
    pub degree: usize,
    pub weightings: Vec<Weighting>,
    pub include_raw_yearly: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window_years: 20,
            overlap_years: 10,
            anchor_year: 1380,
            degree: 1,
            weightings: vec![Weighting::Weighted, Weighting::Unweighted],
            include_raw_yearly: true,
        }
    }
}

/// How a fit in a bundle was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitKind {
    /// Degree-1 (or configured-degree) fit on the binned series.
    Binned(Weighting),
    /// Fit on the raw one-year series.
    RawYearly(Weighting),
    /// Polynomial fit on the binned series.
    Polynomial { degree: usize, weighting: Weighting },
}

impl FitKind {
    pub fn label(&self) -> String {
        match self {
            FitKind::Binned(w) => w.label().to_string(),
            FitKind::RawYearly(w) => format!("raw_{}", w.label()),
            FitKind::Polynomial { degree, weighting } => {
                format!("poly{}_{}", degree, weighting.label())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitEntry {
    pub kind: FitKind,
    /// Failed fits are recorded with their reason, never aborting the bundle.
    pub fit: std::result::Result<LogisticFit, String>,
}

/// All fits for one change, derived from the same dataset, ready for
/// rendering and reporting.
#[derive(Debug, Clone)]
pub struct ChangeAnalysis {
    pub name: String,
    pub series: BinSeries,
    pub raw_series: Option<BinSeries>,
    pub fits: Vec<FitEntry>,
}

impl ChangeAnalysis {
    pub fn fit(&self, kind: FitKind) -> Option<&LogisticFit> {
        self.fits
            .iter()
            .find(|e| e.kind == kind)
            .and_then(|e| e.fit.as_ref().ok())
    }

    pub fn successful_fits(&self) -> impl Iterator<Item = (&FitKind, &LogisticFit)> {
        self.fits
            .iter()
            .filter_map(|e| e.fit.as_ref().ok().map(|f| (&e.kind, f)))
    }

    /// Best converged polynomial fit by McFadden R².
    pub fn best_polynomial(&self) -> Option<&LogisticFit> {
        self.fits
            .iter()
            .filter(|e| matches!(e.kind, FitKind::Polynomial { .. }))
            .filter_map(|e| e.fit.as_ref().ok())
            .filter(|f| f.converged)
            .max_by(|a, b| a.mcfadden_r2.total_cmp(&b.mcfadden_r2))
    }
}

fn push_fit(fits: &mut Vec<FitEntry>, kind: FitKind, series: &BinSeries, degree: usize) {
    let weighting = match kind {
        FitKind::Binned(w) | FitKind::RawYearly(w) => w,
        FitKind::Polynomial { weighting, .. } => weighting,
    };
    let fit = fit_logistic(series, degree, weighting).map_err(|e| e.to_string());
    fits.push(FitEntry { kind, fit });
}

/// Builds the standard model bundle for one change: configured-degree fits
/// in each requested weighting, plus raw one-year fits when enabled.
pub fn analyze_change(ds: &ChangeDataset, cfg: &AnalysisConfig) -> Result<ChangeAnalysis> {
    let series = make_bins(ds, cfg.window_years, cfg.overlap_years, cfg.anchor_year)?;
    let mut fits = Vec::new();
    for &w in &cfg.weightings {
        push_fit(&mut fits, FitKind::Binned(w), &series, cfg.degree);
    }
    let raw_series = if cfg.include_raw_yearly {
        let raw = raw_yearly_bins(ds);
        for &w in &cfg.weightings {
            push_fit(&mut fits, FitKind::RawYearly(w), &raw, cfg.degree);
        }
        Some(raw)
    } else {
        None
    };
    Ok(ChangeAnalysis {
        name: ds.name.clone(),
        series,
        raw_series,
        fits,
    })
}

/// The standard bundle extended with degree-`degree` polynomial fits in
/// both requested weightings.
pub fn analyze_polynomial(
    ds: &ChangeDataset,
    degree: usize,
    cfg: &AnalysisConfig,
) -> Result<ChangeAnalysis> {
    let mut analysis = analyze_change(ds, cfg)?;
    let series = analysis.series.clone();
    for &w in &cfg.weightings {
        push_fit(
            &mut analysis.fits,
            FitKind::Polynomial {
                degree,
                weighting: w,
            },
            &series,
            degree,
        );
    }
    Ok(analysis)
}

/// Two independent degree-1 analyses on `years < split_year` and
/// `years >= split_year`. Bins are rebuilt per part with the split year as
/// the anchor, so the split is a hard bin edge.
pub fn split_fit(
    ds: &ChangeDataset,
    split_year: i32,
    cfg: &AnalysisConfig,
) -> Result<(ChangeAnalysis, ChangeAnalysis)> {
    let before = ds.filter_years(|y| y < split_year);
    let after = ds.filter_years(|y| y >= split_year);
    if before.is_empty() {
        return Err(Error::EmptySplitPart {
            split_year,
            part: "part 1 (before the split)".to_string(),
        });
    }
    if after.is_empty() {
        return Err(Error::EmptySplitPart {
            split_year,
            part: "part 2 (from the split on)".to_string(),
        });
    }
    let part_cfg = AnalysisConfig {
        anchor_year: split_year,
        degree: 1,
        include_raw_yearly: false,
        ..cfg.clone()
    };
    let mut first = analyze_change(&before, &part_cfg)?;
    let mut second = analyze_change(&after, &part_cfg)?;
    first.name = format!("{}_pre{}", ds.name, split_year);
    second.name = format!("{}_post{}", ds.name, split_year);
    Ok((first, second))
}

/// One grid-search cell.
#[derive(Debug, Clone)]
pub struct GridEntry {
    pub window: u32,
    pub overlap: u32,
    pub r2: Option<f64>,
    pub p_value: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

/// Goodness-of-fit surface over (window, overlap) combinations.
#[derive(Debug, Clone)]
pub struct GridResult {
    pub change: String,
    pub weighting: Weighting,
    pub degree: usize,
    pub entries: Vec<GridEntry>,
}

impl GridResult {
    pub fn entry(&self, window: u32, overlap: u32) -> Option<&GridEntry> {
        self.entries
            .iter()
            .find(|e| e.window == window && e.overlap == overlap)
    }

    pub fn entries_at_overlap(&self, overlap: u32) -> Vec<&GridEntry> {
        self.entries.iter().filter(|e| e.overlap == overlap).collect()
    }

    /// Export format: `change,window,overlap,weighting,degree,r2,p_value,converged`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("change,window,overlap,weighting,degree,r2,p_value,converged\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.change,
                e.window,
                e.overlap,
                self.weighting.label(),
                self.degree,
                e.r2.map(|v| format!("{v:.6}")).unwrap_or_default(),
                e.p_value.map(|v| format!("{v:e}")).unwrap_or_default(),
                e.converged
            ));
        }
        out
    }
}

/// Default lattice for windows and overlaps: 5, 10, ..., 100.
pub fn default_lattice() -> Vec<u32> {
    (1..=20).map(|k| k * 5).collect()
}

/// Fits one model per valid (window, overlap) pair. Pairs with
/// `overlap >= window` are skipped. Entries are computed in parallel and
/// returned in deterministic (window, overlap) order; per-entry failures
/// are recorded, never aborting the sweep.
pub fn grid_search(
    ds: &ChangeDataset,
    windows: &[u32],
    overlaps: &[u32],
    weighting: Weighting,
    degree: usize,
    anchor_year: i32,
) -> GridResult {
    let mut combos: Vec<(u32, u32)> = windows
        .iter()
        .flat_map(|&w| overlaps.iter().filter(move |&&o| o < w).map(move |&o| (w, o)))
        .collect();
    combos.sort_unstable();
    combos.dedup();

    let entries: Vec<GridEntry> = combos
        .into_par_iter()
        .map(|(window, overlap)| {
            let outcome = make_bins(ds, window, overlap, anchor_year)
                .and_then(|series| fit_logistic(&series, degree, weighting));
            match outcome {
                Ok(fit) => GridEntry {
                    window,
                    overlap,
                    r2: Some(fit.mcfadden_r2),
                    p_value: Some(fit.p_value),
                    converged: fit.converged,
                    error: None,
                },
                Err(e) => GridEntry {
                    window,
                    overlap,
                    r2: None,
                    p_value: None,
                    converged: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    GridResult {
        change: ds.name.clone(),
        weighting,
        degree,
        entries,
    }
}

/// One change's yearly-sampled trajectory on the shared time axis.
#[derive(Debug, Clone)]
pub struct CompositeCurve {
    pub name: String,
    pub years: Vec<i32>,
    pub probabilities: Vec<f64>,
    /// Present for degree-1 curves only.
    pub t_half: Option<f64>,
}

/// All change trajectories on a shared time axis, with pairwise offsets
/// between the p = 0.5 crossings of the degree-1 curves.
#[derive(Debug, Clone)]
pub struct CompositeModel {
    pub year_min: i32,
    pub year_max: i32,
    pub curves: Vec<CompositeCurve>,
    /// (name_a, name_b, t_half_b - t_half_a); antisymmetric in its arguments.
    pub crossing_offsets: Vec<(String, String, f64)>,
}

/// Merges analyses into one composite view. Each change contributes its
/// weighted degree-1 fit when available; otherwise its best converged
/// polynomial fit, which is excluded from crossing-offset statistics.
pub fn composite(analyses: &[ChangeAnalysis]) -> Result<CompositeModel> {
    if analyses.len() < 2 {
        return Err(Error::TooFewAnalyses(analyses.len()));
    }
    let mut year_min = i32::MAX;
    let mut year_max = i32::MIN;
    for a in analyses {
        for b in a.series.bins() {
            year_min = year_min.min(b.start_year);
            year_max = year_max.max(b.end_year);
        }
    }
    let years: Vec<i32> = (year_min..=year_max).collect();

    let mut curves = Vec::new();
    for a in analyses {
        let selected = a
            .fit(FitKind::Binned(Weighting::Weighted))
            .filter(|f| f.degree == 1)
            .or_else(|| a.best_polynomial());
        let Some(fit) = selected else {
            return Err(Error::NoSuccessfulFit(a.name.clone()));
        };
        let probabilities = years.iter().map(|&y| fit.predict(y as f64)).collect();
        curves.push(CompositeCurve {
            name: a.name.clone(),
            years: years.clone(),
            probabilities,
            t_half: fit.t_half().ok(),
        });
    }

    let mut crossing_offsets = Vec::new();
    for (i, a) in curves.iter().enumerate() {
        for b in curves.iter().skip(i + 1) {
            if let (Some(ta), Some(tb)) = (a.t_half, b.t_half) {
                crossing_offsets.push((a.name.clone(), b.name.clone(), tb - ta));
            }
        }
    }

    Ok(CompositeModel {
        year_min,
        year_max,
        curves,
        crossing_offsets,
    })
}
