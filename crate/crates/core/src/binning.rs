//! Moving-window aggregation of attestation counts.
//!
//! Windows are half-open intervals `[start, start + window)` advanced by
//! `step = window - overlap`, so a year can contribute to several windows
//! when the overlap is positive. Windows with zero trials are never
//! materialized. The window phase is fixed by an anchor year so runs are
//! reproducible.

use crate::dataset::ChangeDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    /// Inclusive start year.
    pub start_year: i32,
    /// Exclusive end year.
    pub end_year: i32,
    /// Real-valued window midpoint, `start + window/2`.
    pub midpoint: f64,
    pub recessive: u64,
    pub innovative: u64,
}

impl Bin {
    pub fn trials(&self) -> u64 {
        self.recessive + self.innovative
    }

    pub fn proportion(&self) -> f64 {
        self.innovative as f64 / self.trials() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinSeries {
    bins: Vec<Bin>,
    pub window_years: u32,
    pub overlap_years: u32,
    pub anchor_year: i32,
}

impl BinSeries {
    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.midpoint).collect()
    }

    /// Audit export: `start,end,midpoint,recessive,innovative,proportion`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("start,end,midpoint,recessive,innovative,proportion\n");
        for b in &self.bins {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                b.start_year,
                b.end_year,
                b.midpoint,
                b.recessive,
                b.innovative,
                b.proportion()
            ));
        }
        out
    }
}

/// Builds the moving-window series for a dataset.
///
/// The first window starts at the largest anchor-aligned year not above the
/// dataset's minimum year; windows advance by `window - overlap` until the
/// start exceeds the maximum year. Empty windows are skipped.
pub fn make_bins(
    ds: &ChangeDataset,
    window_years: u32,
    overlap_years: u32,
    anchor_year: i32,
) -> Result<BinSeries> {
    if window_years == 0 {
        return Err(Error::ZeroWindow);
    }
    if overlap_years >= window_years {
        return Err(Error::OverlapTooLarge {
            window: window_years,
            overlap: overlap_years,
        });
    }
    let mut bins = Vec::new();
    if let Some((min_year, max_year)) = ds.year_range() {
        let step = (window_years - overlap_years) as i32;
        let window = window_years as i32;
        let k = (min_year - anchor_year).div_euclid(step);
        let mut start = anchor_year + k * step;
        while start <= max_year {
            let end = start + window;
            let mut recessive = 0u64;
            let mut innovative = 0u64;
            for r in ds.records() {
                if r.year >= start && r.year < end {
                    recessive += r.recessive;
                    innovative += r.innovative;
                }
            }
            if recessive + innovative > 0 {
                bins.push(Bin {
                    start_year: start,
                    end_year: end,
                    midpoint: start as f64 + window as f64 / 2.0,
                    recessive,
                    innovative,
                });
            }
            start += step;
        }
    }
    Ok(BinSeries {
        bins,
        window_years,
        overlap_years,
        anchor_year,
    })
}

/// One bin per distinct year with nonzero trials; midpoint is `year + 0.5`.
pub fn raw_yearly_bins(ds: &ChangeDataset) -> BinSeries {
    let bins = ds
        .records()
        .iter()
        .filter(|r| r.recessive + r.innovative > 0)
        .map(|r| Bin {
            start_year: r.year,
            end_year: r.year + 1,
            midpoint: r.year as f64 + 0.5,
            recessive: r.recessive,
            innovative: r.innovative,
        })
        .collect();
    BinSeries {
        bins,
        window_years: 1,
        overlap_years: 0,
        anchor_year: ds.year_range().map(|(min, _)| min).unwrap_or(0),
    }
}
