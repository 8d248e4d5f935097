//! Modeling of diachronic competition between two linguistic forms.
//!
//! A recessive form and an innovative form compete over centuries; the
//! proportion of the innovative form typically follows an "s"-shaped
//! trajectory. This crate ingests per-year attestation counts, aggregates
//! them into (possibly overlapping) time windows, fits binomial logistic
//! regression models by iteratively reweighted least squares, and reports
//! goodness-of-fit diagnostics, split-interval fits, composite views and
//! window-parameter sweeps, with SVG figure output.

pub mod analysis;
pub mod binning;
pub mod cli;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod glm;
pub mod report;

pub use analysis::{AnalysisConfig, ChangeAnalysis, CompositeModel, GridResult};
pub use binning::{Bin, BinSeries};
pub use dataset::{ChangeDataset, YearCount};
pub use error::Error;
pub use glm::{LogisticFit, PiotrowskiParams, Weighting};
