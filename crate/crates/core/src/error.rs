use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("dataset `{0}` is empty")]
    EmptyDataset(String),

    #[error("text `{text_id}`: year_from {year_from} exceeds year_to {year_to}")]
    InvalidDating {
        text_id: String,
        year_from: i32,
        year_to: i32,
    },

    #[error("year {0} outside the supported range [1000, 2100]")]
    YearOutOfRange(i32),

    #[error("overlap {overlap} must be smaller than window {window}")]
    OverlapTooLarge { window: u32, overlap: u32 },

    #[error("window size must be at least 1")]
    ZeroWindow,

    #[error("{n_bins} bins cannot support a degree-{degree} model (need at least {needed})")]
    Underdetermined {
        n_bins: usize,
        degree: usize,
        needed: usize,
    },

    #[error("bin midpoints are degenerate (fewer than 2 distinct values)")]
    DegenerateAbscissa,

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("fitted log-likelihood {loglik} below null log-likelihood {loglik_null}")]
    NestingViolation { loglik: f64, loglik_null: f64 },

    #[error("Piotrowski parameters are only defined for degree-1 fits (got degree {0})")]
    UnsupportedConversion(usize),

    #[error("split year {split_year} leaves no data in {part}")]
    EmptySplitPart { split_year: i32, part: String },

    #[error("no grid entries at overlap {0}")]
    NoEntriesAtOverlap(u32),

    #[error("analysis for `{0}` holds no successful fit")]
    NoSuccessfulFit(String),

    #[error("composite view needs at least 2 analyses (got {0})")]
    TooFewAnalyses(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
