//! Subcommand interface exposing the full pipeline for reproducible runs.
//!
//! Every run writes a `manifest.json` next to its outputs echoing the exact
//! parameters, so each figure and table is traceable. Exit codes: 0 on
//! success, 1 on usage errors, 2 on data errors, 3 on a fit failure in a
//! single-fit command.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    self, analyze_change, analyze_polynomial, split_fit, AnalysisConfig, ChangeAnalysis,
    GridEntry, GridResult,
};
use crate::dataset::{self, ChangeDataset};
use crate::error::Error;
use crate::glm::{LogisticFit, Weighting};
use crate::report::{self, PlotSpec, RadiusMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_FIT: i32 = 3;

/// Environment variable capping grid parallelism (0 = auto).
pub const THREADS_ENV: &str = "PIOTROWSKI_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "piotrowski",
    version,
    about = "Model the competition of a recessive and an innovative linguistic form over time"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonOpts {
    /// Window size in years
    #[arg(long, default_value_t = 20)]
    window: u32,
    /// Overlap of adjacent windows in years
    #[arg(long, default_value_t = 10)]
    overlap: u32,
    /// Year fixing the window phase
    #[arg(long, default_value_t = 1380)]
    anchor: i32,
    /// Fit only the prior-weighted model
    #[arg(long, conflicts_with_all = ["unweighted", "both"])]
    weighted: bool,
    /// Fit only the unweighted model
    #[arg(long, conflicts_with = "both")]
    unweighted: bool,
    /// Fit both weightings (the default)
    #[arg(long)]
    both: bool,
    /// Also fit models on the raw one-year series
    #[arg(long, default_value_t = true, action = ArgAction::Set,
          num_args = 0..=1, default_missing_value = "true")]
    raw_yearly: bool,
    /// Output directory
    #[arg(long, default_value = "./out")]
    out: PathBuf,
}

impl CommonOpts {
    fn weightings(&self) -> Vec<Weighting> {
        if self.weighted {
            vec![Weighting::Weighted]
        } else if self.unweighted {
            vec![Weighting::Unweighted]
        } else {
            vec![Weighting::Weighted, Weighting::Unweighted]
        }
    }

    fn config(&self, degree: usize) -> AnalysisConfig {
        AnalysisConfig {
            window_years: self.window,
            overlap_years: self.overlap,
            anchor_year: self.anchor,
            degree,
            weightings: self.weightings(),
            include_raw_yearly: self.raw_yearly,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit logistic models to one change and plot them
    Fit {
        data: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Fit polynomial logistic models
    Poly {
        data: PathBuf,
        /// Polynomial degree (>= 2)
        #[arg(long)]
        degree: usize,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Fit two independent models on either side of a split year
    Split {
        data: PathBuf,
        /// Split year; part 1 covers years before it, part 2 from it on
        #[arg(long)]
        at: i32,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Sweep window/overlap combinations and report the R2 surface
    Grid {
        data: PathBuf,
        /// Window sizes as start:end:step (end included when aligned) or a single value
        #[arg(long, default_value = "5:100:5")]
        windows: String,
        /// Overlaps, same syntax
        #[arg(long, default_value = "5:100:5")]
        overlaps: String,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Merge several changes into one composite plot
    Composite {
        #[arg(required = true, num_args = 2..)]
        data: Vec<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Assemble a table from exported grid CSVs
    Table {
        #[arg(required = true)]
        grids: Vec<PathBuf>,
        /// Cells as window,overlap pairs, e.g. --cells 50,20 20,5
        #[arg(long, required = true, num_args = 1..)]
        cells: Vec<String>,
        /// Output directory
        #[arg(long, default_value = "./out")]
        out: PathBuf,
    },
    /// Summarize a dataset: year range, totals, first/last attestations
    Validate { data: PathBuf },
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    inputs: Vec<String>,
    window: Option<u32>,
    overlap: Option<u32>,
    anchor: Option<i32>,
    degree: Option<usize>,
    weightings: Vec<String>,
    raw_yearly: Option<bool>,
    windows: Option<String>,
    overlaps: Option<String>,
    out_dir: String,
    tool_version: String,
}

impl RunManifest {
    fn new(command: &str, inputs: &[PathBuf], out: &Path) -> Self {
        Self {
            command: command.to_string(),
            inputs: inputs
                .iter()
                .map(|p| p.to_string_lossy().into_owned())
                .collect(),
            window: None,
            overlap: None,
            anchor: None,
            degree: None,
            weightings: Vec::new(),
            raw_yearly: None,
            windows: None,
            overlaps: None,
            out_dir: out.to_string_lossy().into_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn with_opts(mut self, opts: &CommonOpts, degree: usize) -> Self {
        self.window = Some(opts.window);
        self.overlap = Some(opts.overlap);
        self.anchor = Some(opts.anchor);
        self.degree = Some(degree);
        self.weightings = opts
            .weightings()
            .iter()
            .map(|w| w.label().to_string())
            .collect();
        self.raw_yearly = Some(opts.raw_yearly);
        self
    }

    fn write(&self, out: &Path) -> crate::error::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(out.join("manifest.json"), json + "\n")?;
        Ok(())
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. }
        | Error::EmptyDataset(_)
        | Error::InvalidDating { .. }
        | Error::YearOutOfRange(_)
        | Error::EmptySplitPart { .. }
        | Error::Io(_)
        | Error::Csv(_) => EXIT_DATA,
        Error::OverlapTooLarge { .. } | Error::ZeroWindow | Error::TooFewAnalyses(_) => EXIT_USAGE,
        _ => EXIT_FIT,
    }
}

fn change_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "change".to_string())
}

fn load_dataset(path: &Path) -> crate::error::Result<ChangeDataset> {
    let file = fs::File::open(path)?;
    let ds = dataset::parse_yearly_counts(file, &change_name(path))?;
    if let Some(warning) = ds.competition_warning() {
        eprintln!("warning: {warning}");
    }
    Ok(ds)
}

/// Parses `start:end:step` (end included when aligned) or a single value.
fn parse_range(spec: &str) -> Result<Vec<u32>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [single] => single
            .parse::<u32>()
            .map(|v| vec![v])
            .map_err(|_| format!("invalid range `{spec}`")),
        [start, end, step] => {
            let (start, end, step) = (
                start.parse::<u32>().map_err(|_| format!("invalid range `{spec}`"))?,
                end.parse::<u32>().map_err(|_| format!("invalid range `{spec}`"))?,
                step.parse::<u32>().map_err(|_| format!("invalid range `{spec}`"))?,
            );
            if step == 0 || end < start {
                return Err(format!("invalid range `{spec}`"));
            }
            Ok((start..=end).step_by(step as usize).collect())
        }
        _ => Err(format!("invalid range `{spec}` (expected start:end:step)")),
    }
}

fn parse_cell(spec: &str) -> Result<(u32, u32), String> {
    let parts: Vec<&str> = spec.split(',').collect();
    if let [w, o] = parts.as_slice() {
        if let (Ok(w), Ok(o)) = (w.parse(), o.parse()) {
            return Ok((w, o));
        }
    }
    Err(format!("invalid cell `{spec}` (expected window,overlap)"))
}

fn max_degree(analysis: &ChangeAnalysis) -> usize {
    analysis
        .successful_fits()
        .map(|(_, f)| f.degree)
        .max()
        .unwrap_or(1)
}

fn fits_csv(analysis: &ChangeAnalysis, window: u32, overlap: u32) -> String {
    let deg = max_degree(analysis);
    let mut out = LogisticFit::csv_header(deg);
    out.push('\n');
    for entry in &analysis.fits {
        match &entry.fit {
            Ok(fit) => {
                let (w, o) = match entry.kind {
                    crate::analysis::FitKind::RawYearly(_) => (1, 0),
                    _ => (window, overlap),
                };
                out.push_str(&fit.to_csv_row(&analysis.name, w, o, deg));
                out.push('\n');
            }
            Err(reason) => {
                eprintln!(
                    "warning: fit `{}` for `{}` failed: {reason}",
                    entry.kind.label(),
                    analysis.name
                );
            }
        }
    }
    out
}

fn write_bundle(
    analysis: &ChangeAnalysis,
    opts: &CommonOpts,
    suffix: &str,
) -> crate::error::Result<()> {
    fs::create_dir_all(&opts.out)?;
    let csv = fits_csv(analysis, opts.window, opts.overlap);
    fs::write(
        opts.out.join(format!("{}{suffix}_fits.csv", analysis.name)),
        csv,
    )?;
    let spec = PlotSpec {
        radius_mode: RadiusMode::LogAttestations { base_radius: 1.2 },
        ..PlotSpec::default()
    };
    let figure = report::render_change_plot(analysis, &spec)?;
    fs::write(
        opts.out.join(format!(
            "{}_{}w{}o{suffix}.svg",
            analysis.name, opts.window, opts.overlap
        )),
        figure.svg(),
    )?;
    Ok(())
}

fn any_fit_failed(analysis: &ChangeAnalysis) -> bool {
    analysis.fits.iter().any(|e| e.fit.is_err())
}

fn cmd_fit(data: &Path, opts: &CommonOpts) -> Result<(), (i32, String)> {
    let ds = load_dataset(data).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let cfg = opts.config(1);
    let analysis = analyze_change(&ds, &cfg).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    if analysis.successful_fits().next().is_none() {
        return Err((EXIT_FIT, format!("all fits failed for `{}`", ds.name)));
    }
    write_bundle(&analysis, opts, "").map_err(|e| (exit_code_for(&e), e.to_string()))?;
    RunManifest::new("fit", std::slice::from_ref(&data.to_path_buf()), &opts.out)
        .with_opts(opts, 1)
        .write(&opts.out)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    if any_fit_failed(&analysis) {
        return Err((EXIT_FIT, "one or more fits failed".to_string()));
    }
    Ok(())
}

fn cmd_poly(data: &Path, degree: usize, opts: &CommonOpts) -> Result<(), (i32, String)> {
    if degree < 2 {
        return Err((EXIT_USAGE, "--degree must be at least 2".to_string()));
    }
    let ds = load_dataset(data).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let cfg = opts.config(1);
    let analysis =
        analyze_polynomial(&ds, degree, &cfg).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    if analysis.successful_fits().next().is_none() {
        return Err((EXIT_FIT, format!("all fits failed for `{}`", ds.name)));
    }
    write_bundle(&analysis, opts, &format!("_poly{degree}"))
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    RunManifest::new("poly", std::slice::from_ref(&data.to_path_buf()), &opts.out)
        .with_opts(opts, degree)
        .write(&opts.out)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    if any_fit_failed(&analysis) {
        return Err((EXIT_FIT, "one or more fits failed".to_string()));
    }
    Ok(())
}

fn cmd_split(data: &Path, at: i32, opts: &CommonOpts) -> Result<(), (i32, String)> {
    let ds = load_dataset(data).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let cfg = opts.config(1);
    let (first, second) =
        split_fit(&ds, at, &cfg).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let mut failed = false;
    for part in [&first, &second] {
        if part.successful_fits().next().is_none() {
            failed = true;
            eprintln!("warning: all fits failed for `{}`", part.name);
            continue;
        }
        write_bundle(part, opts, "").map_err(|e| (exit_code_for(&e), e.to_string()))?;
        failed |= any_fit_failed(part);
    }
    RunManifest::new("split", std::slice::from_ref(&data.to_path_buf()), &opts.out)
        .with_opts(opts, 1)
        .write(&opts.out)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    if failed {
        return Err((EXIT_FIT, "one or more split-part fits failed".to_string()));
    }
    Ok(())
}

fn thread_pool() -> Option<rayon::ThreadPool> {
    let n: usize = std::env::var(THREADS_ENV).ok()?.parse().ok()?;
    if n == 0 {
        return None;
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()
}

fn cmd_grid(
    data: &Path,
    windows: &str,
    overlaps: &str,
    opts: &CommonOpts,
) -> Result<(), (i32, String)> {
    let windows = parse_range(windows).map_err(|m| (EXIT_USAGE, m))?;
    let overlaps = parse_range(overlaps).map_err(|m| (EXIT_USAGE, m))?;
    let ds = load_dataset(data).map_err(|e| (exit_code_for(&e), e.to_string()))?;

    let run = |weighting| {
        analysis::grid_search(&ds, &windows, &overlaps, weighting, 1, opts.anchor)
    };
    let grids: Vec<GridResult> = match thread_pool() {
        Some(pool) => pool.install(|| opts.weightings().into_iter().map(run).collect()),
        None => opts.weightings().into_iter().map(run).collect(),
    };

    fs::create_dir_all(&opts.out).map_err(|e| (EXIT_DATA, e.to_string()))?;
    let mut any_entries = false;
    for grid in &grids {
        any_entries |= !grid.entries.is_empty();
        fs::write(
            opts.out
                .join(format!("{}_grid_{}.csv", ds.name, grid.weighting.label())),
            grid.to_csv(),
        )
        .map_err(|e| (EXIT_DATA, e.to_string()))?;
    }
    if !any_entries {
        eprintln!("warning: no valid (window, overlap) combination; grid is empty");
    } else {
        let mut plotted: Vec<u32> = overlaps
            .iter()
            .copied()
            .filter(|&o| grids.iter().any(|g| !g.entries_at_overlap(o).is_empty()))
            .collect();
        plotted.dedup();
        for o in plotted {
            let figure =
                report::render_grid_plot(&grids, o).map_err(|e| (EXIT_FIT, e.to_string()))?;
            fs::write(opts.out.join(format!("grid_{o}o.svg")), figure.svg())
                .map_err(|e| (EXIT_DATA, e.to_string()))?;
        }
    }
    let mut manifest = RunManifest::new("grid", std::slice::from_ref(&data.to_path_buf()), &opts.out)
        .with_opts(opts, 1);
    manifest.windows = Some(windows.iter().map(u32::to_string).collect::<Vec<_>>().join(","));
    manifest.overlaps = Some(overlaps.iter().map(u32::to_string).collect::<Vec<_>>().join(","));
    manifest
        .write(&opts.out)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    Ok(())
}

fn cmd_composite(paths: &[PathBuf], opts: &CommonOpts) -> Result<(), (i32, String)> {
    let cfg = opts.config(1);
    let mut analyses = Vec::new();
    for path in paths {
        let ds = load_dataset(path).map_err(|e| (exit_code_for(&e), e.to_string()))?;
        let analysis =
            analyze_change(&ds, &cfg).map_err(|e| (exit_code_for(&e), e.to_string()))?;
        analyses.push(analysis);
    }
    let model = analysis::composite(&analyses).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    fs::create_dir_all(&opts.out).map_err(|e| (EXIT_DATA, e.to_string()))?;
    let figure =
        report::render_composite_plot(&model).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    fs::write(opts.out.join("composite.svg"), figure.svg())
        .map_err(|e| (EXIT_DATA, e.to_string()))?;

    let mut offsets = String::from("change_a,change_b,crossing_offset_years\n");
    for (a, b, offset) in &model.crossing_offsets {
        offsets.push_str(&format!("{a},{b},{offset:.3}\n"));
    }
    fs::write(opts.out.join("crossing_offsets.csv"), offsets)
        .map_err(|e| (EXIT_DATA, e.to_string()))?;
    RunManifest::new("composite", paths, &opts.out)
        .with_opts(opts, 1)
        .write(&opts.out)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    Ok(())
}

/// Reads grid CSVs back into per-change results (inverse of `GridResult::to_csv`).
fn read_grid_csv(path: &Path) -> crate::error::Result<Vec<GridResult>> {
    let file = fs::File::open(path)?;
    let mut reader = csv::ReaderBuilder::new().from_reader(file);
    let mut by_change: BTreeMap<String, GridResult> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| -> crate::error::Result<&str> {
            record.get(i).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing column {i}"),
            })
        };
        let change = field(0)?.to_string();
        let window: u32 = field(1)?.parse().map_err(|_| Error::Parse {
            line,
            message: "bad window".to_string(),
        })?;
        let overlap: u32 = field(2)?.parse().map_err(|_| Error::Parse {
            line,
            message: "bad overlap".to_string(),
        })?;
        let weighting = if field(3)? == "weighted" {
            Weighting::Weighted
        } else {
            Weighting::Unweighted
        };
        let degree: usize = field(4)?.parse().unwrap_or(1);
        let r2 = field(5)?.parse::<f64>().ok();
        let p_value = field(6)?.parse::<f64>().ok();
        let converged = field(7)? == "true";
        let entry = GridEntry {
            window,
            overlap,
            r2,
            p_value,
            converged,
            error: None,
        };
        by_change
            .entry(change.clone())
            .or_insert_with(|| GridResult {
                change,
                weighting,
                degree,
                entries: Vec::new(),
            })
            .entries
            .push(entry);
    }
    Ok(by_change.into_values().collect())
}

fn cmd_table(grids: &[PathBuf], cells: &[String], out: &Path) -> Result<(), (i32, String)> {
    let mut parsed_cells = Vec::new();
    for cell in cells {
        parsed_cells.push(parse_cell(cell).map_err(|m| (EXIT_USAGE, m))?);
    }
    let mut results = Vec::new();
    for path in grids {
        let mut grid = read_grid_csv(path).map_err(|e| (exit_code_for(&e), e.to_string()))?;
        results.append(&mut grid);
    }
    let table = report::emit_table(&results, &parsed_cells);
    for warning in &table.warnings {
        eprintln!("warning: {warning}");
    }
    fs::create_dir_all(out).map_err(|e| (EXIT_DATA, e.to_string()))?;
    fs::write(out.join("table1.md"), &table.markdown).map_err(|e| (EXIT_DATA, e.to_string()))?;
    fs::write(out.join("table1.csv"), &table.csv).map_err(|e| (EXIT_DATA, e.to_string()))?;
    RunManifest::new("table", grids, out)
        .write(out)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    print!("{}", table.markdown);
    Ok(())
}

fn cmd_validate(data: &Path) -> Result<(), (i32, String)> {
    let ds = load_dataset(data).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let (rec, inn, total) = ds.totals();
    println!("dataset: {}", ds.name);
    match ds.year_range() {
        Some((lo, hi)) => println!("years: {lo}..{hi} ({} distinct)", ds.records().len()),
        None => println!("years: none"),
    }
    println!("recessive total: {rec}");
    println!("innovative total: {inn}");
    println!("grand total: {total}");
    let (first_rec, first_inn) = ds.first_attestations();
    let (last_rec, last_inn) = ds.last_attestations();
    let show = |v: Option<i32>| v.map(|y| y.to_string()).unwrap_or_else(|| "-".to_string());
    println!(
        "recessive attested: {}..{}",
        show(first_rec),
        show(last_rec)
    );
    println!(
        "innovative attested: {}..{}",
        show(first_inn),
        show(last_inn)
    );
    Ok(())
}

/// Runs the CLI on an explicit argument list; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are not usage errors
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Fit { data, opts } => cmd_fit(data, opts),
        Command::Poly { data, degree, opts } => cmd_poly(data, *degree, opts),
        Command::Split { data, at, opts } => cmd_split(data, *at, opts),
        Command::Grid {
            data,
            windows,
            overlaps,
            opts,
        } => cmd_grid(data, windows, overlaps, opts),
        Command::Composite { data, opts } => cmd_composite(data, opts),
        Command::Table { grids, cells, out } => cmd_table(grids, cells, out),
        Command::Validate { data } => cmd_validate(data),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err((code, message)) => {
            eprintln!("error: {message}");
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_syntax() {
        assert_eq!(parse_range("5:20:5").unwrap(), vec![5, 10, 15, 20]);
        assert_eq!(parse_range("10:10:5").unwrap(), vec![10]);
        assert_eq!(parse_range("20").unwrap(), vec![20]);
        // end not aligned with step: stop below it
        assert_eq!(parse_range("5:12:5").unwrap(), vec![5, 10]);
        assert!(parse_range("5:1:5").is_err());
        assert!(parse_range("5:10:0").is_err());
        assert!(parse_range("a:b:c").is_err());
    }

    #[test]
    fn cell_syntax() {
        assert_eq!(parse_cell("50,20").unwrap(), (50, 20));
        assert!(parse_cell("50").is_err());
        assert!(parse_cell("50,20,5").is_err());
    }
}
