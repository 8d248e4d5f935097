//! Integration tests for the command-line interface: exit codes, produced
//! artifacts, and the grid-to-table pipeline.

use std::path::{Path, PathBuf};

use piotrowski::cli::{run, EXIT_DATA, EXIT_FIT, EXIT_OK, EXIT_USAGE};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(format!("{name}.csv"))
        .to_string_lossy()
        .into_owned()
}

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["piotrowski"];
    argv.extend_from_slice(args);
    run(argv)
}

fn out_dir() -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_string_lossy().into_owned();
    (dir, path)
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(cli(&["--help"]), EXIT_OK);
    assert_eq!(cli(&["--version"]), EXIT_OK);
    assert_eq!(cli(&["fit", "--help"]), EXIT_OK);
}

#[test]
fn unknown_arguments_are_usage_errors() {
    assert_eq!(cli(&[]), EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(cli(&["fit", &fixture("alpha"), "--no-such-flag"]), EXIT_USAGE);
    // conflicting weighting selectors
    assert_eq!(
        cli(&["fit", &fixture("alpha"), "--weighted", "--unweighted"]),
        EXIT_USAGE
    );
}

#[test]
fn missing_input_is_a_data_error() {
    let (_dir, out) = out_dir();
    assert_eq!(
        cli(&["fit", "/no/such/file.csv", "--out", &out]),
        EXIT_DATA
    );
    assert_eq!(cli(&["validate", "/no/such/file.csv"]), EXIT_DATA);
}

#[test]
fn malformed_csv_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "year,recessive,innovative\n1500,three,1\n").unwrap();
    let (_out_guard, out) = out_dir();
    assert_eq!(
        cli(&["fit", bad.to_str().unwrap(), "--out", &out]),
        EXIT_DATA
    );
}

#[test]
fn overlap_not_below_window_is_a_usage_error() {
    let (_dir, out) = out_dir();
    assert_eq!(
        cli(&["fit", &fixture("alpha"), "--window", "10", "--overlap", "10", "--out", &out]),
        EXIT_USAGE
    );
}

#[test]
fn fit_writes_bundle_and_manifest() {
    let (dir, out) = out_dir();
    assert_eq!(cli(&["fit", &fixture("alpha"), "--out", &out]), EXIT_OK);
    assert_eq!(
        files(dir.path()),
        vec!["alpha_20w10o.svg", "alpha_fits.csv", "manifest.json"]
    );
    let csv = std::fs::read_to_string(dir.path().join("alpha_fits.csv")).unwrap();
    // header + weighted/unweighted binned + weighted/unweighted raw-yearly
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("change,degree,weighting,window,overlap,beta0_raw,beta1_raw"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["window"], 20);
    assert_eq!(manifest["overlap"], 10);
    assert_eq!(manifest["anchor"], 1380);
}

#[test]
fn fit_respects_weighting_and_raw_yearly_flags() {
    let (dir, out) = out_dir();
    assert_eq!(
        cli(&["fit", &fixture("alpha"), "--weighted", "--raw-yearly", "false", "--out", &out]),
        EXIT_OK
    );
    let csv = std::fs::read_to_string(dir.path().join("alpha_fits.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().contains(",weighted,"));
}

#[test]
fn poly_requires_degree_at_least_two() {
    let (_dir, out) = out_dir();
    assert_eq!(
        cli(&["poly", &fixture("risefall"), "--degree", "1", "--out", &out]),
        EXIT_USAGE
    );
}

#[test]
fn poly_writes_extended_bundle() {
    let (dir, out) = out_dir();
    assert_eq!(
        cli(&["poly", &fixture("risefall"), "--degree", "3", "--out", &out]),
        EXIT_OK
    );
    let csv = std::fs::read_to_string(dir.path().join("risefall_poly3_fits.csv")).unwrap();
    // header + 2 binned + 2 raw + 2 polynomial rows
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.contains("beta3_raw"));
}

#[test]
fn split_writes_one_bundle_per_part() {
    let (dir, out) = out_dir();
    assert_eq!(
        cli(&["split", &fixture("risefall"), "--at", "1610", "--raw-yearly", "false", "--out", &out]),
        EXIT_OK
    );
    let names = files(dir.path());
    assert!(names.iter().any(|n| n.starts_with("risefall_pre1610") && n.ends_with("_fits.csv")));
    assert!(names.iter().any(|n| n.starts_with("risefall_post1610") && n.ends_with(".svg")));
}

#[test]
fn split_outside_data_is_a_data_error() {
    let (_dir, out) = out_dir();
    assert_eq!(
        cli(&["split", &fixture("alpha"), "--at", "1000", "--out", &out]),
        EXIT_DATA
    );
}

#[test]
fn grid_then_table_pipeline() {
    let (grid_dir, grid_out) = out_dir();
    assert_eq!(
        cli(&[
            "grid",
            &fixture("alpha"),
            "--windows",
            "20:50:30",
            "--overlaps",
            "5:20:15",
            "--out",
            &grid_out,
        ]),
        EXIT_OK
    );
    let names = files(grid_dir.path());
    assert!(names.contains(&"alpha_grid_weighted.csv".to_string()));
    assert!(names.contains(&"alpha_grid_unweighted.csv".to_string()));
    assert!(names.iter().any(|n| n.starts_with("grid_") && n.ends_with("o.svg")));

    let (table_dir, table_out) = out_dir();
    let grid_csv: PathBuf = grid_dir.path().join("alpha_grid_unweighted.csv");
    assert_eq!(
        cli(&[
            "table",
            grid_csv.to_str().unwrap(),
            "--cells",
            "50,20",
            "20,5",
            "--out",
            &table_out,
        ]),
        EXIT_OK
    );
    let md = std::fs::read_to_string(table_dir.path().join("table1.md")).unwrap();
    assert!(md.contains("alpha"));
    assert!(md.contains("50/20"));
    let csv = std::fs::read_to_string(table_dir.path().join("table1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn empty_grid_warns_but_succeeds() {
    let (dir, out) = out_dir();
    assert_eq!(
        cli(&["grid", &fixture("alpha"), "--windows", "10", "--overlaps", "10", "--out", &out]),
        EXIT_OK
    );
    let csv = std::fs::read_to_string(dir.path().join("alpha_grid_weighted.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1); // header only
}

#[test]
fn composite_needs_at_least_two_inputs() {
    let (_dir, out) = out_dir();
    assert_eq!(cli(&["composite", &fixture("alpha"), "--out", &out]), EXIT_USAGE);
}

#[test]
fn composite_writes_plot_and_offsets() {
    let (dir, out) = out_dir();
    assert_eq!(
        cli(&["composite", &fixture("alpha"), &fixture("eta"), "--out", &out]),
        EXIT_OK
    );
    let names = files(dir.path());
    assert!(names.contains(&"composite.svg".to_string()));
    let offsets = std::fs::read_to_string(dir.path().join("crossing_offsets.csv")).unwrap();
    assert_eq!(offsets.lines().count(), 2);
    let row = offsets.lines().nth(1).unwrap();
    assert!(row.starts_with("alpha,eta,"));
    // eta crosses ~1700, alpha ~1544: the offset is large and positive
    let offset: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(offset > 100.0);
}

#[test]
fn validate_summarizes_dataset() {
    assert_eq!(cli(&["validate", &fixture("alpha")]), EXIT_OK);
}

#[test]
fn fit_failure_exit_code_on_degenerate_data() {
    // two usable bins cannot support a 2-parameter model: every fit fails
    let dir = tempfile::tempdir().unwrap();
    let tiny = dir.path().join("tiny.csv");
    std::fs::write(&tiny, "year,recessive,innovative\n1500,1,1\n1505,1,1\n").unwrap();
    let (_out_guard, out) = out_dir();
    assert_eq!(
        cli(&["fit", tiny.to_str().unwrap(), "--window", "5", "--overlap", "0", "--out", &out]),
        EXIT_FIT
    );
}
