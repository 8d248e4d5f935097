//! Attestation-count datasets for individual language changes.
//!
//! A [`ChangeDataset`] holds per-year counts of the recessive (older) and
//! innovative (newer) form. Counts come from two CSV layouts: yearly counts
//! (`year,recessive,innovative`) and per-text records
//! (`text_id,year_from,year_to,recessive,innovative`), where a text dated to
//! a range is assigned to the floor midpoint year. Datasets are immutable
//! after construction and safe to share across concurrent fitting tasks.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_YEAR: i32 = 1000;
pub const MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearCount {
    pub year: i32,
    pub recessive: u64,
    pub innovative: u64,
}

/// One text with a (possibly rough) dating range and its counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRecord {
    pub text_id: String,
    pub year_from: i32,
    pub year_to: i32,
    pub recessive: u64,
    pub innovative: u64,
}

impl TextRecord {
    /// Floor midpoint of the dating range.
    pub fn midpoint_year(&self) -> i32 {
        (self.year_from + self.year_to).div_euclid(2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeDataset {
    pub name: String,
    pub recessive_label: String,
    pub innovative_label: String,
    /// Sorted strictly ascending by year, no duplicates.
    records: Vec<YearCount>,
}

impl ChangeDataset {
    /// Builds a dataset from raw (year, recessive, innovative) rows.
    /// Duplicate years are summed; rows are sorted ascending.
    pub fn from_rows(
        name: impl Into<String>,
        rows: impl IntoIterator<Item = (i32, u64, u64)>,
    ) -> Result<Self> {
        let mut by_year: BTreeMap<i32, (u64, u64)> = BTreeMap::new();
        for (year, rec, inn) in rows {
            if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
                return Err(Error::YearOutOfRange(year));
            }
            let entry = by_year.entry(year).or_insert((0, 0));
            entry.0 += rec;
            entry.1 += inn;
        }
        let records = by_year
            .into_iter()
            .map(|(year, (recessive, innovative))| YearCount {
                year,
                recessive,
                innovative,
            })
            .collect();
        Ok(Self {
            name: name.into(),
            recessive_label: "recessive".to_string(),
            innovative_label: "innovative".to_string(),
            records,
        })
    }

    pub fn with_labels(
        mut self,
        recessive_label: impl Into<String>,
        innovative_label: impl Into<String>,
    ) -> Self {
        self.recessive_label = recessive_label.into();
        self.innovative_label = innovative_label.into();
        self
    }

    pub fn records(&self) -> &[YearCount] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn year_range(&self) -> Option<(i32, i32)> {
        match (self.records.first(), self.records.last()) {
            (Some(first), Some(last)) => Some((first.year, last.year)),
            _ => None,
        }
    }

    /// Restricts to records with `predicate(year)` true, keeping the name.
    pub fn filter_years(&self, predicate: impl Fn(i32) -> bool) -> Self {
        Self {
            name: self.name.clone(),
            recessive_label: self.recessive_label.clone(),
            innovative_label: self.innovative_label.clone(),
            records: self
                .records
                .iter()
                .copied()
                .filter(|r| predicate(r.year))
                .collect(),
        }
    }

    /// A dataset with no attested competition cannot be modeled; this is a
    /// load-time warning, not an error.
    pub fn competition_warning(&self) -> Option<String> {
        let (rec, inn, _) = self.totals();
        if self.records.is_empty() {
            return None;
        }
        if inn == 0 {
            Some(format!(
                "dataset `{}` has no innovative attestations; nothing to model",
                self.name
            ))
        } else if rec == 0 {
            Some(format!(
                "dataset `{}` has no recessive attestations; nothing to model",
                self.name
            ))
        } else {
            None
        }
    }

    /// (recessive total, innovative total, grand total).
    pub fn totals(&self) -> (u64, u64, u64) {
        let rec: u64 = self.records.iter().map(|r| r.recessive).sum();
        let inn: u64 = self.records.iter().map(|r| r.innovative).sum();
        (rec, inn, rec + inn)
    }

    /// First year in which each form is attested: (recessive, innovative).
    pub fn first_attestations(&self) -> (Option<i32>, Option<i32>) {
        let rec = self.records.iter().find(|r| r.recessive > 0).map(|r| r.year);
        let inn = self
            .records
            .iter()
            .find(|r| r.innovative > 0)
            .map(|r| r.year);
        (rec, inn)
    }

    /// Last year in which each form is attested: (recessive, innovative).
    pub fn last_attestations(&self) -> (Option<i32>, Option<i32>) {
        let rec = self
            .records
            .iter()
            .rev()
            .find(|r| r.recessive > 0)
            .map(|r| r.year);
        let inn = self
            .records
            .iter()
            .rev()
            .find(|r| r.innovative > 0)
            .map(|r| r.year);
        (rec, inn)
    }

    /// Serializes to the yearly CSV format (round-trips through
    /// [`parse_yearly_counts`]).
    pub fn to_yearly_csv(&self) -> String {
        let mut out = String::from("year,recessive,innovative\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{}\n", r.year, r.recessive, r.innovative));
        }
        out
    }
}

fn parse_int_field(raw: &str, column: &str, line: u64) -> Result<i64> {
    raw.trim().parse::<i64>().map_err(|_| Error::Parse {
        line,
        message: format!("non-integer value `{}` in column `{}`", raw.trim(), column),
    })
}

fn parse_count_field(raw: &str, column: &str, line: u64) -> Result<u64> {
    let value = parse_int_field(raw, column, line)?;
    u64::try_from(value).map_err(|_| Error::Parse {
        line,
        message: format!("negative count {} in column `{}`", value, column),
    })
}

fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source)
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let headers = reader.headers()?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, got `{}`",
                expected.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

/// Parses the yearly CSV format `year,recessive,innovative`.
///
/// Duplicate years are summed; the result is sorted ascending by year.
pub fn parse_yearly_counts<R: Read>(source: R, name: &str) -> Result<ChangeDataset> {
    let mut reader = csv_reader(source);
    check_header(&mut reader, &["year", "recessive", "innovative"])?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 columns, got {}", record.len()),
            });
        }
        let year = parse_int_field(&record[0], "year", line)? as i32;
        let rec = parse_count_field(&record[1], "recessive", line)?;
        let inn = parse_count_field(&record[2], "innovative", line)?;
        rows.push((year, rec, inn));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(name.to_string()));
    }
    ChangeDataset::from_rows(name, rows)
}

/// Parses the per-text CSV format `text_id,year_from,year_to,recessive,innovative`.
///
/// Each text's counts are assigned to the floor midpoint of its dating range.
pub fn parse_text_records<R: Read>(source: R, name: &str) -> Result<ChangeDataset> {
    let mut reader = csv_reader(source);
    check_header(
        &mut reader,
        &["text_id", "year_from", "year_to", "recessive", "innovative"],
    )?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 5 {
            return Err(Error::Parse {
                line,
                message: format!("expected 5 columns, got {}", record.len()),
            });
        }
        let text = TextRecord {
            text_id: record[0].to_string(),
            year_from: parse_int_field(&record[1], "year_from", line)? as i32,
            year_to: parse_int_field(&record[2], "year_to", line)? as i32,
            recessive: parse_count_field(&record[3], "recessive", line)?,
            innovative: parse_count_field(&record[4], "innovative", line)?,
        };
        if text.year_from > text.year_to {
            return Err(Error::InvalidDating {
                text_id: text.text_id,
                year_from: text.year_from,
                year_to: text.year_to,
            });
        }
        rows.push((text.midpoint_year(), text.recessive, text.innovative));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(name.to_string()));
    }
    ChangeDataset::from_rows(name, rows)
}

/// Elementwise sum of two datasets over the union of their years.
pub fn merge_datasets(a: &ChangeDataset, b: &ChangeDataset, name: &str) -> ChangeDataset {
    let rows = a
        .records
        .iter()
        .chain(b.records.iter())
        .map(|r| (r.year, r.recessive, r.innovative));
    // years already validated in the inputs
    ChangeDataset::from_rows(name, rows).expect("merged years are in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_yearly_rows() {
        let csv = "year,recessive,innovative\n1543,10,1\n1600,5,20\n";
        let ds = parse_yearly_counts(csv.as_bytes(), "test").unwrap();
        assert_eq!(ds.records().len(), 2);
        assert_eq!(ds.totals(), (15, 21, 36));
    }

    #[test]
    fn duplicate_years_are_summed() {
        let csv = "year,recessive,innovative\n1600,2,3\n1600,4,0\n";
        let ds = parse_yearly_counts(csv.as_bytes(), "test").unwrap();
        assert_eq!(
            ds.records(),
            &[YearCount {
                year: 1600,
                recessive: 6,
                innovative: 3
            }]
        );
    }

    #[test]
    fn comment_lines_are_skipped() {
        let csv = "year,recessive,innovative\n# a comment\n1600,1,2\n";
        let ds = parse_yearly_counts(csv.as_bytes(), "test").unwrap();
        assert_eq!(ds.totals(), (1, 2, 3));
    }

    #[test]
    fn malformed_row_names_line() {
        let csv = "year,recessive,innovative\n1600,1,2\n16xx,1,2\n";
        let err = parse_yearly_counts(csv.as_bytes(), "test").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn negative_count_is_rejected() {
        let csv = "year,recessive,innovative\n1600,-1,2\n";
        assert!(matches!(
            parse_yearly_counts(csv.as_bytes(), "test"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn empty_body_is_an_error() {
        let csv = "year,recessive,innovative\n";
        assert!(matches!(
            parse_yearly_counts(csv.as_bytes(), "t"),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn text_records_collapse_to_midpoints() {
        let csv = "text_id,year_from,year_to,recessive,innovative\nA,1601,1601,3,1\n";
        let ds = parse_text_records(csv.as_bytes(), "t").unwrap();
        assert_eq!(
            ds.records(),
            &[YearCount {
                year: 1601,
                recessive: 3,
                innovative: 1
            }]
        );

        let csv = "text_id,year_from,year_to,recessive,innovative\nB,1600,1621,0,4\n";
        let ds = parse_text_records(csv.as_bytes(), "t").unwrap();
        assert_eq!(ds.records()[0].year, 1610);
    }

    #[test]
    fn text_record_midpoints_match_reference() {
        // floor((1601+1601)/2)=1601, floor((1619+1621)/2)=1620
        let csv = "text_id,year_from,year_to,recessive,innovative\n\
                   A,1601,1601,3,1\nB,1619,1621,2,2\n";
        let ds = parse_text_records(csv.as_bytes(), "t").unwrap();
        let years: Vec<i32> = ds.records().iter().map(|r| r.year).collect();
        assert_eq!(years, vec![1601, 1620]);
    }

    #[test]
    fn reversed_dating_is_rejected_with_text_id() {
        let csv = "text_id,year_from,year_to,recessive,innovative\nbad,1650,1600,1,1\n";
        match parse_text_records(csv.as_bytes(), "t").unwrap_err() {
            Error::InvalidDating { text_id, .. } => assert_eq!(text_id, "bad"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn merge_sums_elementwise() {
        let a = ChangeDataset::from_rows("a", [(1500, 1, 0)]).unwrap();
        let b = ChangeDataset::from_rows("b", [(1500, 0, 2)]).unwrap();
        let merged = merge_datasets(&a, &b, "ab");
        assert_eq!(
            merged.records(),
            &[YearCount {
                year: 1500,
                recessive: 1,
                innovative: 2
            }]
        );
    }

    #[test]
    fn merge_unions_disjoint_years() {
        let a = ChangeDataset::from_rows("a", [(1500, 1, 0)]).unwrap();
        let b = ChangeDataset::from_rows("b", [(1510, 0, 2)]).unwrap();
        let merged = merge_datasets(&a, &b, "ab");
        assert_eq!(merged.records().len(), 2);
        assert_eq!(merged.totals(), (1, 2, 3));
    }

    #[test]
    fn totals_of_empty_dataset_are_zero() {
        let ds = ChangeDataset::from_rows("empty", std::iter::empty()).unwrap();
        assert_eq!(ds.totals(), (0, 0, 0));
    }

    #[test]
    fn year_out_of_sanity_range_is_rejected() {
        assert!(matches!(
            ChangeDataset::from_rows("t", [(999, 1, 1)]),
            Err(Error::YearOutOfRange(999))
        ));
        assert!(matches!(
            ChangeDataset::from_rows("t", [(2101, 1, 1)]),
            Err(Error::YearOutOfRange(2101))
        ));
    }

    #[test]
    fn one_sided_dataset_warns() {
        let ds = ChangeDataset::from_rows("t", [(1500, 5, 0)]).unwrap();
        assert!(ds.competition_warning().is_some());
        let ds = ChangeDataset::from_rows("t", [(1500, 5, 3)]).unwrap();
        assert!(ds.competition_warning().is_none());
    }

    #[test]
    fn csv_round_trip() {
        let ds = ChangeDataset::from_rows("t", [(1500, 5, 3), (1600, 0, 7)]).unwrap();
        let reparsed = parse_yearly_counts(ds.to_yearly_csv().as_bytes(), "t").unwrap();
        assert_eq!(ds, reparsed);
    }
}
