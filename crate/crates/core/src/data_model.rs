//! Domain types for summary statistics and population parameters, plus
//! validation and TSV ingestion.
//!
//! SNPs are assumed pre-harmonized and mutually independent (LD pruning and
//! allele alignment happen upstream), so ingestion is a straight column
//! mapping with no genetics-aware logic.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::DivwError;

/// Summary statistics for one SNP across the exposure, outcome, and
/// (optionally) selection GWAS.
#[derive(Clone, Debug, PartialEq)]
pub struct SnpRecord {
    /// SNP label, e.g. an rsid. Not interpreted; duplicates are tolerated.
    pub id: String,
    /// Estimated SNP–exposure association γ̂_j.
    pub gamma_hat: f64,
    /// Standard error of `gamma_hat` (σ̂_Xj), strictly positive.
    pub se_x: f64,
    /// Estimated SNP–outcome association Γ̂_j.
    pub big_gamma_hat: f64,
    /// Standard error of `big_gamma_hat` (σ̂_Yj), strictly positive.
    pub se_y: f64,
    /// SNP–exposure association in the independent selection dataset (γ̂*_j).
    pub gamma_star: Option<f64>,
    /// Standard error of `gamma_star` (σ̂*_Xj); present iff `gamma_star` is.
    pub se_x_star: Option<f64>,
}

/// An ordered collection of [`SnpRecord`]s.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryDataset {
    records: Vec<SnpRecord>,
}

/// A single validation failure, naming the offending record and field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub id: String,
    pub index: usize,
    pub field: String,
    pub message: String,
}

impl SummaryDataset {
    /// Wraps a non-empty record list.
    pub fn new(records: Vec<SnpRecord>) -> Result<Self, DivwError> {
        if records.is_empty() {
            return Err(DivwError::EmptyInput("dataset has no SNPs".into()));
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[SnpRecord] {
        &self.records
    }

    /// Number of SNPs, p.
    pub fn p(&self) -> usize {
        self.records.len()
    }

    /// True iff every record carries selection-dataset statistics, making
    /// λ > 0 screening possible.
    pub fn has_selection(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.gamma_star.is_some() && r.se_x_star.is_some())
    }

    /// Checks all record invariants, returning one entry per violation.
    /// An empty list means the dataset is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |r: &SnpRecord, index: usize, field: &str, message: String| {
            out.push(Violation {
                id: r.id.clone(),
                index,
                field: field.to_string(),
                message,
            });
        };
        for (i, r) in self.records.iter().enumerate() {
            if !(r.se_x > 0.0) || !r.se_x.is_finite() {
                push(r, i, "se_x", format!("must be finite and > 0, got {}", r.se_x));
            }
            if !(r.se_y > 0.0) || !r.se_y.is_finite() {
                push(r, i, "se_y", format!("must be finite and > 0, got {}", r.se_y));
            }
            if let Some(s) = r.se_x_star {
                if !(s > 0.0) || !s.is_finite() {
                    push(r, i, "se_x_star", format!("must be finite and > 0, got {s}"));
                }
            }
            if r.gamma_star.is_some() != r.se_x_star.is_some() {
                push(
                    r,
                    i,
                    "gamma_star/se_x_star",
                    "selection fields must be both present or both absent".into(),
                );
            }
            for (field, value) in [
                ("gamma_hat", r.gamma_hat),
                ("big_gamma_hat", r.big_gamma_hat),
            ] {
                if !value.is_finite() {
                    push(r, i, field, format!("must be finite, got {value}"));
                }
            }
            if let Some(g) = r.gamma_star {
                if !g.is_finite() {
                    push(r, i, "gamma_star", format!("must be finite, got {g}"));
                }
            }
        }
        out
    }

    /// Ids that occur more than once (reported as a warning downstream; the
    /// estimators are purely index-based and never key on id).
    pub fn duplicate_ids(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut dup = std::collections::BTreeSet::new();
        for r in &self.records {
            if !seen.insert(r.id.as_str()) {
                dup.insert(r.id.clone());
            }
        }
        dup.into_iter().collect()
    }
}

/// Column-name mapping for summary TSV ingestion.
#[derive(Clone, Debug)]
pub struct ColumnMap {
    pub id: String,
    pub beta_exposure: String,
    pub se_exposure: String,
    pub beta_outcome: String,
    pub se_outcome: String,
    pub beta_selection: String,
    pub se_selection: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            id: "SNP".into(),
            beta_exposure: "beta.exposure".into(),
            se_exposure: "se.exposure".into(),
            beta_outcome: "beta.outcome".into(),
            se_outcome: "se.outcome".into(),
            beta_selection: "beta.selection".into(),
            se_selection: "se.selection".into(),
        }
    }
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn parse_cell(field: &str, row: usize, column: &str) -> Result<f64, DivwError> {
    field.trim().parse::<f64>().map_err(|_| DivwError::Parse {
        row,
        column: column.to_string(),
        value: field.to_string(),
    })
}

/// Reads a tab-separated summary-statistics file.
///
/// The first row is a header; `columns` names the id and beta/se columns.
/// The selection columns are optional: when both are present in the header
/// every row must parse them, otherwise they are skipped entirely.
pub fn read_summary_tsv(path: &Path, columns: &ColumnMap) -> Result<SummaryDataset, DivwError> {
    let raw = read_file(path)?;
    read_summary_tsv_str(&raw, columns, &path.display().to_string())
}

fn read_file(path: &Path) -> Result<String, DivwError> {
    let mut raw = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut raw))
        .map_err(|e| {
            DivwError::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
    Ok(raw)
}

fn read_summary_tsv_str(
    raw: &str,
    columns: &ColumnMap,
    origin: &str,
) -> Result<SummaryDataset, DivwError> {
    if raw.trim().is_empty() {
        return Err(DivwError::EmptyInput(origin.to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .flexible(false)
        .from_reader(raw.as_bytes());
    let headers = reader.headers()?.clone();

    let require = |name: &str| {
        find_column(&headers, name).ok_or_else(|| DivwError::MissingColumn {
            column: name.to_string(),
            path: origin.to_string(),
        })
    };
    let idx_id = require(&columns.id)?;
    let idx_bx = require(&columns.beta_exposure)?;
    let idx_sx = require(&columns.se_exposure)?;
    let idx_by = require(&columns.beta_outcome)?;
    let idx_sy = require(&columns.se_outcome)?;
    let idx_bs = find_column(&headers, &columns.beta_selection);
    let idx_ss = find_column(&headers, &columns.se_selection);
    let selection = match (idx_bs, idx_ss) {
        (Some(b), Some(s)) => Some((b, s)),
        _ => None,
    };

    let mut records = Vec::new();
    for (row0, record) in reader.records().enumerate() {
        let record = record?;
        let row = row0 + 1; // 1-based data-row number for messages
        let cell = |idx: usize, column: &str| -> Result<f64, DivwError> {
            parse_cell(record.get(idx).unwrap_or(""), row, column)
        };
        let (gamma_star, se_x_star) = match selection {
            Some((b, s)) => (
                Some(cell(b, &columns.beta_selection)?),
                Some(cell(s, &columns.se_selection)?),
            ),
            None => (None, None),
        };
        records.push(SnpRecord {
            id: record.get(idx_id).unwrap_or("").to_string(),
            gamma_hat: cell(idx_bx, &columns.beta_exposure)?,
            se_x: cell(idx_sx, &columns.se_exposure)?,
            big_gamma_hat: cell(idx_by, &columns.beta_outcome)?,
            se_y: cell(idx_sy, &columns.se_outcome)?,
            gamma_star,
            se_x_star,
        });
    }
    if records.is_empty() {
        return Err(DivwError::EmptyInput(format!("{origin}: header but no data rows")));
    }
    SummaryDataset::new(records)
}

/// Writes a dataset back to TSV with shortest-round-trip float formatting,
/// so `read_summary_tsv` recovers the exact same values.
pub fn write_summary_tsv(dataset: &SummaryDataset, out: &mut dyn Write) -> std::io::Result<()> {
    let columns = ColumnMap::default();
    let with_selection = dataset.has_selection();
    let mut header = vec![
        columns.id.as_str(),
        columns.beta_exposure.as_str(),
        columns.se_exposure.as_str(),
        columns.beta_outcome.as_str(),
        columns.se_outcome.as_str(),
    ];
    if with_selection {
        header.push(columns.beta_selection.as_str());
        header.push(columns.se_selection.as_str());
    }
    writeln!(out, "{}", header.join("\t"))?;
    for r in dataset.records() {
        let mut fields = vec![
            r.id.clone(),
            format!("{}", r.gamma_hat),
            format!("{}", r.se_x),
            format!("{}", r.big_gamma_hat),
            format!("{}", r.se_y),
        ];
        if with_selection {
            fields.push(format!("{}", r.gamma_star.unwrap()));
            fields.push(format!("{}", r.se_x_star.unwrap()));
        }
        writeln!(out, "{}", fields.join("\t"))?;
    }
    Ok(())
}

/// True per-SNP parameters of a population, used by the theory oracles and
/// the summary-level data-generating process.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationParams {
    /// True SNP–exposure effects γ_j.
    pub gamma: Vec<f64>,
    /// True exposure-side SDs σ_Xj (all > 0).
    pub sigma_x: Vec<f64>,
    /// True outcome-side SDs σ_Yj (all > 0).
    pub sigma_y: Vec<f64>,
    /// True selection-dataset SDs σ*_Xj (all > 0).
    pub sigma_x_star: Vec<f64>,
    /// True exposure effect β₀.
    pub beta0: f64,
    /// Balanced-pleiotropy SD τ₀ ≥ 0 (direct effects α_j ~ N(0, τ₀²)).
    pub tau0: f64,
    /// Fixed directional pleiotropy effects α_j; empty means all zero.
    pub alpha: Vec<f64>,
}

impl PopulationParams {
    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    /// Checks vector lengths and positivity constraints.
    pub fn validate(&self) -> Result<(), DivwError> {
        let p = self.gamma.len();
        if p == 0 {
            return Err(DivwError::Config("population has no SNPs".into()));
        }
        for (name, v) in [
            ("sigma_x", &self.sigma_x),
            ("sigma_y", &self.sigma_y),
            ("sigma_x_star", &self.sigma_x_star),
        ] {
            if v.len() != p {
                return Err(DivwError::Config(format!(
                    "{name} has length {}, expected {p}",
                    v.len()
                )));
            }
            if let Some(bad) = v.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
                return Err(DivwError::Config(format!("{name} entries must be > 0, found {bad}")));
            }
        }
        if !self.alpha.is_empty() && self.alpha.len() != p {
            return Err(DivwError::Config(format!(
                "alpha has length {}, expected {p} (or empty)",
                self.alpha.len()
            )));
        }
        if self.tau0 < 0.0 || !self.tau0.is_finite() {
            return Err(DivwError::Config(format!("tau0 must be ≥ 0, got {}", self.tau0)));
        }
        Ok(())
    }

    /// Direct effect α_j (0 when no directional pleiotropy is configured).
    pub fn alpha_at(&self, j: usize) -> f64 {
        self.alpha.get(j).copied().unwrap_or(0.0)
    }
}

/// Reads population parameters from TSV with columns `gamma`, `sigma.x`,
/// `sigma.y`, `sigma.x.star` (optional, defaults to `sigma.x`) and `alpha`
/// (optional, defaults to 0). β₀ and τ₀ travel outside the file (CLI flags).
pub fn read_population_tsv(path: &Path, beta0: f64, tau0: f64) -> Result<PopulationParams, DivwError> {
    let raw = read_file(path)?;
    if raw.trim().is_empty() {
        return Err(DivwError::EmptyInput(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .from_reader(raw.as_bytes());
    let headers = reader.headers()?.clone();
    let require = |name: &str| {
        find_column(&headers, name).ok_or_else(|| DivwError::MissingColumn {
            column: name.to_string(),
            path: path.display().to_string(),
        })
    };
    let idx_g = require("gamma")?;
    let idx_sx = require("sigma.x")?;
    let idx_sy = require("sigma.y")?;
    let idx_ss = find_column(&headers, "sigma.x.star");
    let idx_a = find_column(&headers, "alpha");

    let mut params = PopulationParams {
        gamma: Vec::new(),
        sigma_x: Vec::new(),
        sigma_y: Vec::new(),
        sigma_x_star: Vec::new(),
        beta0,
        tau0,
        alpha: Vec::new(),
    };
    let mut any_alpha = false;
    for (row0, record) in reader.records().enumerate() {
        let record = record?;
        let row = row0 + 1;
        let cell = |idx: usize, column: &str| -> Result<f64, DivwError> {
            parse_cell(record.get(idx).unwrap_or(""), row, column)
        };
        params.gamma.push(cell(idx_g, "gamma")?);
        let sx = cell(idx_sx, "sigma.x")?;
        params.sigma_x.push(sx);
        params.sigma_y.push(cell(idx_sy, "sigma.y")?);
        params.sigma_x_star.push(match idx_ss {
            Some(i) => cell(i, "sigma.x.star")?,
            None => sx,
        });
        match idx_a {
            Some(i) => {
                let a = cell(i, "alpha")?;
                any_alpha |= a != 0.0;
                params.alpha.push(a);
            }
            None => params.alpha.push(0.0),
        }
    }
    if !any_alpha {
        params.alpha.clear();
    }
    params.validate()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str) -> SnpRecord {
        SnpRecord {
            id: id.into(),
            gamma_hat: 0.1,
            se_x: 0.02,
            big_gamma_hat: 0.04,
            se_y: 0.03,
            gamma_star: None,
            se_x_star: None,
        }
    }

    #[test]
    fn validate_flags_nonpositive_se() {
        let mut r = record("rs1");
        r.se_x = 0.0;
        let ds = SummaryDataset::new(vec![r]).unwrap();
        let violations = ds.validate();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].id, "rs1");
        assert_eq!(violations[0].field, "se_x");
    }

    #[test]
    fn validate_accepts_well_formed_dataset() {
        let ds = SummaryDataset::new(vec![record("a"), record("b"), record("c")]).unwrap();
        assert!(ds.validate().is_empty());
        assert!(!ds.has_selection());
    }

    #[test]
    fn validate_flags_unpaired_selection_fields() {
        let mut r = record("rs9");
        r.gamma_star = Some(0.1);
        let ds = SummaryDataset::new(vec![r]).unwrap();
        let violations = ds.validate();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].field, "gamma_star/se_x_star");
    }

    #[test]
    fn duplicate_ids_are_reported_not_rejected() {
        let ds = SummaryDataset::new(vec![record("x"), record("x"), record("y")]).unwrap();
        assert!(ds.validate().is_empty());
        assert_eq!(ds.duplicate_ids(), vec!["x".to_string()]);
    }

    #[test]
    fn read_tsv_without_selection_columns() {
        let raw = "SNP\tbeta.exposure\tse.exposure\tbeta.outcome\tse.outcome\n\
                   rs1\t0.1\t0.02\t0.04\t0.03\n\
                   rs2\t-0.2\t0.05\t-0.07\t0.04\n";
        let ds = read_summary_tsv_str(raw, &ColumnMap::default(), "test").unwrap();
        assert_eq!(ds.p(), 2);
        assert!(!ds.has_selection());
        assert_eq!(ds.records()[1].gamma_hat, -0.2);
    }

    #[test]
    fn read_tsv_with_selection_columns() {
        let raw = "SNP\tbeta.exposure\tse.exposure\tbeta.outcome\tse.outcome\tbeta.selection\tse.selection\n\
                   rs1\t0.1\t0.02\t0.04\t0.03\t0.11\t0.02\n";
        let ds = read_summary_tsv_str(raw, &ColumnMap::default(), "test").unwrap();
        assert!(ds.has_selection());
        assert_eq!(ds.records()[0].gamma_star, Some(0.11));
    }

    #[test]
    fn read_tsv_reports_bad_cell_with_row_number() {
        let raw = "SNP\tbeta.exposure\tse.exposure\tbeta.outcome\tse.outcome\n\
                   rs1\t0.1\t0.02\t0.04\t0.03\n\
                   rs2\t0.1\t0.02\t0.04\t0.03\n\
                   rs3\t0.1\t0.02\t0.04\t0.03\n\
                   rs4\t0.1\t0.02\t0.04\tNA\n";
        let err = read_summary_tsv_str(raw, &ColumnMap::default(), "test").unwrap_err();
        match err {
            DivwError::Parse { row, column, value } => {
                assert_eq!(row, 4);
                assert_eq!(column, "se.outcome");
                assert_eq!(value, "NA");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn read_tsv_reports_missing_column() {
        let raw = "SNP\tbeta.exposure\tse.exposure\tbeta.outcome\n";
        let err = read_summary_tsv_str(raw, &ColumnMap::default(), "test").unwrap_err();
        match err {
            DivwError::MissingColumn { column, .. } => assert_eq!(column, "se.outcome"),
            other => panic!("expected missing-column error, got {other:?}"),
        }
    }

    #[test]
    fn read_tsv_rejects_empty_input() {
        assert!(matches!(
            read_summary_tsv_str("", &ColumnMap::default(), "test"),
            Err(DivwError::EmptyInput(_))
        ));
        let header_only = "SNP\tbeta.exposure\tse.exposure\tbeta.outcome\tse.outcome\n";
        assert!(matches!(
            read_summary_tsv_str(header_only, &ColumnMap::default(), "test"),
            Err(DivwError::EmptyInput(_))
        ));
    }

    #[test]
    fn tsv_round_trip_is_exact() {
        let mut r1 = record("rs1");
        r1.gamma_hat = 0.123_456_789_012_345_6;
        r1.se_x = 1.0 / 3.0;
        r1.gamma_star = Some(-7.25e-11);
        r1.se_x_star = Some(0.1 + 0.2); // deliberately non-representable sum
        let mut r2 = record("rs2");
        r2.gamma_star = Some(2.0_f64.sqrt());
        r2.se_x_star = Some(1e-300);
        let ds = SummaryDataset::new(vec![r1, r2]).unwrap();

        let mut buf = Vec::new();
        write_summary_tsv(&ds, &mut buf).unwrap();
        let back =
            read_summary_tsv_str(std::str::from_utf8(&buf).unwrap(), &ColumnMap::default(), "rt")
                .unwrap();
        assert_eq!(ds, back);
    }
}
