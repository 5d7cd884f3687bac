//! The colon tissue data: 2000 genes measured on 40 tumour and 22 normal
//! samples. The usual distribution is a genes x samples matrix plus a file
//! of tissue labels (signed sample ids, negative for tumour, or words).

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::GroupedSample;
use crate::nulldist::PValueMethod;
use crate::simulation::{run_one, TestId};

pub const COLON_GENES: usize = 2000;
pub const COLON_SAMPLES: usize = 62;
pub const BLOCK_WIDTH: usize = 40;
pub const BLOCK_COUNT: usize = 50;
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColonMode {
    Full,
    Blocks,
}

/// Group index per sample: 0 for tumour, 1 for normal.
pub fn parse_tissue_labels(text: &str) -> Result<Vec<usize>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, tok)| {
            let lower = tok.to_ascii_lowercase();
            if lower.starts_with('t') {
                Ok(0)
            } else if lower.starts_with('n') {
                Ok(1)
            } else if let Ok(v) = tok.parse::<i64>() {
                Ok(usize::from(v >= 0))
            } else {
                Err(Error::Parse {
                    line: 1,
                    col: i + 1,
                    msg: format!("unrecognised tissue label '{tok}'"),
                })
            }
        })
        .collect()
}

/// Load a genes x samples matrix (whitespace or comma separated) and
/// transpose it to samples x genes.
pub fn load_colon(matrix: &Path, labels: &Path, log2: bool) -> Result<GroupedSample> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|source| Error::File {
            path: p.to_path_buf(),
            source,
        })
    };
    let text = read(matrix)?;
    let mut genes: Vec<Vec<f64>> = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let cells: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if cells.is_empty() {
            continue;
        }
        let row = cells
            .iter()
            .enumerate()
            .map(|(ci, c)| {
                c.parse::<f64>().map_err(|_| Error::Parse {
                    line: li + 1,
                    col: ci + 1,
                    msg: format!("'{c}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = genes.first() {
            if first.len() != row.len() {
                return Err(Error::RaggedMatrix {
                    row: genes.len(),
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        genes.push(row);
    }
    let groups = parse_tissue_labels(&read(labels)?)?;
    let samples = genes.first().map_or(0, Vec::len);
    if groups.len() != samples {
        return Err(Error::LabelMismatch {
            rows: samples,
            labels: groups.len(),
        });
    }
    let p = genes.len();
    let mut data = Vec::with_capacity(p * samples);
    for s in 0..samples {
        for g in &genes {
            let v = g[s];
            data.push(if log2 { v.log2() } else { v });
        }
    }
    GroupedSample::from_row_major(data, p, &groups)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColonTestSummary {
    pub test: TestId,
    /// One p-value per block (a single entry in full mode).
    pub pvalues: Vec<f64>,
    pub average: f64,
    /// Counts over 20 equal bins of `[0, 1]` (blocks mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColonReport {
    pub mode: ColonMode,
    pub tests: Vec<ColonTestSummary>,
}

impl ColonReport {
    pub fn summary(&self, test: TestId) -> Option<&ColonTestSummary> {
        self.tests.iter().find(|t| t.test == test)
    }
}

impl crate::io::Tabular for ColonReport {
    fn write_csv<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(["test", "block", "pvalue"])?;
        for t in &self.tests {
            for (b, &p) in t.pvalues.iter().enumerate() {
                w.write_record([t.test.name().to_string(), b.to_string(), crate::io::format_f64(p)])?;
            }
        }
        Ok(())
    }
}

fn histogram(pvalues: &[f64]) -> Vec<usize> {
    let mut bins = vec![0; HISTOGRAM_BINS];
    for &p in pvalues {
        let b = ((p * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        bins[b] += 1;
    }
    bins
}

/// Run `tests` on the full matrix or on each of the 50 blocks of 40
/// consecutive genes.
pub fn colon_pipeline(
    sample: &GroupedSample,
    mode: ColonMode,
    tests: &[TestId],
    method: PValueMethod,
) -> Result<ColonReport> {
    if sample.p() != COLON_GENES || (mode == ColonMode::Full && sample.n() != COLON_SAMPLES) {
        return Err(Error::ShapeMismatch(format!(
            "expected {COLON_SAMPLES} x {COLON_GENES} for {mode:?} mode, got {} x {}",
            sample.n(),
            sample.p()
        )));
    }
    let parts: Vec<GroupedSample> = match mode {
        ColonMode::Full => vec![sample.clone()],
        ColonMode::Blocks => (0..BLOCK_COUNT)
            .map(|b| sample.select_columns(b * BLOCK_WIDTH..(b + 1) * BLOCK_WIDTH))
            .collect::<Result<_>>()?,
    };
    let mut out = Vec::with_capacity(tests.len());
    for &test in tests {
        let pvalues = parts
            .par_iter()
            .map(|s| run_one(test, s, method).map(|o| o.pvalue))
            .collect::<Result<Vec<f64>>>()?;
        let average = pvalues.iter().sum::<f64>() / pvalues.len() as f64;
        out.push(ColonTestSummary {
            test,
            histogram: (mode == ColonMode::Blocks).then(|| histogram(&pvalues)),
            pvalues,
            average,
        });
    }
    Ok(ColonReport { mode, tests: out })
}
