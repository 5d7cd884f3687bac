//! Domain types shared by the statistic, null-distribution, baseline and
//! simulation modules.
//!
//! A [`GroupedSample`] stores observations as rows of a dense row-major
//! matrix. Group labels are re-indexed densely to `0..K` in the sorted order
//! of the raw label values, so `[5, 5, 9, 9]` becomes `[0, 0, 1, 1]`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// An `n x p` observation matrix with a partition of its rows into `K` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSample {
    data: Vec<f64>,
    n: usize,
    p: usize,
    labels: Vec<usize>,
    group_sizes: Vec<usize>,
}

/// Validate a raw matrix and raw labels and build a [`GroupedSample`].
///
/// Every group must hold at least two observations and there must be at
/// least two groups.
pub fn validate_sample<L: Ord + Clone>(rows: &[Vec<f64>], labels: &[L]) -> Result<GroupedSample> {
    let p = rows.first().map(Vec::len).unwrap_or(0);
    let mut data = Vec::with_capacity(rows.len() * p);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != p {
            return Err(Error::RaggedMatrix {
                row: i,
                expected: p,
                found: row.len(),
            });
        }
        data.extend_from_slice(row);
    }
    GroupedSample::from_row_major(data, p, labels)
}

impl GroupedSample {
    /// Build from a row-major buffer of length `labels.len() * p`.
    pub fn from_row_major<L: Ord + Clone>(data: Vec<f64>, p: usize, labels: &[L]) -> Result<Self> {
        let sample = Self::assemble(data, p, labels)?;
        if sample.k() < 2 {
            return Err(Error::SingleGroup);
        }
        if let Some(k) = sample.group_sizes.iter().position(|&nk| nk < 2) {
            return Err(Error::GroupTooSmall(k));
        }
        Ok(sample)
    }

    /// Shape and finiteness checks only; group sizes of one are accepted.
    pub(crate) fn assemble<L: Ord + Clone>(data: Vec<f64>, p: usize, labels: &[L]) -> Result<Self> {
        if p == 0 {
            return Err(Error::EmptyDimension);
        }
        let n = labels.len();
        if data.len() != n * p {
            return Err(Error::LabelMismatch {
                rows: data.len() / p,
                labels: n,
            });
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                row: idx / p,
                col: idx % p,
            });
        }
        let dense: BTreeMap<L, usize> = {
            let mut uniq: Vec<L> = labels.to_vec();
            uniq.sort();
            uniq.dedup();
            uniq.into_iter().enumerate().map(|(i, l)| (l, i)).collect()
        };
        let labels: Vec<usize> = labels.iter().map(|l| dense[l]).collect();
        let mut group_sizes = vec![0; dense.len()];
        for &g in &labels {
            group_sizes[g] += 1;
        }
        Ok(Self {
            data,
            n,
            p,
            labels,
            group_sizes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of groups.
    pub fn k(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    /// Row indices belonging to group `k`, in input order.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.labels[i] == k).collect()
    }

    /// Mean of the rows in group `k`.
    pub fn group_mean(&self, k: usize) -> Vec<f64> {
        let mut mean = vec![0.0; self.p];
        for (row, _) in self.rows().zip(&self.labels).filter(|(_, &g)| g == k) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let nk = self.group_sizes[k] as f64;
        mean.iter_mut().for_each(|m| *m /= nk);
        mean
    }

    /// Mean of all rows.
    pub fn grand_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.p];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.n as f64);
        mean
    }

    /// Same observations under a different (already dense) labelling.
    pub fn relabel(&self, labels: &[usize]) -> Result<Self> {
        Self::from_row_major(self.data.clone(), self.p, labels)
    }

    /// Apply `f` to every row, keeping the labels.
    pub fn map_rows<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut data = Vec::with_capacity(self.data.len());
        let mut p = None;
        for row in self.rows() {
            let out = f(row);
            match p {
                None => p = Some(out.len()),
                Some(q) if q != out.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: q,
                        found: out.len(),
                    })
                }
                _ => {}
            }
            data.extend(out);
        }
        Self::from_row_major(data, p.unwrap_or(0), &self.labels)
    }

    /// Keep only columns `cols` (in the given order).
    pub fn select_columns(&self, cols: std::ops::Range<usize>) -> Result<Self> {
        if cols.end > self.p || cols.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "column range {cols:?} outside 0..{}",
                self.p
            )));
        }
        self.map_rows(|row| row[cols.clone()].to_vec())
    }
}

/// Which antisymmetric kernel to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `h(x, y) = x - y`.
    Difference,
    /// `h(x, y) = (x - y) / |x - y|`, zero when `x = y`.
    SpatialSign,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Difference => "difference",
            KernelKind::SpatialSign => "spatial_sign",
        }
    }
}

/// Kernel choice plus the coincidence threshold used by the spatial sign.
///
/// Two points closer than `coincidence_rel_tol * max(1, |x|, |y|)` are treated
/// as equal and the spatial sign returns the zero vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub coincidence_rel_tol: f64,
}

impl KernelSpec {
    pub const DEFAULT_COINCIDENCE_TOL: f64 = 1e-12;

    pub fn new(kind: KernelKind) -> Self {
        Self {
            kind,
            coincidence_rel_tol: Self::DEFAULT_COINCIDENCE_TOL,
        }
    }

    pub fn difference() -> Self {
        Self::new(KernelKind::Difference)
    }

    pub fn spatial_sign() -> Self {
        Self::new(KernelKind::SpatialSign)
    }
}

impl Serialize for KernelSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.kind.name())
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())
    }
}

/// Trace moments `t_m = sum_i gamma_i^m` of the estimated null covariance,
/// optionally with the eigenvalues themselves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEstimate {
    pub t1: f64,
    pub t2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Number of eigenvalues clamped to zero in `weights` that were negative
    /// beyond roundoff.
    pub clamped: usize,
}

impl SpectrumEstimate {
    /// Moments from an explicit list of eigenvalues. Negative values count
    /// toward the moments but are clamped in the stored weights.
    pub fn from_eigenvalues(eigs: &[f64]) -> Self {
        let t1 = eigs.iter().sum();
        let t2 = eigs.iter().map(|g| g * g).sum();
        let t3 = eigs.iter().map(|g| g * g * g).sum();
        let top = eigs.iter().cloned().fold(0.0f64, f64::max);
        // roundoff-level negatives are not counted
        let clamped = eigs.iter().filter(|&&g| g < -1e-13 * top).count();
        let weights = eigs.iter().map(|&g| g.max(0.0)).collect();
        Self {
            t1,
            t2,
            t3: Some(t3),
            weights: Some(weights),
            clamped,
        }
    }
}

/// How a p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    #[serde(rename = "imhof")]
    ImhofExact,
    #[serde(rename = "ws2m")]
    WelchSatterthwaite2M,
    #[serde(rename = "hbe3m")]
    HallBuckleyEagleson3M,
    #[serde(rename = "permutation")]
    Permutation,
    #[serde(rename = "f_exact")]
    FExact,
    #[serde(rename = "normal")]
    NormalApprox,
}

/// Result of one test on one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub pvalue: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_permutations: Option<usize>,
}

impl TestOutcome {
    pub fn new(statistic: f64, pvalue: f64, method: Method) -> Self {
        Self {
            statistic,
            pvalue: pvalue.clamp(0.0, 1.0),
            method,
            kernel: None,
            spectrum: None,
            n_permutations: None,
        }
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.pvalue <= level
    }
}

/// The law of `sum_i w_i U_i` with independent `U_i ~ chi^2_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedChiSquare {
    weights: Vec<f64>,
}

impl WeightedChiSquare {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows4() -> Vec<Vec<f64>> {
        vec![
            vec![1.0, 2.0],
            vec![3.0, 4.0],
            vec![5.0, 6.0],
            vec![7.0, 8.0],
        ]
    }

    #[test]
    fn builds_two_groups() {
        let s = validate_sample(&rows4(), &[0, 0, 1, 1]).unwrap();
        assert_eq!(s.k(), 2);
        assert_eq!(s.n(), 4);
        assert_eq!(s.p(), 2);
        assert_eq!(s.group_sizes(), &[2, 2]);
        assert_eq!(s.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn reindexes_sparse_labels() {
        let a = validate_sample(&rows4(), &[0, 0, 1, 1]).unwrap();
        let b = validate_sample(&rows4(), &[5, 5, 9, 9]).unwrap();
        assert_eq!(a, b);
        let c = validate_sample(&rows4(), &["tumor", "normal", "tumor", "normal"]).unwrap();
        assert_eq!(c.labels(), &[1, 0, 1, 0]);
    }

    #[test]
    fn rejects_nan() {
        let mut rows = rows4();
        rows[1][1] = f64::NAN;
        match validate_sample(&rows, &[0, 0, 1, 1]) {
            Err(Error::NonFiniteEntry { row: 1, col: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_small_and_single_groups() {
        assert!(matches!(
            validate_sample(&rows4(), &[0, 0, 0, 1]),
            Err(Error::GroupTooSmall(1))
        ));
        assert!(matches!(
            validate_sample(&rows4(), &[3, 3, 3, 3]),
            Err(Error::SingleGroup)
        ));
    }

    #[test]
    fn rejects_ragged_and_mismatched() {
        let mut rows = rows4();
        rows[2].push(1.0);
        assert!(matches!(
            validate_sample(&rows, &[0, 0, 1, 1]),
            Err(Error::RaggedMatrix { row: 2, .. })
        ));
        assert!(matches!(
            validate_sample(&rows4(), &[0, 0, 1]),
            Err(Error::LabelMismatch { .. })
        ));
    }

    #[test]
    fn spectrum_from_eigenvalues_clamps() {
        let s = SpectrumEstimate::from_eigenvalues(&[2.0, 1.0, -0.5]);
        assert_eq!(s.t1, 2.5);
        assert_eq!(s.t2, 5.25);
        assert_eq!(s.clamped, 1);
        assert_eq!(s.weights.unwrap(), vec![2.0, 1.0, 0.0]);
    }

    #[test]
    fn weighted_chi_square_validation() {
        assert!(WeightedChiSquare::new(vec![0.0, 0.0]).is_err());
        assert!(WeightedChiSquare::new(vec![1.0, -1.0]).is_err());
        let w = WeightedChiSquare::new(vec![3.0, 1.0]).unwrap();
        assert_eq!(w.mean(), 4.0);
        assert_eq!(w.variance(), 20.0);
    }
}
