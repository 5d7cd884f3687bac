//! The per-group kernel aggregates `Rbar_k` and the statistic
//! `S = sum_k n_k |Rbar_k|^2`.
//!
//! `R(y) = n^-1 sum_j h(y, Y_j)` runs over all observations, and
//! `Rbar_k` averages `R` over group `k`. Two routes are provided: an explicit
//! double loop over all ordered pairs, and a fast route that uses the closed
//! form `Rbar_k = mean_k - grand_mean` for the difference kernel and a single
//! pass over unordered pairs for the spatial sign.

use crate::kernels::eval_kernel_into;
use crate::model::{GroupedSample, KernelKind, KernelSpec};

/// `Rbar_k` for every group, one row per group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAggregates {
    pub rbar: Vec<Vec<f64>>,
    pub n_k: Vec<usize>,
}

impl GroupAggregates {
    /// `sum_k n_k Rbar_k`, which vanishes for any antisymmetric kernel.
    pub fn weighted_sum(&self) -> Vec<f64> {
        let p = self.rbar.first().map_or(0, Vec::len);
        let mut out = vec![0.0; p];
        for (row, &nk) in self.rbar.iter().zip(&self.n_k) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += nk as f64 * v;
            }
        }
        out
    }
}

/// Explicit double loop over all `n^2` ordered pairs.
pub fn group_aggregates_bruteforce(sample: &GroupedSample, spec: &KernelSpec) -> GroupAggregates {
    let (n, p, k) = (sample.n(), sample.p(), sample.k());
    let mut rbar = vec![vec![0.0; p]; k];
    let mut h = vec![0.0; p];
    for i in 0..n {
        let g = sample.labels()[i];
        let mut r = vec![0.0; p];
        for j in 0..n {
            eval_kernel_into(spec, sample.row(i), sample.row(j), &mut h);
            for (a, b) in r.iter_mut().zip(&h) {
                *a += b;
            }
        }
        for (acc, v) in rbar[g].iter_mut().zip(&r) {
            *acc += v / n as f64;
        }
    }
    for (row, &nk) in rbar.iter_mut().zip(sample.group_sizes()) {
        row.iter_mut().for_each(|v| *v /= nk as f64);
    }
    GroupAggregates {
        rbar,
        n_k: sample.group_sizes().to_vec(),
    }
}

/// Closed form for the difference kernel, one pass over unordered pairs
/// for the spatial sign.
pub fn group_aggregates_fast(sample: &GroupedSample, spec: &KernelSpec) -> GroupAggregates {
    let (n, p, k) = (sample.n(), sample.p(), sample.k());
    let rbar = match spec.kind {
        KernelKind::Difference => {
            let grand = sample.grand_mean();
            (0..k)
                .map(|g| {
                    sample
                        .group_mean(g)
                        .iter()
                        .zip(&grand)
                        .map(|(m, c)| m - c)
                        .collect()
                })
                .collect()
        }
        KernelKind::SpatialSign => {
            let sums = kernel_row_sums(sample, spec);
            let mut rbar = vec![vec![0.0; p]; k];
            for (i, r) in sums.chunks_exact(p).enumerate() {
                let g = sample.labels()[i];
                for (acc, v) in rbar[g].iter_mut().zip(r) {
                    *acc += v;
                }
            }
            for (row, &nk) in rbar.iter_mut().zip(sample.group_sizes()) {
                let scale = 1.0 / (n as f64 * nk as f64);
                row.iter_mut().for_each(|v| *v *= scale);
            }
            rbar
        }
    };
    GroupAggregates {
        rbar,
        n_k: sample.group_sizes().to_vec(),
    }
}

/// `S = sum_k n_k |Rbar_k|^2`.
pub fn statistic_s(aggregates: &GroupAggregates) -> f64 {
    aggregates
        .rbar
        .iter()
        .zip(&aggregates.n_k)
        .map(|(row, &nk)| nk as f64 * row.iter().map(|v| v * v).sum::<f64>())
        .sum()
}

/// `S` for a sample through the fast route.
pub fn statistic(sample: &GroupedSample, spec: &KernelSpec) -> f64 {
    statistic_s(&group_aggregates_fast(sample, spec))
}

/// Row-major `n x p` matrix of `sum_j h(Y_i, Y_j)` over all observations.
/// These do not depend on the labels.
pub fn kernel_row_sums(sample: &GroupedSample, spec: &KernelSpec) -> Vec<f64> {
    match spec.kind {
        KernelKind::Difference => {
            let grand = sample.grand_mean();
            let n = sample.n() as f64;
            sample
                .rows()
                .flat_map(|row| row.iter().zip(&grand).map(move |(x, m)| n * (x - m)))
                .collect()
        }
        KernelKind::SpatialSign => {
            let slots = vec![0usize; sample.n()];
            pairwise_slot_sums(sample, spec, &slots, 1)
        }
    }
}

/// Row-major `n x K x p` tensor: entry `(i, g)` is `sum_{j in g} h(Y_i, Y_j)`.
pub fn kernel_group_sums(sample: &GroupedSample, spec: &KernelSpec) -> Vec<f64> {
    let (n, p, k) = (sample.n(), sample.p(), sample.k());
    match spec.kind {
        KernelKind::Difference => {
            let means: Vec<Vec<f64>> = (0..k).map(|g| sample.group_mean(g)).collect();
            let mut out = vec![0.0; n * k * p];
            for i in 0..n {
                let x = sample.row(i);
                for g in 0..k {
                    let ng = sample.group_sizes()[g] as f64;
                    let dst = &mut out[(i * k + g) * p..(i * k + g + 1) * p];
                    for ((d, xv), m) in dst.iter_mut().zip(x).zip(&means[g]) {
                        *d = ng * (xv - m);
                    }
                }
            }
            out
        }
        KernelKind::SpatialSign => pairwise_slot_sums(sample, spec, sample.labels(), k),
    }
}

/// For each observation `i` and slot `s`, accumulates `h(Y_i, Y_j)` over the
/// observations `j` assigned to slot `s`. Each unordered pair is evaluated
/// once and added with opposite signs to its two endpoints, with Neumaier
/// compensation on every accumulator.
fn pairwise_slot_sums(
    sample: &GroupedSample,
    spec: &KernelSpec,
    slots: &[usize],
    n_slots: usize,
) -> Vec<f64> {
    let (n, p) = (sample.n(), sample.p());
    let width = n_slots * p;
    let mut sum = vec![0.0; n * width];
    let mut comp = vec![0.0; n * width];
    let mut h = vec![0.0; p];
    for i in 0..n {
        let xi = sample.row(i);
        for j in (i + 1)..n {
            if eval_kernel_into(spec, xi, sample.row(j), &mut h) == 0.0 {
                continue;
            }
            let a = i * width + slots[j] * p;
            let b = j * width + slots[i] * p;
            for (c, &v) in h.iter().enumerate() {
                neumaier_add(&mut sum[a + c], &mut comp[a + c], v);
                neumaier_add(&mut sum[b + c], &mut comp[b + c], -v);
            }
        }
    }
    sum.iter_mut().zip(&comp).for_each(|(s, c)| *s += c);
    sum
}

#[inline]
fn neumaier_add(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}
