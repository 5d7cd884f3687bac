//! Permutation calibration of `S`.
//!
//! `S` only depends on the labels through group sums of the label-free row
//! sums `r_i = sum_j h(Y_i, Y_j)`:
//! `S = sum_k |sum_{i in k} r_i|^2 / (n^2 n_k)`, so each relabelling costs
//! `O(np)` once the `r_i` are known.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{GroupedSample, KernelSpec, Method, TestOutcome};
use crate::statistic::kernel_row_sums;

/// Smallest number of random relabellings accepted.
pub const MIN_PERMUTATIONS: usize = 99;

/// Enumerate all relabellings when there are at most this many.
pub const EXHAUSTIVE_LIMIT: f64 = 1e5;

const TIE_REL_TOL: f64 = 1e-12;

/// Permutation p-value of `S`.
///
/// When the number of distinct label assignments is at most
/// [`EXHAUSTIVE_LIMIT`] they are all enumerated and the exact p-value is
/// returned. Otherwise `b` relabellings are drawn, the `i`-th from its own
/// ChaCha stream keyed by `(seed, i)`, and `p = (1 + #{S_b >= S}) / (b + 1)`.
pub fn permutation_pvalue(
    sample: &GroupedSample,
    spec: &KernelSpec,
    b: usize,
    seed: u64,
) -> Result<TestOutcome> {
    if b < MIN_PERMUTATIONS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_PERMUTATIONS} permutations, got {b}"
        )));
    }
    let eval = Evaluator::new(sample, spec);
    let s_obs = eval.statistic(sample.labels());
    let threshold = s_obs - TIE_REL_TOL * s_obs.abs().max(f64::MIN_POSITIVE);

    let (pvalue, count) = if multinomial(sample.group_sizes()) <= EXHAUSTIVE_LIMIT {
        let all = enumerate_labelings(sample.group_sizes());
        let hits = all
            .par_iter()
            .filter(|labels| eval.statistic(labels) >= threshold)
            .count();
        (hits as f64 / all.len() as f64, all.len())
    } else {
        let hits = (0..b as u64)
            .into_par_iter()
            .filter(|&i| {
                let mut rng = permutation_rng(seed, i);
                let mut labels = sample.labels().to_vec();
                labels.shuffle(&mut rng);
                eval.statistic(&labels) >= threshold
            })
            .count();
        ((1 + hits) as f64 / (b + 1) as f64, b)
    };
    let mut out = TestOutcome::new(s_obs, pvalue, Method::Permutation);
    out.kernel = Some(*spec);
    out.n_permutations = Some(count);
    Ok(out)
}

/// Independent stream for relabelling `i` under `seed`.
pub fn permutation_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

struct Evaluator {
    row_sums: Vec<f64>,
    n: usize,
    p: usize,
    k: usize,
}

impl Evaluator {
    fn new(sample: &GroupedSample, spec: &KernelSpec) -> Self {
        Self {
            row_sums: kernel_row_sums(sample, spec),
            n: sample.n(),
            p: sample.p(),
            k: sample.k(),
        }
    }

    fn statistic(&self, labels: &[usize]) -> f64 {
        let mut sums = vec![0.0; self.k * self.p];
        let mut sizes = vec![0usize; self.k];
        for (i, &g) in labels.iter().enumerate() {
            sizes[g] += 1;
            let src = &self.row_sums[i * self.p..(i + 1) * self.p];
            for (acc, v) in sums[g * self.p..(g + 1) * self.p].iter_mut().zip(src) {
                *acc += v;
            }
        }
        let n2 = (self.n * self.n) as f64;
        sums.chunks(self.p)
            .zip(&sizes)
            .map(|(s, &nk)| s.iter().map(|v| v * v).sum::<f64>() / (n2 * nk as f64))
            .sum()
    }
}

/// `n! / prod n_k!` in floating point.
pub fn multinomial(sizes: &[usize]) -> f64 {
    let mut total = 0usize;
    let mut log = 0.0;
    for &nk in sizes {
        for j in 1..=nk {
            total += 1;
            log += (total as f64).ln() - (j as f64).ln();
        }
    }
    log.exp().round()
}

/// All distinct label vectors with the given group sizes, in lexicographic order.
pub fn enumerate_labelings(sizes: &[usize]) -> Vec<Vec<usize>> {
    fn rec(pos: usize, left: &mut [usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for g in 0..left.len() {
            if left[g] > 0 {
                left[g] -= 1;
                cur[pos] = g;
                rec(pos + 1, left, cur, out);
                left[g] += 1;
            }
        }
    }
    let n = sizes.iter().sum();
    let mut out = Vec::new();
    rec(0, &mut sizes.to_vec(), &mut vec![0; n], &mut out);
    out
}
