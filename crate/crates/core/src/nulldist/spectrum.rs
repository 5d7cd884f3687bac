//! Spectrum of the estimated `pK x pK` null covariance.
//!
//! The plug-in covariance is a weighted sum of centered rank-one terms, one
//! per observation: `Sigma = sum_z w_z u_z u_z^T` with `u_z` in `R^{pK}`. Its
//! nonzero eigenvalues coincide with those of the `n x n` Gram matrix
//! `G_ab = sqrt(w_a w_b) <u_a, u_b>`, so traces and eigenvalues come from `G`
//! without ever forming the `pK x pK` matrix. [`explicit_covariance`]
//! assembles the full matrix block by block from the empirical covariances
//! `C(i, j, k)` and serves as the cross-check for small `p`.

use nalgebra::DMatrix;

use super::influence::InfluenceVectors;
use crate::error::{Error, Result};
use crate::model::SpectrumEstimate;

/// Eigenvalues below this fraction of the largest are dropped from `weights`.
const NEGLIGIBLE_EIGENVALUE: f64 = 1e-13;

/// Trace moments and eigenvalues through the `n x n` Gram matrix.
pub fn estimate_trace_moments(iv: &InfluenceVectors) -> Result<SpectrumEstimate> {
    let gram = gram_matrix(iv);
    let t1 = gram.trace();
    let t2 = gram.component_mul(&gram).sum();
    let t3 = (&gram * &gram).component_mul(&gram).sum();
    if !(t2 > 0.0) || !t1.is_finite() || !t2.is_finite() {
        return Err(Error::DegenerateSpectrum { t2 });
    }
    let eigs = gram.symmetric_eigenvalues();
    let top = eigs.iter().cloned().fold(0.0f64, f64::max);
    let clamped = eigs
        .iter()
        .filter(|&&g| g < -NEGLIGIBLE_EIGENVALUE * top)
        .count();
    let mut weights: Vec<f64> = eigs
        .iter()
        .cloned()
        .filter(|&g| g > NEGLIGIBLE_EIGENVALUE * top)
        .collect();
    weights.sort_by(|a, b| b.total_cmp(a));
    Ok(SpectrumEstimate {
        t1,
        t2,
        t3: Some(t3),
        weights: Some(weights),
        clamped,
    })
}

/// `n x n` Gram matrix of the weighted, group-centered observation vectors.
pub fn gram_matrix(iv: &InfluenceVectors) -> DMatrix<f64> {
    let (p, k) = (iv.p(), iv.k());
    let sizes = iv.group_sizes();
    let n: usize = sizes.iter().sum();
    let nf = n as f64;
    let dim = p * k;
    let mut u = DMatrix::<f64>::zeros(n, dim);
    let mut row0 = 0;
    for g in 0..k {
        let ng = sizes[g];
        for m in 0..ng {
            let r = row0 + m;
            for blk in 0..k {
                let scale = (sizes[blk] as f64).sqrt() / nf;
                let own = iv.at(blk, g, m);
                for c in 0..p {
                    let mut a = own[c];
                    if blk == g {
                        // subtract sum_l (n_l / n_g) g_{l,g}(z)
                        for (l, &nl) in sizes.iter().enumerate() {
                            a -= nl as f64 / ng as f64 * iv.at(l, g, m)[c];
                        }
                    }
                    u[(r, blk * p + c)] = scale * a;
                }
            }
        }
        // center within the group and apply sqrt(n_g / (n_g - 1))
        let w = (ng as f64 / (ng as f64 - 1.0)).sqrt();
        for col in 0..dim {
            let mean = (row0..row0 + ng).map(|r| u[(r, col)]).sum::<f64>() / ng as f64;
            for r in row0..row0 + ng {
                u[(r, col)] = w * (u[(r, col)] - mean);
            }
        }
        row0 += ng;
    }
    &u * u.transpose()
}

/// Empirical covariance `C(i, j, k)` of `g_{i,k}(Z)` and `g_{j,k}(Z)` over
/// group `k`, with `1 / (n_k - 1)` normalisation.
pub fn empirical_c(iv: &InfluenceVectors, i: usize, j: usize, k: usize) -> DMatrix<f64> {
    let a = centered_block(iv, i, k);
    let b = centered_block(iv, j, k);
    a.transpose() * b / (iv.group_sizes()[k] as f64 - 1.0)
}

fn centered_block(iv: &InfluenceVectors, i: usize, k: usize) -> DMatrix<f64> {
    let (p, nk) = (iv.p(), iv.group_sizes()[k]);
    let mut m = DMatrix::from_row_slice(nk, p, iv.block(i, k));
    for c in 0..p {
        let mean = m.column(c).mean();
        m.column_mut(c).add_scalar_mut(-mean);
    }
    m
}

/// The full `pK x pK` matrix with blocks
/// `sigma_{k1,k2} = sqrt(l_k1 l_k2) sum_l l_l [C(k1,k2,l) - C(l,k2,k1) - C(k1,l,k2)]
///                 + 1{k1 = k2} sum_{l1,l2} l_l1 l_l2 C(l1,l2,k1)`
/// where `l_k = n_k / n`.
pub fn explicit_covariance(iv: &InfluenceVectors) -> DMatrix<f64> {
    let (p, k) = (iv.p(), iv.k());
    let n: usize = iv.group_sizes().iter().sum();
    let lambda: Vec<f64> = iv
        .group_sizes()
        .iter()
        .map(|&nk| nk as f64 / n as f64)
        .collect();
    let mut cache = vec![None; k * k * k];
    let mut c = |i: usize, j: usize, l: usize| -> DMatrix<f64> {
        cache[(i * k + j) * k + l]
            .get_or_insert_with(|| empirical_c(iv, i, j, l))
            .clone()
    };
    let mut sigma = DMatrix::<f64>::zeros(p * k, p * k);
    for k1 in 0..k {
        for k2 in 0..k {
            let mut block = DMatrix::<f64>::zeros(p, p);
            let outer = (lambda[k1] * lambda[k2]).sqrt();
            for l in 0..k {
                let term = c(k1, k2, l) - c(l, k2, k1) - c(k1, l, k2);
                block += term * (outer * lambda[l]);
            }
            if k1 == k2 {
                for l1 in 0..k {
                    for l2 in 0..k {
                        block += c(l1, l2, k1) * (lambda[l1] * lambda[l2]);
                    }
                }
            }
            sigma
                .view_mut((k1 * p, k2 * p), (p, p))
                .copy_from(&block);
        }
    }
    sigma
}

/// Eigen-decomposition of [`explicit_covariance`].
pub fn explicit_spectrum(iv: &InfluenceVectors) -> Result<SpectrumEstimate> {
    let sigma = explicit_covariance(iv);
    let sym = (&sigma + sigma.transpose()) * 0.5;
    let eigs: Vec<f64> = sym.symmetric_eigenvalues().iter().cloned().collect();
    let est = SpectrumEstimate::from_eigenvalues(&eigs);
    if !(est.t2 > 0.0) {
        return Err(Error::DegenerateSpectrum { t2: est.t2 });
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GroupedSample, KernelSpec};
    use crate::nulldist::influence_vectors;
    use crate::testutil::{random_sample, rel_diff};

    #[test]
    fn gram_and_explicit_routes_agree() {
        for (seed, sizes, p) in [
            (1u64, vec![5usize, 7], 3usize),
            (2, vec![6, 4, 5], 2),
            (3, vec![10, 12], 6),
            (4, vec![3, 3], 8),
        ] {
            let s = random_sample(seed, &sizes, p);
            for spec in [KernelSpec::difference(), KernelSpec::spatial_sign()] {
                let iv = influence_vectors(&s, &spec);
                let gram = estimate_trace_moments(&iv).unwrap();
                let full = explicit_spectrum(&iv).unwrap();
                assert!(rel_diff(gram.t1, full.t1) < 1e-8, "{} {}", gram.t1, full.t1);
                assert!(rel_diff(gram.t2, full.t2) < 1e-8);
                assert!(rel_diff(gram.t3.unwrap(), full.t3.unwrap()) < 1e-8);
                assert_eq!(full.clamped, 0);
            }
        }
    }

    #[test]
    fn weights_reproduce_moments() {
        let s = random_sample(8, &[9, 8], 5);
        let iv = influence_vectors(&s, &KernelSpec::spatial_sign());
        let est = estimate_trace_moments(&iv).unwrap();
        let w = est.weights.as_ref().unwrap();
        assert!(w.iter().all(|&g| g > 0.0));
        assert!(rel_diff(w.iter().sum(), est.t1) < 1e-10);
        assert!(rel_diff(w.iter().map(|g| g * g).sum(), est.t2) < 1e-10);
        assert!(rel_diff(w.iter().map(|g| g * g * g).sum(), est.t3.unwrap()) < 1e-10);
    }

    #[test]
    fn difference_kernel_two_groups_matches_pooled_form() {
        // For h(x, y) = x - y the null covariance of the two blocks reduces
        // to a p-dimensional matrix (n2 S1 + n1 S2) / n with S_k the sample
        // covariances, so its trace must match.
        let s = random_sample(21, &[8, 13], 4);
        let iv = influence_vectors(&s, &KernelSpec::difference());
        let est = estimate_trace_moments(&iv).unwrap();
        let cov = |g: usize| {
            let m = s.group_mean(g);
            let rows: Vec<usize> = s.members(g);
            let mut c = DMatrix::<f64>::zeros(4, 4);
            for &r in &rows {
                let d = nalgebra::DVector::from_iterator(
                    4,
                    s.row(r).iter().zip(&m).map(|(a, b)| a - b),
                );
                c += &d * d.transpose();
            }
            c / (rows.len() as f64 - 1.0)
        };
        let target = (cov(0) * 13.0 + cov(1) * 8.0) / 21.0;
        assert!(rel_diff(est.t1, target.trace()) < 1e-10);
        assert!(rel_diff(est.t2, target.component_mul(&target).sum()) < 1e-10);
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let s = GroupedSample::from_row_major(vec![2.0; 16], 2, &[0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        let iv = influence_vectors(&s, &KernelSpec::spatial_sign());
        assert!(matches!(
            estimate_trace_moments(&iv),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }
}
