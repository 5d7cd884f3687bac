use crate::model::{GroupedSample, KernelSpec};
use crate::statistic::kernel_group_sums;

/// Plug-in conditional means `g_{i,k}(z) = n_i^-1 sum_{j in i} h(Y_{i,j}, z)`
/// for every ordered group pair `(i, k)` and every `z` in group `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceVectors {
    p: usize,
    group_sizes: Vec<usize>,
    /// `members[k]` lists the sample rows of group `k`.
    members: Vec<Vec<usize>>,
    /// `g[i * K + k]` is a row-major `n_k x p` matrix.
    g: Vec<Vec<f64>>,
}

impl InfluenceVectors {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn members(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    /// The `n_k x p` matrix of `g_{i,k}(z)` over `z` in group `k`.
    pub fn block(&self, i: usize, k: usize) -> &[f64] {
        &self.g[i * self.k() + k]
    }

    /// `g_{i,k}` at the `m`-th member of group `k`.
    pub fn at(&self, i: usize, k: usize, m: usize) -> &[f64] {
        &self.block(i, k)[m * self.p..(m + 1) * self.p]
    }
}

/// Evaluate the plug-in influence vectors in `O(n^2 p)`.
pub fn influence_vectors(sample: &GroupedSample, spec: &KernelSpec) -> InfluenceVectors {
    let (p, k) = (sample.p(), sample.k());
    // sums[(z, i)] = sum_{j in i} h(z, Y_j) = -n_i g_{i, group(z)}(z)
    let sums = kernel_group_sums(sample, spec);
    let members: Vec<Vec<usize>> = (0..k).map(|g| sample.members(g)).collect();
    let mut g = Vec::with_capacity(k * k);
    for i in 0..k {
        let ni = sample.group_sizes()[i] as f64;
        for mem in &members {
            let mut block = Vec::with_capacity(mem.len() * p);
            for &z in mem {
                let src = &sums[(z * k + i) * p..(z * k + i + 1) * p];
                block.extend(src.iter().map(|v| -v / ni));
            }
            g.push(block);
        }
    }
    InfluenceVectors {
        p,
        group_sizes: sample.group_sizes().to_vec(),
        members,
        g,
    }
}
