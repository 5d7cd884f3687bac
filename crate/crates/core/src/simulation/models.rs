use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};

/// Base law of the observations: multivariate `t_nu` with the equicorrelated
/// scatter matrix (`nu = infinity` is the Gaussian).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Gaussian,
    StudentT4,
    Cauchy,
}

impl Model {
    pub fn dof(self) -> Option<f64> {
        match self {
            Model::Gaussian => None,
            Model::StudentT4 => Some(4.0),
            Model::Cauchy => Some(1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Gaussian => "gaussian",
            Model::StudentT4 => "t4",
            Model::Cauchy => "cauchy",
        }
    }

    /// Model number 1, 2 or 3.
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Model::Gaussian),
            2 => Ok(Model::StudentT4),
            3 => Ok(Model::Cauchy),
            _ => Err(Error::InvalidArgument(format!("unknown model {i}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelSpec {
    pub model: Model,
    pub p: usize,
}

impl ModelSpec {
    pub fn new(model: Model, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::EmptyDimension);
        }
        Ok(Self { model, p })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftDirection {
    /// `(1, 2, ..., p)` scaled to unit length.
    NormalizedRamp,
    /// `(1, 1)`, only for `p = 2`.
    Ones2D,
    /// `(0, 1)`, only for `p = 2`.
    E2_2D,
}

/// Group two is shifted by `delta * direction`; group one is centred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftSpec {
    pub delta: f64,
    pub direction: ShiftDirection,
}

impl ShiftSpec {
    pub fn vector(&self, p: usize) -> Result<Vec<f64>> {
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("delta = {}", self.delta)));
        }
        let dir = match self.direction {
            ShiftDirection::NormalizedRamp => {
                let norm = ((p * (p + 1) * (2 * p + 1)) as f64 / 6.0).sqrt();
                (1..=p).map(|i| i as f64 / norm).collect()
            }
            ShiftDirection::Ones2D | ShiftDirection::E2_2D if p != 2 => {
                return Err(Error::InvalidArgument(format!(
                    "{:?} shift needs p = 2, got {p}",
                    self.direction
                )))
            }
            ShiftDirection::Ones2D => vec![1.0, 1.0],
            ShiftDirection::E2_2D => vec![0.0, 1.0],
        };
        Ok(dir.into_iter().map(|v: f64| v * self.delta).collect())
    }
}

/// Coefficient `c` of the symmetric square root `sqrt(1/2) I + c J` of
/// `0.5 I + 0.5 J`.
fn equicorr_coefficient(p: usize) -> f64 {
    let pf = p as f64;
    (((pf + 1.0) / 2.0).sqrt() - 0.5f64.sqrt()) / pf
}

/// Symmetric factor `F` with `F F^T = 0.5 I + 0.5 J`.
pub fn equicorr_factor(p: usize) -> DMatrix<f64> {
    let c = equicorr_coefficient(p);
    DMatrix::from_fn(p, p, |i, j| if i == j { 0.5f64.sqrt() + c } else { c })
}

/// Multiply `z` in place by [`equicorr_factor`] in `O(p)`.
pub fn apply_equicorr(z: &mut [f64]) {
    let c = equicorr_coefficient(z.len());
    let s: f64 = z.iter().sum::<f64>() * c;
    let a = 0.5f64.sqrt();
    z.iter_mut().for_each(|v| *v = a * *v + s);
}

/// ChaCha stream for (seed, replicate, group).
pub fn replicate_rng(seed: u64, replicate: u64, group: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replicate << 8) | (group & 0xff));
    rng
}

/// Draw `n` observations, row-major, of `shift + F z / sqrt(w / nu)`.
pub fn sample_group<R: Rng + ?Sized>(spec: &ModelSpec, shift: &[f64], n: usize, rng: &mut R) -> Vec<f64> {
    let p = spec.p;
    debug_assert_eq!(shift.len(), p);
    let mixing = spec.model.dof().map(|nu| (nu, ChiSquared::new(nu).expect("positive dof")));
    let mut out = Vec::with_capacity(n * p);
    let mut z = vec![0.0; p];
    for _ in 0..n {
        z.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
        apply_equicorr(&mut z);
        let scale = match &mixing {
            Some((nu, chi)) => 1.0 / (chi.sample(rng) / nu).sqrt(),
            None => 1.0,
        };
        out.extend(z.iter().zip(shift).map(|(v, b)| v * scale + b));
    }
    out
}
