//! Asymptotic null distribution of `S`: plug-in spectrum estimation and
//! conversion of an observed statistic into a p-value.

mod imhof;
mod influence;
mod moments;
mod spectrum;

pub use imhof::{imhof_cdf, imhof_sf};
pub use influence::{influence_vectors, InfluenceVectors};
pub use moments::{pvalue_moment_matched, MomentOrder};
pub use spectrum::{
    empirical_c, estimate_trace_moments, explicit_covariance, explicit_spectrum, gram_matrix,
};

use crate::error::{Error, Result};
use crate::model::{GroupedSample, KernelSpec, Method, TestOutcome, WeightedChiSquare};
use crate::statistic::statistic;

/// Asymptotic p-value routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PValueMethod {
    Imhof,
    TwoMoment,
    #[default]
    ThreeMoment,
}

impl PValueMethod {
    pub fn method(self) -> Method {
        match self {
            PValueMethod::Imhof => Method::ImhofExact,
            PValueMethod::TwoMoment => Method::WelchSatterthwaite2M,
            PValueMethod::ThreeMoment => Method::HallBuckleyEagleson3M,
        }
    }
}

/// Compute `S`, estimate its null spectrum and return the asymptotic p-value.
pub fn run_test(sample: &GroupedSample, spec: &KernelSpec, method: PValueMethod) -> Result<TestOutcome> {
    let s = statistic(sample, spec);
    let iv = influence_vectors(sample, spec);
    let est = estimate_trace_moments(&iv)?;
    let pvalue = match method {
        PValueMethod::TwoMoment => pvalue_moment_matched(&est, s, MomentOrder::Two)?,
        PValueMethod::ThreeMoment => pvalue_moment_matched(&est, s, MomentOrder::Three)?,
        PValueMethod::Imhof => {
            let weights = est
                .weights
                .clone()
                .ok_or(Error::DegenerateSpectrum { t2: est.t2 })?;
            imhof_sf(&WeightedChiSquare::new(weights)?, s)?
        }
    };
    let mut out = TestOutcome::new(s, pvalue, method.method());
    out.kernel = Some(*spec);
    out.spectrum = Some(est);
    Ok(out)
}
