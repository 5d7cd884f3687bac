//! The two antisymmetric kernels: the difference `x - y` and the spatial
//! sign `(x - y) / |x - y|`.

use crate::error::{Error, Result};
use crate::model::{KernelKind, KernelSpec};

/// Evaluate `h(x, y)` into a fresh vector.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let mut out = vec![0.0; x.len()];
    eval_kernel_into(spec, x, y, &mut out);
    Ok(out)
}

/// Evaluate `h(x, y)` into `out`. All three slices must have equal length.
///
/// Returns the scale applied to `x - y` (1 for the difference kernel, the
/// inverse norm for the spatial sign, 0 for coincident points).
#[inline]
pub fn eval_kernel_into(spec: &KernelSpec, x: &[f64], y: &[f64], out: &mut [f64]) -> f64 {
    debug_assert!(x.len() == y.len() && y.len() == out.len());
    let mut sq = 0.0;
    for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
        let d = a - b;
        *o = d;
        sq += d * d;
    }
    match spec.kind {
        KernelKind::Difference => 1.0,
        KernelKind::SpatialSign => {
            let norm = sq.sqrt();
            if norm <= coincidence_threshold(spec, x, y) {
                out.iter_mut().for_each(|o| *o = 0.0);
                0.0
            } else {
                let inv = 1.0 / norm;
                out.iter_mut().for_each(|o| *o *= inv);
                inv
            }
        }
    }
}

fn coincidence_threshold(spec: &KernelSpec, x: &[f64], y: &[f64]) -> f64 {
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    spec.coincidence_rel_tol * nx.max(ny).max(1.0)
}
