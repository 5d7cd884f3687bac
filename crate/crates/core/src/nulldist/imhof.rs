//! Distribution function of `Q = sum_i w_i U_i`, `U_i ~ chi^2_1`, by
//! numerical inversion of the characteristic function:
//!
//! ```text
//! P(Q > x) = 1/2 + (1/pi) * int_0^inf sin(theta(u)) / (u rho(u)) du
//! theta(u) = 1/2 sum_i atan(w_i u) - x u / 2
//! rho(u)   = prod_i (1 + w_i^2 u^2)^(1/4)
//! ```
//!
//! The weights are rescaled so the largest is one. The half-line is cut into
//! panels of half the asymptotic oscillation period `2 pi / x`; panels that
//! reach into `u < 1` are further split at powers of two. Each piece is
//! integrated with adaptive Gauss-Kronrod (7/15). Summation stops once the
//! envelope `1 / (u rho(u))` bounds the remaining tail below tolerance, or
//! once Wynn's epsilon extrapolation of the panel partial sums has settled.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::WeightedChiSquare;

const TOL: f64 = 1e-11;
const MAX_PANELS: usize = 20_000;
const MIN_PANELS_FOR_EXTRAPOLATION: usize = 8;
const WYNN_WINDOW: usize = 40;

/// `P(Q <= x)`, clamped to `[0, 1]`.
pub fn imhof_cdf(law: &WeightedChiSquare, x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidArgument("x is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() || upper_tail_negligible(law.weights(), x) {
        return Ok(1.0);
    }
    let integral = inversion_integral(law.weights(), x)?;
    Ok((0.5 - integral / PI).clamp(0.0, 1.0))
}

/// `P(Q > x)`, clamped to `[0, 1]`.
pub fn imhof_sf(law: &WeightedChiSquare, x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidArgument("x is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() || upper_tail_negligible(law.weights(), x) {
        return Ok(0.0);
    }
    let integral = inversion_integral(law.weights(), x)?;
    Ok((0.5 + integral / PI).clamp(0.0, 1.0))
}

/// `P(Q > x) < e^-45` by the Laurent-Massart inequality
/// `P(Q - t1 >= 2 sqrt(t2 u) + 2 max(w) u) <= e^-u`.
fn upper_tail_negligible(weights: &[f64], x: f64) -> bool {
    let top = weights.iter().cloned().fold(0.0f64, f64::max);
    let t1: f64 = weights.iter().sum::<f64>() / top;
    let t2: f64 = weights.iter().map(|w| (w / top) * (w / top)).sum();
    let y = x / top - t1;
    if y <= 0.0 {
        return false;
    }
    let root_u = 0.5 * ((t2 + 2.0 * y).sqrt() - t2.sqrt());
    root_u * root_u > 45.0
}

struct Integrand {
    weights: Vec<f64>,
    x: f64,
}

impl Integrand {
    fn new(weights: &[f64], x: f64) -> Self {
        let top = weights.iter().cloned().fold(0.0f64, f64::max);
        Self {
            weights: weights
                .iter()
                .filter(|&&w| w > 0.0)
                .map(|w| w / top)
                .collect(),
            x: x / top,
        }
    }

    fn eval(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.5 * (self.weights.iter().sum::<f64>() - self.x);
        }
        let mut theta = -0.5 * self.x * u;
        let mut log_rho = 0.0;
        for &w in &self.weights {
            let wu = w * u;
            theta += 0.5 * wu.atan();
            log_rho += 0.25 * (wu * wu).ln_1p();
        }
        theta.sin() / (u * log_rho.exp())
    }

    /// Bound on `|int_u^inf f|` for `u >= 1`. With the largest weight equal
    /// to one, `rho(t) >= 2^{-1/4} rho(u) (t/u)^{1/2}` for `t >= u`, which
    /// gives `2^{5/4} / rho(u)`.
    fn tail_bound(&self, u: f64) -> f64 {
        let log_rho: f64 = self
            .weights
            .iter()
            .map(|&w| 0.25 * ((w * u) * (w * u)).ln_1p())
            .sum();
        2.0f64.powf(1.25) / log_rho.exp()
    }
}

fn inversion_integral(weights: &[f64], x: f64) -> Result<f64> {
    let f = Integrand::new(weights, x);
    let width = 2.0 * PI / f.x;
    let mut partial = Vec::new();
    let mut total = 0.0;
    let mut last_estimates: [f64; 2] = [f64::NAN, f64::NAN];
    for j in 0..MAX_PANELS {
        let (a, b) = (j as f64 * width, (j + 1) as f64 * width);
        total += integrate_panel(&f, a, b)?;
        partial.push(total);
        if b >= 1.0 && f.tail_bound(b) < TOL {
            return Ok(total);
        }
        if partial.len() >= MIN_PANELS_FOR_EXTRAPOLATION && b >= 1.0 {
            let window = &partial[partial.len().saturating_sub(WYNN_WINDOW)..];
            let est = wynn_epsilon(window);
            if (est - last_estimates[1]).abs() < TOL && (est - last_estimates[0]).abs() < TOL {
                return Ok(est);
            }
            last_estimates = [last_estimates[1], est];
        }
    }
    Err(Error::QuadratureFailure { x })
}

/// Integrate `[a, b]`, splitting at powers of two below `u = 1` and above
/// it up to `b` so that every piece sees features at its own scale.
fn integrate_panel(f: &Integrand, a: f64, b: f64) -> Result<f64> {
    let mut cuts = vec![a];
    let mut c = 1.0 / 1024.0;
    while c < b {
        if c > a {
            cuts.push(c);
        }
        c *= 2.0;
    }
    cuts.push(b);
    let mut sum = 0.0;
    for w in cuts.windows(2) {
        sum += adaptive_gk(f, w[0], w[1], TOL * 1e-2, 0)?;
    }
    Ok(sum)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &Integrand, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f.eval(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f.eval(center - dx) + f.eval(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

fn adaptive_gk(f: &Integrand, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
    let (value, err) = gk15(f, a, b);
    if !value.is_finite() {
        return Err(Error::QuadratureFailure { x: f.x });
    }
    if err <= tol || depth >= 40 {
        return Ok(value);
    }
    let mid = 0.5 * (a + b);
    Ok(adaptive_gk(f, a, mid, 0.5 * tol, depth + 1)? + adaptive_gk(f, mid, b, 0.5 * tol, depth + 1)?)
}

/// Wynn's epsilon algorithm; returns the last even-column entry.
fn wynn_epsilon(seq: &[f64]) -> f64 {
    let n = seq.len();
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = seq.to_vec();
    let mut best = *seq.last().unwrap();
    for col in 1..n {
        let mut next = Vec::with_capacity(n - col);
        for i in 0..(n - col) {
            let diff = cur[i + 1] - cur[i];
            if diff == 0.0 {
                // converged; `cur` holds an estimate column when col - 1 is even
                return if col % 2 == 1 { cur[i + 1] } else { best };
            }
            next.push(prev[i + 1] + 1.0 / diff);
        }
        prev = cur;
        cur = next;
        if col % 2 == 0 {
            let candidate = *cur.last().unwrap();
            if candidate.is_finite() {
                best = candidate;
            } else {
                break;
            }
        }
    }
    best
}
