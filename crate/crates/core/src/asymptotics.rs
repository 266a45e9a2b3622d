//! Laplace-method estimates, the closed-form asymptotes for `J_2`, and
//! diagnostics for the correction term.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ball::{ln_factorial, ln_kernel_constant, weight_constant};
use crate::error::{Error, Result};
use crate::geodesic::geodesic_length;
use crate::series::j2_integral;

/// `int g(x) f(x)^N dx` over a bracket holding one interior maximum of `f`.
pub struct LaplaceProblem<'a> {
    pub f: &'a dyn Fn(f64) -> f64,
    pub df: &'a dyn Fn(f64) -> f64,
    pub d2f: &'a dyn Fn(f64) -> f64,
    pub g: &'a dyn Fn(f64) -> f64,
    pub exponent: f64,
    pub bracket: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    pub x0: f64,
    pub f0: f64,
    pub d2f0: f64,
    pub value: f64,
    /// `ln |value|`.
    pub ln_value: f64,
}

/// Root of `f'` in the bracket: Newton steps, falling back to bisection
/// whenever a step leaves the current sign-change interval.
fn critical_point(p: &LaplaceProblem<'_>) -> Result<f64> {
    let (mut lo, mut hi) = p.bracket;
    let (dlo, dhi) = ((p.df)(lo), (p.df)(hi));
    if !(lo < hi) || !(dlo > 0.0 && dhi < 0.0) {
        return Err(Error::NoCriticalPoint { lo, hi });
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let d = (p.df)(x);
        if d.abs() <= 1e-12 {
            return Ok(x);
        }
        if d > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dd = (p.d2f)(x);
        let newton = x - d / dd;
        x = if dd < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Leading Laplace term `g(x0) f(x0)^{N+1/2} (-2 pi / (N f''(x0)))^{1/2}`.
pub fn laplace_estimate(p: &LaplaceProblem<'_>) -> Result<LaplaceEstimate> {
    let x0 = critical_point(p)?;
    let f0 = (p.f)(x0);
    let d2f0 = (p.d2f)(x0);
    if !(d2f0 < 0.0) {
        return Err(Error::NotMaximum { x0, second: d2f0 });
    }
    if !(f0 > 0.0) {
        return Err(Error::InvalidParameter(format!("f must be positive at the peak (f = {f0})")));
    }
    let g0 = (p.g)(x0);
    let n = p.exponent;
    let ln_value = g0.abs().ln() + (n + 0.5) * f0.ln() + 0.5 * (-2.0 * PI / (n * d2f0)).ln();
    Ok(LaplaceEstimate {
        x0,
        f0,
        d2f0,
        value: g0.signum() * ln_value.exp(),
        ln_value,
    })
}

/// Peak factor `f(x) = sqrt(1-x^2)/(1-xu)` of the inner integral and its
/// first two derivatives.
pub fn peak_factor(u: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let f = move |x: f64| (1.0 - x * x).sqrt() / (1.0 - x * u);
    // f'/f = -x/(1-x^2) + u/(1-xu)
    let df = move |x: f64| {
        let s = 1.0 - x * x;
        let t = 1.0 - x * u;
        (u - x) / (s.sqrt() * t * t)
    };
    let d2f = move |x: f64| {
        // d/dx of (u - x) s^{-1/2} t^{-2}
        let s = 1.0 - x * x;
        let t = 1.0 - x * u;
        let a = u - x;
        -s.powf(-0.5) / (t * t) + a * x * s.powf(-1.5) / (t * t) + 2.0 * a * u * s.powf(-0.5) / (t * t * t)
    };
    (f, df, d2f)
}

fn check_nk(n: usize, k: u32) -> Result<f64> {
    let big = ((n + 1) as f64) * k as f64;
    if n == 0 || k == 0 || !(big > 2.0) {
        return Err(Error::InvalidParameter(format!("need n >= 1 and (n+1)k > 2 (got n={n}, k={k})")));
    }
    Ok(big)
}

/// `ln( sqrt(2 pi / ((n+1)k - 2)) (1-u^2)^{-(n+1)k/2} )`.
pub fn ln_inner_integral_asymptote(n: usize, k: u32, u: f64) -> Result<f64> {
    let big = check_nk(n, k)?;
    if !(u.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("need |u| < 1 (got {u})")));
    }
    Ok(0.5 * (2.0 * PI / (big - 2.0)).ln() - 0.5 * big * (-u * u).ln_1p())
}

pub fn inner_integral_asymptote(n: usize, k: u32, u: f64) -> Result<f64> {
    Ok(ln_inner_integral_asymptote(n, k, u)?.exp())
}

/// `ln` of `c(n,k) (n!/pi^n)^{2/(n+1)} sqrt(2 pi / ((n+1)k-2)) ln|lambda|`.
pub fn ln_j2_asymptote(n: usize, k: u32, lambda: f64) -> Result<f64> {
    let big = check_nk(n, k)?;
    geodesic_length(lambda)?;
    Ok(weight_constant(n, k)?.ln_value
        + 2.0 * ln_kernel_constant(n) / (n as f64 + 1.0)
        + 0.5 * (2.0 * PI / (big - 2.0)).ln()
        + lambda.abs().ln().ln())
}

pub fn j2_asymptote(n: usize, k: u32, lambda: f64) -> Result<f64> {
    Ok(ln_j2_asymptote(n, k, lambda)?.exp())
}

/// `ln` of `k^{n-1/2} (n+1)^{n-1/2} / (pi^{(3n-1)/(2n+2)} (n!)^{(n-1)/(n+1)}) l / sqrt 2`.
pub fn ln_theorem_constant(n: usize, k: u32, length: f64) -> Result<f64> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!("need n >= 1 and k >= 1 (got n={n}, k={k})")));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidParameter(format!("length must be positive (got {length})")));
    }
    let nf = n as f64;
    Ok((nf - 0.5) * ((k as f64).ln() + (nf + 1.0).ln())
        - (3.0 * nf - 1.0) / (2.0 * nf + 2.0) * PI.ln()
        - (nf - 1.0) / (nf + 1.0) * ln_factorial(n)
        + length.ln()
        - 0.5 * 2f64.ln())
}

pub fn theorem_constant(n: usize, k: u32, length: f64) -> Result<f64> {
    Ok(ln_theorem_constant(n, k, length)?.exp())
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Fit("need at least two paired samples".into()));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// One row of a sweep over `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: u32,
    pub lambda: f64,
    pub j2: f64,
    pub asymptote: f64,
    pub theorem_value: f64,
    /// `j2 / theorem_value`.
    pub ratio: f64,
    /// `j2 - asymptote`.
    pub residual: f64,
}

impl SweepRow {
    /// The fields as `(k, j2, asymptote)` for [`correction_exponent_fit`].
    pub fn sample(&self) -> (u32, f64, f64) {
        (self.k, self.j2, self.asymptote)
    }
}

pub fn sweep_row(n: usize, k: u32, lambda: f64, quad_points: usize) -> Result<SweepRow> {
    let j2 = j2_integral(n, k, lambda, quad_points)?;
    let ln_asym = ln_j2_asymptote(n, k, lambda)?;
    let ln_theorem = ln_theorem_constant(n, k, geodesic_length(lambda)?)?;
    let asymptote = ln_asym.exp();
    // residual from the log difference so it keeps its digits
    let residual = asymptote * (j2.ln_value - ln_asym).exp_m1();
    Ok(SweepRow {
        n,
        k,
        lambda,
        j2: j2.value,
        asymptote,
        theorem_value: ln_theorem.exp(),
        ratio: (j2.ln_value - ln_theorem).exp(),
        residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionFit {
    /// Fitted exponent of `|j2 - asymptote|` in `k`.
    pub exponent: f64,
    pub intercept: f64,
    pub samples: usize,
}

/// Least-squares slope of `ln |j2 - asymptote|` against `ln k`.
pub fn correction_exponent_fit(samples: &[(u32, f64, f64)]) -> Result<CorrectionFit> {
    if samples.len() < 6 {
        return Err(Error::Fit(format!("need at least 6 samples (got {})", samples.len())));
    }
    let kmin = samples.iter().map(|s| s.0).min().unwrap_or(0) as f64;
    let kmax = samples.iter().map(|s| s.0).max().unwrap_or(0) as f64;
    if !(kmax >= 4.0 * kmin) || kmin <= 0.0 {
        return Err(Error::Fit(format!("k must span a factor of 4 (got {kmin}..{kmax})")));
    }
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for &(k, value, asym) in samples {
        let residual = (value - asym).abs();
        if !(residual > 1e-13 * value.abs()) {
            return Err(Error::Fit(format!(
                "residual at k={k} is below the noise floor; increase k range or precision"
            )));
        }
        xs.push((k as f64).ln());
        ys.push(residual.ln());
    }
    let (exponent, intercept) = least_squares(&xs, &ys)?;
    Ok(CorrectionFit {
        exponent,
        intercept,
        samples: samples.len(),
    })
}
