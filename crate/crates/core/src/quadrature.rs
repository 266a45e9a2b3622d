//! Gauss-Legendre panels with globally adaptive bisection.
//!
//! Every panel carries its coarse estimate (one rule on the panel) and its
//! fine estimate (the rule on both halves); the difference is the panel's
//! error. The panel with the largest error is split until the summed error is
//! below `max(rel_tol * |I|, abs_tol)`. In log-space mode the integrand
//! returns `ln f` (with `f > 0`) and all panel arithmetic is done with
//! log-sum-exp, so integrands like `(1-x^2)^{1000}` never overflow.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logc::{log_sum_exp, neumaier_sum};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(order: usize) -> Self {
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Cached rule of the given order (order >= 1).
    pub fn rule(order: usize) -> Arc<GaussLegendre> {
        assert!(order >= 1);
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(order)
            .or_insert_with(|| Arc::new(Self::compute(order)))
            .clone()
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        neumaier_sum(self.mapped(a, b).map(|(x, w)| w * f(x)))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Panels {
    /// Start from this many equal panels per segment, then adapt.
    Initial(usize),
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub order: usize,
    pub panels: Panels,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub log_space: bool,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            order: 16,
            panels: Panels::Adaptive,
            rel_tol: 1e-12,
            abs_tol: 0.0,
            log_space: false,
            max_panels: 4096,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn log_space(mut self) -> Self {
        self.log_space = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=64).contains(&self.order) {
            return Err(Error::InvalidParameter(format!(
                "quadrature order {} outside [2, 64]",
                self.order
            )));
        }
        if !(self.rel_tol >= 1e-14) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol {} below 1e-14",
                self.rel_tol
            )));
        }
        if let Panels::Initial(0) = self.panels {
            return Err(Error::InvalidParameter("zero initial panels".into()));
        }
        Ok(())
    }

    fn initial_split(&self) -> usize {
        match self.panels {
            Panels::Initial(p) => p,
            Panels::Adaptive => 1,
        }
    }
}

/// Result of an integration. In log-space mode `value` may overflow to
/// infinity while `log_value` stays exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    /// `ln |value|`.
    pub log_value: f64,
    pub panels: usize,
}

impl Integral {
    fn linear(value: f64, error_estimate: f64, panels: usize) -> Self {
        Self {
            value,
            error_estimate,
            log_value: value.abs().ln(),
            panels,
        }
    }

    fn from_log(log_value: f64, log_error: f64, panels: usize) -> Self {
        Self {
            value: log_value.exp(),
            error_estimate: log_error.exp(),
            log_value,
            panels,
        }
    }

    /// Error estimate relative to the value.
    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            return self.error_estimate;
        }
        (self.error_estimate.ln() - self.log_value).exp()
    }
}

struct Panel {
    a: f64,
    b: f64,
    coarse: f64,
    left: f64,
    right: f64,
}

fn segments(breaks: &[f64], split: usize) -> Result<Vec<(f64, f64)>> {
    if breaks.len() < 2 {
        return Err(Error::InvalidParameter("need at least two breakpoints".into()));
    }
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "integration bounds must satisfy a < b (got {a}, {b})"
            )));
        }
        for i in 0..split {
            let lo = a + (b - a) * i as f64 / split as f64;
            let hi = if i + 1 == split {
                b
            } else {
                a + (b - a) * (i + 1) as f64 / split as f64
            };
            out.push((lo, hi));
        }
    }
    Ok(out)
}

/// Shared adaptive driver. `eval(a, b)` returns the panel estimate (a plain
/// value, or a log-value in log mode).
fn adaptive<E>(segs: Vec<(f64, f64)>, eval: E, spec: &QuadratureSpec) -> Result<Integral>
where
    E: Fn(f64, f64) -> Result<f64>,
{
    let log_mode = spec.log_space;
    let make = |a: f64, b: f64, coarse: f64| -> Result<Panel> {
        let m = 0.5 * (a + b);
        Ok(Panel {
            a,
            b,
            coarse,
            left: eval(a, m)?,
            right: eval(m, b)?,
        })
    };
    let fine = |p: &Panel| {
        if log_mode {
            log_sum_exp(&[p.left, p.right])
        } else {
            p.left + p.right
        }
    };
    let err = |p: &Panel| {
        let f = fine(p);
        if log_mode {
            if f == f64::NEG_INFINITY {
                p.coarse
            } else {
                f + (p.coarse - f).exp_m1().abs().ln()
            }
        } else {
            (p.coarse - f).abs()
        }
    };

    let mut panels = Vec::with_capacity(segs.len());
    for (a, b) in segs {
        let coarse = eval(a, b)?;
        panels.push(make(a, b, coarse)?);
    }

    loop {
        let fines: Vec<f64> = panels.iter().map(fine).collect();
        let errs: Vec<f64> = panels.iter().map(err).collect();
        let result = if log_mode {
            Integral::from_log(log_sum_exp(&fines), log_sum_exp(&errs), panels.len())
        } else {
            Integral::linear(neumaier_sum(fines), neumaier_sum(errs.iter().copied()), panels.len())
        };
        let target = (spec.rel_tol * result.value.abs()).max(spec.abs_tol);
        let done = if log_mode {
            result.log_value == f64::NEG_INFINITY
                || (result.error_estimate.ln() - result.log_value) <= spec.rel_tol.ln()
                || result.error_estimate <= spec.abs_tol
        } else {
            result.error_estimate <= target
        };
        if done {
            return Ok(result);
        }
        if !result.value.is_finite() && !log_mode {
            return Err(Error::QuadratureCap {
                best: result.value,
                error: result.error_estimate,
            });
        }
        if panels.len() >= spec.max_panels {
            return Err(Error::QuadratureCap {
                best: result.value,
                error: result.error_estimate,
            });
        }
        let worst = errs
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, &e)| {
                if e > acc.1 {
                    (i, e)
                } else {
                    acc
                }
            })
            .0;
        let p = panels.remove(worst);
        let m = 0.5 * (p.a + p.b);
        if !(p.a < m && m < p.b) {
            return Err(Error::QuadratureCap {
                best: result.value,
                error: result.error_estimate,
            });
        }
        let left = make(p.a, m, p.left)?;
        let right = make(m, p.b, p.right)?;
        panels.insert(worst, right);
        panels.insert(worst, left);
    }
}

fn gl_panel(rule: &GaussLegendre, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    rule.integrate(a, b, f)
}

fn gl_panel_log(rule: &GaussLegendre, log_f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let terms: Vec<f64> = rule.mapped(a, b).map(|(x, w)| w.ln() + log_f(x)).collect();
    log_sum_exp(&terms)
}

/// Adaptive integral of `f` over `[a, b]`. With `spec.log_space` the closure
/// returns `ln f(x)`.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    integrate_1d_breaks(f, &[a, b], spec)
}

/// Like [`integrate_1d`] over consecutive breakpoints (strictly increasing).
pub fn integrate_1d_breaks<F>(f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    let rule = GaussLegendre::rule(spec.order);
    let segs = segments(breaks, spec.initial_split())?;
    if spec.log_space {
        adaptive(segs, |a, b| Ok(gl_panel_log(&rule, &f, a, b)), spec)
    } else {
        adaptive(segs, |a, b| Ok(gl_panel(&rule, &f, a, b)), spec)
    }
}

/// Breakpoints around a sharp peak: `center + width * {0, ±1, ±2, ..., ±64}`
/// clipped to `(a, b)`, plus the end points.
pub fn peak_breakpoints(a: f64, b: f64, center: f64, width: f64) -> Vec<f64> {
    let mut pts = vec![a, b];
    if width > 0.0 && width.is_finite() && center.is_finite() {
        pts.push(center);
        let mut s = 1.0;
        while s <= 64.0 {
            pts.push(center - s * width);
            pts.push(center + s * width);
            s *= 2.0;
        }
    }
    let min_gap = 1e-12 * (b - a);
    let mut inside: Vec<f64> = pts
        .into_iter()
        .filter(|&x| x >= a && x <= b)
        .collect();
    inside.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(inside.len());
    for x in inside {
        match out.last() {
            Some(&last) if x - last <= min_gap => {
                if x == b {
                    *out.last_mut().unwrap() = b;
                }
            }
            _ => out.push(x),
        }
    }
    out
}

/// Hint for the inner integration: the peak of `x -> f(x, y)` for a given
/// outer coordinate `y`, as `(center, width)`.
pub type PeakHint<'a> = &'a (dyn Fn(f64) -> (f64, f64) + Sync);

/// Tensor-product adaptive integral of `f(x, y)` over `[x.0, x.1] x [y.0, y.1]`:
/// the outer integral over `y` is adaptive with the inner integral over `x`
/// (itself adaptive, tolerance ten times tighter) as its integrand. Outer
/// nodes are evaluated in parallel and reduced in node order.
pub fn integrate_2d_product<F>(
    f: F,
    x: (f64, f64),
    y: (f64, f64),
    spec: &QuadratureSpec,
    peak: Option<PeakHint<'_>>,
) -> Result<Integral>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    spec.validate()?;
    let rule = GaussLegendre::rule(spec.order);
    let inner_spec = QuadratureSpec {
        rel_tol: (spec.rel_tol * 0.1).max(1e-14),
        abs_tol: spec.abs_tol * 0.1,
        ..*spec
    };
    let inner = |yv: f64| -> Result<Integral> {
        let breaks = match peak {
            Some(h) => {
                let (c, w) = h(yv);
                peak_breakpoints(x.0, x.1, c, w)
            }
            None => vec![x.0, x.1],
        };
        integrate_1d_breaks(|xv| f(xv, yv), &breaks, &inner_spec)
    };
    let log_mode = spec.log_space;
    let panel = |a: f64, b: f64| -> Result<f64> {
        let pts: Vec<(f64, f64)> = rule.mapped(a, b).collect();
        let vals: Vec<Result<(f64, f64)>> = pts
            .par_iter()
            .map(|&(yv, w)| inner(yv).map(|i| (w, if log_mode { i.log_value } else { i.value })))
            .collect();
        let mut terms = Vec::with_capacity(vals.len());
        for v in vals {
            terms.push(v?);
        }
        if log_mode {
            let logs: Vec<f64> = terms.iter().map(|(w, l)| w.ln() + l).collect();
            Ok(log_sum_exp(&logs))
        } else {
            Ok(neumaier_sum(terms.iter().map(|(w, v)| w * v)))
        }
    };
    let segs = segments(&[y.0, y.1], spec.initial_split())?;
    adaptive(segs, panel, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_on_polynomials() {
        for m in [2usize, 5, 8, 16, 33, 64] {
            let rule = GaussLegendre::rule(m);
            let sum_w: f64 = rule.weights.iter().sum();
            assert!((sum_w - 2.0).abs() < 1e-13, "order {m}");
            for deg in 0..(2 * m) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-13, "order {m} degree {deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn x_squared() {
        let r = integrate_1d(|x| x * x, 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn artanh_segment_gives_ln2() {
        let spec = QuadratureSpec::default();
        let r = integrate_1d(|u| 1.0 / (1.0 - u * u), 0.0, 0.6, &spec).unwrap();
        assert!((r.value - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_space_handles_huge_exponents() {
        let u = 0.3;
        let n = 200.0;
        let log_f = |x: f64| (n / 2.0 - 1.0) * (1.0 - x * x).ln() - n * (1.0 - x * u).ln();
        let sigma = (1.0 - u * u) / n.sqrt();
        let breaks = peak_breakpoints(-1.0, 1.0, u, sigma);
        let spec = QuadratureSpec::default().log_space();
        let r = integrate_1d_breaks(log_f, &breaks, &spec).unwrap();
        assert!(r.log_value.is_finite() && r.log_value > 0.0);
        // (1-u^2)^{-N/2} is ~e^{9.4}; the integral is that times sqrt(2 pi / N)
        let approx = -(n / 2.0) * (1.0 - u * u).ln() + (2.0 * std::f64::consts::PI / (n - 2.0)).sqrt().ln();
        assert!((r.log_value - approx).abs() < 0.05);
    }

    #[test]
    fn unit_square_xy() {
        let r = integrate_2d_product(|x, y| x * y, (0.0, 1.0), (0.0, 1.0), &QuadratureSpec::default(), None)
            .unwrap();
        assert!((r.value - 0.25).abs() < 1e-14);
    }

    #[test]
    fn fubini_symmetry() {
        let f = |x: f64, y: f64| (x * y).exp() / (1.0 + x * x + 0.5 * y);
        let spec = QuadratureSpec::default();
        let xy = integrate_2d_product(f, (0.0, 1.0), (-0.5, 2.0), &spec, None).unwrap();
        let yx = integrate_2d_product(|y, x| f(x, y), (-0.5, 2.0), (0.0, 1.0), &spec, None).unwrap();
        assert!((xy.value - yx.value).abs() < 1e-10 * xy.value.abs());
    }

    #[test]
    fn error_estimate_is_honest() {
        // closed forms: int_0^pi sin = 2, int_0^1 sqrt = 2/3, int_0^3 e^x = e^3 - 1
        type Case = (Box<dyn Fn(f64) -> f64>, f64, f64, f64);
        let cases: Vec<Case> = vec![
            (Box::new(f64::sin), 0.0, std::f64::consts::PI, 2.0),
            (Box::new(f64::sqrt), 0.0, 1.0, 2.0 / 3.0),
            (Box::new(f64::exp), 0.0, 3.0, 3f64.exp() - 1.0),
            (Box::new(|x| 1.0 / (1e-3 + x * x)), -1.0, 1.0, 2.0 * (1.0 / 1e-3f64.sqrt()).atan() / 1e-3f64.sqrt()),
        ];
        let spec = QuadratureSpec::default().with_rel_tol(1e-9).with_order(8);
        for (f, a, b, exact) in cases {
            let r = integrate_1d(f, a, b, &spec).unwrap();
            let actual = (r.value - exact).abs();
            assert!(actual <= 10.0 * r.error_estimate + 1e-15, "{actual} vs {}", r.error_estimate);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().with_order(1).validate().is_err());
        assert!(QuadratureSpec::default().with_order(65).validate().is_err());
        assert!(QuadratureSpec::default().with_rel_tol(1e-16).validate().is_err());
        assert!(integrate_1d(|x| x, 1.0, 0.0, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn cap_reports_best_value() {
        let spec = QuadratureSpec {
            max_panels: 3,
            ..QuadratureSpec::default().with_order(2)
        };
        let err = integrate_1d(|x| 1.0 / x.sqrt(), 0.0, 1.0, &spec).unwrap_err();
        assert!(matches!(err, Error::QuadratureCap { .. }));
    }
}
