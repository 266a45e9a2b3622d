//! Poincaré series, their geodesic integrals, and the inner-product integrals.
//!
//! Every series term is a product of integer powers of kernels and Jacobians
//! held as [`LogComplex`]; only `K(w,w)`, which is real positive, is raised to
//! half-integer powers, and that happens in real log arithmetic.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::{
    jacobian_log_raw, kernel_log_raw, ln_kernel_constant, ln_kernel_diag, mobius_raw, pairing_raw,
    weight_constant, BallPoint, Point,
};
use crate::error::{Error, Result};
use crate::geodesic::{axis_sample, ln_one_form_weight, AxisSegment, HyperbolicDecomposition};
use crate::group::{cyclic_index, GroupBall};
use crate::linalg::GroupElement;
use crate::logc::{log_sum_exp, sum_scaled, LogComplex};
use crate::quadrature::{integrate_1d_breaks, integrate_2d_product, peak_breakpoints, QuadratureSpec};

/// How the summation domain was truncated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Powers `gamma^m`, `|m| <= m_max`.
    Cyclic { m_max: u32 },
    /// Word ball of the given radius.
    WordLength { max_length: usize },
    /// A user-supplied set with no shell structure.
    Explicit { size: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    pub n: usize,
    pub k: u32,
    /// Axis nodes; raised to `ceil(quad_factor * sqrt((n+1)k))` if smaller.
    pub quad_points: usize,
    pub quad_factor: f64,
    /// Relative tolerance for the convergence flag.
    pub tol: f64,
    pub truncation: Option<Truncation>,
}

impl SeriesParams {
    pub fn new(n: usize, k: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if k < 2 {
            return Err(Error::InvalidParameter(format!("k >= 2 required (got {k})")));
        }
        Ok(Self {
            n,
            k,
            quad_points: 0,
            quad_factor: 8.0,
            tol: 1e-10,
            truncation: None,
        })
    }

    pub fn with_quad_points(mut self, quad_points: usize) -> Self {
        self.quad_points = quad_points;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Effective number of axis nodes.
    pub fn nodes(&self) -> usize {
        let floor = (self.quad_factor * (((self.n + 1) as f64) * self.k as f64).sqrt()).ceil() as usize;
        self.quad_points.max(floor).max(2)
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!("k >= 2 required (got {})", self.k)));
        }
        if self.n != n {
            return Err(Error::DimensionMismatch { expected: self.n, got: n });
        }
        Ok(())
    }

    fn ln_c(&self) -> Result<f64> {
        Ok(weight_constant(self.n, self.k)?.ln_value)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesResult {
    pub value: Complex64,
    /// `ln |value|`, finite even when `value` under- or overflows.
    pub ln_abs: f64,
    /// Geometric extrapolation of the omitted shells; 0 with a single shell.
    pub abs_tail_estimate: f64,
    /// `None` with a single shell (nothing to extrapolate from).
    pub converged: Option<bool>,
    pub shells: usize,
    pub terms: usize,
    pub params: SeriesParams,
}

/// Group elements grouped into shells of increasing truncation level.
#[derive(Clone, Debug)]
pub struct ElementSet {
    shells: Vec<Vec<GroupElement>>,
    truncation: Truncation,
}

impl ElementSet {
    pub fn identity(n: usize) -> Self {
        Self {
            shells: vec![vec![GroupElement::identity(n)]],
            truncation: Truncation::Explicit { size: 1 },
        }
    }

    pub fn explicit(elements: Vec<GroupElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyElementSet);
        }
        Ok(Self {
            truncation: Truncation::Explicit { size: elements.len() },
            shells: vec![elements],
        })
    }

    /// `gamma^m` for `|m| <= m_max`, shell `j` holding `gamma^{+-j}`.
    pub fn cyclic(gamma: &GroupElement, m_max: u32) -> Self {
        let mut shells = vec![vec![GroupElement::identity(gamma.n())]];
        let inv = gamma.inverse();
        let (mut up, mut down) = (gamma.clone(), inv.clone());
        for _ in 1..=m_max {
            shells.push(vec![up.clone(), down.clone()]);
            up = &up * gamma;
            down = &down * &inv;
        }
        Self {
            shells,
            truncation: Truncation::Cyclic { m_max },
        }
    }

    /// Cyclic group of a decomposed element in its original coordinates,
    /// built as `A gamma0^m A^{-1}` to avoid powering a badly scaled matrix.
    pub fn cyclic_from(dec: &HyperbolicDecomposition, m_max: u32) -> Self {
        let model = Self::cyclic(&dec.gamma0, m_max);
        let a = &dec.a_gamma;
        let ainv = a.inverse();
        Self {
            shells: model
                .shells
                .into_iter()
                .map(|s| s.iter().map(|h| &(a * h) * &ainv).collect())
                .collect(),
            truncation: model.truncation,
        }
    }

    /// Shells of a word ball by word length.
    pub fn from_ball(ball: &GroupBall) -> Self {
        Self {
            shells: ball.shells(),
            truncation: Truncation::WordLength {
                max_length: ball.max_word_length,
            },
        }
    }

    /// `a^{-1} h a` for every element.
    pub fn conjugated(&self, a: &GroupElement) -> Self {
        let ainv = a.inverse();
        Self {
            shells: self
                .shells
                .iter()
                .map(|s| s.iter().map(|h| &(&ainv * h) * a).collect())
                .collect(),
            truncation: self.truncation.clone(),
        }
    }

    pub fn shells(&self) -> &[Vec<GroupElement>] {
        &self.shells
    }

    pub fn truncation(&self) -> &Truncation {
        &self.truncation
    }

    pub fn len(&self) -> usize {
        self.shells.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroupElement> {
        self.shells.iter().flatten()
    }

    fn n(&self) -> usize {
        self.iter().next().map(GroupElement::n).unwrap_or(0)
    }
}

/// Terms of one shell, reduced to a log-complex partial sum and the
/// log of the sum of term magnitudes.
struct ShellSum {
    sum: LogComplex,
    ln_abs_sum: f64,
    terms: usize,
}

fn reduce(mut terms: Vec<LogComplex>) -> ShellSum {
    let mags: Vec<f64> = terms.iter().map(|t| t.log_mag).collect();
    let ln_abs_sum = log_sum_exp(&mags);
    let count = terms.len();
    let (s, log_ref) = sum_scaled(&mut terms);
    ShellSum {
        sum: LogComplex::from_complex(s).mul_ln(log_ref),
        ln_abs_sum,
        terms: count,
    }
}

/// Combines shells into a result, with the geometric tail estimate from the
/// last two shell magnitudes.
fn finish(shells: Vec<ShellSum>, ln_scale: f64, params: &SeriesParams) -> SeriesResult {
    let terms = shells.iter().map(|s| s.terms).sum();
    let count = shells.len();
    let mags: Vec<f64> = shells.iter().map(|s| s.ln_abs_sum).collect();
    let mut sums: Vec<LogComplex> = shells.into_iter().map(|s| s.sum).collect();
    let (s, log_ref) = sum_scaled(&mut sums);
    let total = LogComplex::from_complex(s).mul_ln(log_ref + ln_scale);
    let (tail, converged) = if count >= 2 {
        let last = mags[count - 1] + ln_scale;
        let prev = mags[count - 2] + ln_scale;
        let ratio = (last - prev).exp();
        let limit = params.tol.ln() + total.log_mag;
        if ratio < 1.0 {
            let ln_tail = last + ratio.ln() - (-ratio).ln_1p();
            (ln_tail.exp(), Some(last <= limit && ln_tail <= limit))
        } else {
            (last.exp(), Some(false))
        }
    } else {
        (0.0, None)
    };
    SeriesResult {
        value: total.to_complex(),
        ln_abs: total.log_mag,
        abs_tail_estimate: tail,
        converged,
        shells: count,
        terms,
        params: params.clone(),
    }
}

fn shell_terms<F>(shells: &[Vec<GroupElement>], term: F) -> Result<Vec<ShellSum>>
where
    F: Fn(&GroupElement) -> Result<Vec<LogComplex>> + Sync,
{
    shells
        .iter()
        .map(|shell| {
            let per: Vec<Result<Vec<LogComplex>>> = shell.par_iter().map(&term).collect();
            let mut all = Vec::new();
            for p in per {
                all.extend(p?);
            }
            Ok(reduce(all))
        })
        .collect()
}

/// `Theta_w(z) = c(n,k) sum_A K(Az, w)^k J(A, z)^k` over `group`.
pub fn theta_point(w: &BallPoint, z: &BallPoint, params: &SeriesParams, group: &ElementSet) -> Result<SeriesResult> {
    params.check(z.n())?;
    params.check(w.n())?;
    params.check(group.n())?;
    let k = params.k as i64;
    let shells = shell_terms(group.shells(), |a| {
        let az = mobius_raw(a.matrix(), z.coords())?;
        let j = jacobian_log_raw(a.matrix(), z.coords())?.powi(k);
        Ok(vec![kernel_log_raw(&az, w.coords()).powi(k) * j])
    })?;
    Ok(finish(shells, params.ln_c()?, params))
}

/// `Theta_C(z) = int_C Theta_w(z) K(w,w)^{-k/2} phi(w)` with `C` the axis
/// segment of `dec` pulled back to the model axis:
/// `w = A_gamma xi`, `xi = (0,...,0,u)`, `u` in `[0, t_max]`.
pub fn theta_geodesic(
    z: &BallPoint,
    dec: &HyperbolicDecomposition,
    params: &SeriesParams,
    group: &ElementSet,
) -> Result<SeriesResult> {
    params.check(z.n())?;
    params.check(dec.n)?;
    let k = params.k as i64;
    let half_k = params.k as f64 / 2.0;
    let n = dec.n;
    // (w, ln weight): quadrature weight, 1-form density and K(w,w)^{-k/2}
    let nodes: Vec<(Vec<Complex64>, f64)> = axis_sample(dec, params.nodes())?
        .into_iter()
        .map(|(xi, wt)| {
            let u = xi.coords()[n - 1].re;
            let w = mobius_raw(dec.a_gamma.matrix(), xi.coords())?;
            let ln = wt.ln() + ln_one_form_weight(n, u) - half_k * ln_kernel_diag(&w);
            Ok((w, ln))
        })
        .collect::<Result<_>>()?;
    let shells = shell_terms(group.shells(), |a| {
        let az = mobius_raw(a.matrix(), z.coords())?;
        let j = jacobian_log_raw(a.matrix(), z.coords())?.powi(k);
        Ok(nodes
            .iter()
            .map(|(w, ln)| (kernel_log_raw(&az, w).powi(k) * j).mul_ln(*ln))
            .collect())
    })?;
    Ok(finish(shells, params.ln_c()?, params))
}

#[derive(Clone, Debug, Serialize)]
pub struct InnerProduct {
    pub total: SeriesResult,
    /// Contribution of `h` in `<gamma0>`.
    pub axial: Complex64,
    /// Contribution of all other `h`.
    pub off_axis: Complex64,
    /// `|Im total| / |total|`.
    pub imag_residue: f64,
}

/// `(Theta_C, Theta_C) = c(n,k) int int sum_h K(hw, xi)^k J(h, w)^k
/// K(xi,xi)^{-k/2} K(w,w)^{-k/2} phi(xi) phi(w)` over the fundamental model
/// segment, with `group` in model coordinates (conjugated by `A_gamma^{-1}`).
pub fn inner_product_geodesic(
    dec: &HyperbolicDecomposition,
    params: &SeriesParams,
    group: &ElementSet,
) -> Result<InnerProduct> {
    inner_product_segment(&dec.segment(), &dec.gamma0, params, group)
}

/// [`inner_product_geodesic`] from the model data alone.
pub fn inner_product_segment(
    segment: &AxisSegment,
    gamma0: &GroupElement,
    params: &SeriesParams,
    group: &ElementSet,
) -> Result<InnerProduct> {
    let n = segment.n;
    params.check(n)?;
    params.check(group.n())?;
    let k = params.k as i64;
    let half_k = params.k as f64 / 2.0;
    let rule = crate::quadrature::GaussLegendre::rule(params.nodes());
    // (point, ln of quadrature weight * phi * K^{-k/2})
    let nodes: Vec<(Vec<Complex64>, f64)> = rule
        .mapped(0.0, segment.endpoint_coord)
        .map(|(u, wt)| {
            let p = BallPoint::on_axis(n, u)?.into_vec();
            let ln = wt.ln() + ln_one_form_weight(n, u) - half_k * ln_kernel_diag(&p);
            Ok((p, ln))
        })
        .collect::<Result<_>>()?;

    let mut axial_flags = Vec::with_capacity(group.len());
    for h in group.iter() {
        axial_flags.push(cyclic_index(gamma0, h)?.is_some());
    }
    let flat: Vec<&GroupElement> = group.iter().collect();
    let per_h: Vec<Result<ShellSum>> = flat
        .par_iter()
        .map(|h| {
            let mut terms = Vec::with_capacity(nodes.len() * nodes.len());
            for (w, lw) in &nodes {
                let hw = mobius_raw(h.matrix(), w)?;
                let j = jacobian_log_raw(h.matrix(), w)?.powi(k);
                for (xi, lx) in &nodes {
                    terms.push((kernel_log_raw(&hw, xi).powi(k) * j).mul_ln(lw + lx));
                }
            }
            Ok(reduce(terms))
        })
        .collect();
    let per_h: Vec<ShellSum> = per_h.into_iter().collect::<Result<_>>()?;

    let ln_c = params.ln_c()?;
    let part = |want: bool| -> Complex64 {
        let mut s: Vec<LogComplex> = per_h
            .iter()
            .zip(&axial_flags)
            .filter(|(_, &f)| f == want)
            .map(|(p, _)| p.sum)
            .collect();
        let (v, r) = sum_scaled(&mut s);
        v * (r + ln_c).exp()
    };
    let axial = part(true);
    let off_axis = part(false);

    // regroup per-element sums into the set's shells for the tail estimate
    let mut shells = Vec::with_capacity(group.shells().len());
    let mut it = per_h.into_iter();
    for shell in group.shells() {
        let members: Vec<ShellSum> = it.by_ref().take(shell.len()).collect();
        let mags: Vec<f64> = members.iter().map(|m| m.ln_abs_sum).collect();
        let terms = members.iter().map(|m| m.terms).sum();
        let mut sums: Vec<LogComplex> = members.into_iter().map(|m| m.sum).collect();
        let (v, r) = sum_scaled(&mut sums);
        shells.push(ShellSum {
            sum: LogComplex::from_complex(v).mul_ln(r),
            ln_abs_sum: log_sum_exp(&mags),
            terms,
        });
    }
    let total = finish(shells, ln_c, params);
    let imag_residue = total.value.im.abs() / total.value.norm();
    Ok(InnerProduct {
        total,
        axial,
        off_axis,
        imag_residue,
    })
}

/// `P_C(z) = sum_A (<Az,X><Az,Y>)^{-(n+1)k/2} J(A,z)^k` over coset
/// representatives; requires `(n+1)k` even so the power is an integer.
pub fn relative_poincare(
    z: &BallPoint,
    dec: &HyperbolicDecomposition,
    params: &SeriesParams,
    reps: &ElementSet,
) -> Result<SeriesResult> {
    params.check(z.n())?;
    params.check(dec.n)?;
    let total_weight = (dec.n as u64 + 1) * params.k as u64;
    if total_weight % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "(n+1)k = {total_weight} must be even"
        )));
    }
    let e = (total_weight / 2) as i64;
    let k = params.k as i64;
    let shells = shell_terms(reps.shells(), |a| {
        let az = mobius_raw(a.matrix(), z.coords())?;
        let pxy = pairing_raw(&az, dec.x.coords()) * pairing_raw(&az, dec.y.coords());
        let j = jacobian_log_raw(a.matrix(), z.coords())?.powi(k);
        Ok(vec![LogComplex::from_complex(pxy).powi(-e) * j])
    })?;
    Ok(finish(shells, 0.0, params))
}

/// `J_2(k)` as a number and a log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct J2Value {
    pub value: f64,
    pub ln_value: f64,
    pub rel_error: f64,
}

fn check_nk(n: usize, k: u32) -> Result<()> {
    if n == 0 || k < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 1 and k >= 2 (got n={n}, k={k})")));
    }
    Ok(())
}

/// `ln (n!/pi^n)^{2/(n+1)} + ln c(n,k)`, the prefactor of `J_2`.
fn ln_j2_prefactor(n: usize, k: u32) -> Result<f64> {
    Ok(weight_constant(n, k)?.ln_value + 2.0 * ln_kernel_constant(n) / (n as f64 + 1.0))
}

/// `ln` of `(1-x^2)^{N/2-1} (1-xu)^{-N}`, `N = (n+1)k`.
fn ln_inner_integrand(big_n: f64, x: f64, u: f64) -> f64 {
    (0.5 * big_n - 1.0) * (-x * x).ln_1p() - big_n * (-x * u).ln_1p()
}

fn j2_spec(quad_points: usize) -> QuadratureSpec {
    QuadratureSpec::default()
        .with_order(quad_points.clamp(8, 64))
        .with_rel_tol(1e-11)
        .log_space()
}

/// `ln int_{-1}^{1} (1-x^2)^{N/2-1} (1-xu)^{-N} dx`, `N = (n+1)k`.
pub fn ln_inner_integral(n: usize, k: u32, u: f64) -> Result<f64> {
    check_nk(n, k)?;
    if !(u.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("need |u| < 1 (got {u})")));
    }
    let big_n = ((n + 1) as f64) * k as f64;
    let breaks = peak_breakpoints(-1.0, 1.0, u, (1.0 - u * u) / big_n.sqrt());
    let r = integrate_1d_breaks(|x| ln_inner_integrand(big_n, x, u), &breaks, &j2_spec(16))?;
    Ok(r.log_value)
}

/// `J_2(k) = c(n,k) (n!/pi^n)^{2/(n+1)} int_0^{t_max} int_{-1}^{1}
/// (1-x^2)^{N/2-1} (1-u^2)^{N/2-1} (1-xu)^{-N} dx du` with `N = (n+1)k` and
/// `t_max = (lambda^2-1)/(lambda^2+1)`.
///
/// Both integrals are adaptive in log space; the inner one has breakpoints
/// around its peak at `x = u` of width `(1-u^2)/sqrt N`. `quad_points` is the
/// Gauss-Legendre order per panel (clamped to `[8, 64]`).
pub fn j2_integral(n: usize, k: u32, lambda: f64, quad_points: usize) -> Result<J2Value> {
    check_nk(n, k)?;
    let seg = AxisSegment::new(n, lambda)?;
    let big_n = ((n + 1) as f64) * k as f64;
    let t = seg.endpoint_coord;
    let ln_pre = ln_j2_prefactor(n, k)?;
    let spec = j2_spec(quad_points);
    let peak = |u: f64| (u, (1.0 - u * u) / big_n.sqrt());
    let r = integrate_2d_product(
        |x, u| ln_inner_integrand(big_n, x, u) + (0.5 * big_n - 1.0) * (-u * u).ln_1p(),
        (-1.0, 1.0),
        (0.0, t),
        &spec,
        Some(&peak),
    )?;
    let ln_value = r.log_value + ln_pre;
    Ok(J2Value {
        value: ln_value.exp(),
        ln_value,
        rel_error: r.rel_error(),
    })
}

/// `ln` of the `J_1` bound `c(n,k) C / cosh^2(delta0/2)^{(n+1)k/2 - (n+1)}`.
pub fn ln_j1_bound(n: usize, k: u32, delta0: f64, const_lambda_n: f64) -> Result<f64> {
    check_nk(n, k)?;
    if !(delta0 > 0.0) {
        return Err(Error::InvalidParameter(format!("delta0 must be positive (got {delta0})")));
    }
    if !(const_lambda_n > 0.0) {
        return Err(Error::InvalidParameter("the bound's constant must be positive".into()));
    }
    let n1 = (n + 1) as f64;
    let exponent = n1 * k as f64 / 2.0 - n1;
    let ln_cosh2 = 2.0 * (0.5 * delta0).cosh().ln();
    Ok(weight_constant(n, k)?.ln_value + const_lambda_n.ln() - exponent * ln_cosh2)
}

pub fn j1_bound(n: usize, k: u32, delta0: f64, const_lambda_n: f64) -> Result<f64> {
    Ok(ln_j1_bound(n, k, delta0, const_lambda_n)?.exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct J1Decay {
    pub fitted_slope: f64,
    /// `-((n+1)/2) ln cosh^2(delta0/2)`.
    pub analytic_slope: f64,
    pub ks: Vec<u32>,
}

impl J1Decay {
    pub fn relative_error(&self) -> f64 {
        (self.fitted_slope / self.analytic_slope - 1.0).abs()
    }
}

/// Least-squares slope of `ln j1_bound` against `k`. The window starts where
/// the polynomial growth of `c(n,k)` (slope about `n/k`) is below 0.5% of the
/// exponential rate, so the fitted slope is a faithful decay rate.
pub fn j1_decay_fit(n: usize, delta0: f64, const_lambda_n: f64) -> Result<J1Decay> {
    let analytic_slope = -((n + 1) as f64 / 2.0) * 2.0 * (0.5 * delta0).cosh().ln();
    if !(analytic_slope < 0.0) {
        return Err(Error::InvalidParameter(format!("delta0 must be positive (got {delta0})")));
    }
    let k_min = ((200.0 * n as f64 / analytic_slope.abs()).ceil() as u32).max(2);
    let ks: Vec<u32> = (0..8).map(|i| k_min + i * k_min.div_ceil(2)).collect();
    let ys: Vec<f64> = ks
        .iter()
        .map(|&k| ln_j1_bound(n, k, delta0, const_lambda_n))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let (fitted_slope, _) = crate::asymptotics::least_squares(&xs, &ys)?;
    Ok(J1Decay {
        fitted_slope,
        analytic_slope,
        ks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::{bergman_kernel, jacobian, mobius_apply};
    use crate::geodesic::{decompose, normal_form};
    use crate::quadrature::integrate_1d;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn k_below_two_rejected() {
        assert!(SeriesParams::new(1, 1).is_err());
        assert_eq!(SeriesParams::new(1, 4).unwrap().nodes(), 23);
    }

    #[test]
    fn theta_identity_term() {
        let params = SeriesParams::new(1, 3).unwrap();
        let o = BallPoint::origin(1);
        let r = theta_point(&o, &o, &params, &ElementSet::identity(1)).unwrap();
        assert!((r.value - c(5.0 / PI.powi(3), 0.0)).norm() < 1e-15);
        assert_eq!(r.converged, None);

        let z = BallPoint::new(vec![c(0.2, -0.1), c(0.1, 0.3)]).unwrap();
        let w = BallPoint::new(vec![c(-0.3, 0.0), c(0.0, 0.2)]).unwrap();
        let params = SeriesParams::new(2, 3).unwrap();
        let r = theta_point(&w, &z, &params, &ElementSet::identity(2)).unwrap();
        // c(2,3) = binom(8, 2) = 28
        let want = bergman_kernel(&z, &w).powi(3) * 28.0;
        assert!((r.value - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn theta_equivariance_on_cyclic_group() {
        let g = normal_form(2.0, &[]).unwrap();
        let set = ElementSet::cyclic(&g, 12);
        let params = SeriesParams::new(1, 6).unwrap();
        let z = BallPoint::new(vec![c(0.1, 0.2)]).unwrap();
        let w = BallPoint::new(vec![c(-0.2, 0.1)]).unwrap();
        let base = theta_point(&w, &z, &params, &set).unwrap();
        assert_eq!(base.converged, Some(true));
        for h in [g.clone(), g.inverse()] {
            let hw = mobius_apply(&h, &w).unwrap();
            let moved = theta_point(&hw, &z, &params, &set).unwrap();
            let lhs = moved.value * jacobian(&h, &w).unwrap().conj().powi(6);
            assert!((lhs - base.value).norm() < 1e-9 * base.value.norm());
        }
    }

    #[test]
    fn theta_geodesic_matches_direct_quadrature() {
        let dec = decompose(&normal_form(2.0, &[]).unwrap()).unwrap();
        let params = SeriesParams::new(1, 4).unwrap();
        let o = BallPoint::origin(1);
        let r = theta_geodesic(&o, &dec, &params, &ElementSet::identity(1)).unwrap();
        // c K(0,u)^4 K(u,u)^{-2} phi(u): 7 pi^{-4} pi^2 (1-u^2)^4 pi^{-1/2} (1-u^2)^{-1}
        let direct = integrate_1d(
            |u| 7.0 * PI.powf(-2.5) * (1.0 - u * u).powi(3),
            0.0,
            0.6,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((r.value - c(direct.value, 0.0)).norm() < 1e-9 * direct.value);
        let doubled = theta_geodesic(&o, &dec, &params.clone().with_quad_points(2 * params.nodes()), &ElementSet::identity(1))
            .unwrap();
        assert!((doubled.value - r.value).norm() < 1e-9 * r.value.norm());
    }

    #[test]
    fn identity_inner_product_is_positive() {
        let dec = decompose(&normal_form(2.0, &[]).unwrap()).unwrap();
        let params = SeriesParams::new(1, 4).unwrap();
        let ip = inner_product_geodesic(&dec, &params, &ElementSet::identity(1)).unwrap();
        assert!(ip.total.value.re > 0.0);
        assert!(ip.imag_residue <= 1e-12);
        assert_eq!(ip.off_axis, c(0.0, 0.0));
    }

    #[test]
    fn poincare_parity() {
        let dec = decompose(&normal_form(2.0, &[1.0]).unwrap()).unwrap();
        let params = SeriesParams::new(2, 3).unwrap();
        let z = BallPoint::origin(2);
        assert!(relative_poincare(&z, &dec, &params, &ElementSet::identity(2)).is_err());
        let params = SeriesParams::new(2, 4).unwrap();
        let on_axis = BallPoint::on_axis(2, 0.3).unwrap();
        let p = relative_poincare(&on_axis, &dec, &params, &ElementSet::identity(2)).unwrap();
        assert!(p.value.im.abs() <= 1e-14 * p.value.norm());
    }

    #[test]
    fn j2_collapses_near_one() {
        let a = j2_integral(1, 10, 1.01, 16).unwrap();
        let b = j2_integral(1, 10, 1.000001, 16).unwrap();
        assert!(b.value < a.value && b.value < 1e-2 * a.value);
        assert!(j2_integral(1, 10, 0.9, 16).is_err());
    }

    #[test]
    fn j2_peak_is_at_x_equals_u() {
        // the peak factor sqrt(1-x^2)/(1-xu) of the integrand is maximal at x = u
        let ln_f = |x: f64, u: f64| 0.5 * (-x * x).ln_1p() - (-x * u).ln_1p();
        let big_n = 200.0;
        for u in [-0.6, 0.0, 0.3, 0.8] {
            for i in 1..400 {
                let x = -1.0 + i as f64 / 200.0;
                assert!(ln_f(x, u) <= ln_f(u, u) + 1e-15, "u={u} x={x}");
            }
            // the full integrand carries (1-xu)^{-2} in addition, which moves
            // its argmax by O(1/N), well inside the peak width
            let sigma = (1.0 - u * u) / f64::sqrt(big_n);
            let argmax = (0..20001)
                .map(|i| -1.0 + i as f64 * 1e-4)
                .filter(|x: &f64| x.abs() < 1.0)
                .max_by(|a, b| ln_inner_integrand(big_n, *a, u).total_cmp(&ln_inner_integrand(big_n, *b, u)))
                .unwrap();
            assert!((argmax - u).abs() < 0.25 * sigma, "u={u} argmax={argmax}");
        }
    }

    #[test]
    fn j1_bound_shapes() {
        let a = j1_bound(1, 50, 1.0, 1.0).unwrap();
        let b = j1_bound(1, 100, 1.0, 1.0).unwrap();
        // c(1,k) = 2k-1, exponent k-2
        let want = (199.0 / 99.0) * (0.5f64.cosh().powi(2)).powi(-50);
        assert!((b / a / want - 1.0).abs() < 1e-10);
        assert!(j1_bound(1, 50, 2.0, 1.0).unwrap() < a);
        assert!(j1_bound(1, 50, 0.0, 1.0).is_err());
        let fit = j1_decay_fit(2, 0.8, 3.0).unwrap();
        assert!(fit.relative_error() < 0.01, "{fit:?}");
    }
}
