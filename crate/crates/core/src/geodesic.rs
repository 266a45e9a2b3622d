//! Hyperbolic elements, their axes, and the normalizing matrix `A_gamma`.
//!
//! For a hyperbolic `gamma` with attracting fixed point `X` (eigenvalue
//! `lambda`, `|lambda| > 1`) and repelling fixed point `Y` (eigenvalue
//! `1/lambda`), `A_gamma` has columns
//!
//! ```text
//! v_1, ..., v_{n-1},  (X;1)/<X,Y> + (Y;1)/2,  (X;1)/<X,Y> - (Y;1)/2
//! ```
//!
//! so it maps the model axis `{(0,...,0,u)}` onto the axis of `gamma`, with
//! `+e_n -> X` and `-e_n -> Y`. Then `A_gamma^{-1} gamma A_gamma` is the block
//! normal form `diag(I_gamma, [[a, b], [b, a]])` with
//! `a = (lambda + 1/lambda)/2`, `b = (lambda - 1/lambda)/2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ball::{
    denominator, jacobian_log_raw, ln_kernel_constant, ln_kernel_diag, mobius_raw, pairing_raw,
    BallPoint, BoundaryPoint, Point,
};
use crate::error::{Error, Result};
use crate::linalg::{
    eigen_decompose, eigenvalues, gram_orthonormalize, snap_real, validate_su, CMatrix,
    GroupElement, SigmaForm, REAL_SNAP_TOL,
};
use crate::logc::LogComplex;
use crate::quadrature::GaussLegendre;

/// Tolerance for the eigen relations and normal-form reconstruction.
pub const NORMAL_FORM_TOL: f64 = 1e-8;
/// Minimum `|<X, Y>|` for a usable decomposition.
pub const ENDPOINT_PAIRING_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Real spectrum, one eigenvalue outside the unit circle, real fixed points.
    HyperbolicRealEndpoints,
    /// Real translation eigenvalue, but non-real rotational spectrum or
    /// non-real fixed points.
    Hyperbolic,
    /// The translation eigenvalue itself is not real.
    LoxodromicNonreal,
    /// Elliptic, parabolic or the identity.
    Other,
}

struct FixedPoints {
    lambda: Complex64,
    x: Vec<Complex64>,
    y: Vec<Complex64>,
    rest: Vec<(Complex64, Vec<Complex64>)>,
    real_endpoints: bool,
}

/// Scale so the last coordinate is 1.
fn dehomogenize(v: &[Complex64]) -> Option<Vec<Complex64>> {
    let last = *v.last()?;
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if last.norm() <= 1e-12 * scale {
        return None;
    }
    Some(v[..v.len() - 1].iter().map(|z| z / last).collect())
}

fn loxodromic_index(values: &[Complex64]) -> Option<usize> {
    let outside: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 1.0 + 1e-8)
        .map(|(i, _)| i)
        .collect();
    (outside.len() == 1).then(|| outside[0])
}

fn is_real(v: Complex64) -> bool {
    v.im.abs() <= REAL_SNAP_TOL * (1.0 + v.norm())
}

fn fixed_points(g: &GroupElement) -> Result<FixedPoints> {
    let pairs = eigen_decompose(g)?;
    let values: Vec<Complex64> = pairs.iter().map(|p| p.value).collect();
    let ix = loxodromic_index(&values).expect("caller checked the spectrum");
    let iy = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .expect("nonempty spectrum");
    let x = dehomogenize(&pairs[ix].vector);
    let y = dehomogenize(&pairs[iy].vector);
    let (Some(x), Some(y)) = (x, y) else {
        return Err(Error::DegenerateEndpoints { pairing: 0.0 });
    };
    let real_endpoints = x.iter().chain(&y).all(|z| z.im.abs() <= REAL_SNAP_TOL);
    let rest = pairs
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i != ix && *i != iy)
        .map(|(_, p)| (p.value, p.vector))
        .collect();
    Ok(FixedPoints {
        lambda: values[ix],
        x,
        y,
        rest,
        real_endpoints,
    })
}

pub fn classify(g: &GroupElement) -> Result<Classification> {
    let values = eigenvalues(g.matrix())?;
    let Some(ix) = loxodromic_index(&values) else {
        return Ok(Classification::Other);
    };
    if !is_real(values[ix]) {
        return Ok(Classification::LoxodromicNonreal);
    }
    if !values.iter().all(|&v| is_real(v)) {
        return Ok(Classification::Hyperbolic);
    }
    let fp = fixed_points(g)?;
    Ok(if fp.real_endpoints {
        Classification::HyperbolicRealEndpoints
    } else {
        Classification::Hyperbolic
    })
}

/// The block normal form `diag(I_gamma, [[a, b], [b, a]])`.
pub fn normal_form_matrix(lambda: f64, i_gamma: &[f64]) -> CMatrix {
    let dim = i_gamma.len() + 2;
    let a = 0.5 * (lambda + 1.0 / lambda);
    let b = 0.5 * (lambda - 1.0 / lambda);
    let mut m = CMatrix::zeros(dim);
    for (i, &s) in i_gamma.iter().enumerate() {
        m[(i, i)] = Complex64::new(s, 0.0);
    }
    let (p, q) = (dim - 2, dim - 1);
    m[(p, p)] = Complex64::new(a, 0.0);
    m[(q, q)] = Complex64::new(a, 0.0);
    m[(p, q)] = Complex64::new(b, 0.0);
    m[(q, p)] = Complex64::new(b, 0.0);
    m
}

/// Normal form as a group element.
pub fn normal_form(lambda: f64, i_gamma: &[f64]) -> Result<GroupElement> {
    if !(lambda * lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("normal form needs lambda^2 > 1 (got {lambda})")));
    }
    if i_gamma.iter().any(|&s| s != 1.0 && s != -1.0) {
        return Err(Error::InvalidParameter("I_gamma entries must be +-1".into()));
    }
    if i_gamma.iter().filter(|&&s| s < 0.0).count() % 2 == 1 {
        return Err(Error::InvalidParameter("I_gamma needs an even number of -1 entries (det = 1)".into()));
    }
    let m = normal_form_matrix(lambda, i_gamma);
    let tol = 1e-12 * lambda.abs().max(1.0 / lambda.abs());
    GroupElement::new(m, tol)
}

/// `l(C) = 2 ln |lambda|`.
pub fn geodesic_length(lambda: f64) -> Result<f64> {
    if !(lambda * lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("geodesic length needs lambda^2 > 1 (got {lambda})")));
    }
    Ok(2.0 * lambda.abs().ln())
}

/// Fundamental segment `{(0,...,0,u) : 0 <= u <= t_max}` of the model axis,
/// with `t_max = gamma0(0)_n = (lambda^2-1)/(lambda^2+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSegment {
    pub n: usize,
    pub endpoint_coord: f64,
}

impl AxisSegment {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        geodesic_length(lambda)?;
        // tanh(ln|lambda|) avoids cancellation for lambda near 1
        Ok(Self {
            n,
            endpoint_coord: lambda.abs().ln().tanh(),
        })
    }

    pub fn point(&self, u: f64) -> Result<BallPoint> {
        BallPoint::on_axis(self.n, u)
    }
}

/// Eigen-data and normal form of a hyperbolic element with real endpoints.
#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicDecomposition {
    pub n: usize,
    /// Eigenvalue of the attracting fixed point; `|lambda| > 1`.
    pub lambda: f64,
    pub x: BoundaryPoint,
    pub y: BoundaryPoint,
    /// Form-orthonormal transverse eigenvectors, `-1` eigenvectors first.
    pub v_list: Vec<Vec<Complex64>>,
    /// Eigenvalues of `v_list`.
    pub i_gamma: Vec<f64>,
    pub a_gamma: GroupElement,
    pub gamma0: GroupElement,
    pub length: f64,
    pub gamma: GroupElement,
    /// Max entry of `A_gamma^{-1} gamma A_gamma - gamma0`.
    pub normal_form_residual: f64,
}

impl HyperbolicDecomposition {
    pub fn segment(&self) -> AxisSegment {
        AxisSegment {
            n: self.n,
            endpoint_coord: self.lambda.abs().ln().tanh(),
        }
    }

    /// `A_gamma^{-1}`, computed through the form.
    pub fn a_gamma_inverse(&self) -> GroupElement {
        self.a_gamma.inverse()
    }

    /// Axis point `A_gamma (0,...,0,u)` of `gamma`.
    pub fn axis_point(&self, u: f64) -> Result<BallPoint> {
        let xi = BallPoint::on_axis(self.n, u)?;
        crate::ball::mobius_apply(&self.a_gamma, &xi)
    }
}

/// Decomposes a hyperbolic element with real fixed points.
///
/// `X` is always the fixed point of the eigenvalue outside the unit circle,
/// so the reported `lambda` has `|lambda| > 1` without inverting `g`; the
/// axis, `A_gamma` and the cyclic group are the same as for `g^{-1}`.
pub fn decompose(g: &GroupElement) -> Result<HyperbolicDecomposition> {
    let class = classify(g)?;
    if class != Classification::HyperbolicRealEndpoints {
        return Err(Error::NotHyperbolic(class));
    }
    let n = g.n();
    let fp = fixed_points(g)?;
    let lambda = snap_real(fp.lambda).re;

    let real_unit = |v: &[Complex64]| -> Vec<Complex64> {
        let r: Vec<Complex64> = v.iter().map(|z| Complex64::new(z.re, 0.0)).collect();
        let norm = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        r.into_iter().map(|z| z / norm).collect()
    };
    let x = BoundaryPoint::new(real_unit(&fp.x))?;
    let y = BoundaryPoint::new(real_unit(&fp.y))?;
    let xy = pairing_raw(x.coords(), y.coords());
    if xy.norm() <= ENDPOINT_PAIRING_TOL {
        return Err(Error::DegenerateEndpoints { pairing: xy.norm() });
    }

    let gscale = g.matrix().max_norm().max(1.0);
    for (p, val) in [(&x, lambda), (&y, 1.0 / lambda)] {
        let lift = p.lift();
        let r: f64 = g
            .matrix()
            .matvec(&lift)
            .iter()
            .zip(&lift)
            .map(|(a, b)| (a - b * val).norm())
            .fold(0.0, f64::max);
        if r > NORMAL_FORM_TOL * gscale {
            return Err(Error::NormalFormMismatch {
                residual: r,
                tolerance: NORMAL_FORM_TOL * gscale,
            });
        }
    }

    // transverse eigenvectors: -1 eigenspace first, each eigenspace
    // orthonormalized separately
    let mut minus = Vec::new();
    let mut plus = Vec::new();
    let mut rest = fp.rest;
    rest.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));
    for (value, vec) in rest {
        if value.re < 0.0 {
            minus.push(vec);
        } else {
            plus.push(vec);
        }
    }
    let mut v_list = gram_orthonormalize(&minus)?;
    let i_minus = v_list.len();
    v_list.extend(gram_orthonormalize(&plus)?);
    let mut i_gamma = vec![-1.0; i_minus];
    i_gamma.resize(v_list.len(), 1.0);

    let p = xy.inv();
    let half = Complex64::new(0.5, 0.0);
    let xl = x.lift();
    let yl = y.lift();
    let spacelike: Vec<Complex64> = xl.iter().zip(&yl).map(|(a, b)| p * a + half * b).collect();
    let timelike: Vec<Complex64> = xl.iter().zip(&yl).map(|(a, b)| p * a - half * b).collect();
    let mut columns = v_list.clone();
    columns.push(spacelike);
    columns.push(timelike);
    let mut a = CMatrix::from_columns(&columns)?;

    // |det A| = 1 since A preserves the form; fix the phase
    let det = a.det();
    let phase = det / det.norm();
    if n >= 2 {
        let fix = phase.conj();
        for i in 0..=n {
            a[(i, 0)] *= fix;
        }
        for z in v_list[0].iter_mut() {
            *z *= fix;
        }
    } else {
        // scalar multiple of the identity; J(A, .) picks up zeta^{-2} = det
        let zeta = Complex64::from_polar(1.0, -0.5 * phase.arg());
        a = a.scale(zeta);
    }

    let ascale = a.max_norm().max(1.0);
    let report = validate_su(&a, NORMAL_FORM_TOL * ascale * ascale)?;
    if !report.member {
        return Err(Error::NotInGroup {
            form_residual: report.form_residual,
            det_residual: report.det_residual,
        });
    }
    let a_gamma = GroupElement::from_trusted(a, NORMAL_FORM_TOL * ascale * ascale);
    let gamma0 = normal_form(lambda, &i_gamma)?;
    let recon = a_gamma.inverse().matrix().matmul(g.matrix()).matmul(a_gamma.matrix());
    let residual = recon.max_abs_diff(gamma0.matrix());
    let tolerance = NORMAL_FORM_TOL * ascale * ascale * gscale;
    if residual > tolerance {
        return Err(Error::NormalFormMismatch { residual, tolerance });
    }
    Ok(HyperbolicDecomposition {
        n,
        lambda,
        x,
        y,
        v_list,
        i_gamma,
        a_gamma,
        gamma0,
        length: geodesic_length(lambda)?,
        gamma: g.clone(),
        normal_form_residual: residual,
    })
}

/// Gauss-Legendre nodes `u_i` and weights on `[0, t_max]`, as axis points.
pub fn axis_sample(dec: &HyperbolicDecomposition, m: usize) -> Result<Vec<(BallPoint, f64)>> {
    axis_sample_segment(&dec.segment(), m)
}

pub fn axis_sample_segment(seg: &AxisSegment, m: usize) -> Result<Vec<(BallPoint, f64)>> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("axis sample needs m >= 2 (got {m})")));
    }
    let rule = GaussLegendre::rule(m);
    rule.mapped(0.0, seg.endpoint_coord)
        .map(|(u, w)| Ok((seg.point(u)?, w)))
        .collect()
}

fn axis_coord(xi: &[Complex64]) -> Result<f64> {
    let n = xi.len();
    let off: f64 = xi[..n - 1].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let u = xi[n - 1];
    if off > 1e-12 || u.im.abs() > 1e-12 {
        return Err(Error::InvalidParameter("point is not on the model axis".into()));
    }
    if !(u.re.abs() < 1.0) {
        return Err(Error::OutsideBall { norm_sq: u.re * u.re });
    }
    Ok(u.re)
}

/// `ln` of [`one_form_weight`] at axis coordinate `u`.
pub(crate) fn ln_one_form_weight(n: usize, u: f64) -> f64 {
    ln_kernel_constant(n) / (n as f64 + 1.0) - (1.0 - u * u).ln()
}

/// Density of the invariant 1-form `K(z,z)^{1/(n+1)} dz_n` on the model axis
/// with respect to `du`: `(n!/pi^n)^{1/(n+1)} (1 - u^2)^{-1}`.
pub fn one_form_weight(xi: &BallPoint) -> Result<f64> {
    let u = axis_coord(xi.coords())?;
    Ok(ln_one_form_weight(xi.n(), u).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealityReport {
    /// Max of `|Im J(A_gamma, xi)| / |J|` over sampled model-axis points.
    pub axis_jacobian: f64,
    /// Max of `|Im J(gamma, z)| / |J|` over sampled points of the axis of gamma.
    pub geodesic_jacobian: f64,
    /// Max relative change of `K(z,z)^{-1} f(z)` under `z -> gamma z` on the
    /// axis, with `f(z) = (<z,X><z,Y>)^{-(n+1)}` of weight 2.
    pub invariance: f64,
}

/// Samples the axis at `samples` points and checks that the Jacobians of
/// `A_gamma` and `gamma` are real there, and that a weight-2 form built from
/// the fixed points is gamma-invariant after the `K(z,z)^{-1}` normalization.
pub fn jacobian_reality_check(dec: &HyperbolicDecomposition, samples: usize) -> Result<RealityReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let n = dec.n;
    let rel_im = |j: LogComplex| j.arg.sin().abs();
    let weight_two = |z: &[Complex64]| -> LogComplex {
        let pxy = pairing_raw(z, dec.x.coords()) * pairing_raw(z, dec.y.coords());
        LogComplex::from_complex(pxy)
            .powi(-(n as i64 + 1))
            .mul_ln(-ln_kernel_diag(z))
    };
    let mut report = RealityReport {
        axis_jacobian: 0.0,
        geodesic_jacobian: 0.0,
        invariance: 0.0,
    };
    let t = dec.segment().endpoint_coord;
    for i in 0..samples {
        // spread over [-t, 2t] clipped to the ball
        let u = (-t + 3.0 * t * (i as f64 + 0.5) / samples as f64).clamp(-0.95, 0.95);
        let xi = BallPoint::on_axis(n, u)?;
        let ja = jacobian_log_raw(dec.a_gamma.matrix(), xi.coords())?;
        report.axis_jacobian = report.axis_jacobian.max(rel_im(ja));

        let z = mobius_raw(dec.a_gamma.matrix(), xi.coords())?;
        let jg = jacobian_log_raw(dec.gamma.matrix(), &z)?;
        report.geodesic_jacobian = report.geodesic_jacobian.max(rel_im(jg));

        let gz = mobius_raw(dec.gamma.matrix(), &z)?;
        let before = weight_two(&z).to_complex();
        let after = weight_two(&gz).to_complex();
        report.invariance = report.invariance.max((after - before).norm() / before.norm());
    }
    Ok(report)
}

/// True when `z` lies on the model axis to `tol` after pulling back by `A_gamma`.
pub fn on_axis(dec: &HyperbolicDecomposition, z: &BallPoint, tol: f64) -> Result<bool> {
    let pulled = mobius_raw(dec.a_gamma.inverse().matrix(), z.coords())?;
    let n = dec.n;
    let off = pulled[..n - 1].iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(off <= tol && pulled[n - 1].im.abs() <= tol)
}

/// The denominator of `g` at `z` is nonzero.
pub fn denominator_at(g: &GroupElement, z: &BallPoint) -> Result<Complex64> {
    denominator(g.matrix(), z.coords())
}

/// `sigma conj(A)^T sigma` for the decomposition's `A_gamma`, and its
/// deviation from the numerically inverted matrix.
pub fn form_inverse_residual(dec: &HyperbolicDecomposition) -> f64 {
    let sigma = SigmaForm::new(dec.n);
    let via_form = sigma.form_inverse(dec.a_gamma.matrix());
    match dec.a_gamma.matrix().inverse() {
        Some(inv) => via_form.max_abs_diff(&inv),
        None => f64::INFINITY,
    }
}
