//! The ball model of complex hyperbolic space.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, GroupElement};
use crate::logc::{neumaier_sum, LogComplex};
use crate::quadrature::GaussLegendre;

/// Tolerance on `| |x| - 1 |` for boundary points.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Coordinates of a point of the closed ball.
pub trait Point: Sized + AsRef<[Complex64]> {
    /// Validates coordinates produced by a group action.
    fn from_image(coords: Vec<Complex64>) -> Result<Self>;

    fn coords(&self) -> &[Complex64] {
        self.as_ref()
    }

    fn n(&self) -> usize {
        self.as_ref().len()
    }
}

fn norm_sq(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

/// A point of the open unit ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct BallPoint {
    z: Vec<Complex64>,
}

impl BallPoint {
    pub fn new(z: Vec<Complex64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let s = norm_sq(&z);
        if !(s < 1.0) {
            return Err(Error::OutsideBall { norm_sq: s });
        }
        Ok(Self { z })
    }

    pub fn origin(n: usize) -> Self {
        Self {
            z: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// `(0, ..., 0, u)` on the model axis.
    pub fn on_axis(n: usize, u: f64) -> Result<Self> {
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        z[n - 1] = Complex64::new(u, 0.0);
        Self::new(z)
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.z)
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.z
    }
}

impl AsRef<[Complex64]> for BallPoint {
    fn as_ref(&self) -> &[Complex64] {
        &self.z
    }
}

impl Point for BallPoint {
    fn from_image(coords: Vec<Complex64>) -> Result<Self> {
        Self::new(coords)
    }
}

impl TryFrom<Vec<Complex64>> for BallPoint {
    type Error = Error;

    fn try_from(z: Vec<Complex64>) -> Result<Self> {
        Self::new(z)
    }
}

impl From<BallPoint> for Vec<Complex64> {
    fn from(p: BallPoint) -> Self {
        p.z
    }
}

/// A point of the unit sphere, the boundary of the ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct BoundaryPoint {
    x: Vec<Complex64>,
}

impl BoundaryPoint {
    pub fn new(x: Vec<Complex64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let norm = norm_sq(&x).sqrt();
        if !((norm - 1.0).abs() <= BOUNDARY_TOL) {
            return Err(Error::NotOnBoundary { norm });
        }
        Ok(Self { x })
    }

    /// Homogeneous lift `(x; 1)`.
    pub fn lift(&self) -> Vec<Complex64> {
        let mut v = self.x.clone();
        v.push(Complex64::new(1.0, 0.0));
        v
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.x
    }
}

impl AsRef<[Complex64]> for BoundaryPoint {
    fn as_ref(&self) -> &[Complex64] {
        &self.x
    }
}

impl Point for BoundaryPoint {
    fn from_image(coords: Vec<Complex64>) -> Result<Self> {
        Self::new(coords)
    }
}

impl TryFrom<Vec<Complex64>> for BoundaryPoint {
    type Error = Error;

    fn try_from(x: Vec<Complex64>) -> Result<Self> {
        Self::new(x)
    }
}

impl From<BoundaryPoint> for Vec<Complex64> {
    fn from(p: BoundaryPoint) -> Self {
        p.x
    }
}

/// Last row of `a` applied to `(z; 1)`.
pub(crate) fn denominator(a: &CMatrix, z: &[Complex64]) -> Result<Complex64> {
    let n = a.dim() - 1;
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.len() });
    }
    let row = a.row(n);
    let mut d = row[n];
    for (r, zi) in row.iter().zip(z) {
        d += r * zi;
    }
    let scale = row.iter().map(|c| c.norm()).fold(1.0, f64::max);
    if !(d.norm() > 1e-14 * scale) {
        return Err(Error::VanishingDenominator { modulus: d.norm() });
    }
    Ok(d)
}

/// Fractional-linear image of raw coordinates (no ball/boundary check).
pub(crate) fn mobius_raw(a: &CMatrix, z: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.dim() - 1;
    let d = denominator(a, z)?;
    let inv = d.inv();
    Ok((0..n)
        .map(|i| {
            let row = a.row(i);
            let mut s = row[n];
            for (r, zj) in row.iter().zip(z) {
                s += r * zj;
            }
            s * inv
        })
        .collect())
}

/// Action of a group element on the ball or its boundary.
pub fn mobius_apply<P: Point>(a: &GroupElement, z: &P) -> Result<P> {
    P::from_image(mobius_raw(a.matrix(), z.coords())?)
}

/// `J(A, z) = (a_{n+1} . (z; 1))^{-(n+1)}`.
pub fn jacobian(a: &GroupElement, z: &impl AsRef<[Complex64]>) -> Result<Complex64> {
    let n = a.n();
    let d = denominator(a.matrix(), z.as_ref())?;
    Ok(d.powi(-(n as i32 + 1)))
}

/// [`jacobian`] as a log-complex.
pub fn jacobian_log(a: &GroupElement, z: &impl AsRef<[Complex64]>) -> Result<LogComplex> {
    jacobian_log_raw(a.matrix(), z.as_ref())
}

pub(crate) fn jacobian_log_raw(a: &CMatrix, z: &[Complex64]) -> Result<LogComplex> {
    let n = a.dim() - 1;
    let d = denominator(a, z)?;
    Ok(LogComplex::from_complex(d).powi(-(n as i64 + 1)))
}

/// `<z, w> = z . conj(w) - 1`.
pub fn pairing(z: &impl AsRef<[Complex64]>, w: &impl AsRef<[Complex64]>) -> Complex64 {
    pairing_raw(z.as_ref(), w.as_ref())
}

#[inline]
pub(crate) fn pairing_raw(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    debug_assert_eq!(z.len(), w.len());
    let mut s = Complex64::new(-1.0, 0.0);
    for (a, b) in z.iter().zip(w) {
        s += a * b.conj();
    }
    s
}

/// Bergman distance.
///
/// Evaluated as `sinh^2(rho/2) = (|z-w|^2 - sum_{i<j} |z_i w_j - z_j w_i|^2) /
/// ((1-|z|^2)(1-|w|^2))`, which equals `cosh^2(rho/2) - 1` without the
/// cancellation near the diagonal.
pub fn distance(z: &BallPoint, w: &BallPoint) -> Result<f64> {
    let (a, b) = (z.coords(), w.coords());
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let mut wedge = 0.0;
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            wedge += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
        }
    }
    let s = (diff - wedge) / ((1.0 - z.norm_sq()) * (1.0 - w.norm_sq()));
    if s < -1e-12 || !s.is_finite() {
        return Err(Error::InconsistentDistance { ratio: 1.0 + s });
    }
    Ok(2.0 * s.max(0.0).sqrt().asinh())
}

/// `ln(n! / pi^n)`.
pub fn ln_kernel_constant(n: usize) -> f64 {
    ln_factorial(n) - n as f64 * PI.ln()
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `K(z, w) = n!/pi^n (-<z,w>)^{-(n+1)}`.
pub fn bergman_kernel(z: &BallPoint, w: &BallPoint) -> Complex64 {
    bergman_kernel_log(z, w).to_complex()
}

pub fn bergman_kernel_log(z: &BallPoint, w: &BallPoint) -> LogComplex {
    kernel_log_raw(z.coords(), w.coords())
}

pub(crate) fn kernel_log_raw(z: &[Complex64], w: &[Complex64]) -> LogComplex {
    let n = z.len();
    LogComplex::from_complex(-pairing_raw(z, w))
        .powi(-(n as i64 + 1))
        .mul_ln(ln_kernel_constant(n))
}

/// `ln K(z, z)` for an interior point, as a real number.
pub(crate) fn ln_kernel_diag(z: &[Complex64]) -> f64 {
    let n = z.len();
    ln_kernel_constant(n) - (n as f64 + 1.0) * (1.0 - norm_sq(z)).ln()
}

/// `binom((n+1)(k-1)+n, n)`: exact while it fits in `u128`, always as a log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightConstant {
    pub exact: Option<u128>,
    pub ln_value: f64,
}

impl WeightConstant {
    pub fn value(&self) -> f64 {
        match self.exact {
            Some(v) => v as f64,
            None => self.ln_value.exp(),
        }
    }
}

pub fn weight_constant(n: usize, k: u32) -> Result<WeightConstant> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "weight constant needs n >= 1 and k >= 1 (got n={n}, k={k})"
        )));
    }
    let top = (n as u128 + 1) * (k as u128 - 1) + n as u128;
    let n128 = n as u128;
    let mut exact: Option<u128> = Some(1);
    let mut ln_value = 0.0;
    for i in 1..=n128 {
        let num = top - n128 + i;
        ln_value += (num as f64).ln() - (i as f64).ln();
        // binom(num, i) = binom(num-1, i-1) * num / i, exact at every step
        exact = exact.and_then(|acc| acc.checked_mul(num)).map(|p| p / i);
    }
    if let Some(v) = exact {
        ln_value = (v as f64).ln();
    }
    Ok(WeightConstant { exact, ln_value })
}

/// Stirling asymptote `(n+1)^n k^n / n!`.
pub fn weight_constant_asymptote(n: usize, k: u32) -> f64 {
    ln_weight_constant_asymptote(n, k).exp()
}

pub fn ln_weight_constant_asymptote(n: usize, k: u32) -> f64 {
    let nf = n as f64;
    nf * ((nf + 1.0).ln() + (k as f64).ln()) - ln_factorial(n)
}

/// A polynomial in one complex variable, `sum_j coeffs[j] w^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, w: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c)
    }
}

/// Weighted reproducing integral on the unit disc,
/// `c(1,k) int f(w) K(z,w)^k K(w,w)^{-k} dV(w)`, using a tensor rule of
/// `quad_nodes` Gauss-Legendre nodes in the radius and `2 quad_nodes` equally
/// spaced angles.
fn reproduce_disc(f: &Polynomial, k: u32, z: Complex64, quad_nodes: usize) -> Complex64 {
    let radial = GaussLegendre::rule(quad_nodes);
    let m = 2 * quad_nodes;
    let c = (2 * k - 1) as f64;
    let kk = k as i32;
    let mut re = Vec::with_capacity(quad_nodes * m);
    let mut im = Vec::with_capacity(quad_nodes * m);
    for (r, wr) in radial.mapped(0.0, 1.0) {
        // K(w,w)^{1-k} K(z,w)^k = pi^{-1} (1 - z conj(w))^{-2k} (1 - r^2)^{2k-2}, dV_e = r dr dtheta
        let radial_factor = wr * r * (1.0 - r * r).powi(2 * kk - 2) / PI * (2.0 * PI / m as f64);
        for j in 0..m {
            let w = Complex64::from_polar(r, 2.0 * PI * j as f64 / m as f64);
            let t = f.eval(w) * (Complex64::new(1.0, 0.0) - z * w.conj()).powi(-2 * kk) * radial_factor;
            re.push(t.re);
            im.push(t.im);
        }
    }
    Complex64::new(neumaier_sum(re), neumaier_sum(im)) * c
}

/// Max over `samples` of `|f(z) - c(1,k) int f K(z,.)^k K(.,.)^{-k} dV|`.
///
/// The integral is evaluated at `quad_nodes` and `2 quad_nodes`; the two must
/// agree to `1e-8` or the quadrature is reported as unconverged.
pub fn reproducing_check(
    f: &Polynomial,
    n: usize,
    k: u32,
    quad_nodes: usize,
    samples: &[Complex64],
) -> Result<f64> {
    if n != 1 {
        return Err(Error::InvalidParameter(format!(
            "reproducing check is implemented for n = 1 only (got {n})"
        )));
    }
    if k < 2 || f.degree() > 4 || !(2..=512).contains(&quad_nodes) {
        return Err(Error::InvalidParameter(format!(
            "reproducing check needs k >= 2, degree <= 4, 2 <= quad_nodes <= 512 (got k={k}, degree {}, {quad_nodes} nodes)",
            f.degree()
        )));
    }
    let mut worst: f64 = 0.0;
    for &z in samples {
        if !(z.norm() < 1.0) {
            return Err(Error::OutsideBall { norm_sq: z.norm_sqr() });
        }
        let coarse = reproduce_disc(f, k, z, quad_nodes);
        let fine = reproduce_disc(f, k, z, 2 * quad_nodes);
        let gap = (coarse - fine).norm();
        if gap > 1e-8 * (1.0 + fine.norm()) {
            return Err(Error::QuadratureCap { best: fine.norm(), error: gap });
        }
        worst = worst.max((f.eval(z) - fine).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_element;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gamma0(lambda: f64) -> GroupElement {
        let a = 0.5 / lambda + 0.5 * lambda;
        let b = -0.5 / lambda + 0.5 * lambda;
        GroupElement::new(CMatrix::from_real_rows(&[&[a, b], &[b, a]]).unwrap(), 1e-12).unwrap()
    }

    #[test]
    fn identity_action() {
        let z = BallPoint::new(vec![c(0.1, 0.2), c(-0.3, 0.0)]).unwrap();
        let id = GroupElement::identity(2);
        assert_eq!(mobius_apply(&id, &z).unwrap(), z);
        assert_eq!(jacobian(&id, &z).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn normal_form_moves_origin() {
        let g = gamma0(2.0);
        let img = mobius_apply(&g, &BallPoint::origin(1)).unwrap();
        assert!((img.coords()[0] - c(0.6, 0.0)).norm() < 1e-15);
        let j = jacobian(&g, &BallPoint::origin(1)).unwrap();
        assert!((j - c(16.0 / 25.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn boundary_maps_to_boundary() {
        let x = BoundaryPoint::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        for seed in 0..10 {
            let g = random_element(seed, 0.8, 2);
            let y = mobius_apply(&g, &x).unwrap();
            assert!((norm_sq(y.coords()).sqrt() - 1.0).abs() < 1e-12);
        }
        assert!(BoundaryPoint::new(vec![c(0.5, 0.0)]).is_err());
        assert!(BallPoint::new(vec![c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn pairing_values() {
        let o = BallPoint::origin(3);
        assert_eq!(pairing(&o, &o), c(-1.0, 0.0));
        let h = BallPoint::on_axis(3, 0.5).unwrap();
        assert!((pairing(&h, &h) - c(-0.75, 0.0)).norm() < 1e-16);
        let x = BoundaryPoint::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert!(pairing(&x, &x).norm() < 1e-15);
    }

    #[test]
    fn distance_values() {
        let o = BallPoint::origin(2);
        assert_eq!(distance(&o, &o).unwrap(), 0.0);
        let h = BallPoint::on_axis(2, 0.5).unwrap();
        let d = distance(&o, &h).unwrap();
        assert!((d - 3f64.ln()).abs() < 1e-14);
        // cosh^2 form away from the diagonal
        let z = BallPoint::new(vec![c(0.3, -0.1), c(0.2, 0.4)]).unwrap();
        let w = BallPoint::new(vec![c(-0.5, 0.2), c(0.1, 0.0)]).unwrap();
        let ratio = (pairing(&z, &w) * pairing(&w, &z)).re / (pairing(&z, &z) * pairing(&w, &w)).re;
        let want = 2.0 * ratio.sqrt().acosh();
        assert!((distance(&z, &w).unwrap() - want).abs() < 1e-12);
        assert!((distance(&w, &z).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn kernel_values() {
        let o1 = BallPoint::origin(1);
        assert!((bergman_kernel(&o1, &o1) - c(1.0 / PI, 0.0)).norm() < 1e-16);
        let o2 = BallPoint::origin(2);
        assert!((bergman_kernel(&o2, &o2) - c(2.0 / (PI * PI), 0.0)).norm() < 1e-16);
        let z = BallPoint::new(vec![c(0.3, -0.1), c(0.2, 0.4)]).unwrap();
        let w = BallPoint::new(vec![c(-0.5, 0.2), c(0.1, 0.0)]).unwrap();
        let kzw = bergman_kernel(&z, &w);
        let kwz = bergman_kernel(&w, &z);
        assert!((kzw - kwz.conj()).norm() <= 1e-15 * kzw.norm());
        assert!((ln_kernel_diag(z.coords()) - bergman_kernel(&z, &z).re.ln()).abs() < 1e-14);
    }

    #[test]
    fn weight_constants() {
        let exact = |n, k| weight_constant(n, k).unwrap().exact.unwrap();
        assert_eq!(exact(1, 1), 1);
        assert_eq!(exact(1, 2), 3);
        assert_eq!(exact(2, 2), 10);
        assert_eq!(exact(3, 5), 969);
        // binom(2k-1, 1) = 2k-1 vs 2k
        assert!((weight_constant_asymptote(1, 100) - 200.0).abs() < 1e-10);
        assert!((weight_constant_asymptote(2, 100) - 45000.0).abs() < 1e-8);
        assert!(weight_constant(0, 3).is_err());
    }

    #[test]
    fn weight_constant_overflow_goes_to_log() {
        let big = weight_constant(60, 1000).unwrap();
        assert!(big.exact.is_none());
        // ln binom(61*999+60, 60) summed independently
        let top = 61.0 * 999.0 + 60.0;
        let want: f64 = (1..=60).map(|i| ((top - 60.0 + i as f64) / i as f64).ln()).sum();
        assert!((big.ln_value - want).abs() < 1e-10 * want);
    }

    #[test]
    fn reproducing_polynomials() {
        let one = Polynomial::new(vec![c(1.0, 0.0)]);
        assert!(reproducing_check(&one, 1, 3, 32, &[c(0.0, 0.0)]).unwrap() <= 1e-6);
        let ident = Polynomial::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(reproducing_check(&ident, 1, 3, 32, &[c(0.3, 0.0)]).unwrap() <= 1e-6);
        let zero = Polynomial::new(vec![]);
        assert_eq!(reproducing_check(&zero, 1, 3, 16, &[c(0.2, 0.1)]).unwrap(), 0.0);
        let quartic = Polynomial::new(vec![c(0.5, 0.0), c(0.0, -1.0), c(0.0, 0.0), c(2.0, 1.0), c(-0.3, 0.0)]);
        let samples = [c(0.1, 0.2), c(-0.4, 0.3), c(0.0, -0.5)];
        assert!(reproducing_check(&quartic, 1, 4, 48, &samples).unwrap() <= 1e-9);
        assert!(reproducing_check(&one, 2, 3, 16, &[]).is_err());
    }
}
