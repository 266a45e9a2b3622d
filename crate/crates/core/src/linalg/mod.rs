//! Linear algebra over C^{n+1} with the signature (n,1) Hermitian form
//! `<<u,v>> = u_1 conj(v_1) + ... + u_n conj(v_n) - u_{n+1} conj(v_{n+1})`.

mod eigen;
mod matrix;

use std::ops::Mul;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use eigen::{eigenvalues, snap_real, EigenPair, CLUSTER_TOL, EIGEN_TOL, REAL_SNAP_TOL};
pub use matrix::{CMatrix, Lu};

use crate::error::{Error, Result};

/// Default membership tolerance for SU(n,1).
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Default tolerance for form-orthonormality.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// The diagonal form `diag(1, ..., 1, -1)` of size n+1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SigmaForm {
    n: usize,
}

impl SigmaForm {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "ball dimension must be positive");
        Self { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn matrix(&self) -> CMatrix {
        let mut diag = vec![Complex64::new(1.0, 0.0); self.n + 1];
        diag[self.n] = Complex64::new(-1.0, 0.0);
        CMatrix::diagonal(&diag)
    }

    /// `<<u,v>>`; panics on length mismatch, see [`minkowski_form`] for the checked version.
    #[inline]
    pub fn apply(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        debug_assert_eq!(u.len(), self.n + 1);
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..self.n {
            s += u[i] * v[i].conj();
        }
        s - u[self.n] * v[self.n].conj()
    }

    /// `sigma * conj(A)^T * sigma`, the inverse of any A preserving the form.
    pub fn form_inverse(&self, a: &CMatrix) -> CMatrix {
        let n = self.n;
        CMatrix::from_fn(n + 1, |i, j| {
            let s = if (i == n) != (j == n) { -1.0 } else { 1.0 };
            a[(j, i)].conj() * s
        })
    }
}

/// Checked `<<u,v>>`.
pub fn minkowski_form(u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if u.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: u.len(),
        });
    }
    Ok(SigmaForm::new(u.len() - 1).apply(u, v))
}

/// Residuals of the SU(n,1) membership test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MembershipReport {
    pub member: bool,
    /// `max |(A^* sigma A - sigma)_ij|`
    pub form_residual: f64,
    /// `|det A - 1|`
    pub det_residual: f64,
}

pub fn validate_su(a: &CMatrix, tol: f64) -> Result<MembershipReport> {
    let dim = a.dim();
    if dim < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: dim,
        });
    }
    let sigma = SigmaForm::new(dim - 1).matrix();
    let gram = a.adjoint().matmul(&sigma).matmul(a);
    let form_residual = gram.max_abs_diff(&sigma);
    let det_residual = (a.det() - Complex64::new(1.0, 0.0)).norm();
    let member = form_residual <= tol && det_residual <= tol && a.is_finite();
    Ok(MembershipReport {
        member,
        form_residual,
        det_residual,
    })
}

/// An element of SU(n,1) with the tolerance it was validated at.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct GroupElement {
    matrix: CMatrix,
    tol: f64,
}

impl GroupElement {
    /// Validates `matrix` against the group at `tol`.
    pub fn new(matrix: CMatrix, tol: f64) -> Result<Self> {
        let report = validate_su(&matrix, tol)?;
        if !report.member {
            return Err(Error::NotInGroup {
                form_residual: report.form_residual,
                det_residual: report.det_residual,
            });
        }
        Ok(Self { matrix, tol })
    }

    /// Wraps a matrix known to be in the group by construction (products,
    /// closed-form powers). The tolerance is recorded but not checked.
    pub fn from_trusted(matrix: CMatrix, tol: f64) -> Self {
        Self { matrix, tol }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: CMatrix::identity(n + 1),
            tol: MEMBERSHIP_TOL,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Ball dimension n.
    pub fn n(&self) -> usize {
        self.matrix.dim() - 1
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: SigmaForm::new(self.n()).form_inverse(&self.matrix),
            tol: self.tol,
        }
    }

    pub fn validate(&self, tol: f64) -> MembershipReport {
        validate_su(&self.matrix, tol).expect("square by construction")
    }

    pub fn powi(&self, m: i64) -> Self {
        let base = if m < 0 { self.inverse() } else { self.clone() };
        let e = m.unsigned_abs();
        Self {
            matrix: base.matrix.powi(e),
            tol: self.tol * (1 + e) as f64,
        }
    }
}

// membership tolerances add under products
#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for &GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: &GroupElement) -> GroupElement {
        GroupElement {
            matrix: self.matrix.matmul(&rhs.matrix),
            tol: self.tol + rhs.tol,
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    rng.random_range(-scale..=scale)
}

/// A random element of the Lie algebra su(n,1): `S^* sigma + sigma S = 0`,
/// `tr S = 0`, entries bounded by `scale`.
pub fn random_algebra_element(seed: u64, scale: f64, n: usize, real: bool) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = n + 1;
    // complex entries draw re and im from a square inside the disc of radius scale
    let part = if real { scale } else { scale / std::f64::consts::SQRT_2 };
    let mut s = CMatrix::zeros(dim);
    // skew-Hermitian upper-left block
    for i in 0..n {
        for j in (i + 1)..n {
            let re = uniform(&mut rng, part);
            let im = if real { 0.0 } else { uniform(&mut rng, part) };
            let z = Complex64::new(re, im);
            s[(i, j)] = z;
            s[(j, i)] = -z.conj();
        }
        if !real {
            s[(i, i)] = Complex64::new(0.0, uniform(&mut rng, scale / n as f64));
        }
    }
    // boost block: b and b^*
    for i in 0..n {
        let re = uniform(&mut rng, part);
        let im = if real { 0.0 } else { uniform(&mut rng, part) };
        let z = Complex64::new(re, im);
        s[(i, n)] = z;
        s[(n, i)] = z.conj();
    }
    let tr: Complex64 = (0..n).map(|i| s[(i, i)]).sum();
    s[(n, n)] = -tr;
    s
}

/// `exp(S)` for a pseudorandom `S` in su(n,1); deterministic per seed.
pub fn random_element(seed: u64, scale: f64, n: usize) -> GroupElement {
    let s = random_algebra_element(seed, scale, n, false);
    GroupElement::from_trusted(s.exp(), MEMBERSHIP_TOL)
}

/// Like [`random_element`] but with real algebra data, so the element lies in
/// SO(n,1) and maps real boundary points to real boundary points.
pub fn random_real_element(seed: u64, scale: f64, n: usize) -> GroupElement {
    let s = random_algebra_element(seed, scale, n, true);
    GroupElement::from_trusted(s.exp(), MEMBERSHIP_TOL)
}

/// Pure rotation `exp(S)` with the boost block of `S` zero; such elements fix
/// the origin and have spectrum on the unit circle.
pub fn random_rotation(seed: u64, scale: f64, n: usize) -> GroupElement {
    let mut s = random_algebra_element(seed, scale, n, false);
    for i in 0..n {
        s[(i, n)] = Complex64::new(0.0, 0.0);
        s[(n, i)] = Complex64::new(0.0, 0.0);
    }
    GroupElement::from_trusted(s.exp(), MEMBERSHIP_TOL)
}

/// Eigen-decomposition of a group element. See [`eigen`] for the method.
pub fn eigen_decompose(a: &GroupElement) -> Result<Vec<EigenPair>> {
    eigen::eigen_decompose_matrix(a.matrix())
}

/// Modified Gram-Schmidt with respect to `<<.,.>>`, with one
/// reorthogonalization pass. Fails if the form is not positive definite on
/// the span of the inputs.
pub fn gram_orthonormalize(vectors: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let Some(first) = vectors.first() else {
        return Ok(Vec::new());
    };
    let dim = first.len();
    if dim < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: dim,
        });
    }
    if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let form = SigmaForm::new(dim - 1);
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let scale = matrix::vec_norm(v).max(f64::MIN_POSITIVE);
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let p = form.apply(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= p * qi;
                }
            }
        }
        let pivot = form.apply(&w, &w).re;
        if pivot <= ORTHONORMAL_TOL * scale * scale {
            return Err(Error::NotPositiveDefinite {
                index,
                pivot: pivot / (scale * scale),
            });
        }
        let norm = pivot.sqrt();
        for wi in w.iter_mut() {
            *wi /= norm;
        }
        out.push(w);
    }
    Ok(out)
}
