//! Dense eigensolver for the small matrices of SU(n,1).
//!
//! Eigenvalues come from a Householder reduction to upper Hessenberg form
//! followed by single-shift complex QR with Wilkinson shifts and deflation.
//! Eigenvectors are then obtained by inverse iteration. Eigenvalues that agree
//! to [`CLUSTER_TOL`] are treated as one multiple eigenvalue: every member of
//! the cluster is iterated from a different start vector that is kept
//! orthogonal to the vectors already found, which yields a basis of the
//! eigenspace when the matrix is diagonalizable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{vec_norm, CMatrix};
use crate::error::{Error, Result};

/// Residual tolerance `||Av - av|| <= tol * ||v|| * max(1, ||A||_max)`.
pub const EIGEN_TOL: f64 = 1e-10;
/// Imaginary parts with `|Im a| <= REAL_SNAP_TOL * (1 + |a|)` are dropped.
pub const REAL_SNAP_TOL: f64 = 1e-8;
/// Relative separation below which eigenvalues form one cluster.
pub const CLUSTER_TOL: f64 = 1e-7;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 40;
const INVERSE_ITERATIONS: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
}

/// Reduce `a` to upper Hessenberg form by Householder reflections.
fn hessenberg(a: &CMatrix) -> CMatrix {
    let n = a.dim();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let xnorm = vec_norm(&x);
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = vec_norm(&v);
        if vnorm == 0.0 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= vnorm;
        }
        // H <- (I - 2vv*) H
        for j in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for (idx, vi) in v.iter().enumerate() {
                dot += vi.conj() * h[(k + 1 + idx, j)];
            }
            for (idx, vi) in v.iter().enumerate() {
                h[(k + 1 + idx, j)] -= 2.0 * vi * dot;
            }
        }
        // H <- H (I - 2vv*)
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for (idx, vi) in v.iter().enumerate() {
                dot += h[(i, k + 1 + idx)] * vi;
            }
            for (idx, vi) in v.iter().enumerate() {
                h[(i, k + 1 + idx)] -= 2.0 * dot * vi.conj();
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
    h
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// Eigenvalues of a general complex square matrix by shifted QR.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    let n = a.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(a);
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let eps = f64::EPSILON;
    let scale = h.max_norm().max(f64::MIN_POSITIVE);

    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == 0.0 { scale } else { s };
            if h[(l, l - 1)].norm() <= eps * s {
                h[(l, l - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if iter > MAX_SWEEPS_PER_EIGENVALUE {
            return Err(Error::EigenNoConvergence {
                iterations: total,
                deflated: n - 1 - hi,
                dim: n,
            });
        }

        let mu = if iter % 11 == 10 {
            // exceptional shift
            h[(hi, hi)] + Complex64::new(h[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            let a11 = h[(hi - 1, hi - 1)];
            let a12 = h[(hi - 1, hi)];
            let a21 = h[(hi, hi - 1)];
            let a22 = h[(hi, hi)];
            let tr = a11 + a22;
            let det = a11 * a22 - a12 * a21;
            let disc = (tr * tr * 0.25 - det).sqrt();
            let e1 = tr * 0.5 + disc;
            let e2 = tr * 0.5 - disc;
            if (e1 - a22).norm() <= (e2 - a22).norm() {
                e1
            } else {
                e2
            }
        };

        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for j in l..hi {
            let (c, s) = givens(h[(j, j)], h[(j + 1, j)]);
            for col in j..=hi {
                let x = h[(j, col)];
                let y = h[(j + 1, col)];
                h[(j, col)] = c * x + s * y;
                h[(j + 1, col)] = -s.conj() * x + c * y;
            }
            rots.push((c, s));
        }
        for (idx, j) in (l..hi).enumerate() {
            let (c, s) = rots[idx];
            for row in l..=(j + 1).min(hi) {
                let x = h[(row, j)];
                let y = h[(row, j + 1)];
                h[(row, j)] = x * c + y * s.conj();
                h[(row, j + 1)] = -x * s + y * c;
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    eig[0] = h[(0, 0)];
    Ok(eig)
}

/// Drop a negligible imaginary part.
pub fn snap_real(value: Complex64) -> Complex64 {
    if value.im.abs() <= REAL_SNAP_TOL * (1.0 + value.norm()) {
        Complex64::new(value.re, 0.0)
    } else {
        value
    }
}

fn start_vector(dim: usize, seed: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|i| {
            let t = (i * 7 + seed * 13 + 1) as f64;
            Complex64::new((t * 0.618_034).sin() + 1.1, (t * 0.414_214).cos() * 0.7)
        })
        .collect()
}

fn orthogonalize(v: &mut [Complex64], against: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for u in against {
            let un = u.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let dot: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot / un * ui;
            }
        }
    }
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let n = vec_norm(v);
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
    n
}

pub(crate) fn residual(a: &CMatrix, value: Complex64, v: &[Complex64]) -> f64 {
    let av = a.matvec(v);
    let r: f64 = av
        .iter()
        .zip(v)
        .map(|(x, y)| (x - value * y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    r / vec_norm(v).max(f64::MIN_POSITIVE)
}

/// Eigenvalues grouped into clusters of numerically equal values. Each
/// cluster holds the indices (into the input) of its members.
fn clusters(values: &[Complex64]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let hit = out.iter_mut().find(|c| {
            let w = values[c[0]];
            (v - w).norm() <= CLUSTER_TOL * (1.0 + v.norm().max(w.norm()))
        });
        match hit {
            Some(c) => c.push(i),
            None => out.push(vec![i]),
        }
    }
    out
}

/// Full eigen-decomposition: eigenvalues from shifted QR, eigenvectors from
/// inverse iteration (unit Euclidean norm). Nearly real eigenvalues are
/// snapped to the real axis.
pub fn eigen_decompose_matrix(a: &CMatrix) -> Result<Vec<EigenPair>> {
    let n = a.dim();
    let raw = eigenvalues(a)?;
    let scale = a.max_norm().max(1.0);
    let tol = EIGEN_TOL * scale;

    let mut pairs: Vec<Option<EigenPair>> = vec![None; n];
    for cluster in clusters(&raw) {
        let mean: Complex64 =
            cluster.iter().map(|&i| raw[i]).sum::<Complex64>() / cluster.len() as f64;
        let value = snap_real(mean);
        let shift = value + Complex64::new(1e-13 * (1.0 + value.norm()), 0.0);
        let shifted = a.sub(&CMatrix::identity(n).scale(shift));
        let lu = shifted.lu();
        let mut found: Vec<Vec<Complex64>> = Vec::new();
        for (member, &idx) in cluster.iter().enumerate() {
            let mut v = start_vector(n, member);
            orthogonalize(&mut v, &found);
            normalize(&mut v);
            let mut best = f64::INFINITY;
            for _ in 0..INVERSE_ITERATIONS {
                let mut next = lu.solve(&v);
                orthogonalize(&mut next, &found);
                if normalize(&mut next) == 0.0 || !next.iter().all(|z| z.re.is_finite()) {
                    break;
                }
                v = next;
                best = residual(a, value, &v);
                if best <= tol * 1e-3 {
                    break;
                }
            }
            if !(best <= tol) {
                return Err(Error::EigenResidual {
                    index: idx,
                    residual: best,
                    tolerance: tol,
                });
            }
            found.push(v.clone());
            pairs[idx] = Some(EigenPair { value, vector: v });
        }
    }
    Ok(pairs.into_iter().map(|p| p.expect("every index is in a cluster")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn upper_triangular_eigenvalues() {
        let a = CMatrix::from_real_rows(&[&[1.0, 2.0, 3.0], &[0.0, 4.0, 5.0], &[0.0, 0.0, 6.0]])
            .unwrap();
        let mut e: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|z| z.re).collect();
        e.sort_by(f64::total_cmp);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 4.0).abs() < 1e-12);
        assert!((e[2] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_has_unit_circle_spectrum() {
        let (s, co) = 0.7f64.sin_cos();
        let a = CMatrix::from_real_rows(&[&[co, -s], &[s, co]]).unwrap();
        let e = eigenvalues(&a).unwrap();
        for z in &e {
            assert!((z.norm() - 1.0).abs() < 1e-13);
            assert!((z.im.abs() - s).abs() < 1e-13);
        }
    }

    #[test]
    fn repeated_eigenvalue_gets_full_eigenspace() {
        let a = CMatrix::diagonal(&[c(1.0), c(1.0), c(3.0), c(1.0)]);
        let pairs = eigen_decompose_matrix(&a).unwrap();
        let ones: Vec<&EigenPair> = pairs.iter().filter(|p| (p.value - c(1.0)).norm() < 1e-12).collect();
        assert_eq!(ones.len(), 3);
        let basis = CMatrix::from_columns(&[
            ones[0].vector.clone(),
            ones[1].vector.clone(),
            ones[2].vector.clone(),
            pairs.iter().find(|p| (p.value - c(3.0)).norm() < 1e-12).unwrap().vector.clone(),
        ])
        .unwrap();
        assert!(basis.det().norm() > 1e-6);
    }

    #[test]
    fn defective_matrix_is_rejected() {
        let a = CMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(eigen_decompose_matrix(&a).is_err());
    }
}
