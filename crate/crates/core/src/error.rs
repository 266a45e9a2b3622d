use thiserror::Error;

use crate::geodesic::Classification;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not in SU(n,1): form residual {form_residual:.3e}, det residual {det_residual:.3e}")]
    NotInGroup {
        form_residual: f64,
        det_residual: f64,
    },

    #[error("form is not positive definite on the span (pivot {pivot:.3e} at vector {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("shifted QR did not converge after {iterations} iterations ({deflated} of {dim} eigenvalues deflated)")]
    EigenNoConvergence {
        iterations: usize,
        deflated: usize,
        dim: usize,
    },

    #[error("eigenvector refinement failed for eigenvalue {index}: residual {residual:.3e} > {tolerance:.3e}")]
    EigenResidual {
        index: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("fractional-linear denominator vanishes ({modulus:.3e})")]
    VanishingDenominator { modulus: f64 },

    #[error("point is not in the open unit ball (|z|^2 = {norm_sq})")]
    OutsideBall { norm_sq: f64 },

    #[error("point is not on the unit sphere (|x| = {norm})")]
    NotOnBoundary { norm: f64 },

    #[error("inconsistent distance inputs: cosh^2 ratio {ratio} < 1")]
    InconsistentDistance { ratio: f64 },

    #[error("element is not hyperbolic with real endpoints (classified as {0:?})")]
    NotHyperbolic(Classification),

    #[error("fixed points are degenerate: |<X,Y>| = {pairing:.3e}")]
    DegenerateEndpoints { pairing: f64 },

    #[error("normal form reconstruction residual {residual:.3e} exceeds {tolerance:.3e}")]
    NormalFormMismatch { residual: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature subdivision cap reached: best value {best}, error estimate {error:.3e}")]
    QuadratureCap { best: f64, error: f64 },

    #[error("no interior critical point of f in [{lo}, {hi}]")]
    NoCriticalPoint { lo: f64, hi: f64 },

    #[error("critical point {x0} is not a maximum (f'' = {second})")]
    NotMaximum { x0: f64, second: f64 },

    #[error("word ball exceeded {cap} elements at word length {word_length} ({count} stored)")]
    ElementCap {
        cap: usize,
        word_length: usize,
        count: usize,
    },

    #[error("empty range")]
    EmptyRange,

    #[error("no group elements remain after excluding the cyclic subgroup")]
    EmptyElementSet,

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
