#![allow(dead_code)]

use cxhyp::geodesic::normal_form;
use cxhyp::linalg::random_real_element;
use cxhyp::{BallPoint, GroupElement};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point of the ball with norm below `radius`, direction uniform.
pub fn ball_point(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> BallPoint {
    let v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    let r = radius * rng.random::<f64>();
    BallPoint::new(v.into_iter().map(|c| c * (r / norm)).collect()).expect("inside the ball")
}

/// `A gamma0 A^{-1}` with `A` real, `lambda` in `[1.3, 4)` and an `I_gamma`
/// with an even number of `-1` entries.
pub fn hyperbolic(seed: u64, n: usize) -> (GroupElement, f64, Vec<f64>) {
    let mut r = rng(seed ^ 0x9e37_79b9);
    let lambda = r.random_range(1.3..4.0);
    let mut i_gamma: Vec<f64> = (0..n - 1).map(|_| if r.random::<bool>() { -1.0 } else { 1.0 }).collect();
    if i_gamma.iter().filter(|&&s| s < 0.0).count() % 2 == 1 {
        i_gamma[0] = -i_gamma[0];
    }
    // keep the -1 block first, as the decomposition orders it
    i_gamma.sort_by(|a, b| a.total_cmp(b));
    let a = random_real_element(seed, 0.6, n);
    let g = &(&a * &normal_form(lambda, &i_gamma).expect("valid normal form")) * &a.inverse();
    (g, lambda, i_gamma)
}

pub fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
