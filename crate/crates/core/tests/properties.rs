mod common;

use common::{ball_point, hyperbolic, rel, rng};
use cxhyp::asymptotics::j2_asymptote;
use cxhyp::ball::{jacobian, mobius_apply};
use cxhyp::geodesic::{decompose, normal_form};
use cxhyp::group::{cyclic_elements, cyclic_index};
use cxhyp::linalg::random_element;
use cxhyp::series::{inner_product_geodesic, j2_integral, theta_geodesic};
use cxhyp::{ElementSet, Point, SeriesParams};
use proptest::prelude::*;
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mobius_inverse_round_trip(seed in 0u64..10_000, n in 1usize..=3, radius in 0.0f64..0.95) {
        let a = random_element(seed, 0.8, n);
        let z = ball_point(&mut rng(seed), n, radius);
        let back = mobius_apply(&a.inverse(), &mobius_apply(&a, &z).unwrap()).unwrap();
        for (p, q) in back.coords().iter().zip(z.coords()) {
            prop_assert!((p - q).norm() < 1e-11);
        }
    }

    // |J(A,z)|^2 = ((1-|Az|^2)/(1-|z|^2))^{n+1}, the diagonal of the kernel law
    #[test]
    fn jacobian_modulus_matches_volume_distortion(seed in 0u64..10_000, n in 1usize..=3) {
        let a = random_element(seed, 0.8, n);
        let z = ball_point(&mut rng(seed + 1), n, 0.9);
        let az = mobius_apply(&a, &z).unwrap();
        let want = ((1.0 - az.norm_sq()) / (1.0 - z.norm_sq())).powi(n as i32 + 1);
        let got = jacobian(&a, &z).unwrap().norm_sqr();
        prop_assert!((got / want - 1.0).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn decomposition_recovers_lambda(seed in 0u64..10_000, n in 1usize..=3) {
        let (g, lambda, _) = hyperbolic(seed, n);
        let dec = decompose(&g).unwrap();
        prop_assert!((dec.lambda / lambda - 1.0).abs() < 1e-8);
        // the inverse has the same axis and reports the same |lambda|
        let inv = decompose(&g.inverse()).unwrap();
        prop_assert!((inv.lambda / lambda - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cyclic_index_inverts_powers(lambda in 1.2f64..5.0, m in -6i64..=6) {
        let g = normal_form(lambda, &[-1.0, -1.0]).unwrap();
        let h = g.powi(m);
        prop_assert_eq!(cyclic_index(&g, &h).unwrap(), Some(m));
    }

    #[test]
    fn j2_grows_with_lambda(k in 2u32..40, n in 1usize..=3, lo in 1.1f64..3.0, step in 0.05f64..2.0) {
        let a = j2_integral(n, k, lo, 16).unwrap();
        let b = j2_integral(n, k, lo + step, 16).unwrap();
        prop_assert!(b.value > a.value);
    }
}

/// Composite Simpson rule on `[a, b]` with `m` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let inner: f64 = (1..m).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn j2_matches_simpson_grid() {
    // c(1,4) = 7, c(1,40) = 79, c(2,3) = 28; the grid resolves peaks of width ~1/sqrt(N)
    let cases = [
        (1usize, 4u32, 2.0f64, 7.0, 1.0 / PI),
        (1, 40, 2.0, 79.0, 1.0 / PI),
        (2, 3, 1.5, 28.0, (2.0 / (PI * PI)).powf(2.0 / 3.0)),
    ];
    for (n, k, lambda, c, pre) in cases {
        let big = ((n + 1) * k as usize) as f64;
        let t = (lambda * lambda - 1.0) / (lambda * lambda + 1.0);
        let grid = simpson(
            |u| {
                simpson(
                    |x| ((1.0 - x * x) * (1.0 - u * u)).powf(0.5 * big - 1.0) * (1.0 - x * u).powf(-big),
                    -1.0,
                    1.0,
                    1200,
                )
            },
            0.0,
            t,
            1200,
        );
        let want = c * pre * grid;
        let got = j2_integral(n, k, lambda, 16).unwrap().value;
        assert!((got / want - 1.0).abs() < 1e-6, "n={n}: {got} vs {want}");
    }
}

#[test]
fn j2_tracks_its_asymptote() {
    let got = j2_integral(1, 100, 2.0, 32).unwrap().value;
    let ratio = got / j2_asymptote(1, 100, 2.0).unwrap();
    assert!((0.99..=1.01).contains(&ratio), "{ratio}");
}

#[test]
fn cyclic_inner_product_sums_to_j2() {
    let dec = decompose(&normal_form(2.0, &[]).unwrap()).unwrap();
    let params = SeriesParams::new(1, 40).unwrap();
    let want = j2_integral(1, 40, 2.0, 32).unwrap().value;
    let mut last_gap = f64::INFINITY;
    for m in [1u32, 2, 8] {
        let ip = inner_product_geodesic(&dec, &params, &ElementSet::cyclic(&dec.gamma0, m)).unwrap();
        let gap = (ip.total.value.re / want - 1.0).abs();
        assert!(gap <= last_gap);
        last_gap = gap;
    }
    assert!(last_gap < 1e-8, "{last_gap:e}");
}

#[test]
fn theta_geodesic_invariance_improves_with_truncation() {
    let (g, _, _) = hyperbolic(5, 1);
    let dec = decompose(&g).unwrap();
    let params = SeriesParams::new(1, 4).unwrap();
    let z = ball_point(&mut rng(3), 1, 0.4);
    let gz = mobius_apply(&g, &z).unwrap();
    let j = jacobian(&g, &z).unwrap().powi(4);
    let gaps: Vec<f64> = [1u32, 3, 10]
        .iter()
        .map(|&m| {
            let set = ElementSet::cyclic_from(&dec, m);
            let a = theta_geodesic(&z, &dec, &params, &set).unwrap().value;
            let b = theta_geodesic(&gz, &dec, &params, &set).unwrap().value * j;
            rel(b, a)
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 1e-10, "{gaps:?}");
}

#[test]
fn large_powers_use_the_eigenbasis() {
    let g = normal_form(3.0, &[]).unwrap();
    let powers = cyclic_elements(&g, -40, 40).unwrap();
    assert_eq!(powers.len(), 81);
    assert!(powers.iter().any(|p| p.eigenbasis));
    for p in &powers {
        assert_eq!(cyclic_index(&g, &p.element).unwrap(), Some(p.m));
    }
}

#[test]
fn transverse_phases_do_not_change_series() {
    use cxhyp::linalg::CMatrix;
    use num_complex::Complex64;

    let (g, _, _) = hyperbolic(17, 3);
    let dec = decompose(&g).unwrap();
    // D commutes with gamma0 and has det 1; A D is an equally valid A_gamma
    let t = 0.7;
    let d = CMatrix::diagonal(&[
        Complex64::from_polar(1.0, t),
        Complex64::from_polar(1.0, -t),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
    ]);
    let mut other = dec.clone();
    other.a_gamma = cxhyp::GroupElement::new(dec.a_gamma.matrix().matmul(&d), 1e-8).unwrap();
    let params = SeriesParams::new(3, 3).unwrap();
    let z = ball_point(&mut rng(8), 3, 0.5);
    let set = ElementSet::cyclic_from(&dec, 4);
    let a = theta_geodesic(&z, &dec, &params, &set).unwrap().value;
    let b = theta_geodesic(&z, &other, &params, &set).unwrap().value;
    assert!(rel(b, a) < 1e-12, "{a} vs {b}");

    let model = |d: &cxhyp::HyperbolicDecomposition| ElementSet::cyclic_from(&dec, 4).conjugated(&d.a_gamma);
    let ia = inner_product_geodesic(&dec, &params, &model(&dec)).unwrap().total.value;
    let ib = inner_product_geodesic(&other, &params, &model(&other)).unwrap().total.value;
    assert!(rel(ib, ia) < 1e-12, "{ia} vs {ib}");
}
