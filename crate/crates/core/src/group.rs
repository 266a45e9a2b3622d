//! Finite pieces of discrete groups: cyclic ranges, word balls, the genus-2
//! octagon group, and the off-axis displacement `delta_0`.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::ball::{distance, mobius_raw, BallPoint, Point};
use crate::error::{Error, Result};
use crate::geodesic::{normal_form_matrix, AxisSegment, HyperbolicDecomposition};
use crate::linalg::{CMatrix, GroupElement};

/// Above `|lambda|^|m|` this large, cyclic powers use the closed form.
pub const CLOSED_FORM_THRESHOLD: f64 = 1e4;
/// Longest word length accepted by [`word_ball`].
pub const MAX_WORD_LENGTH: usize = 12;
/// Default cap on the number of elements of a word ball.
pub const DEFAULT_ELEMENT_CAP: usize = 1_000_000;
/// Two stored elements closer than this (relative, max-norm) are the same.
pub const DEDUP_TOL: f64 = 1e-8;
const KEY_GRID: f64 = 1e6;

/// `gamma0^m` with the way it was produced.
#[derive(Clone, Debug, Serialize)]
pub struct CyclicPower {
    pub m: i64,
    pub element: GroupElement,
    /// Built from `lambda^m` in the eigenbasis instead of by matrix products.
    pub eigenbasis: bool,
}

/// Reads `(lambda, I_gamma)` back from a matrix in block normal form.
pub fn normal_form_data(gamma0: &GroupElement) -> Result<(f64, Vec<f64>)> {
    let m = gamma0.matrix();
    let n = gamma0.n();
    let (p, q) = (n - 1, n);
    let lambda = (m[(p, p)] + m[(p, q)]).re;
    let i_gamma: Vec<f64> = (0..n - 1).map(|i| m[(i, i)].re.signum()).collect();
    if !(lambda * lambda > 1.0) {
        return Err(Error::InvalidParameter("element is not a hyperbolic normal form".into()));
    }
    let want = normal_form_matrix(lambda, &i_gamma);
    let residual = m.max_abs_diff(&want);
    if residual > 1e-10 * m.max_norm().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "element is not in block normal form (residual {residual:.3e})"
        )));
    }
    Ok((lambda, i_gamma))
}

fn closed_form_power(lambda: f64, i_gamma: &[f64], m: i64) -> CMatrix {
    let lm = lambda.powi(m as i32);
    let im: Vec<f64> = i_gamma.iter().map(|s| s.powi(m as i32)).collect();
    normal_form_matrix(lm, &im)
}

/// `gamma0^m` for `m` in `m_min..=m_max`.
pub fn cyclic_elements(gamma0: &GroupElement, m_min: i64, m_max: i64) -> Result<Vec<CyclicPower>> {
    if m_min > m_max {
        return Err(Error::EmptyRange);
    }
    let (lambda, i_gamma) = normal_form_data(gamma0)?;
    let ln_lam = lambda.abs().ln();
    (m_min..=m_max)
        .map(|m| {
            if m == 0 {
                return Ok(CyclicPower {
                    m,
                    element: GroupElement::identity(gamma0.n()),
                    eigenbasis: false,
                });
            }
            if (m.unsigned_abs() as f64) * ln_lam <= CLOSED_FORM_THRESHOLD.ln() {
                let p = gamma0.powi(m);
                let element = GroupElement::new(p.into_matrix(), 1e-8)?;
                Ok(CyclicPower {
                    m,
                    element,
                    eigenbasis: false,
                })
            } else {
                Ok(CyclicPower {
                    m,
                    element: GroupElement::from_trusted(closed_form_power(lambda, &i_gamma, m), 1e-8),
                    eigenbasis: true,
                })
            }
        })
        .collect()
}

/// `m` with `h = gamma0^m` (up to a central scalar), if any.
pub fn cyclic_index(gamma0: &GroupElement, h: &GroupElement) -> Result<Option<i64>> {
    let (lambda, i_gamma) = normal_form_data(gamma0)?;
    let n = gamma0.n();
    if h.n() != n {
        return Err(Error::DimensionMismatch { expected: n + 1, got: h.n() + 1 });
    }
    // for h = omega gamma0^m: |h_nn| + |h_{n-1,n}| = |lambda|^|m| and h moves
    // 0 towards the sign of m; unlike tanh(m ln|lambda|) this survives large |m|
    let (p, q) = (n - 1, n);
    let (a, b) = (h.matrix()[(q, q)], h.matrix()[(p, q)]);
    let ln_lam = lambda.abs().ln();
    let steps = ((a.norm() + b.norm()).ln() / ln_lam).round();
    if !steps.is_finite() {
        return Ok(None);
    }
    let forward = (b / a).re >= 0.0;
    let m = if forward { steps as i64 } else { -(steps as i64) };
    let want = closed_form_power(lambda, &i_gamma, m);
    let tol = DEDUP_TOL * want.max_norm().max(1.0);
    let dim = (n + 1) as f64;
    for r in 0..=n {
        let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / dim);
        if h.matrix().scale(omega).max_abs_diff(&want) <= tol {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// One element of a word ball with a shortest word that produces it.
/// Letters are `+(i+1)` for generator `i` and `-(i+1)` for its inverse.
#[derive(Clone, Debug, Serialize)]
pub struct BallElement {
    pub element: GroupElement,
    pub word_length: usize,
    pub word: Vec<i32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupBall {
    pub generators: Vec<GroupElement>,
    pub max_word_length: usize,
    /// Sorted by word length; the identity comes first.
    pub elements: Vec<BallElement>,
}

impl GroupBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements grouped by word length `0..=max_word_length`.
    pub fn shells(&self) -> Vec<Vec<GroupElement>> {
        let mut shells = vec![Vec::new(); self.max_word_length + 1];
        for e in &self.elements {
            shells[e.word_length].push(e.element.clone());
        }
        shells
    }

    pub fn matrices(&self) -> impl Iterator<Item = &GroupElement> {
        self.elements.iter().map(|e| &e.element)
    }

    /// Index of a stored element equal to `g`, if any.
    pub fn find(&self, g: &GroupElement) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| same_element(e.element.matrix(), g.matrix()))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct WordBallConfig {
    pub max_word_length: usize,
    pub cap: usize,
    /// Compute frontier products on the rayon pool. The merge is sequential
    /// in both modes, so the result does not depend on this flag.
    pub parallel: bool,
}

impl WordBallConfig {
    pub fn new(max_word_length: usize) -> Self {
        Self {
            max_word_length,
            cap: DEFAULT_ELEMENT_CAP,
            parallel: true,
        }
    }
}

fn same_element(a: &CMatrix, b: &CMatrix) -> bool {
    a.max_abs_diff(b) <= DEDUP_TOL * a.max_norm().max(1.0)
}

fn dedup_key(a: &CMatrix) -> i64 {
    // stored duplicates differ by at most DEDUP_TOL * max(1, |A|) per entry
    (a[(0, 0)].re / a.max_norm().max(1.0) * KEY_GRID).round() as i64
}

struct DedupIndex {
    buckets: HashMap<i64, Vec<usize>>,
}

impl DedupIndex {
    fn find(&self, a: &CMatrix, elements: &[BallElement]) -> Option<usize> {
        let key = dedup_key(a);
        for k in [key, key - 1, key + 1] {
            if let Some(b) = self.buckets.get(&k) {
                if let Some(&i) = b.iter().find(|&&i| same_element(elements[i].element.matrix(), a)) {
                    return Some(i);
                }
            }
        }
        None
    }

    fn insert(&mut self, a: &CMatrix, index: usize) {
        self.buckets.entry(dedup_key(a)).or_default().push(index);
    }
}

/// All distinct products of at most `L` generators and their inverses,
/// grown shell by shell from the identity.
pub fn word_ball(generators: &[GroupElement], config: WordBallConfig) -> Result<GroupBall> {
    let Some(first) = generators.first() else {
        return Err(Error::EmptyElementSet);
    };
    let n = first.n();
    if let Some(g) = generators.iter().find(|g| g.n() != n) {
        return Err(Error::DimensionMismatch { expected: n + 1, got: g.n() + 1 });
    }
    if config.max_word_length > MAX_WORD_LENGTH {
        return Err(Error::InvalidParameter(format!(
            "word length {} above the guard {MAX_WORD_LENGTH}",
            config.max_word_length
        )));
    }
    let mut letters: Vec<(i32, GroupElement)> = Vec::with_capacity(2 * generators.len());
    for (i, g) in generators.iter().enumerate() {
        letters.push((i as i32 + 1, g.clone()));
        letters.push((-(i as i32 + 1), g.inverse()));
    }

    let identity = GroupElement::identity(n);
    let mut elements = vec![BallElement {
        element: identity.clone(),
        word_length: 0,
        word: Vec::new(),
    }];
    let mut index = DedupIndex { buckets: HashMap::new() };
    index.insert(identity.matrix(), 0);
    let mut frontier: Vec<usize> = vec![0];

    for length in 1..=config.max_word_length {
        let expand = |&i: &usize| -> Vec<(Vec<i32>, GroupElement)> {
            let base = &elements[i];
            let last = base.word.last().copied();
            letters
                .iter()
                .filter(|(l, _)| last != Some(-l))
                .map(|(l, g)| {
                    let mut word = base.word.clone();
                    word.push(*l);
                    (word, &base.element * g)
                })
                .collect()
        };
        let candidates: Vec<Vec<(Vec<i32>, GroupElement)>> = if config.parallel {
            frontier.par_iter().map(expand).collect()
        } else {
            frontier.iter().map(expand).collect()
        };
        let mut next = Vec::new();
        for (word, element) in candidates.into_iter().flatten() {
            if index.find(element.matrix(), &elements).is_some() {
                continue;
            }
            if elements.len() >= config.cap {
                return Err(Error::ElementCap {
                    cap: config.cap,
                    word_length: length,
                    count: elements.len(),
                });
            }
            let idx = elements.len();
            index.insert(element.matrix(), idx);
            elements.push(BallElement {
                element,
                word_length: length,
                word,
            });
            next.push(idx);
        }
        frontier = next;
    }
    Ok(GroupBall {
        generators: generators.to_vec(),
        max_word_length: config.max_word_length,
        elements,
    })
}

fn su11(a: Complex64, b: Complex64) -> CMatrix {
    CMatrix::from_rows(&[vec![a, b], vec![b.conj(), a.conj()]]).expect("2x2")
}

/// Side pairings of the regular hyperbolic octagon with angles `pi/4`,
/// arranged as `[a1, b1, a2, b2, a1^-1, b1^-1, a2^-1, b2^-1]` with
/// `[a1, b1][a2, b2] = I`.
///
/// `A_k = R(k pi/4) T R(-k pi/4)` with `T` the translation along the real
/// axis by `2 arccosh(1 + sqrt 2)` and `R(t) = diag(e^{it/2}, e^{-it/2})`;
/// these satisfy `A0 A1^-1 A2 A3^-1 A0^-1 A1 A2^-1 A3 = I`, and the
/// commutator generators are words in them.
pub fn octagon_group() -> Vec<GroupElement> {
    let a = 1.0 + std::f64::consts::SQRT_2;
    let b = (a * a - 1.0).sqrt();
    let t = su11(Complex64::new(a, 0.0), Complex64::new(b, 0.0));
    let rot = |theta: f64| {
        let e = Complex64::from_polar(1.0, theta / 2.0);
        CMatrix::diagonal(&[e, e.conj()])
    };
    let ak: Vec<GroupElement> = (0..4)
        .map(|k| {
            let th = k as f64 * std::f64::consts::FRAC_PI_4;
            GroupElement::from_trusted(rot(th).matmul(&t).matmul(&rot(-th)), 1e-12)
        })
        .collect();
    let inv = |g: &GroupElement| g.inverse();
    let a1 = ak[0].clone();
    let b1 = &(&inv(&ak[1]) * &ak[2]) * &inv(&ak[3]);
    let a2 = &inv(&ak[1]) * &ak[2];
    let b2 = &inv(&ak[3]) * &ak[1];
    let gens = [a1, b1, a2, b2];
    let mut out: Vec<GroupElement> = gens.to_vec();
    out.extend(gens.iter().map(inv));
    out
}

/// `max |[a1,b1][a2,b2] - I|` with `[a,b] = a b a^-1 b^-1`.
pub fn octagon_relation_residual(gens: &[GroupElement]) -> f64 {
    let c = |a: &GroupElement, b: &GroupElement| &(&(a * b) * &a.inverse()) * &b.inverse();
    let r = &c(&gens[0], &gens[1]) * &c(&gens[2], &gens[3]);
    r.matrix().max_abs_diff(&CMatrix::identity(2))
}

/// `A_gamma^{-1} h A_gamma` for each `h`.
pub fn conjugate_into_model<'a>(
    elements: impl IntoIterator<Item = &'a GroupElement>,
    dec: &HyperbolicDecomposition,
) -> Vec<GroupElement> {
    let a = &dec.a_gamma;
    let ainv = a.inverse();
    elements.into_iter().map(|h| &(&ainv * h) * a).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Displacement {
    pub delta0: f64,
    /// Index (into the input list) of the minimizing element.
    pub element: usize,
    /// Axis coordinates of the minimizing `w` and `xi`.
    pub w: f64,
    pub xi: f64,
    /// Elements left after removing the cyclic subgroup.
    pub candidates: usize,
}

const GRID: usize = 64;
const GOLDEN_ROUNDS: usize = 12;

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let candidates = [(lo, f(lo)), (hi, f(hi)), (x1, f1), (x2, f2)];
    candidates
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty")
}

/// Minimum of `d(h w, xi)` over `w, xi` on the fundamental axis segment and
/// `h` in `elements` (model coordinates) outside `<gamma0>`.
///
/// Each element is scanned on a 64x64 grid and the best grid point is refined
/// by alternating golden-section searches in `w` and `xi`.
pub fn min_displacement_off_axis(
    elements: &[GroupElement],
    segment: &AxisSegment,
    gamma0: &GroupElement,
) -> Result<Displacement> {
    let n = segment.n;
    let mut kept = Vec::new();
    for (i, h) in elements.iter().enumerate() {
        if cyclic_index(gamma0, h)?.is_none() {
            kept.push(i);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyElementSet);
    }
    let t = segment.endpoint_coord;
    let axis = |u: f64| BallPoint::on_axis(n, u).expect("segment inside the ball");
    let objective = |h: &GroupElement, w: f64, xi: f64| -> f64 {
        let hw = mobius_raw(h.matrix(), axis(w).coords())
            .and_then(BallPoint::new)
            .and_then(|p| distance(&p, &axis(xi)));
        hw.unwrap_or(f64::INFINITY)
    };
    let per_element: Vec<(f64, f64, f64)> = kept
        .par_iter()
        .map(|&i| {
            let h = &elements[i];
            let step = t / (GRID - 1) as f64;
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for a in 0..GRID {
                for b in 0..GRID {
                    let (w, xi) = (a as f64 * step, b as f64 * step);
                    let d = objective(h, w, xi);
                    if d < best.0 {
                        best = (d, w, xi);
                    }
                }
            }
            let (mut d, mut w, mut xi) = best;
            for _ in 0..GOLDEN_ROUNDS {
                let (nw, dw) = golden_section(|s| objective(h, s, xi), (w - step).max(0.0), (w + step).min(t));
                if dw <= d {
                    w = nw;
                    d = dw;
                }
                let (nx, dx) = golden_section(|s| objective(h, w, s), (xi - step).max(0.0), (xi + step).min(t));
                if dx <= d {
                    xi = nx;
                    d = dx;
                }
            }
            (d, w, xi)
        })
        .collect();
    let (best, &(delta0, w, xi)) = per_element
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("nonempty");
    Ok(Displacement {
        delta0,
        element: kept[best],
        w,
        xi,
        candidates: kept.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{classify, normal_form, Classification};

    fn translation_imag(s: f64) -> GroupElement {
        let m = su11(Complex64::new(s.cosh(), 0.0), Complex64::new(0.0, s.sinh()));
        GroupElement::new(m, 1e-12).unwrap()
    }

    #[test]
    fn cyclic_powers() {
        let g = normal_form(2.0, &[]).unwrap();
        let p = cyclic_elements(&g, 0, 2).unwrap();
        assert_eq!(p[0].element.matrix(), &CMatrix::identity(2));
        assert!(p[1].element.matrix().max_abs_diff(g.matrix()) < 1e-15);
        let four = normal_form(4.0, &[]).unwrap();
        assert!(p[2].element.matrix().max_abs_diff(four.matrix()) < 1e-13);
        assert!(cyclic_elements(&g, 1, 0).is_err());
        let far = cyclic_elements(&g, 40, 40).unwrap();
        assert!(far[0].eigenbasis);
        let neg = cyclic_elements(&g, -3, -3).unwrap();
        assert!(neg[0].element.matrix().max_abs_diff(normal_form(8.0, &[]).unwrap().inverse().matrix()) < 1e-12);
    }

    #[test]
    fn cyclic_index_recovers_power() {
        let g = normal_form(2.0, &[-1.0, -1.0]).unwrap();
        for m in -5..=5 {
            let h = g.powi(m);
            assert_eq!(cyclic_index(&g, &h).unwrap(), Some(m));
        }
        let other = normal_form(3.0, &[-1.0, -1.0]).unwrap();
        assert_eq!(cyclic_index(&g, &other).unwrap(), None);
    }

    #[test]
    fn ball_sizes() {
        let g = normal_form(2.0, &[]).unwrap();
        let b0 = word_ball(std::slice::from_ref(&g), WordBallConfig::new(0)).unwrap();
        assert_eq!(b0.len(), 1);
        let b3 = word_ball(std::slice::from_ref(&g), WordBallConfig::new(3)).unwrap();
        assert_eq!(b3.len(), 7);
        for m in -3..=3 {
            assert!(b3.find(&g.powi(m)).is_some());
        }
        assert!(word_ball(std::slice::from_ref(&g), WordBallConfig::new(13)).is_err());
        let capped = WordBallConfig { cap: 4, ..WordBallConfig::new(3) };
        assert!(matches!(word_ball(&[g], capped), Err(Error::ElementCap { .. })));
    }

    #[test]
    fn octagon() {
        let gens = octagon_group();
        assert_eq!(gens.len(), 8);
        assert!(octagon_relation_residual(&gens) <= 1e-7);
        for g in &gens {
            assert!(g.validate(1e-9).member);
            assert!(g.matrix().max_abs_diff(&CMatrix::identity(2)) > 0.1);
            let class = classify(g).unwrap();
            assert!(
                matches!(class, Classification::HyperbolicRealEndpoints | Classification::Hyperbolic),
                "{class:?}"
            );
        }
    }

    #[test]
    fn octagon_ball_matches_brute_force() {
        let gens = octagon_group();
        let ball = word_ball(&gens[..4], WordBallConfig::new(2)).unwrap();
        let mut letters: Vec<GroupElement> = gens.clone();
        letters.push(GroupElement::identity(1));
        let mut distinct: Vec<CMatrix> = Vec::new();
        for a in &letters {
            for b in &letters {
                let p = (a * b).into_matrix();
                if !distinct.iter().any(|d| same_element(d, &p)) {
                    distinct.push(p);
                }
            }
        }
        assert_eq!(ball.len(), distinct.len());
        let serial = word_ball(&gens[..4], WordBallConfig { parallel: false, ..WordBallConfig::new(2) }).unwrap();
        assert_eq!(serial.len(), ball.len());
        for (x, y) in serial.elements.iter().zip(&ball.elements) {
            assert_eq!(x.word, y.word);
        }
    }

    #[test]
    fn displacement_of_perpendicular_translation() {
        let s = 0.4;
        let seg = AxisSegment::new(1, 2.0).unwrap();
        let gamma0 = normal_form(2.0, &[]).unwrap();
        let d = min_displacement_off_axis(&[translation_imag(s)], &seg, &gamma0).unwrap();
        assert!((d.delta0 - 2.0 * s).abs() < 1e-6, "{d:?}");
        // axis powers are filtered out
        assert!(matches!(
            min_displacement_off_axis(&[gamma0.clone(), gamma0.powi(-2)], &seg, &gamma0),
            Err(Error::EmptyElementSet)
        ));
        let more = min_displacement_off_axis(&[translation_imag(s), gamma0.clone(), translation_imag(0.3)], &seg, &gamma0)
            .unwrap();
        assert_eq!(more.candidates, 2);
        assert!(more.delta0 <= d.delta0);
    }
}
