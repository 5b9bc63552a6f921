//! Periodic orbit enumeration, orbit averages and distances to orbits.
//!
//! Orbits are found one symbolic word at a time. Only Lyndon words (primitive
//! words that are the least of their rotations) are visited, so every orbit
//! is produced exactly once, with its canonical itinerary.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{MapSpec, Space};
use crate::potential::Potential;
use crate::real::{Point, Real};

/// Default limit on `max_period` for two-branch maps.
pub const DEFAULT_PERIOD_CAP: usize = 20;

const INVERSE_ROUNDS: usize = 200;
const NEWTON_ROUNDS: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OrbitError {
    #[error("max_period {max_period} exceeds the cap {cap}")]
    CapExceeded { max_period: usize, cap: usize },
    #[error("max_period must be at least 1")]
    ZeroPeriod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub period: usize,
    /// `points[k + 1] = T(points[k])`, cyclically. `points[0]` is the point
    /// whose itinerary is the canonical one.
    pub points: Vec<Point>,
    /// Branch symbols of `points[0]`, lexicographically least rotation.
    pub itinerary: String,
    pub exact: bool,
}

/// Wire form: `{period, points[], itinerary}`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct OrbitRecord {
    pub period: usize,
    pub points: Vec<f64>,
    pub itinerary: String,
}

impl PeriodicOrbit {
    pub fn points_f64(&self) -> Vec<f64> {
        self.points.iter().map(Real::to_f64).collect()
    }

    pub fn record(&self) -> OrbitRecord {
        OrbitRecord { period: self.period, points: self.points_f64(), itinerary: self.itinerary.clone() }
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.points.iter().any(|p| p == x)
    }
}

/// `(1/p)·Σ φ(points[k])`.
pub fn orbit_average<P: Potential + ?Sized>(orbit: &PeriodicOrbit, phi: &P) -> f64 {
    let sum: f64 = orbit.points.iter().map(|p| phi.value(p.to_f64())).sum();
    sum / orbit.period as f64
}

/// Distance from `x` to the nearest orbit point in the metric of `space`.
pub fn dist_to_orbit(x: &Point, orbit: &PeriodicOrbit, space: &Space) -> f64 {
    let xf = x.to_f64();
    if orbit.contains(x) {
        return 0.0;
    }
    orbit.points.iter().map(|p| space.dist(xf, p.to_f64())).fold(f64::INFINITY, f64::min)
}

fn symbol(map: &MapSpec, k: usize) -> char {
    if map.is_unimodal() {
        if k == 0 {
            'L'
        } else {
            'R'
        }
    } else {
        char::from_digit(k as u32, 10).expect("degree <= 9")
    }
}

/// All Lyndon words of length `1..=n` over `{0, …, k−1}` (Duval's algorithm).
pub fn lyndon_words(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || n == 0 {
        return out;
    }
    let mut w: Vec<isize> = vec![-1];
    while !w.is_empty() {
        *w.last_mut().expect("nonempty") += 1;
        let m = w.len();
        out.push(w.iter().map(|&s| s as usize).collect());
        while w.len() < n {
            w.push(w[w.len() - m]);
        }
        while w.last().is_some_and(|&s| s == k as isize - 1) {
            w.pop();
        }
    }
    out
}

pub fn enumerate_periodic_orbits(map: &MapSpec, max_period: usize) -> Result<Vec<PeriodicOrbit>, OrbitError> {
    enumerate_periodic_orbits_with_cap(map, max_period, DEFAULT_PERIOD_CAP)
}

/// Every periodic orbit of minimal period `<= max_period`, sorted by
/// `(period, itinerary)`. `cap` bounds the work as `branches^max_period <=
/// 2^cap`.
pub fn enumerate_periodic_orbits_with_cap(
    map: &MapSpec,
    max_period: usize,
    cap: usize,
) -> Result<Vec<PeriodicOrbit>, OrbitError> {
    if max_period == 0 {
        return Err(OrbitError::ZeroPeriod);
    }
    let k = map.branch_count();
    let effective_cap = ((cap as f64) / (k as f64).log2()).floor() as usize;
    if max_period > effective_cap {
        return Err(OrbitError::CapExceeded { max_period, cap: effective_cap });
    }
    let words = lyndon_words(k, max_period);
    let mut orbits: Vec<PeriodicOrbit> = words
        .par_iter()
        .filter_map(|w| {
            if map.is_exact() {
                solve_exact(map, w)
            } else {
                solve_float(map, w)
            }
        })
        .collect();
    orbits.sort_by(|a, b| a.period.cmp(&b.period).then_with(|| a.itinerary.cmp(&b.itinerary)));
    Ok(orbits)
}

fn itinerary(map: &MapSpec, word: &[usize]) -> String {
    word.iter().map(|&k| symbol(map, k)).collect()
}

fn solve_exact(map: &MapSpec, word: &[usize]) -> Option<PeriodicOrbit> {
    // T_w = T_{w[p-1]} ∘ … ∘ T_{w[0]} as x ↦ A·x + B
    let (mut a, mut b) = (BigRational::one(), BigRational::zero());
    for &k in word {
        let (s, t) = map.exact_branch_affine(k)?;
        a = &s * a;
        b = s * b + t;
    }
    let denom = BigRational::one() - a;
    if denom.is_zero() {
        return None;
    }
    let x = b / denom;
    let mut points = Vec::with_capacity(word.len());
    let mut y = Real::Exact(x.clone());
    for &k in word {
        if !map.space().contains(y.to_f64()) {
            return None;
        }
        let q = y.as_exact()?;
        if map.branch_of_exact(q) != Some(k) {
            return None;
        }
        points.push(y.clone());
        y = map.eval(&y).ok()?;
    }
    if y != Real::Exact(x) {
        return None;
    }
    Some(PeriodicOrbit { period: word.len(), points, itinerary: itinerary(map, word), exact: true })
}

/// `G_w = g_{w[0]} ∘ … ∘ g_{w[p-1]}`, the inverse branch of `T^p` along `w`.
fn inverse_along(map: &MapSpec, word: &[usize], y: f64) -> f64 {
    word.iter().rev().fold(y, |acc, &k| map.inverse_branch_f64(k, acc))
}

/// `T^p(x) − x` (wrapped on the circle) and its derivative.
fn residual(map: &MapSpec, x: f64, p: usize) -> (f64, f64) {
    let mut y = x;
    let mut d = 1.0;
    for _ in 0..p {
        d *= map.derivative_f64(y);
        y = map.eval_f64(y);
    }
    let mut r = y - x;
    if map.is_circle() {
        r -= r.round();
    }
    (r, d - 1.0)
}

fn solve_float(map: &MapSpec, word: &[usize]) -> Option<PeriodicOrbit> {
    let p = word.len();
    let (lo, hi) = map.space().bounds();
    let mut x = 0.5 * (lo + hi);
    for _ in 0..INVERSE_ROUNDS {
        let next = inverse_along(map, word, x);
        let done = (next - x).abs() <= 1e-15;
        x = next;
        if done {
            break;
        }
    }
    let (mut r, mut dr) = residual(map, x, p);
    for _ in 0..NEWTON_ROUNDS {
        if r.abs() <= 1e-15 || dr == 0.0 {
            break;
        }
        let mut cand = x - r / dr;
        if map.is_circle() {
            cand = crate::real::frac_f64(cand);
        }
        if !map.space().contains(cand) {
            break;
        }
        let (rc, dc) = residual(map, cand, p);
        if rc.abs() >= r.abs() {
            break;
        }
        x = cand;
        r = rc;
        dr = dc;
    }
    let tol = map.tolerances().equality;
    if r.abs() > tol {
        return None;
    }
    let mut pts = map.orbit_f64(x, p);
    if map.is_circle() {
        for y in pts.iter_mut() {
            if 1.0 - *y <= tol {
                *y = 0.0;
            }
        }
    }
    for (&y, &k) in pts.iter().zip(word) {
        if !map.space().contains(y) || map.branch_of_f64(y) != Some(k) {
            return None;
        }
    }
    Some(PeriodicOrbit {
        period: p,
        points: pts.into_iter().map(Real::Float).collect(),
        itinerary: itinerary(map, word),
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::Observable;

    fn tent2() -> MapSpec {
        "tent:a=2".parse().unwrap()
    }

    #[test]
    fn lyndon_words_small_cases() {
        let w: Vec<String> = lyndon_words(2, 3)
            .into_iter()
            .map(|w| w.into_iter().map(|d| char::from(b'0' + d as u8)).collect())
            .collect();
        assert_eq!(w, vec!["0", "001", "01", "011", "1"]);
        // necklace counting: number of binary Lyndon words of length 6 is 9
        assert_eq!(lyndon_words(2, 6).iter().filter(|w| w.len() == 6).count(), 9);
        assert_eq!(lyndon_words(3, 2).len(), 3 + 3);
    }

    #[test]
    fn doubling_orbits_up_to_two() {
        let orbits = enumerate_periodic_orbits(&MapSpec::doubling(), 2).unwrap();
        let pts: Vec<Vec<Point>> = orbits.iter().map(|o| o.points.clone()).collect();
        assert_eq!(pts, vec![vec![Real::int(0)], vec![Real::ratio(1, 3), Real::ratio(2, 3)]]);
        assert_eq!(orbits[1].itinerary, "01");
        assert!(orbits.iter().all(|o| o.exact));
    }

    #[test]
    fn tent_orbits_up_to_two() {
        let orbits = enumerate_periodic_orbits(&tent2(), 2).unwrap();
        let pts: Vec<Vec<Point>> = orbits.iter().map(|o| o.points.clone()).collect();
        assert_eq!(
            pts,
            vec![vec![Real::int(0)], vec![Real::ratio(4, 3)], vec![Real::ratio(4, 5), Real::ratio(8, 5)]]
        );
        assert_eq!(orbits[2].itinerary, "LR");
    }

    fn count_fixed_points_of_iterate(orbits: &[PeriodicOrbit], p: usize) -> usize {
        orbits.iter().filter(|o| p.is_multiple_of(o.period)).map(|o| o.period).sum()
    }

    #[test]
    fn doubling_point_counts() {
        let orbits = enumerate_periodic_orbits(&MapSpec::doubling(), 10).unwrap();
        for p in 1..=10 {
            assert_eq!(count_fixed_points_of_iterate(&orbits, p), (1 << p) - 1, "p = {p}");
        }
    }

    #[test]
    fn tent_point_counts() {
        let orbits = enumerate_periodic_orbits(&tent2(), 10).unwrap();
        for p in 1..=10 {
            assert_eq!(count_fixed_points_of_iterate(&orbits, p), 1 << p, "p = {p}");
        }
    }

    #[test]
    fn quadratic_four_matches_tent_counts() {
        let q = MapSpec::quadratic(4.0).unwrap();
        let orbits = enumerate_periodic_orbits(&q, 8).unwrap();
        for p in 1..=8 {
            assert_eq!(count_fixed_points_of_iterate(&orbits, p), 1 << p, "p = {p}");
        }
        let fixed: Vec<f64> = orbits.iter().filter(|o| o.period == 1).map(|o| o.points[0].to_f64()).collect();
        assert_eq!(fixed.len(), 2);
        assert!(fixed[0].abs() < 1e-12 && (fixed[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn cover_orbits_close_and_count() {
        let m = MapSpec::circle_cover(2, 0.5).unwrap();
        let orbits = enumerate_periodic_orbits(&m, 8).unwrap();
        for p in 1..=8 {
            assert_eq!(count_fixed_points_of_iterate(&orbits, p), (1 << p) - 1, "p = {p}");
        }
        for o in &orbits {
            let x = o.points[0].to_f64();
            let y = m.orbit_f64(x, o.period + 1)[o.period];
            assert!(Space::Circle.dist(x, y) <= 1e-9);
        }
        let three = MapSpec::circle_cover(3, 0.0).unwrap();
        let orbits = enumerate_periodic_orbits(&three, 4).unwrap();
        assert_eq!(count_fixed_points_of_iterate(&orbits, 4), 81 - 1);
    }

    #[test]
    fn closure_and_canonical_form_invariants() {
        for desc in ["doubling", "tent:a=2", "tent:a=1.6", "quad:a=3.9", "cover:d=3,alpha=0.3"] {
            let m: MapSpec = desc.parse().unwrap();
            let orbits = enumerate_periodic_orbits(&m, 6).unwrap();
            let mut seen = std::collections::HashSet::new();
            for o in &orbits {
                assert!(seen.insert(o.itinerary.clone()), "{desc}: duplicate {}", o.itinerary);
                assert_eq!(o.itinerary.chars().count(), o.period);
                let rotations: Vec<String> = (0..o.period)
                    .map(|r| o.itinerary[r..].to_string() + &o.itinerary[..r])
                    .collect();
                assert!(rotations.iter().all(|r| *r >= o.itinerary), "{desc}: {} not canonical", o.itinerary);
                for k in 0..o.period {
                    let next = m.eval(&o.points[k]).unwrap();
                    let want = &o.points[(k + 1) % o.period];
                    if o.exact {
                        assert_eq!(&next, want);
                    } else {
                        assert!(m.space().dist(next.to_f64(), want.to_f64()) <= 1e-9, "{desc}");
                    }
                }
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(
            enumerate_periodic_orbits(&MapSpec::doubling(), 21),
            Err(OrbitError::CapExceeded { max_period: 21, cap: 20 })
        );
        assert_eq!(enumerate_periodic_orbits(&MapSpec::doubling(), 0), Err(OrbitError::ZeroPeriod));
        let m = MapSpec::circle_cover(4, 0.0).unwrap();
        assert!(matches!(enumerate_periodic_orbits(&m, 11), Err(OrbitError::CapExceeded { cap: 10, .. })));
    }

    #[test]
    fn average_examples() {
        let orbits = enumerate_periodic_orbits(&MapSpec::doubling(), 2).unwrap();
        let cos = Observable::parse("cos(2*pi*x)", Space::Circle).unwrap();
        assert!((orbit_average(&orbits[1], &cos) + 0.5).abs() < 1e-12);
        assert_eq!(orbit_average(&orbits[0], &cos), 1.0);
        let k = Observable::parse("3.25", Space::Circle).unwrap();
        assert_eq!(orbit_average(&orbits[1], &k), 3.25);
    }

    #[test]
    fn distance_examples() {
        let orbits = enumerate_periodic_orbits(&MapSpec::doubling(), 2).unwrap();
        let o = &orbits[1];
        assert!((dist_to_orbit(&Real::ratio(1, 2), o, &Space::Circle) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(dist_to_orbit(&Real::ratio(2, 3), o, &Space::Circle), 0.0);
        assert!((dist_to_orbit(&Real::int(0), o, &Space::Circle) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn records_serialize() {
        let orbits = enumerate_periodic_orbits(&tent2(), 2).unwrap();
        let json = serde_json::to_string(&orbits[2].record()).unwrap();
        assert_eq!(json, r#"{"period":2,"points":[0.8,1.6],"itinerary":"LR"}"#);
    }
}
