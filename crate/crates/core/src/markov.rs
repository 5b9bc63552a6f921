//! Interval covers with the Markov property, built from preimages of a
//! periodic orbit, and their finite-depth invariant sets.

use std::cmp::Ordering;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{DynamicsError, MapSpec};
use crate::orbits::PeriodicOrbit;
use crate::real::{Point, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarkovError {
    #[error("point {0} is not covered by any admissible interval")]
    CoverageGap(f64),
    #[error("point {0} cannot be separated from the turning point at this depth")]
    MarginTooSmall(f64),
    #[error("generator orbit is empty")]
    EmptyGenerator,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// An open interval `(lo, hi)`; on the circle `hi` may exceed 1 for arcs
/// through `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: Real,
    pub hi: Real,
}

impl Interval {
    pub fn new(lo: Real, hi: Real) -> Self {
        Interval { lo, hi }
    }

    pub fn length(&self) -> f64 {
        self.hi.to_f64() - self.lo.to_f64()
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.lo.to_f64(), self.hi.to_f64()]
    }

    fn contains_point(&self, x: &Real, tol: f64) -> bool {
        lt(&self.lo, x, tol) && lt(x, &self.hi, tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovCover {
    pub intervals: Vec<Interval>,
    pub z: Vec<Point>,
    pub m: usize,
    /// `(i, j)` whenever the image of interval `i` meets interval `j`.
    pub transitions: Vec<(usize, usize)>,
    pub verified: bool,
}

#[derive(Serialize)]
struct CoverRecord {
    intervals: Vec<[f64; 2]>,
    transitions: Vec<[usize; 2]>,
    z: Vec<f64>,
    m: usize,
    verified: bool,
}

impl Serialize for MarkovCover {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CoverRecord {
            intervals: self.intervals.iter().map(Interval::to_f64).collect(),
            transitions: self.transitions.iter().map(|&(i, j)| [i, j]).collect(),
            z: self.z.iter().map(Real::to_f64).collect(),
            m: self.m,
            verified: self.verified,
        }
        .serialize(s)
    }
}

impl MarkovCover {
    /// A cover given directly by its intervals; transitions and the
    /// verified flag are filled in by [`verify_markov`].
    pub fn from_intervals(map: &MapSpec, intervals: Vec<Interval>) -> Self {
        let mut cover = MarkovCover { intervals, z: Vec::new(), m: 0, transitions: Vec::new(), verified: false };
        let check = verify_markov(map, &cover);
        cover.transitions = check.transitions;
        cover.verified = check.holds;
        cover
    }
}

fn lt(a: &Real, b: &Real, tol: f64) -> bool {
    match (a, b) {
        (Real::Exact(x), Real::Exact(y)) => x < y,
        _ => a.to_f64() < b.to_f64() - tol,
    }
}

fn le(a: &Real, b: &Real, tol: f64) -> bool {
    match (a, b) {
        (Real::Exact(x), Real::Exact(y)) => x <= y,
        _ => a.to_f64() <= b.to_f64() + tol,
    }
}

fn same(a: &Real, b: &Real, tol: f64) -> bool {
    le(a, b, tol) && le(b, a, tol)
}

fn shift(x: &Real, k: i64) -> Real {
    match x {
        Real::Exact(q) => Real::Exact(q + BigRational::from_integer(k.into())),
        Real::Float(v) => Real::Float(v + k as f64),
    }
}

/// Image of an interval avoiding the turning point. Circle images are
/// returned in lift coordinates.
fn image(map: &MapSpec, iv: &Interval) -> Interval {
    if let (Some(a), Some(b)) = (iv.lo.as_exact(), iv.hi.as_exact()) {
        if let Some(m) = map.exact_multiplier() {
            if map.is_circle() {
                return Interval::new(Real::Exact(&m * a), Real::Exact(&m * b));
            }
            if let Some((lo, hi)) = map.interval_image_exact(a, b) {
                return Interval::new(Real::Exact(lo), Real::Exact(hi));
            }
        }
    }
    let (a, b) = (iv.lo.to_f64(), iv.hi.to_f64());
    if map.is_circle() {
        let base = a.floor();
        let (la, lb) = (map.lift_f64(a - base), map.lift_f64(b - base));
        let d = map.branch_count() as f64;
        let lb = if b - base > 1.0 { map.lift_f64(b - base - 1.0) + d } else { lb };
        Interval::new(Real::Float(la + base * d), Real::Float(lb + base * d))
    } else {
        let (lo, hi) = map.interval_image_f64(a, b);
        Interval::new(Real::Float(lo), Real::Float(hi))
    }
}

/// Integer shifts `k` for which `target + k` could meet `arc`.
fn shifts(arc: &Interval, target: &Interval, circle: bool) -> Vec<i64> {
    if !circle {
        return vec![0];
    }
    let lo = (arc.lo.to_f64() - target.hi.to_f64()).floor() as i64 - 1;
    let hi = (arc.hi.to_f64() - target.lo.to_f64()).ceil() as i64 + 1;
    (lo..=hi).collect()
}

fn meets(img: &Interval, j: &Interval, circle: bool, tol: f64) -> bool {
    shifts(img, j, circle).into_iter().any(|k| lt(&shift(&j.lo, k), &img.hi, tol) && lt(&img.lo, &shift(&j.hi, k), tol))
}

fn contains(img: &Interval, j: &Interval, circle: bool, tol: f64) -> bool {
    if circle && img.length() >= 1.0 - tol {
        let full = match (&img.lo, &img.hi) {
            (Real::Exact(a), Real::Exact(b)) => b - a >= crate::real::one(),
            _ => true,
        };
        if full {
            return true;
        }
    }
    shifts(img, j, circle).into_iter().any(|k| le(&img.lo, &shift(&j.lo, k), tol) && le(&shift(&j.hi, k), &img.hi, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub source: [f64; 2],
    pub target: [f64; 2],
    pub image: [f64; 2],
    pub pair: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovCheck {
    pub holds: bool,
    pub violations: Vec<Violation>,
    pub transitions: Vec<(usize, usize)>,
}

/// Checks `T I ∩ J ≠ ∅ ⟹ T I ⊃ J` for every ordered pair of intervals.
pub fn verify_markov(map: &MapSpec, cover: &MarkovCover) -> MarkovCheck {
    let tol = map.tolerances().equality;
    let circle = map.is_circle();
    let images: Vec<Interval> = cover.intervals.iter().map(|iv| image(map, iv)).collect();
    let n = cover.intervals.len();
    let results: Vec<(usize, usize, bool, bool)> = (0..n * n)
        .into_par_iter()
        .map(|p| {
            let (i, j) = (p / n, p % n);
            let m = meets(&images[i], &cover.intervals[j], circle, tol);
            let c = m && contains(&images[i], &cover.intervals[j], circle, tol);
            (i, j, m, c)
        })
        .collect();
    let mut violations = Vec::new();
    let mut transitions = Vec::new();
    for (i, j, m, c) in results {
        if m {
            transitions.push((i, j));
            if !c {
                violations.push(Violation {
                    source: cover.intervals[i].to_f64(),
                    target: cover.intervals[j].to_f64(),
                    image: images[i].to_f64(),
                    pair: (i, j),
                });
            }
        }
    }
    MarkovCheck { holds: violations.is_empty(), violations, transitions }
}

fn sort_dedup(points: &mut Vec<Real>, tol: f64) {
    points.sort_by(Real::cmp_total);
    points.dedup_by(|a, b| same(a, b, tol));
}

/// `E_m = ∪_{0≤k<m} T^{−k}(orbit of z)`, sorted.
pub fn preimage_set(map: &MapSpec, z: &[Point], m: usize) -> Vec<Real> {
    let tol = map.tolerances().equality;
    let mut all: Vec<Real> = Vec::new();
    let mut level: Vec<Real> = z.to_vec();
    sort_dedup(&mut level, tol);
    for k in 0..m {
        all.extend(level.iter().cloned());
        if k + 1 < m {
            let mut next: Vec<Real> = level.iter().flat_map(|y| map.preimages(y)).collect();
            sort_dedup(&mut next, tol);
            level = next;
        }
    }
    sort_dedup(&mut all, tol);
    all
}

/// Cover of `K_points` by components of the domain minus `E_m`, dropping
/// the component that contains the turning point.
pub fn admissible_cover(
    map: &MapSpec,
    k_points: &[Point],
    z: &PeriodicOrbit,
    m: usize,
) -> Result<MarkovCover, MarkovError> {
    if !map.is_unimodal() {
        return Err(DynamicsError::NotUnimodal.into());
    }
    if z.points.is_empty() {
        return Err(MarkovError::EmptyGenerator);
    }
    let tol = map.tolerances().equality;
    let c = map.critical_point();
    let (lo, hi) = map.space().bounds();
    let exact = map.is_exact();
    let bound = |v: f64| if exact { Real::int(v as i64) } else { Real::Float(v) };
    let mut cuts = preimage_set(map, &z.points, m);
    cuts.push(bound(lo));
    cuts.push(bound(hi));
    sort_dedup(&mut cuts, tol);

    let mut chosen: Vec<usize> = Vec::new();
    for x in k_points {
        if same(x, &c, tol) {
            return Err(MarkovError::MarginTooSmall(x.to_f64()));
        }
        if cuts.iter().any(|e| same(e, x, tol)) {
            return Err(MarkovError::CoverageGap(x.to_f64()));
        }
        let idx = cuts.iter().position(|e| lt(x, e, tol)).ok_or(MarkovError::CoverageGap(x.to_f64()))?;
        if idx == 0 {
            return Err(MarkovError::CoverageGap(x.to_f64()));
        }
        let comp = Interval::new(cuts[idx - 1].clone(), cuts[idx].clone());
        if comp.contains_point(&c, 0.0) {
            return Err(MarkovError::MarginTooSmall(x.to_f64()));
        }
        chosen.push(idx);
    }
    chosen.sort_unstable();
    chosen.dedup();
    let intervals = chosen.iter().map(|&i| Interval::new(cuts[i - 1].clone(), cuts[i].clone())).collect();
    let mut cover = MarkovCover { intervals, z: z.points.clone(), m, transitions: Vec::new(), verified: false };
    let check = verify_markov(map, &cover);
    cover.transitions = check.transitions;
    cover.verified = check.holds;
    Ok(cover)
}

/// `m, m+1, …, m_max` until a verified cover is found; returns the last
/// error or unverified cover otherwise.
pub fn admissible_cover_escalating(
    map: &MapSpec,
    k_points: &[Point],
    z: &PeriodicOrbit,
    m: usize,
    m_max: usize,
) -> Result<MarkovCover, MarkovError> {
    let mut last = Err(MarkovError::EmptyGenerator);
    for mm in m..=m_max.max(m) {
        last = admissible_cover(map, k_points, z, mm);
        if matches!(&last, Ok(c) if c.verified) {
            break;
        }
    }
    last
}

/// Inverse of `T` restricted to the interval `src`, applied to `y`
/// (lifted on the circle).
fn pull_point(map: &MapSpec, src: &Interval, y: &Real) -> Real {
    let mid = 0.5 * (src.lo.to_f64() + src.hi.to_f64());
    if map.is_circle() {
        let base = mid.floor();
        let d = map.branch_count() as i64;
        let t = y.to_f64() - base * d as f64;
        let branch = (t.floor() as i64).clamp(0, d - 1);
        if let (Real::Exact(q), Some(mult)) = (y, map.exact_multiplier()) {
            return Real::Exact(q / mult);
        }
        return Real::Float(map.inverse_branch_f64(branch as usize, t - branch as f64) + base);
    }
    let branch = usize::from(mid > map.critical_point().to_f64());
    if let Real::Exact(q) = y {
        if let Some((a, b)) = map.exact_branch_affine(branch) {
            return Real::Exact((q - b) / a);
        }
    }
    Real::Float(map.inverse_branch_f64(branch, y.to_f64()))
}

/// Components of `src ∩ T^{−1}(target)` for a transition `src → target`,
/// one per lift of `target` inside the image.
fn pullback(map: &MapSpec, src: &Interval, target: &Interval) -> Vec<Interval> {
    let tol = map.tolerances().equality;
    let img = image(map, src);
    shifts(&img, target, map.is_circle())
        .into_iter()
        .filter(|&k| le(&img.lo, &shift(&target.lo, k), tol) && le(&shift(&target.hi, k), &img.hi, tol))
        .map(|k| {
            let a = pull_point(map, src, &shift(&target.lo, k));
            let b = pull_point(map, src, &shift(&target.hi, k));
            if a.cmp_total(&b) == Ordering::Greater {
                Interval::new(b, a)
            } else {
                Interval::new(a, b)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStats {
    pub depth: usize,
    pub count: usize,
    pub max_length: f64,
    pub total_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantApprox {
    /// Components of `∩_{0≤n≤depth} T^{−n}(∪ cover)`.
    pub components: Vec<Interval>,
    /// One entry per depth `0..=depth`.
    pub levels: Vec<LevelStats>,
    /// Every cover interval is the target of some transition, so
    /// `T(∪ cover) ⊃ ∪ cover`.
    pub surjective: bool,
}

/// Finite-depth approximation of the maximal invariant set of the cover.
/// Components at depth `n` correspond to transition paths of length `n`.
pub fn invariant_set_depth(map: &MapSpec, cover: &MarkovCover, depth: usize) -> InvariantApprox {
    let n = cover.intervals.len();
    let mut succ = vec![Vec::new(); n];
    for &(i, j) in &cover.transitions {
        succ[i].push(j);
    }
    // comps[i]: components of the current level lying in interval i
    let mut comps: Vec<Vec<Interval>> = cover.intervals.iter().map(|iv| vec![iv.clone()]).collect();
    let stats = |comps: &Vec<Vec<Interval>>, d: usize| {
        let all: Vec<&Interval> = comps.iter().flatten().collect();
        LevelStats {
            depth: d,
            count: all.len(),
            max_length: all.iter().map(|c| c.length()).fold(0.0, f64::max),
            total_length: all.iter().map(|c| c.length()).sum(),
        }
    };
    let mut levels = vec![stats(&comps, 0)];
    for d in 1..=depth {
        let next: Vec<Vec<Interval>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut out: Vec<Interval> = succ[i]
                    .iter()
                    .flat_map(|&j| comps[j].iter().flat_map(|t| pullback(map, &cover.intervals[i], t)).collect::<Vec<_>>())
                    .collect();
                out.sort_by(|a, b| a.lo.cmp_total(&b.lo));
                out
            })
            .collect();
        comps = next;
        levels.push(stats(&comps, d));
    }
    let mut incoming = vec![false; n];
    for &(_, j) in &cover.transitions {
        incoming[j] = true;
    }
    InvariantApprox { components: comps.into_iter().flatten().collect(), levels, surjective: incoming.iter().all(|&b| b) }
}

/// All endpoints of `cover` belong to `set` (exactly for exact values).
pub fn endpoints_within(cover: &MarkovCover, set: &[Real], tol: f64) -> bool {
    cover.intervals.iter().flat_map(|iv| [&iv.lo, &iv.hi]).all(|e| set.iter().any(|s| same(s, e, tol)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::enumerate_periodic_orbits;

    fn tent(a: &str) -> MapSpec {
        format!("tent:a={a}").parse().unwrap()
    }

    fn fixed_orbit(x: Real) -> PeriodicOrbit {
        PeriodicOrbit { period: 1, points: vec![x], itinerary: "L".into(), exact: true }
    }

    #[test]
    fn tent_two_example() {
        let m = tent("2");
        let k = [Real::ratio(4, 5), Real::ratio(8, 5)];
        let cover = admissible_cover(&m, &k, &fixed_orbit(Real::int(0)), 4).unwrap();
        assert!(cover.verified);
        let iv: Vec<(Real, Real)> = cover.intervals.iter().map(|i| (i.lo.clone(), i.hi.clone())).collect();
        assert_eq!(
            iv,
            vec![(Real::ratio(1, 2), Real::int(1)), (Real::ratio(3, 2), Real::int(2))]
        );
        let e = preimage_set(&m, &[Real::int(0)], 4);
        assert!(endpoints_within(&cover, &e, 0.0));
        let json = serde_json::to_value(&cover).unwrap();
        assert_eq!(json["intervals"][0], serde_json::json!([0.5, 1.0]));
        assert_eq!(json["verified"], true);
    }

    #[test]
    fn empty_and_turning_point() {
        let m = tent("2");
        let z = fixed_orbit(Real::int(0));
        let cover = admissible_cover(&m, &[], &z, 4).unwrap();
        assert!(cover.intervals.is_empty() && cover.verified);
        assert_eq!(admissible_cover(&m, &[Real::int(1)], &z, 4), Err(MarkovError::MarginTooSmall(1.0)));
        assert_eq!(admissible_cover(&m, &[Real::ratio(1, 2)], &z, 4), Err(MarkovError::CoverageGap(0.5)));
    }

    #[test]
    fn doubling_counterexample() {
        let m = MapSpec::doubling();
        let cover = MarkovCover::from_intervals(
            &m,
            vec![
                Interval::new(Real::ratio(1, 10), Real::ratio(4, 10)),
                Interval::new(Real::ratio(6, 10), Real::ratio(9, 10)),
            ],
        );
        assert!(!cover.verified);
        let check = verify_markov(&m, &cover);
        assert!(check.violations.iter().any(|v| v.pair == (0, 1) && v.image == [0.2, 0.8]));
        assert_eq!(check.violations.len(), 4);
    }

    #[test]
    fn empty_cover_verifies() {
        let m = MapSpec::doubling();
        assert!(MarkovCover::from_intervals(&m, vec![]).verified);
    }

    #[test]
    fn doubling_full_circle_is_invariant() {
        let m = MapSpec::doubling();
        let cover = MarkovCover::from_intervals(&m, vec![Interval::new(Real::int(0), Real::int(1))]);
        assert!(cover.verified);
        let inv = invariant_set_depth(&m, &cover, 3);
        assert!(inv.surjective);
        // lengths total 1 at every depth
        assert!(inv.levels.iter().all(|l| (l.total_length - 1.0).abs() < 1e-12));
    }

    #[test]
    fn dead_end_interval_vanishes() {
        let m = tent("2");
        // (1/8, 1/4) maps onto (1/4, 1/2), which misses the other intervals
        let cover = MarkovCover::from_intervals(
            &m,
            vec![
                Interval::new(Real::ratio(1, 8), Real::ratio(1, 4)),
                Interval::new(Real::ratio(3, 4), Real::int(1)),
                Interval::new(Real::ratio(3, 2), Real::ratio(7, 4)),
            ],
        );
        assert!(cover.verified);
        let inv = invariant_set_depth(&m, &cover, 1);
        assert_eq!(inv.levels[1].count, 2);
        assert!(inv.components.iter().all(|c| c.lo.to_f64() >= 0.75));
        assert!(!inv.surjective);
    }

    #[test]
    fn markov_matrix_tent() {
        for a in ["8/5", "19/10", "2"] {
            let map = tent(a);
            let slope = map.max_expansion();
            let orbits = enumerate_periodic_orbits(&map, 4).unwrap();
            let k_orbit = orbits.iter().find(|o| o.period == 1 && o.itinerary == "R").unwrap();
            let z = orbits.iter().find(|o| o.itinerary == "LR").unwrap();
            for m in 3..=5 {
                let cover = admissible_cover(&map, &k_orbit.points, z, m).unwrap();
                assert!(cover.verified, "a={a} m={m}: {:?}", verify_markov(&map, &cover).violations);
                let e = preimage_set(&map, &z.points, m);
                assert!(e.iter().all(Real::is_exact));
                let inv = invariant_set_depth(&map, &cover, 6);
                for w in inv.levels.windows(2) {
                    if w[1].count > 0 {
                        assert!(w[1].max_length <= w[0].max_length / slope + 1e-12);
                    }
                }
            }
        }
    }
}
