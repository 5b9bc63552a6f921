//! Maximal ergodic averages, Birkhoff deviation constants and support
//! candidates.
//!
//! `β(φ)` is computed from periodic orbit averages and, independently, as a
//! maximum mean cycle of the Ulam graph. The orbit value is the one used
//! downstream.

mod karp;
mod ulam;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{DynamicsError, MapSpec};
use crate::orbits::{enumerate_periodic_orbits, orbit_average, OrbitError, OrbitRecord, PeriodicOrbit};
use crate::potential::Potential;
use crate::real::Point;

pub use karp::{cycle_mean, max_mean_cycle, CycleError, MeanCycle};
pub use ulam::{build_ulam, UlamGraph};

/// Orbit averages closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Headroom factor applied to a `γ` estimate to obtain a default `C_*`.
pub const C_STAR_HEADROOM: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("no periodic orbit found up to period {0}")]
    NoOrbit(usize),
}

/// Best average over a list of orbits, ties resolved by list order.
/// Orbit lists from enumeration are sorted by period, then itinerary.
pub fn best_orbit<'a, P: Potential + ?Sized>(orbits: &'a [PeriodicOrbit], phi: &P) -> Option<(f64, &'a PeriodicOrbit)> {
    let avgs: Vec<f64> = orbits.par_iter().map(|o| orbit_average(o, phi)).collect();
    let mut best: Option<(f64, usize)> = None;
    for (i, &a) in avgs.iter().enumerate() {
        if best.is_none_or(|(b, _)| a > b + TIE_TOLERANCE) {
            best = Some((a, i));
        }
    }
    best.map(|(a, i)| (a, &orbits[i]))
}

/// Best and second-best orbit averages, the latter over orbits other than
/// the argmax.
pub fn ranked_orbits<P: Potential + ?Sized>(orbits: &[PeriodicOrbit], phi: &P) -> Option<(f64, usize, Option<f64>)> {
    let avgs: Vec<f64> = orbits.par_iter().map(|o| orbit_average(o, phi)).collect();
    let mut best: Option<(f64, usize)> = None;
    for (i, &a) in avgs.iter().enumerate() {
        if best.is_none_or(|(b, _)| a > b + TIE_TOLERANCE) {
            best = Some((a, i));
        }
    }
    let (b, i) = best?;
    let runner_up = avgs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &a)| a).fold(None, |m: Option<f64>, a| {
        Some(m.map_or(a, |m| m.max(a)))
    });
    Some((b, i, runner_up))
}

/// Maximal orbit average over all periodic orbits of period
/// `≤ max_period`, with one maximizing orbit.
pub fn beta_periodic<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    max_period: usize,
) -> Result<(f64, PeriodicOrbit), OptimizeError> {
    let orbits = enumerate_periodic_orbits(map, max_period)?;
    best_orbit(&orbits, phi).map(|(b, o)| (b, o.clone())).ok_or(OptimizeError::NoOrbit(max_period))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaReport {
    pub beta_orbit: f64,
    pub argmax_orbit: OrbitRecord,
    pub beta_cycle: f64,
    pub cycle_cells: Vec<usize>,
    pub gap: f64,
}

/// Both routes to `β(φ)` and their disagreement.
pub fn beta_report<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    max_period: usize,
    n_cells: usize,
) -> Result<BetaReport, OptimizeError> {
    let (beta_orbit, orbit) = beta_periodic(map, phi, max_period)?;
    let g = build_ulam(map, phi, n_cells);
    let mc = max_mean_cycle(&g)?;
    Ok(BetaReport {
        beta_orbit,
        argmax_orbit: orbit.record(),
        beta_cycle: mc.mean,
        cycle_cells: mc.cycle,
        gap: (beta_orbit - mc.mean).abs(),
    })
}

/// Running maxima `g[n−1] = max_{x, 1≤k≤n} S_kφ(x) − kβ` over `points`.
pub fn gamma_profile_at<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    beta: f64,
    depth: usize,
    points: &[f64],
) -> Vec<f64> {
    assert!(depth >= 1, "depth must be at least 1");
    let per_point: Vec<Vec<f64>> = points
        .par_iter()
        .map(|&x| {
            let mut out = Vec::with_capacity(depth);
            let mut y = x;
            let mut s = 0.0;
            for _ in 0..depth {
                s += phi.value(y) - beta;
                y = map.eval_f64(y);
                let prev = out.last().copied().unwrap_or(f64::NEG_INFINITY);
                out.push(if s > prev { s } else { prev });
            }
            out
        })
        .collect();
    (0..depth).map(|n| per_point.iter().map(|v| v[n]).fold(f64::NEG_INFINITY, f64::max)).collect()
}

/// Estimate of `γ(φ) = sup_{n≥1, x} S_nφ(x) − nβ` over explicit points.
pub fn gamma_estimate_at<P: Potential + ?Sized>(map: &MapSpec, phi: &P, beta: f64, depth: usize, points: &[f64]) -> f64 {
    gamma_profile_at(map, phi, beta, depth, points).last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Estimate of `γ(φ)` over the midpoints of a uniform partition into
/// `grid_n` cells.
pub fn gamma_estimate<P: Potential + ?Sized>(map: &MapSpec, phi: &P, beta: f64, depth: usize, grid_n: usize) -> f64 {
    gamma_estimate_at(map, phi, beta, depth, &map.space().midpoints(grid_n))
}

/// Truncated support candidate: grid points whose windowed Birkhoff
/// deviations stay within `C_*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportCandidate {
    pub points: Vec<f64>,
    pub members: Vec<bool>,
    pub c_star: f64,
    pub k_max: usize,
    pub l_max: usize,
    pub beta: f64,
}

impl SupportCandidate {
    pub fn member_points(&self) -> Vec<f64> {
        self.points.iter().zip(&self.members).filter(|(_, &m)| m).map(|(&x, _)| x).collect()
    }

    pub fn member_count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    /// `x,member_flag` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,member\n");
        for (x, m) in self.points.iter().zip(&self.members) {
            out.push_str(&format!("{x:.11e},{}\n", u8::from(*m)));
        }
        out
    }
}

/// `C_*` derived from a `γ` estimate.
pub fn default_c_star(gamma: f64) -> f64 {
    C_STAR_HEADROOM * gamma.max(0.0)
}

fn window_member<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    beta: f64,
    c_star: f64,
    (k_max, l_max): (usize, usize),
    x: f64,
) -> bool {
    // prefix[i] = Σ_{j<i} (φ(T^j x) − β)
    let mut prefix = Vec::with_capacity(k_max + l_max + 1);
    prefix.push(0.0);
    let mut y = x;
    for _ in 0..k_max + l_max {
        let last = *prefix.last().expect("nonempty");
        prefix.push(last + phi.value(y) - beta);
        y = map.eval_f64(y);
    }
    (0..=l_max).all(|l| (1..=k_max).all(|k| (prefix[l + k] - prefix[l]).abs() <= c_star))
}

/// Flags each of `points` by the windowed deviation predicate.
pub fn support_candidate_at<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    beta: f64,
    c_star: f64,
    depths: (usize, usize),
    points: &[f64],
) -> SupportCandidate {
    assert!(c_star >= 0.0, "C_* must be nonnegative");
    let members = points.par_iter().map(|&x| window_member(map, phi, beta, c_star, depths, x)).collect();
    SupportCandidate { points: points.to_vec(), members, c_star, k_max: depths.0, l_max: depths.1, beta }
}

/// [`support_candidate_at`] on cell midpoints.
pub fn support_candidate<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    beta: f64,
    c_star: f64,
    depths: (usize, usize),
    grid_n: usize,
) -> SupportCandidate {
    support_candidate_at(map, phi, beta, c_star, depths, &map.space().midpoints(grid_n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubordinationReport {
    /// `min S_nφ(x) − nβ` over the supplied points and `1 ≤ n ≤ depth`.
    pub min: f64,
    pub witness_x: f64,
    pub witness_n: usize,
    pub gamma: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Checks `S_nφ(x) − nβ ≥ −γ − tol` on the supplied points. Exact points
/// are iterated exactly.
pub fn subordination_check<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    beta: f64,
    gamma: f64,
    points: &[Point],
    depth: usize,
    tol: f64,
) -> Result<SubordinationReport, OptimizeError> {
    let per_point: Vec<(f64, f64, usize)> = points
        .par_iter()
        .map(|x| {
            let mut y = x.clone();
            let mut s = 0.0;
            let mut best = (f64::INFINITY, x.to_f64(), 0);
            for n in 1..=depth {
                s += phi.value(y.to_f64()) - beta;
                y = map.eval(&y)?;
                if s < best.0 {
                    best = (s, x.to_f64(), n);
                }
            }
            Ok(best)
        })
        .collect::<Result<_, DynamicsError>>()?;
    let (min, witness_x, witness_n) =
        per_point.into_iter().fold((f64::INFINITY, f64::NAN, 0), |a, b| if b.0 < a.0 { b } else { a });
    Ok(SubordinationReport { min, witness_x, witness_n, gamma, tol, pass: min >= -gamma - tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::Observable;
    use crate::potential::{Coboundary, Shifted};
    use crate::real::Real;
    use proptest::prelude::*;

    fn obs(src: &str, map: &MapSpec) -> Observable {
        Observable::parse(src, map.space()).unwrap()
    }

    #[test]
    fn beta_examples_doubling() {
        let m = MapSpec::doubling();
        let (b, o) = beta_periodic(&m, &obs("cos(2*pi*x)", &m), 3).unwrap();
        assert_eq!(b, 1.0);
        assert_eq!(o.points, vec![Real::int(0)]);

        let (b, o) = beta_periodic(&m, &obs("-dist(x,[0.3333333333333333,0.6666666666666666])", &m), 4).unwrap();
        assert!(b.abs() < 1e-15);
        assert_eq!(o.points, vec![Real::ratio(1, 3), Real::ratio(2, 3)]);

        let (b, o) = beta_periodic(&m, &obs("-cos(2*pi*x)", &m), 12).unwrap();
        assert!((b - 0.5).abs() < 1e-12);
        assert_eq!(o.itinerary, "01");
    }

    #[test]
    fn ties_prefer_short_periods() {
        let m = MapSpec::doubling();
        let (b, o) = beta_periodic(&m, &obs("0", &m), 5).unwrap();
        assert_eq!((b, o.period, o.itinerary.as_str()), (0.0, 1, "0"));
    }

    #[test]
    fn beta_report_agrees_on_doubling() {
        let m = MapSpec::doubling();
        let r = beta_report(&m, &obs("-cos(2*pi*x)", &m), 10, 1024).unwrap();
        assert!(r.gap < 0.02, "{r:?}");
        assert!(r.beta_cycle >= r.beta_orbit - 1e-3);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["argmax_orbit"]["itinerary"], "01");
    }

    #[test]
    fn gamma_examples() {
        let m = MapSpec::doubling();
        assert_eq!(gamma_estimate(&m, &obs("0.7", &m), 0.7, 10, 100), 0.0);

        let psi = obs("0.3*sin(2*pi*x)", &m);
        let phi = Coboundary { transfer: &psi, map: &m, transfer_sup_abs: 0.3 };
        let g = gamma_estimate(&m, &phi, 0.0, 20, 3000);
        assert!(g <= 0.6 + 1e-12 && g > 0.5);

        let phi = obs("-cos(2*pi*x)", &m);
        let prof = gamma_profile_at(&m, &phi, 0.5, 30, &m.space().midpoints(10_000));
        assert!(prof.windows(2).all(|w| w[1] >= w[0]));
        let tail = prof[29] - prof[20];
        assert!(prof[29].is_finite() && tail < 1e-6, "{prof:?}");
    }

    #[test]
    fn gamma_monotone_in_nested_grids() {
        let m: MapSpec = "tent:a=1.8".parse().unwrap();
        let phi = obs("cos(pi*x)", &m);
        let (b, _) = beta_periodic(&m, &phi, 8).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for n in [10, 30, 90, 270] {
            let g = gamma_estimate(&m, &phi, b, 12, n);
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn support_examples() {
        let m = MapSpec::doubling();
        let all = support_candidate(&m, &obs("0", &m), 0.0, 0.0, (5, 5), 50);
        assert_eq!(all.member_count(), 50);

        let phi = obs("-dist(x,[0.3333333333333333,0.6666666666666666])", &m);
        let mut pts = m.space().midpoints(2000);
        pts.extend([1.0 / 3.0, 2.0 / 3.0]);
        let sc = support_candidate_at(&m, &phi, 0.0, 0.01, (20, 20), &pts);
        let mem = sc.member_points();
        assert!(!mem.is_empty());
        assert!(mem.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-3 || (x - 2.0 / 3.0).abs() < 1e-3));

        let sc = support_candidate(&m, &obs("cos(2*pi*x)", &m), 1.0, 0.05, (3, 3), 2000);
        let mem = sc.member_points();
        assert!(!mem.is_empty());
        assert!(mem.iter().all(|&x| m.space().dist(x, 0.0) < 0.05), "{mem:?}");
        assert!(sc.to_csv().starts_with("x,member\n"));
    }

    #[test]
    fn subordination_examples() {
        let m = MapSpec::doubling();
        let phi = obs("-dist(x,[0.3333333333333333,0.6666666666666666])", &m);
        let pts = vec![Real::ratio(1, 3), Real::ratio(2, 3)];
        let r = subordination_check(&m, &phi, 0.0, 0.0, &pts, 20, 1e-6).unwrap();
        assert!(r.pass && r.min.abs() < 1e-15);

        let cos = obs("cos(2*pi*x)", &m);
        let r = subordination_check(&m, &cos, 1.0, 0.0, &[Real::int(0)], 20, 1e-6).unwrap();
        assert!(r.pass && r.min == 0.0);

        let r = subordination_check(&m, &cos, 1.0, 1e-3, &[Real::ratio(1, 4)], 20, 1e-6).unwrap();
        assert!(!r.pass);
        assert!((r.min + 3.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn beta_affine_covariance(c0 in -3.0f64..3.0, t in 0.1f64..5.0, k in 1usize..4) {
            let m = MapSpec::doubling();
            let src = format!("cos(2*pi*{k}*x) + 0.3*sin(2*pi*x)");
            let phi = obs(&src, &m);
            let orbits = enumerate_periodic_orbits(&m, 8).unwrap();
            let (b, o) = best_orbit(&orbits, &phi).unwrap();
            let shifted = Shifted { inner: &phi, scale: 1.0, shift: c0 };
            let (bs, os) = best_orbit(&orbits, &shifted).unwrap();
            prop_assert!((bs - (b + c0)).abs() < 1e-12);
            prop_assert_eq!(&os.itinerary, &o.itinerary);
            let scaled = Shifted { inner: &phi, scale: t, shift: 0.0 };
            let (bt, ot) = best_orbit(&orbits, &scaled).unwrap();
            prop_assert!((bt - t * b).abs() < 1e-12 * t.max(1.0));
            prop_assert_eq!(&ot.itinerary, &o.itinerary);
        }

        #[test]
        fn beta_sup_norm_lipschitz(delta in 0.0f64..0.5, f in 1usize..5) {
            let m: MapSpec = "tent:a=2".parse().unwrap();
            let phi = obs("cos(pi*x)", &m);
            let pert = obs(&format!("cos(pi*x) + {delta}*sin({f}*x)"), &m);
            let orbits = enumerate_periodic_orbits(&m, 8).unwrap();
            let (b0, _) = best_orbit(&orbits, &phi).unwrap();
            let (b1, _) = best_orbit(&orbits, &pert).unwrap();
            prop_assert!((b1 - b0).abs() <= delta + 1e-12);
        }

        #[test]
        fn coboundary_sums_telescope(a in -1.0f64..1.0, b in -1.0f64..1.0, x in 0.0f64..1.0, n in 1usize..40) {
            let m = MapSpec::doubling();
            let psi = obs(&format!("{a}*cos(2*pi*x) + {b}*sin(4*pi*x)"), &m);
            let sup = psi.sup_abs(4096).max(psi.range_bound().1.abs()).max(psi.range_bound().0.abs());
            let phi = Coboundary { transfer: &psi, map: &m, transfer_sup_abs: sup };
            let s = m.birkhoff_sum(&phi, &Real::Float(x), n).unwrap();
            prop_assert!(s.abs() <= 2.0 * sup + 1e-12);
        }

        #[test]
        fn support_shrinks_with_depth(c in 0.0f64..0.5, k in 1usize..6, l in 0usize..6) {
            let m = MapSpec::doubling();
            let phi = obs("-cos(2*pi*x)", &m);
            let small = support_candidate(&m, &phi, 0.5, c, (k, l), 200);
            let deep_k = support_candidate(&m, &phi, 0.5, c, (k + 1, l), 200);
            let deep_l = support_candidate(&m, &phi, 0.5, c, (k, l + 1), 200);
            for i in 0..200 {
                prop_assert!(!deep_k.members[i] || small.members[i]);
                prop_assert!(!deep_l.members[i] || small.members[i]);
            }
        }
    }
}
