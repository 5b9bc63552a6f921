//! Sub-action candidates built from truncated preimage sums, and checks of
//! the sub-action inequality `φ ≤ ψ∘T − ψ + β`.
//!
//! `ψ_N(x) = max_{1≤n≤N} max_{y ∈ T^{−n}x} S_nφ(y) − nβ`, found by a
//! depth-first search over the preimage tree with branch-and-bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{MapSpec, Space};
use crate::potential::Potential;

/// Default limit on visited preimage-tree nodes per grid point.
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

/// Default depth of the `V_m` neighbourhood of the critical point.
pub const DEFAULT_V_DEPTH: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SubactionError {
    #[error("preimage search at x = {x} exceeded the node cap {cap}")]
    DepthOverflow { x: f64, cap: u64 },
    #[error("x = {0} has no preimages")]
    EmptyPreimage(f64),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("expansion constants unavailable for {0}")]
    ConstantsUnavailable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubActionTable {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub depth: usize,
    pub beta: f64,
    /// Depth `n` at which each value was attained.
    pub achieved: Vec<usize>,
    /// `histogram[n]` counts points whose value was attained at depth `n`.
    pub histogram: Vec<usize>,
    pub lip_observed: f64,
    /// `φ(c) < β` at the critical point `c`.
    pub phi_c_below_beta: bool,
    /// `max_x ψ_N(x) − ψ_{N−1}(x)`; `None` when `N = 1`.
    pub last_increment: Option<f64>,
    pub nodes_visited: u64,
    #[serde(skip)]
    space: Space,
}

impl SubActionTable {
    pub fn space(&self) -> Space {
        self.space
    }

    /// Linear interpolation of the table, periodic on the circle.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.points.len();
        let (lo, hi) = self.space.bounds();
        let h = (hi - lo) / n as f64;
        let t = (x - lo) / h - 0.5;
        if self.space.is_circle() {
            let i = t.floor();
            let frac = t - i;
            let i0 = (i as i64).rem_euclid(n as i64) as usize;
            let i1 = (i0 + 1) % n;
            self.values[i0] * (1.0 - frac) + self.values[i1] * frac
        } else if t <= 0.0 {
            self.values[0]
        } else if t >= (n - 1) as f64 {
            self.values[n - 1]
        } else {
            let i = t.floor() as usize;
            let frac = t - i as f64;
            self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
        }
    }

    /// `x,psi,achieved_depth` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,psi,achieved_depth\n");
        for ((x, v), d) in self.points.iter().zip(&self.values).zip(&self.achieved) {
            out.push_str(&format!("{x:.11e},{v:.11e},{d}\n"));
        }
        out
    }
}

struct Search<'a, P: ?Sized> {
    map: &'a MapSpec,
    phi: &'a P,
    beta: f64,
    depth: usize,
    excess: f64,
    cap: u64,
}

struct Best {
    value: f64,
    at: usize,
    nodes: u64,
}

impl<P: Potential + ?Sized> Search<'_, P> {
    /// Largest value any strict descendant of a depth-`n` node can reach,
    /// relative to the node's own sum.
    fn headroom(&self, n: usize) -> f64 {
        let left = self.depth - n;
        if left == 0 {
            f64::NEG_INFINITY
        } else if self.excess > 0.0 {
            left as f64 * self.excess
        } else {
            self.excess
        }
    }

    fn dfs(&self, y: f64, n: usize, s: f64, best: &mut Best) -> Result<(), SubactionError> {
        let mut kids: Vec<(f64, f64)> = self
            .map
            .preimages_f64(y)
            .into_iter()
            .map(|z| (z, s + self.phi.value(z) - self.beta))
            .collect();
        kids.sort_by(|a, b| b.1.total_cmp(&a.1));
        for (z, sz) in kids {
            best.nodes += 1;
            if best.nodes > self.cap {
                return Err(SubactionError::DepthOverflow { x: y, cap: self.cap });
            }
            if sz > best.value {
                best.value = sz;
                best.at = n + 1;
            }
            if sz + self.headroom(n + 1) > best.value {
                self.dfs(z, n + 1, sz, best)?;
            }
        }
        Ok(())
    }

    fn run(&self, x: f64) -> Result<Best, SubactionError> {
        let mut best = Best { value: f64::NEG_INFINITY, at: 0, nodes: 0 };
        self.dfs(x, 0, 0.0, &mut best)?;
        if best.at == 0 {
            return Err(SubactionError::EmptyPreimage(x));
        }
        Ok(best)
    }
}

/// `ψ_N(x)` at a single point.
pub fn subaction_value<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    beta: f64,
    depth: usize,
    x: f64,
    node_cap: u64,
) -> Result<(f64, usize), SubactionError> {
    if depth == 0 {
        return Err(SubactionError::ZeroDepth);
    }
    let s = Search { map, phi, beta, depth, excess: phi.sup_bound() - beta, cap: node_cap };
    s.run(x).map(|b| (b.value, b.at))
}

fn values_on<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    beta: f64,
    depth: usize,
    points: &[f64],
    cap: u64,
) -> Result<Vec<Best>, SubactionError> {
    let s = Search { map, phi, beta, depth, excess: phi.sup_bound() - beta, cap };
    points.par_iter().map(|&x| s.run(x)).collect()
}

/// Observed Lipschitz constant of grid values: the largest adjacent
/// difference quotient, including the wrap-around pair on the circle.
pub fn observed_lipschitz(space: &Space, points: &[f64], values: &[f64]) -> f64 {
    let n = points.len();
    let mut best = 0.0_f64;
    let mut pairs: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if space.is_circle() && n > 1 {
        pairs.push((n - 1, 0));
    }
    for (i, j) in pairs {
        let d = space.dist(points[i], points[j]);
        if d > 0.0 {
            best = best.max((values[i] - values[j]).abs() / d);
        }
    }
    best
}

/// Tabulates `ψ_N` on the midpoints of `grid_n` uniform cells.
pub fn subaction_candidate<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    beta: f64,
    depth: usize,
    grid_n: usize,
) -> Result<SubActionTable, SubactionError> {
    subaction_candidate_with_cap(map, phi, beta, depth, grid_n, DEFAULT_NODE_CAP)
}

pub fn subaction_candidate_with_cap<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    beta: f64,
    depth: usize,
    grid_n: usize,
    node_cap: u64,
) -> Result<SubActionTable, SubactionError> {
    if depth == 0 {
        return Err(SubactionError::ZeroDepth);
    }
    if grid_n < 2 {
        return Err(SubactionError::GridTooSmall(grid_n));
    }
    let space = map.space();
    let points = space.midpoints(grid_n);
    let best = values_on(map, phi, beta, depth, &points, node_cap)?;
    let last_increment = if depth > 1 {
        let prev = values_on(map, phi, beta, depth - 1, &points, node_cap)?;
        Some(best.iter().zip(&prev).map(|(a, b)| a.value - b.value).fold(f64::NEG_INFINITY, f64::max))
    } else {
        None
    };
    let values: Vec<f64> = best.iter().map(|b| b.value).collect();
    let achieved: Vec<usize> = best.iter().map(|b| b.at).collect();
    let mut histogram = vec![0; depth + 1];
    for &a in &achieved {
        histogram[a] += 1;
    }
    Ok(SubActionTable {
        lip_observed: observed_lipschitz(&space, &points, &values),
        phi_c_below_beta: phi.value(map.critical_point().to_f64()) < beta,
        nodes_visited: best.iter().map(|b| b.nodes).sum(),
        points,
        values,
        depth,
        beta,
        achieved,
        histogram,
        last_increment,
        space,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlackEntry {
    pub x: f64,
    pub slack: f64,
    pub contact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    /// Sorted by slack, largest first.
    pub entries: Vec<SlackEntry>,
    pub max_slack: f64,
    pub tol: f64,
    /// Number of grid points in the contact set `Z_φ`.
    pub contact_count: usize,
    pub critical_point: f64,
    pub critical_slack: f64,
    pub critical_excluded: bool,
    /// `V_m` around the critical point, in lifted coordinates on the circle.
    pub v_interval: Option<(f64, f64)>,
    pub v_depth: usize,
    /// No contact point lies in `V_m`.
    pub contact_avoids_v: bool,
    pub pass: bool,
}

/// The component of the critical point between its two nearest `n`-th
/// preimages (other than itself). Circle intervals are returned lifted, so
/// `lo` may be negative.
pub fn v_interval(map: &MapSpec, n: usize) -> Option<(f64, f64)> {
    let c = map.critical_point().to_f64();
    let mut level = vec![c];
    for _ in 0..n {
        level = level.iter().flat_map(|&y| map.preimages_f64(y)).collect();
    }
    let eq = map.tolerances().equality;
    if map.is_circle() {
        let above = level.iter().copied().filter(|&p| p > eq && p < 1.0 - eq).fold(f64::INFINITY, f64::min);
        let below = level.iter().copied().filter(|&p| p > eq && p < 1.0 - eq).fold(f64::NEG_INFINITY, f64::max);
        (above.is_finite() && below.is_finite()).then_some((below - 1.0, above))
    } else {
        let lo = level.iter().copied().filter(|&p| p < c - eq).fold(f64::NEG_INFINITY, f64::max);
        let hi = level.iter().copied().filter(|&p| p > c + eq).fold(f64::INFINITY, f64::min);
        (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
    }
}

fn in_v(space: &Space, v: (f64, f64), x: f64) -> bool {
    if space.is_circle() {
        let y = if x > 0.5 { x - 1.0 } else { x };
        v.0 < y && y < v.1
    } else {
        v.0 < x && x < v.1
    }
}

/// Slack `φ(x) − β − ψ(Tx) + ψ(x)` at every grid point, with `ψ(Tx)`
/// interpolated from the table.
pub fn verify_subaction<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    beta: f64,
    table: &SubActionTable,
    tol: f64,
) -> ViolationReport {
    verify_subaction_with(map, phi, beta, table, tol, DEFAULT_V_DEPTH)
}

pub fn verify_subaction_with<P: Potential + ?Sized>(
    map: &MapSpec,
    phi: &P,
    beta: f64,
    table: &SubActionTable,
    tol: f64,
    v_depth: usize,
) -> ViolationReport {
    let slack_at = |x: f64, psi_x: f64| phi.value(x) - beta - table.interpolate(map.eval_f64(x)) + psi_x;
    let mut entries: Vec<SlackEntry> = table
        .points
        .par_iter()
        .zip(&table.values)
        .map(|(&x, &v)| {
            let slack = slack_at(x, v);
            SlackEntry { x, slack, contact: slack.abs() <= tol }
        })
        .collect();
    entries.sort_by(|a, b| b.slack.total_cmp(&a.slack).then(a.x.total_cmp(&b.x)));
    let max_slack = entries.first().map_or(f64::NEG_INFINITY, |e| e.slack);
    let c = map.critical_point().to_f64();
    let critical_slack = slack_at(c, table.interpolate(c));
    let v = v_interval(map, v_depth);
    let space = table.space();
    let contact_avoids_v = v.is_none_or(|v| entries.iter().all(|e| !e.contact || !in_v(&space, v, e.x)));
    ViolationReport {
        contact_count: entries.iter().filter(|e| e.contact).count(),
        entries,
        max_slack,
        tol,
        critical_point: c,
        critical_slack,
        critical_excluded: critical_slack.abs() > tol,
        v_interval: v,
        v_depth,
        contact_avoids_v,
        pass: max_slack <= tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzProfile {
    pub lip_observed: f64,
    /// `L_*·(1 + 1/(1 − λ))` with `λ = 1/min|T′|`; absent when the map is
    /// not uniformly expanding.
    pub lipschitz_bound: Option<f64>,
    pub pass: Option<bool>,
}

/// Observed Lipschitz constant of the table against the bound available
/// for uniformly expanding maps; `l_star` bounds `lip(φ)`.
pub fn lipschitz_profile(map: &MapSpec, table: &SubActionTable, l_star: f64) -> LipschitzProfile {
    let lipschitz_bound = lipschitz_bound(map, l_star).ok();
    LipschitzProfile {
        lip_observed: table.lip_observed,
        lipschitz_bound,
        pass: lipschitz_bound.map(|b| table.lip_observed <= b),
    }
}

/// `L_*·(t + 1/(1 − λ^η))` with `t = η = 1` and `λ = 1/min|T′|`.
pub fn lipschitz_bound(map: &MapSpec, l_star: f64) -> Result<f64, SubactionError> {
    match map.min_expansion() {
        Some(m) if m > 1.0 && map.is_circle() => Ok(l_star * (1.0 + 1.0 / (1.0 - 1.0 / m))),
        _ => Err(SubactionError::ConstantsUnavailable(map.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::Observable;
    use crate::potential::{FnPotential, Potential};
    use std::f64::consts::PI;

    fn obs(src: &str, map: &MapSpec) -> Observable {
        Observable::parse(src, map.space()).unwrap()
    }

    /// Full preimage tree, no pruning.
    fn exhaustive<P: Potential + ?Sized>(map: &MapSpec, phi: &P, beta: f64, depth: usize, x: f64) -> f64 {
        let mut frontier = vec![(x, 0.0)];
        let mut best = f64::NEG_INFINITY;
        for _ in 0..depth {
            let mut next = Vec::new();
            for (y, s) in frontier {
                for z in map.preimages_f64(y) {
                    let sz = s + phi.value(z) - beta;
                    best = best.max(sz);
                    next.push((z, sz));
                }
            }
            frontier = next;
        }
        best
    }

    #[test]
    fn constant_phi_gives_zero_table() {
        let m = MapSpec::doubling();
        let phi = obs("0.25", &m);
        let t = subaction_candidate(&m, &phi, 0.25, 6, 32).unwrap();
        assert!(t.values.iter().all(|&v| v == 0.0));
        assert_eq!(t.lip_observed, 0.0);
        let r = verify_subaction(&m, &phi, 0.25, &t, 1e-12);
        assert!(r.pass && r.contact_count == 32);
    }

    #[test]
    fn pruning_matches_exhaustive_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (desc, src, beta) in [
            ("doubling", "-cos(2*pi*x)", 0.5),
            ("cover:d=3,alpha=0.3", "sin(2*pi*x) + 0.2*cos(6*pi*x)", 0.4),
            ("tent:a=2", "cos(pi*x)", 0.6),
        ] {
            let m: MapSpec = desc.parse().unwrap();
            let phi = obs(src, &m);
            let (lo, hi) = m.space().bounds();
            for _ in 0..64 {
                let x = rng.gen_range(lo..hi);
                for n in 1..=8 {
                    let (fast, at) = subaction_value(&m, &phi, beta, n, x, DEFAULT_NODE_CAP).unwrap();
                    let slow = exhaustive(&m, &phi, beta, n, x);
                    assert_eq!(fast, slow, "{desc} x={x} n={n}");
                    assert!(at >= 1 && at <= n);
                }
            }
        }
    }

    #[test]
    fn values_are_monotone_in_depth() {
        let m = MapSpec::doubling();
        let phi = obs("-cos(2*pi*x) + 0.3*sin(6*pi*x)", &m);
        let mut prev: Option<SubActionTable> = None;
        for n in 1..=9 {
            let t = subaction_candidate(&m, &phi, 0.4, n, 128).unwrap();
            if let Some(p) = &prev {
                assert!(t.values.iter().zip(&p.values).all(|(a, b)| a >= b));
            }
            assert!(t.achieved.iter().all(|&a| a >= 1 && a <= n));
            prev = Some(t);
        }
    }

    #[test]
    fn node_cap_overflow() {
        let m = MapSpec::doubling();
        let loose = FnPotential { f: |_: f64| 0.0, sup: 100.0 };
        let err = subaction_candidate_with_cap(&m, &loose, 0.0, 12, 4, 100).unwrap_err();
        assert!(matches!(err, SubactionError::DepthOverflow { cap: 100, .. }));
    }

    #[test]
    fn coboundary_table_recovers_transfer_function() {
        let m = MapSpec::doubling();
        let psi0 = |x: f64| 0.3 * (2.0 * PI * x).sin();
        let phi = FnPotential { f: |x: f64| psi0(m.eval_f64(x)) - psi0(x) + 0.1, sup: 0.6 + 0.1 };
        let t = subaction_candidate(&m, &phi, 0.1, 10, 256).unwrap();
        let diffs: Vec<f64> = t.points.iter().zip(&t.values).map(|(&x, &v)| v - psi0(x)).collect();
        let spread = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - diffs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-2, "spread {spread}");
        let r = verify_subaction(&m, &phi, 0.1, &t, 1e-2);
        assert!(r.pass, "{}", r.max_slack);
        // lip(ψ₀) = 0.6π
        assert!(t.lip_observed <= 2.0 * 0.6 * PI + 1e-2);
    }

    #[test]
    fn minus_cos_certificate_small() {
        let m = MapSpec::doubling();
        let phi = obs("-cos(2*pi*x)", &m);
        let t = subaction_candidate(&m, &phi, 0.5, 10, 512).unwrap();
        assert!(t.phi_c_below_beta);
        let r = verify_subaction(&m, &phi, 0.5, &t, 5e-3);
        assert!(r.pass, "{}", r.max_slack);
        assert!(r.critical_excluded && r.contact_avoids_v);
        let p = lipschitz_profile(&m, &t, phi.lip_estimate());
        assert!((p.lipschitz_bound.unwrap() - 6.0 * PI).abs() < 1e-12);
        assert_eq!(p.pass, Some(true));
    }

    #[test]
    fn lipschitz_bound_unavailable_for_indifferent_covers() {
        let m = MapSpec::circle_cover(2, 0.5).unwrap();
        assert!(matches!(lipschitz_bound(&m, 1.0), Err(SubactionError::ConstantsUnavailable(_))));
        assert!(lipschitz_bound(&MapSpec::quadratic(4.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn v_intervals() {
        let v = v_interval(&MapSpec::doubling(), 6).unwrap();
        assert!((v.0 + 1.0 / 64.0).abs() < 1e-15 && (v.1 - 1.0 / 64.0).abs() < 1e-15);
        let t2: MapSpec = "tent:a=2".parse().unwrap();
        // preimages of 1 under T_2 at level 2 are 1/4, 3/4, 5/4, 7/4
        let v = v_interval(&t2, 2).unwrap();
        assert_eq!(v, (0.75, 1.25));
    }

    #[test]
    fn indifferent_cover_records_increment() {
        let cover = MapSpec::circle_cover(2, 1.0).unwrap();
        let phi = obs("-dist(x,[0])", &cover);
        let t = subaction_candidate(&cover, &phi, 0.0, 8, 64).unwrap();
        assert!(!t.phi_c_below_beta);
        assert!(t.last_increment.unwrap() >= 0.0);
        assert!(subaction_candidate(&cover, &phi, 0.0, 1, 64).unwrap().last_increment.is_none());
    }

    #[test]
    fn csv_and_interpolation() {
        let m = MapSpec::doubling();
        let phi = obs("sin(2*pi*x)", &m);
        let t = subaction_candidate(&m, &phi, 1.0, 3, 8).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("x,psi,achieved_depth\n"));
        assert_eq!(t.interpolate(t.points[3]), t.values[3]);
        let mid = t.interpolate(0.0);
        assert!((mid - 0.5 * (t.values[0] + t.values[7])).abs() < 1e-15);
    }
}
