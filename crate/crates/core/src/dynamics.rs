//! Map families, forward and inverse dynamics, Birkhoff sums and the
//! renormalization core of unimodal maps.
//!
//! Four families are supported:
//!
//! | descriptor            | map                                   | domain   |
//! |-----------------------|---------------------------------------|----------|
//! | `tent:a=A`            | `x ↦ A(1 − |x − 1|)`                  | `[0, 2]` |
//! | `quad:a=A`            | `x ↦ A·x(1 − x)`                      | `[0, 1]` |
//! | `doubling`            | `x ↦ 2x mod 1`                        | `ℝ/ℤ`    |
//! | `cover:d=D,alpha=α`   | `x ↦ x + (D − 1)·x^(1+α) mod 1`       | `ℝ/ℤ`    |
//!
//! Tent maps with a rational slope, the doubling map and covers with `α = 0`
//! are evaluated in exact rational arithmetic when handed exact points.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::potential::Potential;
use crate::real::{frac_exact, frac_f64, Point, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("point {x} lies outside the domain {domain}")]
    Domain { x: f64, domain: String },
    #[error("map is not differentiable at {0}")]
    NotDifferentiable(f64),
    #[error("no renormalization core with period <= {r_max}")]
    NotFound { r_max: usize },
    #[error("invalid map parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot parse map descriptor `{0}`")]
    Descriptor(String),
    #[error("operation requires a unimodal map")]
    NotUnimodal,
}

/// Numerical tolerances used by floating-point kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Residual target for inverse-branch root finding.
    pub root: f64,
    /// Equality threshold for points and interval endpoints.
    pub equality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { root: 1e-10, equality: 1e-9 }
    }
}

/// Phase space with its metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Space {
    Interval { lo: f64, hi: f64 },
    Circle,
}

impl Space {
    pub fn dist(&self, x: f64, y: f64) -> f64 {
        match self {
            Space::Interval { .. } => (x - y).abs(),
            Space::Circle => {
                let d = (x - y).abs().rem_euclid(1.0);
                d.min(1.0 - d)
            }
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Space::Interval { lo, hi } => (lo..=hi).contains(&x),
            Space::Circle => (0.0..1.0).contains(&x),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Space::Interval { lo, hi } => (lo, hi),
            Space::Circle => (0.0, 1.0),
        }
    }

    pub fn length(&self) -> f64 {
        let (lo, hi) = self.bounds();
        hi - lo
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Space::Interval { lo, hi } => hi - lo,
            Space::Circle => 0.5,
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, Space::Circle)
    }

    /// Midpoints of a uniform partition into `n` cells.
    pub fn midpoints(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        let h = (hi - lo) / n as f64;
        (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
            Space::Circle => write!(f, "R/Z"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Tent { slope: Real },
    Quadratic { a: f64 },
    Doubling,
    CircleCover { degree: u32, alpha: f64 },
}

/// A one-dimensional dynamical system with its branch structure.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    family: Family,
    tol: Tolerances,
}

/// Result of [`MapSpec::renorm_core`].
#[derive(Debug, Clone, PartialEq)]
pub struct RenormCore {
    pub period: usize,
    pub lo: Real,
    pub hi: Real,
}

const MAX_DEGREE: u32 = 9;
const ROOT_ITERS: usize = 80;

impl MapSpec {
    pub fn tent(slope: Real) -> Result<Self, DynamicsError> {
        let a = slope.to_f64();
        if !(a > 1.0 && a <= 2.0) {
            return Err(DynamicsError::InvalidParameter(format!("tent slope {a} not in (1, 2]")));
        }
        Ok(Self::with_family(Family::Tent { slope }))
    }

    pub fn quadratic(a: f64) -> Result<Self, DynamicsError> {
        if !(a > 0.0 && a <= 4.0) {
            return Err(DynamicsError::InvalidParameter(format!("quadratic parameter {a} not in (0, 4]")));
        }
        Ok(Self::with_family(Family::Quadratic { a }))
    }

    pub fn doubling() -> Self {
        Self::with_family(Family::Doubling)
    }

    pub fn circle_cover(degree: u32, alpha: f64) -> Result<Self, DynamicsError> {
        if !(2..=MAX_DEGREE).contains(&degree) {
            return Err(DynamicsError::InvalidParameter(format!("degree {degree} not in 2..={MAX_DEGREE}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(DynamicsError::InvalidParameter(format!("alpha {alpha} must be >= 0")));
        }
        Ok(Self::with_family(Family::CircleCover { degree, alpha }))
    }

    fn with_family(family: Family) -> Self {
        MapSpec { family, tol: Tolerances::default() }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn space(&self) -> Space {
        match self.family {
            Family::Tent { .. } => Space::Interval { lo: 0.0, hi: 2.0 },
            Family::Quadratic { .. } => Space::Interval { lo: 0.0, hi: 1.0 },
            Family::Doubling | Family::CircleCover { .. } => Space::Circle,
        }
    }

    pub fn is_unimodal(&self) -> bool {
        matches!(self.family, Family::Tent { .. } | Family::Quadratic { .. })
    }

    pub fn is_circle(&self) -> bool {
        !self.is_unimodal()
    }

    /// Whether exact rational inputs produce exact rational outputs.
    pub fn is_exact(&self) -> bool {
        match &self.family {
            Family::Tent { slope } => slope.is_exact(),
            Family::Quadratic { .. } => false,
            Family::Doubling => true,
            Family::CircleCover { alpha, .. } => *alpha == 0.0,
        }
    }

    pub fn branch_count(&self) -> usize {
        match self.family {
            Family::Tent { .. } | Family::Quadratic { .. } | Family::Doubling => 2,
            Family::CircleCover { degree, .. } => degree as usize,
        }
    }

    /// Turning point for unimodal kinds, the (indifferent) fixed point `0`
    /// for circle kinds.
    pub fn critical_point(&self) -> Real {
        match self.family {
            Family::Tent { .. } => Real::int(1),
            Family::Quadratic { .. } => Real::Float(0.5),
            Family::Doubling | Family::CircleCover { .. } => Real::int(0),
        }
    }

    pub(crate) fn critical_f64(&self) -> f64 {
        self.critical_point().to_f64()
    }

    /// Exact slope or degree multiplier, when the map is piecewise affine
    /// with rational coefficients.
    pub fn exact_multiplier(&self) -> Option<BigRational> {
        match &self.family {
            Family::Tent { slope: Real::Exact(a) } => Some(a.clone()),
            Family::Doubling => Some(BigRational::from_integer(2.into())),
            Family::CircleCover { degree, alpha } if *alpha == 0.0 => {
                Some(BigRational::from_integer((*degree).into()))
            }
            _ => None,
        }
    }

    fn param_f64(&self) -> f64 {
        match &self.family {
            Family::Tent { slope } => slope.to_f64(),
            Family::Quadratic { a } => *a,
            Family::Doubling => 2.0,
            Family::CircleCover { degree, .. } => *degree as f64,
        }
    }

    /// `sup |T'|`, the Lipschitz constant of the map.
    pub fn max_expansion(&self) -> f64 {
        match self.family {
            Family::Tent { .. } | Family::Quadratic { .. } | Family::Doubling => self.param_f64(),
            Family::CircleCover { degree, alpha } => 1.0 + (degree as f64 - 1.0) * (1.0 + alpha),
        }
    }

    /// `inf |T'|` for uniformly expanding kinds.
    pub fn min_expansion(&self) -> Option<f64> {
        match self.family {
            Family::Tent { .. } | Family::Doubling => Some(self.param_f64()),
            Family::CircleCover { degree, alpha: 0.0 } => Some(degree as f64),
            _ => None,
        }
    }

    fn check_domain(&self, x: f64) -> Result<(), DynamicsError> {
        let space = self.space();
        if space.contains(x) {
            Ok(())
        } else {
            Err(DynamicsError::Domain { x, domain: space.to_string() })
        }
    }

    fn cover_lift(degree: u32, alpha: f64, x: f64) -> f64 {
        x + (degree as f64 - 1.0) * x.powf(1.0 + alpha)
    }

    fn cover_lift_deriv(degree: u32, alpha: f64, x: f64) -> f64 {
        1.0 + (degree as f64 - 1.0) * (1.0 + alpha) * x.powf(alpha)
    }

    /// Monotone lift `[0, 1] → [0, d]` of a circle map; `T` itself for
    /// interval kinds.
    pub fn lift_f64(&self, x: f64) -> f64 {
        match self.family {
            Family::Doubling => 2.0 * x,
            Family::CircleCover { degree, alpha } => Self::cover_lift(degree, alpha, x),
            _ => self.eval_f64(x),
        }
    }

    /// Evaluate `T(x)` without domain checks.
    pub fn eval_f64(&self, x: f64) -> f64 {
        match self.family {
            Family::Tent { .. } => {
                let a = self.param_f64();
                a * (1.0 - (x - 1.0).abs())
            }
            Family::Quadratic { a } => a * x * (1.0 - x),
            Family::Doubling => frac_f64(2.0 * x),
            Family::CircleCover { degree, alpha } => frac_f64(Self::cover_lift(degree, alpha, x)),
        }
    }

    pub(crate) fn eval_exact(&self, x: &BigRational) -> Option<BigRational> {
        let m = self.exact_multiplier()?;
        Some(match self.family {
            Family::Tent { .. } => {
                let one = crate::real::one();
                if *x <= one {
                    m * x
                } else {
                    m * (one.clone() + one - x)
                }
            }
            _ => frac_exact(&(m * x)),
        })
    }

    pub fn eval(&self, x: &Point) -> Result<Point, DynamicsError> {
        self.check_domain(x.to_f64())?;
        if let Real::Exact(q) = x {
            if let Some(y) = self.eval_exact(q) {
                return Ok(Real::Exact(y));
            }
        }
        Ok(Real::Float(self.eval_f64(x.to_f64())))
    }

    /// Signed derivative of the map (of its lift for circle kinds).
    pub fn derivative_f64(&self, x: f64) -> f64 {
        match self.family {
            Family::Tent { .. } => {
                let a = self.param_f64();
                if x < 1.0 {
                    a
                } else {
                    -a
                }
            }
            Family::Quadratic { a } => a * (1.0 - 2.0 * x),
            Family::Doubling => 2.0,
            Family::CircleCover { degree, alpha } => Self::cover_lift_deriv(degree, alpha, x),
        }
    }

    pub fn derivative_abs(&self, x: &Point) -> Result<f64, DynamicsError> {
        let xf = x.to_f64();
        self.check_domain(xf)?;
        if let Family::Tent { .. } = self.family {
            let at_peak = match x {
                Real::Exact(q) => *q == crate::real::one(),
                Real::Float(v) => (v - 1.0).abs() <= self.tol.equality,
            };
            if at_peak {
                return Err(DynamicsError::NotDifferentiable(xf));
            }
        }
        Ok(self.derivative_f64(xf).abs())
    }

    /// Inverse of the `k`-th monotone branch. Arguments outside the branch's
    /// image are clamped to the nearest attainable value.
    pub fn inverse_branch_f64(&self, k: usize, y: f64) -> f64 {
        match self.family {
            Family::Tent { .. } => {
                let a = self.param_f64();
                let t = (y / a).clamp(0.0, 1.0);
                if k == 0 {
                    t
                } else {
                    2.0 - t
                }
            }
            Family::Quadratic { a } => {
                let disc = (1.0 - 4.0 * y / a).max(0.0).sqrt();
                if k == 0 {
                    0.5 * (1.0 - disc)
                } else {
                    0.5 * (1.0 + disc)
                }
            }
            Family::Doubling => (y.clamp(0.0, 1.0) + k as f64) / 2.0,
            Family::CircleCover { degree, alpha } => {
                if alpha == 0.0 {
                    (y.clamp(0.0, 1.0) + k as f64) / degree as f64
                } else {
                    self.invert_cover(degree, alpha, y.clamp(0.0, 1.0) + k as f64)
                }
            }
        }
    }

    /// Solve `lift(x) = target` on `[0, 1]` by bisection safeguarded Newton.
    fn invert_cover(&self, degree: u32, alpha: f64, target: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut x = target / degree as f64;
        for _ in 0..ROOT_ITERS {
            let fx = Self::cover_lift(degree, alpha, x) - target;
            if fx == 0.0 {
                return x;
            }
            if fx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let step = fx / Self::cover_lift_deriv(degree, alpha, x);
            let newton = x - step;
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() <= f64::EPSILON * x.abs().max(1e-300) || hi - lo <= f64::EPSILON {
                x = next;
                break;
            }
            x = next;
        }
        debug_assert!((Self::cover_lift(degree, alpha, x) - target).abs() <= self.tol.root);
        x
    }

    /// Index of the monotone branch containing `x`; `None` on a branch
    /// boundary that is a turning point (within tolerance for float kinds).
    pub fn branch_of_f64(&self, x: f64) -> Option<usize> {
        match self.family {
            Family::Tent { .. } | Family::Quadratic { .. } => {
                let c = self.critical_f64();
                let tol = if self.is_exact() { 0.0 } else { self.tol.equality * 1e-3 };
                if (x - c).abs() <= tol {
                    None
                } else if x < c {
                    Some(0)
                } else {
                    Some(1)
                }
            }
            Family::Doubling => Some(if x < 0.5 { 0 } else { 1 }),
            Family::CircleCover { degree, alpha } => {
                let lift = Self::cover_lift(degree, alpha, x.clamp(0.0, 1.0));
                Some((lift.floor() as usize).min(degree as usize - 1))
            }
        }
    }

    /// Affine form `x ↦ s·x + t` of branch `k` for exact kinds.
    pub(crate) fn exact_branch_affine(&self, k: usize) -> Option<(BigRational, BigRational)> {
        let m = self.exact_multiplier()?;
        Some(match self.family {
            Family::Tent { .. } => {
                if k == 0 {
                    (m, BigRational::zero())
                } else {
                    let two = BigRational::from_integer(2.into());
                    (-m.clone(), two * m)
                }
            }
            _ => (m, -BigRational::from_integer(k.into())),
        })
    }

    pub fn branch_of_exact(&self, x: &BigRational) -> Option<usize> {
        let m = self.exact_multiplier()?;
        match self.family {
            Family::Tent { .. } => {
                let one = crate::real::one();
                match x.cmp(&one) {
                    std::cmp::Ordering::Less => Some(0),
                    std::cmp::Ordering::Greater => Some(1),
                    std::cmp::Ordering::Equal => None,
                }
            }
            _ => {
                let k = (m * x).floor();
                num_traits::ToPrimitive::to_usize(k.numer())
            }
        }
    }

    pub fn preimages_f64(&self, y: f64) -> Vec<f64> {
        match self.family {
            Family::Tent { .. } => {
                let a = self.param_f64();
                if !(0.0..=a).contains(&y) {
                    return Vec::new();
                }
                let left = y / a;
                if left == 1.0 {
                    vec![1.0]
                } else {
                    vec![left, 2.0 - left]
                }
            }
            Family::Quadratic { a } => {
                let top = a / 4.0;
                if !(0.0..=top).contains(&y) {
                    return Vec::new();
                }
                let disc = (1.0 - 4.0 * y / a).max(0.0).sqrt();
                if disc == 0.0 {
                    vec![0.5]
                } else {
                    vec![0.5 * (1.0 - disc), 0.5 * (1.0 + disc)]
                }
            }
            Family::Doubling | Family::CircleCover { .. } => {
                if !(0.0..1.0).contains(&y) {
                    return Vec::new();
                }
                (0..self.branch_count()).map(|k| self.inverse_branch_f64(k, y)).collect()
            }
        }
    }

    fn preimages_exact(&self, y: &BigRational) -> Option<Vec<BigRational>> {
        let m = self.exact_multiplier()?;
        let zero = BigRational::zero();
        Some(match self.family {
            Family::Tent { .. } => {
                let two = BigRational::from_integer(2.into());
                if y.is_negative() || *y > m {
                    return Some(Vec::new());
                }
                let left = y / &m;
                if left == crate::real::one() {
                    vec![left]
                } else {
                    let right = two - &left;
                    vec![left, right]
                }
            }
            _ => {
                if *y < zero || *y >= crate::real::one() {
                    return Some(Vec::new());
                }
                let d = num_traits::ToPrimitive::to_u32(m.numer()).unwrap_or(2);
                (0..d).map(|k| (y + BigRational::from_integer(k.into())) / &m).collect()
            }
        })
    }

    /// All solutions of `T(x) = y`, sorted ascending.
    pub fn preimages(&self, y: &Point) -> Vec<Point> {
        if let Real::Exact(q) = y {
            if let Some(v) = self.preimages_exact(q) {
                return v.into_iter().map(Real::Exact).collect();
            }
        }
        self.preimages_f64(y.to_f64()).into_iter().map(Real::Float).collect()
    }

    /// Forward orbit `x, Tx, …, T^(n−1)x` in floating point.
    pub fn orbit_f64(&self, x: f64, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let mut y = x;
        for _ in 0..n {
            out.push(y);
            y = self.eval_f64(y);
        }
        out
    }

    /// `S_nφ(x) = Σ_{0≤k<n} φ(T^k x)`. Exact points are iterated exactly.
    pub fn birkhoff_sum<P: Potential + ?Sized>(&self, phi: &P, x: &Point, n: usize) -> Result<f64, DynamicsError> {
        self.check_domain(x.to_f64())?;
        let mut sum = 0.0;
        let mut y = x.clone();
        for _ in 0..n {
            sum += phi.value(y.to_f64());
            y = self.eval(&y)?;
        }
        Ok(sum)
    }

    /// Image of `[lo, hi]` under a unimodal map (peak at the turning point).
    pub(crate) fn interval_image_f64(&self, lo: f64, hi: f64) -> (f64, f64) {
        let (a, b) = (self.eval_f64(lo), self.eval_f64(hi));
        let c = self.critical_f64();
        if lo < c && c < hi {
            (a.min(b), self.eval_f64(c))
        } else {
            (a.min(b), a.max(b))
        }
    }

    pub(crate) fn interval_image_exact(&self, lo: &BigRational, hi: &BigRational) -> Option<(BigRational, BigRational)> {
        let a = self.eval_exact(lo)?;
        let b = self.eval_exact(hi)?;
        let c = crate::real::one();
        let (min, max) = if a <= b { (a, b) } else { (b, a) };
        if *lo < c && c < *hi {
            Some((min, self.eval_exact(&c)?))
        } else {
            Some((min, max))
        }
    }

    /// Renormalization core: the deepest `r ≤ r_max` such that `c` lies
    /// strictly between `T^r c` and `T^{2r} c`, `Y = [T^r c, T^{2r} c]`
    /// satisfies `T^r Y = Y`, and `Y, TY, …, T^{r−1}Y` have pairwise
    /// disjoint interiors.
    pub fn renorm_core(&self, r_max: usize) -> Result<RenormCore, DynamicsError> {
        if !self.is_unimodal() {
            return Err(DynamicsError::NotUnimodal);
        }
        let exact = self.is_exact();
        let c = self.critical_point();
        let mut orbit = vec![c.clone()];
        for _ in 0..2 * r_max {
            let next = self.eval(orbit.last().expect("nonempty"))?;
            orbit.push(next);
        }
        let tol = if exact { 0.0 } else { self.tol.equality };
        let mut best = None;
        for r in 1..=r_max {
            let (p, q) = (&orbit[r], &orbit[2 * r]);
            let (lo, hi) = if p.cmp_total(q).is_le() { (p, q) } else { (q, p) };
            let cf = c.to_f64();
            let strictly_inside = lo.cmp_total(&c).is_lt() && c.cmp_total(hi).is_lt()
                && (exact || (cf - lo.to_f64() > tol && hi.to_f64() - cf > tol));
            if !strictly_inside {
                continue;
            }
            if self.is_restrictive(lo, hi, r, tol) {
                best = Some(RenormCore { period: r, lo: lo.clone(), hi: hi.clone() });
            }
        }
        best.ok_or(DynamicsError::NotFound { r_max })
    }

    fn is_restrictive(&self, lo: &Real, hi: &Real, r: usize, tol: f64) -> bool {
        if let (Real::Exact(l), Real::Exact(h)) = (lo, hi) {
            if let Some(cycle) = self.interval_cycle_exact(l, h, r) {
                let (end_lo, end_hi) = &cycle[r];
                if end_lo != l || end_hi != h {
                    return false;
                }
                return cycle[..r].iter().enumerate().all(|(i, (a, b))| {
                    cycle[..r].iter().skip(i + 1).all(|(a2, b2)| b <= a2 || b2 <= a)
                });
            }
        }
        let mut cur = (lo.to_f64(), hi.to_f64());
        let mut cycle = vec![cur];
        for _ in 0..r {
            cur = self.interval_image_f64(cur.0, cur.1);
            cycle.push(cur);
        }
        let (l, h) = (lo.to_f64(), hi.to_f64());
        (cycle[r].0 - l).abs() <= tol && (cycle[r].1 - h).abs() <= tol && pairwise_disjoint(&cycle[..r], tol)
    }

    fn interval_cycle_exact(&self, lo: &BigRational, hi: &BigRational, r: usize) -> Option<Vec<(BigRational, BigRational)>> {
        let mut cur = (lo.clone(), hi.clone());
        let mut out = vec![cur.clone()];
        for _ in 0..r {
            cur = self.interval_image_exact(&cur.0, &cur.1)?;
            out.push(cur.clone());
        }
        Some(out)
    }
}

fn pairwise_disjoint(intervals: &[(f64, f64)], tol: f64) -> bool {
    for (i, a) in intervals.iter().enumerate() {
        for b in &intervals[i + 1..] {
            let overlap = a.1.min(b.1) - a.0.max(b.0);
            if overlap > tol {
                return false;
            }
        }
    }
    true
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Tent { slope } => write!(f, "tent:a={slope}"),
            Family::Quadratic { a } => write!(f, "quad:a={a}"),
            Family::Doubling => write!(f, "doubling"),
            Family::CircleCover { degree, alpha } => write!(f, "cover:d={degree},alpha={alpha}"),
        }
    }
}

impl FromStr for MapSpec {
    type Err = DynamicsError;

    /// Parses `tent:a=2`, `quad:a=3.9`, `doubling`, `cover:d=2,alpha=0.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DynamicsError::Descriptor(s.to_string());
        let s = s.trim();
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = std::collections::BTreeMap::new();
        for part in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let real = |key: &str| -> Result<Real, DynamicsError> {
            kv.get(key).ok_or_else(bad)?.parse::<Real>().map_err(|_| bad())
        };
        let allowed: &[&str] = match name.trim() {
            "tent" | "quad" => &["a"],
            "doubling" => &[],
            "cover" => &["d", "alpha"],
            _ => return Err(bad()),
        };
        if kv.keys().any(|k| !allowed.contains(&k.as_str())) {
            return Err(bad());
        }
        match name.trim() {
            "tent" => MapSpec::tent(real("a")?),
            "quad" => MapSpec::quadratic(real("a")?.to_f64()),
            "doubling" => Ok(MapSpec::doubling()),
            "cover" => {
                let d = kv.get("d").ok_or_else(bad)?.parse::<u32>().map_err(|_| bad())?;
                let alpha = match kv.get("alpha") {
                    Some(_) => real("alpha")?.to_f64(),
                    None => 0.0,
                };
                MapSpec::circle_cover(d, alpha)
            }
            _ => Err(bad()),
        }
    }
}
