//! Lipschitz constants and range enclosures for observable expressions.

use std::f64::consts::PI;

use serde::Serialize;

use super::{BinaryOp, Expr, Observable, UnaryOp};
use crate::dynamics::Space;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LipMode {
    Analytic,
    Grid,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LipError {
    #[error("analytic bound unavailable for `{0}`")]
    UnsupportedNode(String),
    #[error("grid mode needs at least 2 points, got {0}")]
    GridTooSmall(usize),
}

type Range = (f64, f64);

fn cos_range((lo, hi): Range) -> Range {
    if !(lo.is_finite() && hi.is_finite()) || hi - lo >= 2.0 * PI {
        return (-1.0, 1.0);
    }
    let (a, b) = (lo.cos(), hi.cos());
    let (mut min, mut max) = (a.min(b), a.max(b));
    // maxima at 2kπ, minima at (2k+1)π
    let k_lo = (lo / PI).ceil() as i64;
    let k_hi = (hi / PI).floor() as i64;
    for k in k_lo..=k_hi {
        if k.rem_euclid(2) == 0 {
            max = 1.0;
        } else {
            min = -1.0;
        }
    }
    (min, max)
}

pub(super) fn range_of(e: &Expr, space: &Space) -> Range {
    match e {
        Expr::X => space.bounds(),
        Expr::Num(v) => (*v, *v),
        Expr::Pi => (PI, PI),
        Expr::Neg(a) => {
            let (l, h) = range_of(a, space);
            (-h, -l)
        }
        Expr::Unary(op, a) => {
            let r = range_of(a, space);
            match op {
                UnaryOp::Cos => cos_range(r),
                UnaryOp::Sin => cos_range((r.0 - PI / 2.0, r.1 - PI / 2.0)),
                UnaryOp::Exp => (r.0.exp(), r.1.exp()),
                UnaryOp::Abs => {
                    if r.0 >= 0.0 {
                        r
                    } else if r.1 <= 0.0 {
                        (-r.1, -r.0)
                    } else {
                        (0.0, (-r.0).max(r.1))
                    }
                }
            }
        }
        Expr::Binary(op, a, b) => {
            let (ra, rb) = (range_of(a, space), range_of(b, space));
            match op {
                BinaryOp::Add => (ra.0 + rb.0, ra.1 + rb.1),
                BinaryOp::Sub => (ra.0 - rb.1, ra.1 - rb.0),
                BinaryOp::Mul => {
                    let p = [ra.0 * rb.0, ra.0 * rb.1, ra.1 * rb.0, ra.1 * rb.1];
                    (p.iter().copied().fold(f64::INFINITY, f64::min), p.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                }
                BinaryOp::Min => (ra.0.min(rb.0), ra.1.min(rb.1)),
                BinaryOp::Max => (ra.0.max(rb.0), ra.1.max(rb.1)),
            }
        }
        Expr::Dist(_) => (0.0, space.diameter()),
    }
}

fn sup_abs((lo, hi): Range) -> f64 {
    lo.abs().max(hi.abs())
}

/// Compositional upper bound for `lip(φ)`.
pub(super) fn analytic(e: &Expr, space: &Space) -> Result<f64, LipError> {
    let l = match e {
        Expr::X => 1.0,
        Expr::Num(_) | Expr::Pi => 0.0,
        Expr::Neg(a) => analytic(a, space)?,
        Expr::Unary(op, a) => {
            let la = analytic(a, space)?;
            match op {
                UnaryOp::Cos | UnaryOp::Sin | UnaryOp::Abs => la,
                UnaryOp::Exp => {
                    if la == 0.0 {
                        0.0
                    } else {
                        let top = range_of(a, space).1.exp();
                        if !top.is_finite() {
                            return Err(LipError::UnsupportedNode(e.to_string()));
                        }
                        top * la
                    }
                }
            }
        }
        Expr::Binary(op, a, b) => {
            let (la, lb) = (analytic(a, space)?, analytic(b, space)?);
            match op {
                BinaryOp::Add | BinaryOp::Sub => la + lb,
                BinaryOp::Min | BinaryOp::Max => la.max(lb),
                BinaryOp::Mul => {
                    // lip(fg) <= sup|f| lip g + sup|g| lip f
                    let fa = if lb == 0.0 { 0.0 } else { sup_abs(range_of(a, space)) * lb };
                    let fb = if la == 0.0 { 0.0 } else { sup_abs(range_of(b, space)) * la };
                    fa + fb
                }
            }
        }
        Expr::Dist(_) => 1.0,
    };
    if l.is_finite() {
        Ok(l)
    } else {
        Err(LipError::UnsupportedNode(e.to_string()))
    }
}

/// Evenly spaced sample points: endpoints included on an interval,
/// `i/n` on the circle.
pub(crate) fn grid_points(space: &Space, n: usize) -> Vec<f64> {
    match *space {
        Space::Interval { lo, hi } => {
            let h = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * h }).collect()
        }
        Space::Circle => (0..n).map(|i| i as f64 / n as f64).collect(),
    }
}

pub(super) fn grid(obs: &Observable, n: usize) -> Result<f64, LipError> {
    if n < 2 {
        return Err(LipError::GridTooSmall(n));
    }
    let space = obs.space();
    let xs = grid_points(&space, n);
    let vs: Vec<f64> = xs.iter().map(|&x| obs.eval_f64(x)).collect();
    let mut best = 0.0_f64;
    let mut consider = |i: usize, j: usize| {
        let d = space.dist(xs[i], xs[j]);
        if d > 0.0 {
            best = best.max((vs[i] - vs[j]).abs() / d);
        }
    };
    for i in 0..n - 1 {
        consider(i, i + 1);
    }
    if space.is_circle() {
        consider(n - 1, 0);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cos_range_finds_interior_extrema() {
        assert_eq!(cos_range((-0.1, 0.1)).1, 1.0);
        let (lo, hi) = cos_range((0.5, 1.0));
        assert!((hi - 0.5f64.cos()).abs() < 1e-15 && (lo - 1.0f64.cos()).abs() < 1e-15);
        assert_eq!(cos_range((3.0, 3.5)).0, -1.0);
        assert_eq!(cos_range((0.0, 7.0)), (-1.0, 1.0));
    }
}
