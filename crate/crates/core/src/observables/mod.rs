//! A small expression language for Lipschitz observables.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := NUM | 'x' | 'pi' | FUNC '(' expr ')'
//!         | 'dist' '(' 'x' ',' '[' NUM (',' NUM)* ']' ')'
//!         | ('min' | 'max') '(' expr ',' expr ')'
//!         | '(' expr ')' | '-' factor
//! FUNC   := 'cos' | 'sin' | 'exp' | 'abs'
//! ```
//!
//! `dist(x, [p, …])` is the distance to the nearest listed point in the
//! metric of the observable's space (wrapping on the circle).

mod lip;
mod parse;

use std::fmt;

use serde::Serialize;

use crate::dynamics::Space;
use crate::potential::Potential;
use crate::real::Point;

pub use lip::{LipError, LipMode};
pub use parse::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Cos,
    Sin,
    Exp,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Min,
    Max,
}

/// Abstract syntax tree of an observable.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    X,
    Num(f64),
    Pi,
    Neg(Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Dist(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObservableError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("dist point {0} lies outside the space {1}")]
    DistPoint(f64, Space),
    #[error("point {0} lies outside the space {1}")]
    Domain(f64, Space),
    #[error(transparent)]
    Lip(#[from] LipError),
}

impl Expr {
    pub fn eval(&self, x: f64, space: &Space) -> f64 {
        match self {
            Expr::X => x,
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Neg(e) => -e.eval(x, space),
            Expr::Unary(op, e) => {
                let v = e.eval(x, space);
                match op {
                    UnaryOp::Cos => v.cos(),
                    UnaryOp::Sin => v.sin(),
                    UnaryOp::Exp => v.exp(),
                    UnaryOp::Abs => v.abs(),
                }
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(x, space), b.eval(x, space));
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Min => a.min(b),
                    BinaryOp::Max => a.max(b),
                }
            }
            Expr::Dist(pts) => pts.iter().map(|p| space.dist(x, *p)).fold(f64::INFINITY, f64::min),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 0,
            Expr::Binary(BinaryOp::Mul, ..) => 1,
            _ => 2,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::X => write!(f, "x"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.write_at(f, 2)
            }
            Expr::Unary(op, e) => {
                let name = match op {
                    UnaryOp::Cos => "cos",
                    UnaryOp::Sin => "sin",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Abs => "abs",
                };
                write!(f, "{name}({e})")
            }
            Expr::Binary(op @ (BinaryOp::Min | BinaryOp::Max), a, b) => {
                let name = if *op == BinaryOp::Min { "min" } else { "max" };
                write!(f, "{name}({a}, {b})")
            }
            Expr::Binary(op, a, b) => {
                let (sym, lp, rp) = match op {
                    BinaryOp::Add => (" + ", 0, 1),
                    BinaryOp::Sub => (" - ", 0, 1),
                    _ => ("*", 1, 2),
                };
                a.write_at(f, lp)?;
                write!(f, "{sym}")?;
                b.write_at(f, rp)
            }
            Expr::Dist(pts) => {
                write!(f, "dist(x, [")?;
                for (i, p) in pts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "])")
            }
        }
    }

    fn dist_points(&self, out: &mut Vec<f64>) {
        match self {
            Expr::Dist(p) => out.extend_from_slice(p),
            Expr::Neg(e) | Expr::Unary(_, e) => e.dist_points(out),
            Expr::Binary(_, a, b) => {
                a.dist_points(out);
                b.dist_points(out);
            }
            _ => {}
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

/// A parsed observable on a given space, with its Lipschitz estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    expr: Expr,
    space: Space,
    lip_estimate: f64,
    lip_mode: LipMode,
    range: (f64, f64),
}

/// Grid size used when the analytic Lipschitz bound is unavailable.
pub const FALLBACK_GRID: usize = 10_000;

impl Observable {
    /// Parse `src` as an observable on `space`.
    pub fn parse(src: &str, space: Space) -> Result<Self, ObservableError> {
        let expr = parse::parse_expr(src)?;
        Self::from_expr(expr, space)
    }

    pub fn from_expr(expr: Expr, space: Space) -> Result<Self, ObservableError> {
        let mut pts = Vec::new();
        expr.dist_points(&mut pts);
        if let Some(p) = pts.into_iter().find(|p| !space.contains(*p)) {
            return Err(ObservableError::DistPoint(p, space));
        }
        let range = lip::range_of(&expr, &space);
        let mut obs = Observable { expr, space, lip_estimate: 0.0, lip_mode: LipMode::Analytic, range };
        match obs.lip_constant(LipMode::Analytic, 0) {
            Ok(l) => obs.lip_estimate = l,
            Err(_) => {
                obs.lip_estimate = obs.lip_constant(LipMode::Grid, FALLBACK_GRID)?;
                obs.lip_mode = LipMode::Grid;
            }
        }
        Ok(obs)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn lip_estimate(&self) -> f64 {
        self.lip_estimate
    }

    pub fn lip_mode(&self) -> LipMode {
        self.lip_mode
    }

    /// Interval-arithmetic enclosure of the range of φ.
    pub fn range_bound(&self) -> (f64, f64) {
        self.range
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.expr.eval(x, &self.space)
    }

    pub fn eval(&self, x: &Point) -> Result<f64, ObservableError> {
        let v = x.to_f64();
        if !self.space.contains(v) {
            return Err(ObservableError::Domain(v, self.space));
        }
        Ok(self.eval_f64(v))
    }

    /// Lipschitz constant: an upper bound in analytic mode, a lower bound
    /// (max adjacent difference quotient) in grid mode.
    pub fn lip_constant(&self, mode: LipMode, grid_n: usize) -> Result<f64, LipError> {
        match mode {
            LipMode::Analytic => lip::analytic(&self.expr, &self.space),
            LipMode::Grid => lip::grid(self, grid_n),
        }
    }

    /// `max |φ|` over a uniform grid of `grid_n` points.
    pub fn sup_abs(&self, grid_n: usize) -> f64 {
        lip::grid_points(&self.space, grid_n.max(2)).into_iter().map(|x| self.eval_f64(x).abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

impl Potential for Observable {
    fn value(&self, x: f64) -> f64 {
        self.eval_f64(x)
    }

    fn sup_bound(&self) -> f64 {
        self.range.1
    }
}

/// Serializable summary of an observable.
#[derive(Debug, Clone, Serialize)]
pub struct ObservableSummary {
    pub expr: String,
    pub lip: f64,
    pub lip_mode: LipMode,
}

impl From<&Observable> for ObservableSummary {
    fn from(o: &Observable) -> Self {
        ObservableSummary { expr: o.to_string(), lip: o.lip_estimate, lip_mode: o.lip_mode }
    }
}

/// Render points as a `dist` literal list, e.g. `[0.25, 0.5]`.
pub fn dist_literal(points: &[f64]) -> String {
    let inner: Vec<String> = points.iter().map(|p| format!("{p}")).collect();
    format!("[{}]", inner.join(", "))
}
