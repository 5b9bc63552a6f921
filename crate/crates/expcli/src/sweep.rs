//! Parameter sweeps over the tent and quadratic families.

use ergopt::optimize::ranked_orbits;
use ergopt::{enumerate_periodic_orbits, MapSpec, Observable, Real};
use rayon::prelude::*;
use serde::Serialize;

use crate::locking::locked_source;
use crate::{fmt_f64, ExpError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepFamily {
    Tent,
    Quadratic,
}

impl SweepFamily {
    pub fn map(self, a: &str) -> Result<MapSpec, ExpError> {
        let a: Real = a.parse().map_err(|_| ExpError::Config(format!("bad parameter `{a}`")))?;
        Ok(match self {
            SweepFamily::Tent => MapSpec::tent(a)?,
            SweepFamily::Quadratic => MapSpec::quadratic(a.to_f64())?,
        })
    }

    /// Family of a map descriptor, if it is one of the swept families.
    pub fn of(map: &MapSpec) -> Option<Self> {
        match map.family() {
            ergopt::Family::Tent { .. } => Some(SweepFamily::Tent),
            ergopt::Family::Quadratic { .. } => Some(SweepFamily::Quadratic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub a: String,
    pub phi_index: usize,
    pub phi: String,
    pub argmax_itinerary: String,
    pub period: usize,
    pub beta: f64,
    /// Best orbit average minus the runner-up, for `φ − ε·dist(·,𝒪*)`.
    pub gap: f64,
    pub locked: bool,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub family: SweepFamily,
    pub eps: f64,
    pub max_period: usize,
    pub grid: usize,
    pub rows: Vec<SweepRow>,
    pub locked_fraction: f64,
}

impl SweepReport {
    pub fn to_csv(&self) -> Result<String, ExpError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["a", "phi_index", "phi", "argmax_itinerary", "period", "beta", "gap", "locked", "error"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.a.clone(),
                r.phi_index.to_string(),
                r.phi.clone(),
                r.argmax_itinerary.clone(),
                r.period.to_string(),
                fmt_f64(r.beta),
                fmt_f64(r.gap),
                r.locked.to_string(),
                r.error.clone(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| ExpError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> ExpError {
    ExpError::Io(std::io::Error::other(e))
}

fn sweep_cell(
    family: SweepFamily,
    a: &str,
    idx: usize,
    src: &str,
    eps: f64,
    max_period: usize,
    grid: usize,
) -> Result<SweepRow, ExpError> {
    let map = family.map(a)?;
    let space = map.space();
    let phi = Observable::parse(src, space)?;
    let orbits = enumerate_periodic_orbits(&map, max_period)?;
    let (_, star_idx, _) = ranked_orbits(&orbits, &phi).ok_or(ExpError::NoOrbits)?;
    let star = &orbits[star_idx];
    let locked_phi = Observable::parse(&locked_source(src, eps, star), space)?;
    let (beta, best_idx, runner_up) = ranked_orbits(&orbits, &locked_phi).ok_or(ExpError::NoOrbits)?;
    let best = &orbits[best_idx];
    let gap = runner_up.map_or(f64::INFINITY, |r| beta - r);
    let pts = star.points_f64();
    let resolution = space
        .midpoints(grid)
        .into_iter()
        .map(|x| pts.iter().map(|&p| space.dist(x, p)).fold(f64::INFINITY, f64::min))
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    Ok(SweepRow {
        a: a.to_string(),
        phi_index: idx,
        phi: src.to_string(),
        argmax_itinerary: best.itinerary.clone(),
        period: best.period,
        beta,
        gap,
        locked: gap > eps * resolution,
        error: String::new(),
    })
}

/// One row per `(a, φ)` in `(a, φ index)` order. Cell failures are
/// recorded in the row's `error` column.
pub fn tpo_sweep(
    family: SweepFamily,
    a_values: &[String],
    phi_bank: &[String],
    eps: f64,
    max_period: usize,
    grid: usize,
) -> SweepReport {
    let cells: Vec<(&String, usize, &String)> =
        a_values.iter().flat_map(|a| phi_bank.iter().enumerate().map(move |(i, p)| (a, i, p))).collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(a, i, src)| {
            sweep_cell(family, a, i, src, eps, max_period, grid).unwrap_or_else(|e| SweepRow {
                a: a.clone(),
                phi_index: i,
                phi: src.clone(),
                argmax_itinerary: String::new(),
                period: 0,
                beta: f64::NAN,
                gap: f64::NAN,
                locked: false,
                error: e.to_string(),
            })
        })
        .collect();
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_empty()).collect();
    let locked_fraction =
        if ok.is_empty() { 0.0 } else { ok.iter().filter(|r| r.locked).count() as f64 / ok.len() as f64 };
    SweepReport { family, eps, max_period, grid, rows, locked_fraction }
}
