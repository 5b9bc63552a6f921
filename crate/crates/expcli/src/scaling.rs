//! Scaling of the Birkhoff deviation constant `γ` with the observable.

use ergopt::optimize::{beta_periodic, gamma_estimate};
use ergopt::{MapSpec, Observable};
use serde::Serialize;

use crate::{fmt_f64, ExpError};

/// Relative tolerance for `γ(tφ) = t·γ(φ)`.
pub const HOMOGENEITY_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRow {
    pub phi_index: usize,
    pub t: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub map: String,
    pub phi_bank: Vec<String>,
    pub rows: Vec<GammaRow>,
    /// Largest relative spread of `γ(tφ)/t` across `t`, over the bank.
    pub homogeneity_error: f64,
    pub homogeneous: bool,
    /// `max γ/lip` over all rows.
    pub max_ratio: f64,
    /// `diam/(Λ − 1)` for uniformly expanding circle maps.
    pub ratio_bound: Option<f64>,
    pub pass: bool,
}

impl ScalingReport {
    pub fn to_csv(&self) -> Result<String, ExpError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["phi_index", "t", "beta", "gamma", "lip"]).map_err(crate::sweep::csv_err)?;
        for r in &self.rows {
            w.write_record([r.phi_index.to_string(), fmt_f64(r.t), fmt_f64(r.beta), fmt_f64(r.gamma), fmt_f64(r.lip)])
                .map_err(crate::sweep::csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| ExpError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn ratio_bound(map: &MapSpec) -> Option<f64> {
    if !map.is_circle() {
        return None;
    }
    map.min_expansion().filter(|&l| l > 1.0).map(|l| map.space().diameter() / (l - 1.0))
}

/// Rows `(t, γ(tφ), lip(tφ))` for each observable of the bank.
pub fn gamma_scaling(
    map: &MapSpec,
    phi_bank: &[String],
    t_values: &[f64],
    depth: usize,
    grid_n: usize,
    max_period: usize,
) -> Result<ScalingReport, ExpError> {
    if let Some(t) = t_values.iter().find(|&&t| t.is_nan() || t <= 0.0) {
        return Err(ExpError::Config(format!("scaling factors must be positive, got {t}")));
    }
    let space = map.space();
    let mut rows = Vec::new();
    let mut homogeneity_error = 0.0_f64;
    let mut max_ratio = 0.0_f64;
    for (i, src) in phi_bank.iter().enumerate() {
        let mut normalized = Vec::new();
        for &t in t_values {
            let phi = Observable::parse(&format!("({t})*({src})"), space)?;
            let (beta, _) = beta_periodic(map, &phi, max_period)?;
            let gamma = gamma_estimate(map, &phi, beta, depth, grid_n);
            let lip = phi.lip_estimate();
            if lip > 0.0 {
                max_ratio = max_ratio.max(gamma / lip);
            }
            normalized.push(gamma / t);
            rows.push(GammaRow { phi_index: i, t, beta, gamma, lip });
        }
        let hi = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = normalized.iter().copied().fold(f64::INFINITY, f64::min);
        if hi > 1e-12 {
            homogeneity_error = homogeneity_error.max((hi - lo) / hi);
        }
    }
    let homogeneous = homogeneity_error <= HOMOGENEITY_TOL;
    let bound = ratio_bound(map);
    let bounded = match bound {
        Some(b) => max_ratio <= b,
        None => max_ratio.is_finite(),
    };
    Ok(ScalingReport {
        map: map.to_string(),
        phi_bank: phi_bank.to_vec(),
        rows,
        homogeneity_error,
        homogeneous,
        max_ratio,
        ratio_bound: bound,
        pass: homogeneous && bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_bank_is_homogeneous_and_bounded() {
        let bank = vec!["-cos(2*pi*x)".to_string(), "-dist(x,[0.3333333333333333,0.6666666666666666])".to_string()];
        let r = gamma_scaling(&MapSpec::doubling(), &bank, &[1.0, 2.0], 10, 512, 8).unwrap();
        assert!(r.homogeneous, "{}", r.homogeneity_error);
        assert_eq!(r.ratio_bound, Some(0.5));
        assert!(r.pass && r.max_ratio > 0.0);
        let g1 = r.rows[0].gamma;
        let g2 = r.rows[1].gamma;
        assert!((g2 / g1 - 2.0).abs() < 0.02);
    }

    #[test]
    fn constant_observable_has_zero_gamma() {
        let r = gamma_scaling(&MapSpec::doubling(), &["3".to_string()], &[0.5, 4.0], 8, 256, 6).unwrap();
        assert!(r.rows.iter().all(|row| row.gamma.abs() < 1e-12));
        assert!(r.pass);
    }

    #[test]
    fn rejects_nonpositive_t() {
        assert!(gamma_scaling(&MapSpec::doubling(), &["x".to_string()], &[0.0], 4, 16, 4).is_err());
    }

    #[test]
    fn bound_only_for_expanding_circle_maps() {
        assert_eq!(ratio_bound(&"tent:a=2".parse().unwrap()), None);
        assert_eq!(ratio_bound(&"cover:d=3".parse().unwrap()), Some(0.25));
        assert_eq!(ratio_bound(&"cover:d=2,alpha=0.5".parse().unwrap()), None);
    }
}
