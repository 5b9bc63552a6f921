//! Runners behind the CLI subcommands. Each produces the rendered output
//! and a pass flag for the property it checks.

use ergopt::markov::{admissible_cover, invariant_set_depth, verify_markov, LevelStats, MarkovCheck, MarkovCover};
use ergopt::optimize::{
    beta_periodic, beta_report, default_c_star, gamma_estimate_at, subordination_check, support_candidate, BetaReport,
    SubordinationReport,
};
use ergopt::orbits::OrbitRecord;
use ergopt::subaction::{lipschitz_profile, subaction_candidate, verify_subaction, LipschitzProfile, SubActionTable, ViolationReport};
use ergopt::{dist_to_orbit, enumerate_periodic_orbits, MapSpec, Observable, PeriodicOrbit, Real};
use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::locking::{locking_experiment, LockingSetup};
use crate::scaling::gamma_scaling;
use crate::sweep::{csv_err, tpo_sweep, SweepFamily};
use crate::{fmt_f64, ExpError};

/// Default agreement tolerance for the two `β` routes.
pub const BETA_TOL: f64 = 0.02;
/// Default slack tolerance for sub-action verification.
pub const SUBACTION_TOL: f64 = 1e-3;
/// Default tolerance for the subordination inequality.
pub const SUBORDINATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Beta,
    Subaction,
    Gamma,
    Support,
    Markov,
    Lock,
    Sweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub pass: bool,
}

fn render<T: Serialize>(value: &T) -> Result<String, ExpError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_rows(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, ExpError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| ExpError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn parse_points(items: &[String]) -> Result<Vec<Real>, ExpError> {
    items.iter().map(|s| s.parse::<Real>().map_err(|_| ExpError::Config(format!("bad point `{s}`")))).collect()
}

fn first_phi(cfg: &ExperimentConfig) -> Result<&str, ExpError> {
    cfg.phi.first().map(String::as_str).ok_or_else(|| ExpError::Config("no observable given".into()))
}

/// The enumerated orbit through all of `points`.
pub fn find_orbit(map: &MapSpec, points: &[Real], max_period: usize) -> Result<PeriodicOrbit, ExpError> {
    let space = map.space();
    let tol = map.tolerances().equality;
    enumerate_periodic_orbits(map, max_period.max(points.len()))?
        .into_iter()
        .find(|o| o.period == points.len() && points.iter().all(|p| dist_to_orbit(p, o, &space) <= tol))
        .ok_or_else(|| ExpError::Config("points do not form an enumerated periodic orbit".into()))
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome, ExpError> {
    cfg.validate()?;
    let map: MapSpec = cfg.map.parse()?;
    match cmd {
        Command::Beta => beta(&map, cfg),
        Command::Subaction => subaction(&map, cfg),
        Command::Gamma => gamma(&map, cfg),
        Command::Support => support(&map, cfg),
        Command::Markov => markov(&map, cfg),
        Command::Lock => lock(&map, cfg),
        Command::Sweep => sweep(&map, cfg),
    }
}

#[derive(Serialize)]
struct BetaEntry<'a> {
    phi: &'a str,
    #[serde(flatten)]
    report: BetaReport,
}

fn beta(map: &MapSpec, cfg: &ExperimentConfig) -> Result<Outcome, ExpError> {
    let tol = cfg.tol.unwrap_or(BETA_TOL);
    let mut entries = Vec::new();
    for src in &cfg.phi {
        let phi = Observable::parse(src, map.space())?;
        entries.push(BetaEntry { phi: src, report: beta_report(map, &phi, cfg.max_period, cfg.cells)? });
    }
    let pass = entries.iter().all(|e| e.report.gap <= tol);
    let body = match cfg.format {
        Format::Json => render(&entries)?,
        Format::Csv => csv_rows(
            &["phi", "beta_orbit", "beta_cycle", "gap", "argmax_itinerary", "period"],
            entries.iter().map(|e| {
                vec![
                    e.phi.to_string(),
                    fmt_f64(e.report.beta_orbit),
                    fmt_f64(e.report.beta_cycle),
                    fmt_f64(e.report.gap),
                    e.report.argmax_orbit.itinerary.clone(),
                    e.report.argmax_orbit.period.to_string(),
                ]
            }),
        )?,
    };
    Ok(Outcome { body, pass })
}

#[derive(Serialize)]
struct SubactionOutput<'a> {
    map: String,
    phi: &'a str,
    argmax_orbit: OrbitRecord,
    table: &'a SubActionTable,
    verification: ViolationReport,
    lipschitz: LipschitzProfile,
}

fn subaction(map: &MapSpec, cfg: &ExperimentConfig) -> Result<Outcome, ExpError> {
    let src = first_phi(cfg)?;
    let phi = Observable::parse(src, map.space())?;
    let (beta, orbit) = beta_periodic(map, &phi, cfg.max_period)?;
    let table = subaction_candidate(map, &phi, beta, cfg.depth, cfg.grid)?;
    let verification = verify_subaction(map, &phi, beta, &table, cfg.tol.unwrap_or(SUBACTION_TOL));
    let lipschitz = lipschitz_profile(map, &table, phi.lip_estimate());
    let pass = verification.pass && lipschitz.pass.unwrap_or(true);
    let body = match cfg.format {
        Format::Json => render(&SubactionOutput {
            map: map.to_string(),
            phi: src,
            argmax_orbit: orbit.record(),
            table: &table,
            verification,
            lipschitz,
        })?,
        Format::Csv => table.to_csv(),
    };
    Ok(Outcome { body, pass })
}

fn gamma(map: &MapSpec, cfg: &ExperimentConfig) -> Result<Outcome, ExpError> {
    let report = gamma_scaling(map, &cfg.phi, &cfg.t_values, cfg.depth, cfg.grid, cfg.max_period)?;
    let body = match cfg.format {
        Format::Json => render(&report)?,
        Format::Csv => report.to_csv()?,
    };
    Ok(Outcome { body, pass: report.pass })
}

#[derive(Serialize)]
struct SupportOutput<'a> {
    map: String,
    phi: &'a str,
    beta: f64,
    gamma: f64,
    argmax_orbit: OrbitRecord,
    c_star: f64,
    member_count: usize,
    members: Vec<f64>,
    subordination: SubordinationReport,
}

fn support(map: &MapSpec, cfg: &ExperimentConfig) -> Result<Outcome, ExpError> {
    let src = first_phi(cfg)?;
    let phi = Observable::parse(src, map.space())?;
    let (beta, orbit) = beta_periodic(map, &phi, cfg.max_period)?;
    let mut gamma_points = map.space().midpoints(cfg.grid);
    gamma_points.extend(orbit.points_f64());
    let gamma = gamma_estimate_at(map, &phi, beta, cfg.depth, &gamma_points);
    let c_star = default_c_star(gamma);
    let cand = support_candidate(map, &phi, beta, c_star, (cfg.depth, cfg.depth), cfg.grid);
    let check_points = if cfg.points.is_empty() { orbit.points.clone() } else { parse_points(&cfg.points)? };
    let tol = cfg.tol.unwrap_or(SUBORDINATION_TOL);
    let subordination = subordination_check(map, &phi, beta, gamma, &check_points, cfg.depth, tol)?;
    let pass = subordination.pass;
    let body = match cfg.format {
        Format::Json => render(&SupportOutput {
            map: map.to_string(),
            phi: src,
            beta,
            gamma,
            argmax_orbit: orbit.record(),
            c_star,
            member_count: cand.member_count(),
            members: cand.member_points(),
            subordination,
        })?,
        Format::Csv => cand.to_csv(),
    };
    Ok(Outcome { body, pass })
}

#[derive(Serialize)]
struct MarkovOutput {
    map: String,
    cover: MarkovCover,
    check: MarkovCheck,
    levels: Vec<LevelStats>,
    surjective: bool,
}

fn markov(map: &MapSpec, cfg: &ExperimentConfig) -> Result<Outcome, ExpError> {
    let k_points = parse_points(&cfg.points)?;
    if k_points.is_empty() {
        return Err(ExpError::Config("markov needs `points`".into()));
    }
    let z = find_orbit(map, &parse_points(&cfg.z)?, cfg.max_period)?;
    let cover = admissible_cover(map, &k_points, &z, cfg.m)?;
    let check = verify_markov(map, &cover);
    let approx = invariant_set_depth(map, &cover, cfg.depth);
    let pass = check.holds;
    let body = match cfg.format {
        Format::Json => render(&MarkovOutput {
            map: map.to_string(),
            cover,
            check,
            levels: approx.levels,
            surjective: approx.surjective,
        })?,
        Format::Csv => csv_rows(
            &["lo", "hi"],
            cover.intervals.iter().map(|iv| {
                let [lo, hi] = iv.to_f64();
                vec![fmt_f64(lo), fmt_f64(hi)]
            }),
        )?,
    };
    Ok(Outcome { body, pass })
}

fn lock(map: &MapSpec, cfg: &ExperimentConfig) -> Result<Outcome, ExpError> {
    let setup = LockingSetup {
        map: map.clone(),
        base: first_phi(cfg)?.to_string(),
        eps: cfg.eps,
        delta: cfg.delta,
        trials: cfg.trials,
        seed: cfg.seed,
        max_period: cfg.max_period,
        orbit_points: if cfg.points.is_empty() { None } else { Some(parse_points(&cfg.points)?) },
    };
    let report = locking_experiment(&setup)?;
    let body = match cfg.format {
        Format::Json => render(&report)?,
        Format::Csv => csv_rows(
            &["trial", "psi_lip", "certified", "argmax_itinerary", "margin", "kept"],
            report.trials.iter().map(|t| {
                vec![
                    t.trial.to_string(),
                    fmt_f64(t.psi_lip),
                    t.certified.to_string(),
                    t.argmax_itinerary.clone(),
                    fmt_f64(t.margin),
                    t.kept.to_string(),
                ]
            }),
        )?,
    };
    Ok(Outcome { body, pass: report.pass })
}

fn sweep(map: &MapSpec, cfg: &ExperimentConfig) -> Result<Outcome, ExpError> {
    let family = SweepFamily::of(map).ok_or_else(|| ExpError::Config("sweep needs a tent or quad map".into()))?;
    let a_values = if cfg.a_values.is_empty() {
        let desc = map.to_string();
        vec![desc.split_once("a=").map(|(_, a)| a.to_string()).unwrap_or_default()]
    } else {
        cfg.a_values.clone()
    };
    let report = tpo_sweep(family, &a_values, &cfg.phi, cfg.eps, cfg.max_period, cfg.grid);
    let body = match cfg.format {
        Format::Json => render(&report)?,
        Format::Csv => report.to_csv()?,
    };
    Ok(Outcome { body, pass: true })
}
