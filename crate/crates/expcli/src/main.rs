use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use expcli::commands::{run, Command};
use expcli::{ExpError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "ergopt", version, about = "Ergodic optimization experiments on one-dimensional maps")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Maximal average by orbit enumeration and by maximum mean cycle.
    Beta,
    /// Sub-action table and its verification.
    Subaction,
    /// Scaling of the deviation constant with the observable.
    Gamma,
    /// Support candidate and subordination check.
    Support,
    /// Admissible Markov cover.
    Markov,
    /// Locking of the maximizing orbit under random perturbations.
    Lock,
    /// Parameter sweep over the tent or quadratic family.
    Sweep,
}

#[derive(Args)]
struct Opts {
    /// `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    map: Option<String>,
    /// Observable source; several are separated by `;`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<String>,
    #[arg(long, global = true)]
    max_period: Option<String>,
    #[arg(long, global = true)]
    cells: Option<String>,
    #[arg(long, global = true)]
    depth: Option<String>,
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    eps: Option<String>,
    #[arg(long, global = true)]
    delta: Option<String>,
    #[arg(long, global = true)]
    trials: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    /// `json` or `csv`.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Comma-separated points (`p/q` or decimals).
    #[arg(long, global = true)]
    points: Option<String>,
    /// Comma-separated points of the generating orbit for `markov`.
    #[arg(long, global = true)]
    z: Option<String>,
    #[arg(long, global = true)]
    m: Option<String>,
    /// Comma-separated parameters for `sweep`.
    #[arg(long, global = true)]
    a_values: Option<String>,
    /// Comma-separated scale factors for `gamma`.
    #[arg(long, global = true)]
    t_values: Option<String>,
    #[arg(long, global = true)]
    tol: Option<String>,
    #[arg(long, global = true)]
    threads: Option<String>,
}

impl Opts {
    fn pairs(&self) -> Vec<(&'static str, &String)> {
        let all = [
            ("map", &self.map),
            ("phi", &self.phi),
            ("max_period", &self.max_period),
            ("cells", &self.cells),
            ("depth", &self.depth),
            ("grid", &self.grid),
            ("eps", &self.eps),
            ("delta", &self.delta),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
            ("points", &self.points),
            ("z", &self.z),
            ("m", &self.m),
            ("a_values", &self.a_values),
            ("t_values", &self.t_values),
            ("tol", &self.tol),
            ("threads", &self.threads),
        ];
        all.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v))).collect()
    }
}

fn build_config(opts: &Opts) -> Result<ExperimentConfig, ExpError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &opts.config {
        let text = std::fs::read_to_string(path)?;
        for (k, v) in ExperimentConfig::parse_str(&text)? {
            cfg.set(&k, &v)?;
        }
    }
    for (k, v) in opts.pairs() {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool, ExpError> {
    let cfg = build_config(&cli.opts)?;
    let cmd = match cli.command {
        Cmd::Beta => Command::Beta,
        Cmd::Subaction => Command::Subaction,
        Cmd::Gamma => Command::Gamma,
        Cmd::Support => Command::Support,
        Cmd::Markov => Command::Markov,
        Cmd::Lock => Command::Lock,
        Cmd::Sweep => Command::Sweep,
    };
    let outcome = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ExpError::Config(e.to_string()))?
            .install(|| run(cmd, &cfg))?,
        None => run(cmd, &cfg)?,
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, &outcome.body)?,
        None => print!("{}", outcome.body),
    }
    eprintln!("{}", if outcome.pass { "PASS" } else { "FAIL" });
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
