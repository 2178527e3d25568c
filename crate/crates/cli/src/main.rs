mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::{info, warn};
use matterwave::budget::{
    budget_sweep, error_budget, grid_minimum, log_grid, map_params, optimize_atom_number,
    MappedParams, NoiseBudget, Optimum,
};
use matterwave::exec::map_indexed;
use matterwave::interferometer::{
    estimator, gw_low_frequency_ratio, gw_phase_response, run_pair, run_sequence, Estimate,
    GwParams, GwUnits, InterferometerOutput, NoiseBreakdown, PairLink,
};
use matterwave::mode_algebra::{ModeRegistry, OperatorExpr};
use matterwave::oracle::{monte_carlo, run_checks, MonteCarloConfig, MonteCarloStats, VerifyConfig};
use matterwave::Complex64 as C64;
use serde::Serialize;

use config::{ConfigError, Mode, RunConfig};
use output::{Stamp, Writer};

/// Linearized quantum noise model of light-pulse atom interferometers.
#[derive(Parser, Debug)]
#[command(name = "matterwave", version)]
struct Cli {
    /// TOML run configuration; defaults are used for anything not given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo samples (0 skips sampling outside verify mode).
    #[arg(long)]
    samples: Option<usize>,
}

const SCALING_NOTE: &str =
    "budget terms are order-of-magnitude scaling estimates; sampled statistics treat vacuum modes as Gaussian c-numbers, exact for the linearized dynamics";

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model: {0}")]
    Model(#[from] matterwave::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

fn load(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            config::parse(&text, &path.display().to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.samples {
        cfg.samples = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SequenceSummary {
    mean_out: [C64; 2],
    signal_field: [C64; 2],
    delta_n_mean: f64,
    delta_n_signal: f64,
    signal_coefficient: f64,
    noise: NoiseBreakdown,
    estimate: Estimate,
}

fn summarize(o: &InterferometerOutput) -> Result<SequenceSummary, RunError> {
    Ok(SequenceSummary {
        mean_out: o.mean_out,
        signal_field: o.signal_field,
        delta_n_mean: o.delta_n.mean().re,
        delta_n_signal: o.delta_n_signal,
        signal_coefficient: o.signal_coefficient,
        noise: o.noise,
        estimate: estimator(o)?,
    })
}

#[derive(Serialize)]
struct BudgetReport {
    budget: NoiseBudget,
    optimum: Optimum,
    mapped: Option<MappedParams>,
}

fn budget_report(cfg: &RunConfig) -> Result<BudgetReport, RunError> {
    let (na, nl, k, mapped) = match &cfg.lab {
        Some(lab) => {
            let m = map_params(lab)?;
            (lab.atom_number, lab.photon_number, m.momentum_scale, Some(m))
        }
        None => (
            cfg.budget.atom_number,
            cfg.budget.photon_number,
            cfg.budget.momentum_scale,
            None,
        ),
    };
    let budget = error_budget(na, nl, k)?;
    for w in &budget.warnings {
        warn!("{w}");
    }
    Ok(BudgetReport {
        optimum: optimize_atom_number(nl, k)?,
        budget,
        mapped,
    })
}

fn sample(
    cfg: &RunConfig,
    exprs: &[OperatorExpr],
    reg: &ModeRegistry,
) -> Result<Option<MonteCarloStats>, RunError> {
    if cfg.samples == 0 {
        return Ok(None);
    }
    let mut mc = MonteCarloConfig::new(cfg.samples, cfg.seed);
    mc.execution = cfg.execution;
    info!("sampling {} draws", cfg.samples);
    Ok(Some(monte_carlo(exprs, reg, &mc)?))
}

#[derive(Serialize)]
struct SingleReport {
    sequence: SequenceSummary,
    sampled_delta_n: Option<MonteCarloStats>,
    budget: BudgetReport,
}

#[derive(Serialize)]
struct PairReport {
    link: PairLink,
    first: SequenceSummary,
    second: SequenceSummary,
    covariance: f64,
    correlation: f64,
    differential_variance: f64,
    cross_back_action: f64,
    sampled: Option<MonteCarloStats>,
}

#[derive(Serialize)]
struct SweepReport {
    grid_minimum: Option<NoiseBudget>,
    optimum: Option<Optimum>,
    files: Vec<String>,
}

enum Status {
    Ok,
    VerifyFailed,
}

fn run(cfg: &RunConfig) -> Result<Status, RunError> {
    let stamp = Stamp {
        config_hash: cfg.hash(),
        seed: cfg.seed,
    };
    info!("mode {} config {}", cfg.mode, stamp.config_hash);
    let mut out = Writer::new(&cfg.output_dir, stamp)?;
    out.text("config.echo.toml", &cfg.to_toml())?;
    let mode = cfg.mode.to_string();
    let mut status = Status::Ok;
    match cfg.mode {
        Mode::Single => {
            let mut reg = ModeRegistry::new();
            let o = run_sequence(&cfg.model.sequence(cfg.model.signal_phases), &mut reg)?;
            let report = SingleReport {
                sequence: summarize(&o)?,
                sampled_delta_n: sample(cfg, std::slice::from_ref(&o.delta_n), &reg)?,
                budget: budget_report(cfg)?,
            };
            out.json("result.json", &mode, Some(SCALING_NOTE), &report)?;
        }
        Mode::Pair => {
            let mut reg = ModeRegistry::new();
            let first = cfg.model.sequence(cfg.model.signal_phases);
            let second = cfg.model.sequence(cfg.pair.second_signal_phases);
            let p = run_pair(&first, &second, cfg.pair.link, &mut reg)?;
            let exprs = [p.first.delta_n.clone(), p.second.delta_n.clone()];
            let report = PairReport {
                link: p.link,
                first: summarize(&p.first)?,
                second: summarize(&p.second)?,
                covariance: p.covariance,
                correlation: p.correlation,
                differential_variance: p.differential_variance,
                cross_back_action: p.cross_back_action,
                sampled: sample(cfg, &exprs, &reg)?,
            };
            out.json("result.json", &mode, Some(SCALING_NOTE), &report)?;
        }
        Mode::Budget => {
            out.json("result.json", &mode, Some(SCALING_NOTE), &budget_report(cfg)?)?;
        }
        Mode::Sweep => {
            let s = &cfg.sweep;
            let (nl, k) = match &cfg.lab {
                Some(lab) => (lab.photon_number, map_params(lab)?.momentum_scale),
                None => (cfg.budget.photon_number, cfg.budget.momentum_scale),
            };
            let mut report = SweepReport {
                grid_minimum: None,
                optimum: None,
                files: Vec::new(),
            };
            if let Some(a) = &s.atom_number {
                let grid = log_grid(a.lo, a.hi, a.points)?;
                let rows = budget_sweep(&grid, nl, k, cfg.execution)?;
                let table: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|b| vec![b.atom_number, b.back_action, b.atom_shot, b.optical, b.total, b.standard_quantum_limit])
                    .collect();
                out.csv(
                    "budget_sweep.csv",
                    &["atom_number", "back_action", "atom_shot", "optical", "total", "standard_quantum_limit"],
                    &table,
                )?;
                report.grid_minimum = grid_minimum(&rows).cloned();
                report.optimum = Some(optimize_atom_number(nl, k)?);
                report.files.push("budget_sweep.csv".into());
            }
            if let Some(a) = &s.gw_omega {
                let grid = log_grid(a.lo, a.hi, a.points)?;
                let g = &s.gw;
                let rows: Result<Vec<Vec<f64>>, matterwave::Error> =
                    map_indexed(grid.len(), cfg.execution, |i| {
                        let p = GwParams {
                            omega: grid[i],
                            strain: g.strain,
                            baseline: g.baseline,
                            interrogation_time: g.interrogation_time,
                            wavenumber: g.wavenumber,
                            time: g.time,
                            units: GwUnits {
                                speed_of_light: g.speed_of_light,
                            },
                        };
                        Ok(vec![grid[i], gw_phase_response(&p)?, gw_low_frequency_ratio(&p)?])
                    })
                    .into_iter()
                    .collect();
                out.csv("gw_response.csv", &["omega", "phase", "low_frequency_ratio"], &rows?)?;
                report.files.push("gw_response.csv".into());
            }
            out.json("result.json", &mode, Some(SCALING_NOTE), &report)?;
        }
        Mode::Verify => {
            let vc = VerifyConfig {
                samples: cfg.samples,
                seed: cfg.seed,
                execution: cfg.execution,
                momentum_scale: cfg.budget.momentum_scale,
                ..VerifyConfig::default()
            };
            let report = run_checks(&vc);
            for c in &report.checks {
                let tag = if c.passed { "pass" } else { "FAIL" };
                println!("{tag} {:<32} residual {:.3e} (tolerance {:.1e})", c.name, c.residual, c.tolerance);
            }
            out.json("verify.json", &mode, None, &report)?;
            if !report.passed {
                status = Status::VerifyFailed;
            }
        }
    }
    for f in out.files() {
        info!("wrote {}", f.display());
    }
    Ok(status)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MATTERWAVE_LOG", "warn")).init();
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cfg) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::VerifyFailed) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
