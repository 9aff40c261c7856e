//! `sld`: run the learner, batch experiments, privacy audits and plots.
//!
//! Exit codes: 0 on success, 2 for bad flags or configs, 3 when a run fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sld_core::decode::gaussian_mixture_contract;
use sld_core::distributions::{parse_spec, tv_distance_1d, tv_distance_mc};
use sld_core::harness::{
    plot_results, run_audit, run_experiment, run_trial, AuditConfig, ExperimentConfig, HarnessError,
};
use sld_core::reduction::{derive_params, desk_params, DeskOverrides, Mode, ReductionParams};

#[derive(Parser)]
#[command(name = "sld", version, about = "Private agnostic density estimation via stable list decoding")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One end-to-end run; prints the released distribution or BOTTOM.
    Learn(RunArgs),
    /// All trials of a config, written as CSV.
    Experiment(RunArgs),
    /// Empirical privacy audit, written as CSV.
    Audit(AuditArgs),
    /// Derived parameters for a Gaussian mixture class.
    Params(ParamsArgs),
    /// Total variation distance between two spec files.
    Tv(TvArgs),
    /// SVG of an experiment CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// paper or desk
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the trial count (experiment only).
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, default_value_t = 3.0)]
    c: f64,
    /// Mixture components.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value = "paper")]
    mode: Mode,
}

#[derive(Args)]
struct TvArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    abs_tol: f64,
    /// Forces Monte Carlo with this many draws; 1D specs use quadrature otherwise.
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PlotArgs {
    csv: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))
}

fn load_experiment(a: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(x) = a.alpha {
        cfg.params.alpha = x;
    }
    if let Some(x) = a.epsilon {
        cfg.params.epsilon = x;
    }
    if let Some(m) = a.mode {
        cfg.params.mode = m.as_str().to_string();
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    Ok(cfg)
}

fn print_params(p: &ReductionParams) {
    let c = &p.contract;
    println!("mode = {}", p.mode.as_str());
    println!("contract.sample_size = {}", c.sample_size);
    println!("contract.ln_list_bound = {}", c.ln_list_bound);
    println!("contract.c = {}", c.c);
    println!("contract.alpha = {}", c.alpha);
    println!("alpha_prime = {}", p.alpha_prime);
    println!("epsilon_prime = {}", p.epsilon_prime);
    println!("delta_prime = {}", p.delta_prime);
    println!("beta_prime = {}", p.beta_prime);
    println!("mde_samples = {}", p.mde_samples_exact);
    println!("m1 = {}", p.m1_exact);
    println!("lists = {}", p.lists_exact);
    println!("total_samples = {}", p.total_samples());
    println!("iterations = {}", p.iterations());
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.cmd {
        Cmd::Learn(a) => {
            let cfg = load_experiment(&a)?;
            let exp = cfg.build()?;
            let row = run_trial(&exp, 0)?;
            println!("{}", row.output);
            eprintln!(
                "verdicts {} tv {} bound {} spent ({}, {})",
                row.verdicts,
                row.achieved_tv.map_or("-".into(), |v| format!("{v:.4}")),
                row.bound,
                row.epsilon_spent,
                row.delta_spent
            );
        }
        Cmd::Experiment(a) => {
            let cfg = load_experiment(&a)?;
            if cfg.out.is_none() {
                return Err(HarnessError::Config("experiment needs --out or an out path in the config".into()));
            }
            let rows = run_experiment(&cfg)?;
            let ok = rows.iter().filter(|r| r.success).count();
            println!("{}: {ok}/{} trials within the bound", cfg.id, rows.len());
        }
        Cmd::Audit(a) => {
            let mut cfg = AuditConfig::load(&a.config)?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            if let Some(e) = a.epsilon {
                cfg.epsilon = e;
            }
            if let Some(t) = a.trials {
                cfg.trials = t;
            }
            if a.out.is_some() {
                cfg.out = a.out;
            }
            let s = run_audit(&cfg)?;
            println!(
                "{}: epsilon_hat {:.4} (worst {}) claimed {} delta {} violation {}",
                cfg.id, s.report.epsilon_hat, s.report.worst_bin, s.claimed_epsilon, s.delta, s.violation
            );
        }
        Cmd::Params(a) => {
            let bad = |e: &dyn std::fmt::Display| HarnessError::Config(e.to_string());
            let contract = gaussian_mixture_contract(a.k, a.d, a.alpha, a.c).map_err(|e| bad(&e))?;
            let p = match a.mode {
                Mode::PaperFaithful => derive_params(a.alpha, a.beta, a.epsilon, a.delta, a.c, &contract),
                Mode::DeskScale => {
                    desk_params(a.alpha, a.beta, a.epsilon, a.delta, a.c, &contract, &DeskOverrides::default())
                }
            }
            .map_err(|e| bad(&e))?;
            print_params(&p);
        }
        Cmd::Tv(a) => {
            let parse = |p: &Path| -> Result<_, HarnessError> {
                parse_spec(read(p)?.trim()).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))
            };
            let (f, g) = (parse(&a.a)?, parse(&a.b)?);
            if f.dim() != g.dim() {
                return Err(HarnessError::Config(format!("dimensions differ: {} vs {}", f.dim(), g.dim())));
            }
            let (v, err) = match a.mc_samples {
                None if f.dim() == 1 => (tv_distance_1d(&f, &g, a.abs_tol)?, a.abs_tol),
                n => {
                    let (v, se) = tv_distance_mc(&f, &g, n.unwrap_or(100_000), a.seed)?;
                    (v, 3.0 * se)
                }
            };
            println!("{v} +- {err}");
        }
        Cmd::Plot(a) => {
            let n = plot_results(&a.csv, &a.out)?;
            println!("{n} trials plotted to {}", a.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
