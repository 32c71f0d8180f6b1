//! `statdiff`: simulate feeder records, tune a healthy model, score
//! records online and evaluate the outcomes.

mod commands;
mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use statdiff::{Error, Result};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "statdiff",
    version,
    about = "Statistical differential protection pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (model file for `tune`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the scenario grid and a healthy training set.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Grid description (TOML); replaces `[grid]` from the config.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Number of noise-free healthy training records.
        #[arg(long)]
        training: Option<usize>,
    },
    /// Calibrate a healthy model from healthy waveform files.
    Tune {
        #[command(flatten)]
        common: Common,
        /// Glob of healthy waveform files.
        #[arg(long)]
        healthy: Option<String>,
        #[arg(long)]
        alpha_det: Option<f64>,
        #[arg(long)]
        alpha_cls: Option<f64>,
        #[arg(long)]
        alpha_zero: Option<f64>,
        /// Covariance regularization; default 1e-6 · trace(Γ) / 3.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        vote_j: Option<usize>,
        #[arg(long)]
        vote_m: Option<usize>,
        /// Window length L in samples.
        #[arg(long)]
        window: Option<usize>,
        /// Hop S in samples.
        #[arg(long)]
        hop: Option<usize>,
        /// Binning candidates evaluated per channel.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        line_id: Option<String>,
    },
    /// Score waveform files with a model and write event logs.
    Run {
        #[command(flatten)]
        common: Common,
        /// Waveform file or glob.
        #[arg(long)]
        waveform: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Delay of the receiving channels in milliseconds.
        #[arg(long)]
        delay_ms: Option<f64>,
        #[arg(long)]
        confirm_windows: Option<usize>,
        #[arg(long)]
        label_confirm: Option<usize>,
    },
    /// Aggregate outcome files into report tables.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Glob of `*.outcome.json` files.
        #[arg(long)]
        outcomes: Option<String>,
    },
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn prepare(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    set(&mut cfg.seed, common.seed);
    set(&mut cfg.jobs, common.jobs);
    set(&mut cfg.paths.out, common.out.clone());
    if let Some(j) = cfg.jobs {
        if j == 0 {
            return Err(Error::Validation("--jobs must be at least 1".into()));
        }
        // fails only if a pool already exists, which keeps its size
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global();
    }
    Ok(cfg)
}

fn out_path(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.paths
        .out
        .clone()
        .ok_or_else(|| Error::Validation("--out is required".into()))
}

fn fmt_opt(x: Option<f64>, scale: f64) -> String {
    x.map(|v| format!("{:.2}", v * scale))
        .unwrap_or_else(|| "-".into())
}

fn execute(cli: Cli) -> Result<String> {
    let mut text = String::new();
    let o = &mut text;
    match cli.command {
        Command::Simulate {
            common,
            grid,
            training,
        } => {
            let mut cfg = prepare(&common)?;
            if let Some(path) = grid {
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::Validation(format!("cannot read grid {}: {e}", path.display()))
                })?;
                let spec = toml::from_str(&text)
                    .map_err(|e| Error::Parse(format!("grid {}: {e}", path.display())))?;
                cfg.grid = Some(spec);
            }
            set(&mut cfg.training_records, training);
            let out = out_path(&cfg)?;
            let s = commands::cmd_simulate(&cfg, &out)?;
            let _ = writeln!(
                o,
                "wrote {} grid scenarios and {} training records to {} (config {})",
                s.scenarios,
                s.training,
                out.display(),
                s.config_hash
            );
        }
        Command::Tune {
            common,
            healthy,
            alpha_det,
            alpha_cls,
            alpha_zero,
            lambda,
            vote_j,
            vote_m,
            window,
            hop,
            budget,
            line_id,
        } => {
            let mut cfg = prepare(&common)?;
            set(&mut cfg.paths.healthy, healthy);
            set(&mut cfg.alpha.det, alpha_det);
            set(&mut cfg.alpha.cls, alpha_cls);
            set(&mut cfg.alpha.zero, alpha_zero);
            set(&mut cfg.lambda, lambda);
            set(&mut cfg.vote.j, vote_j);
            set(&mut cfg.vote.m, vote_m);
            set(&mut cfg.window.length, window);
            set(&mut cfg.window.hop, hop);
            set(&mut cfg.budget, budget);
            set(&mut cfg.line_id, line_id);
            let out = out_path(&cfg)?;
            let r = commands::cmd_tune(&cfg, &out)?;
            let th = &r.model.thresholds;
            let _ = writeln!(
                o,
                "objective O = {:.4} over {} windows",
                r.objective, r.n_windows
            );
            for (p, name) in ["a", "b", "c"].iter().enumerate() {
                let _ = writeln!(
                    o,
                    "phase {name}: rho^2 = {:.4}  K = {}  ratios = {:.3?}  k_eff = {}  mu = {:.3}  sigma = {:.3}",
                    r.phase_rho_sq[p],
                    r.specs[p].k,
                    r.specs[p].ratios,
                    r.modal_k_eff[p],
                    r.model.phase_stats.mu_p[p],
                    r.model.phase_stats.sigma_p[p]
                );
            }
            let _ = writeln!(
                o,
                "zero sequence: rho^2 = {:.4}  K0 = {}  ratios = {:.3?}",
                r.zero_rho_sq, r.specs[3].k, r.specs[3].ratios
            );
            let _ = writeln!(
                o,
                "tau_det = {:.2}  z_cls = {:.4}  tau0_cls = {:.2}",
                th.tau_det, th.z_cls, th.tau0_cls
            );
            let _ = writeln!(o, "model written to {}", out.display());
        }
        Command::Run {
            common,
            waveform,
            model,
            delay_ms,
            confirm_windows,
            label_confirm,
        } => {
            let mut cfg = prepare(&common)?;
            set(&mut cfg.paths.waveforms, waveform);
            set(&mut cfg.paths.model, model);
            set(&mut cfg.delay_ms, delay_ms);
            set(&mut cfg.confirm_windows, confirm_windows);
            set(&mut cfg.label_confirm, label_confirm);
            let out = out_path(&cfg)?;
            let lines = commands::cmd_run(&cfg, &out)?;
            for l in &lines {
                let label = l.label.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    o,
                    "{}: tripped={} t_detect={} label={} peak_d2={:.1}",
                    l.stem,
                    l.tripped,
                    l.t_detect
                        .map(|t| format!("{t:.4}"))
                        .unwrap_or_else(|| "-".into()),
                    label,
                    l.peak_d_sq
                );
            }
        }
        Command::Eval { common, outcomes } => {
            let mut cfg = prepare(&common)?;
            set(&mut cfg.paths.outcomes, outcomes);
            let out = out_path(&cfg)?;
            let report = commands::cmd_eval(&cfg, &out)?;
            let _ = writeln!(
                o,
                "{:<18} {:>9} {:>8} {:>8} {:>9} {:>9} {:>7}",
                "scenario", "T_D(ms)", "FAR%", "P_D%", "acc%", "F1%", "AUC"
            );
            for s in report
                .conditions
                .iter()
                .chain(std::iter::once(&report.overall))
            {
                let c = s.classification.as_ref();
                let _ = writeln!(
                    o,
                    "{:<18} {:>9} {:>8} {:>8} {:>9} {:>9} {:>7}",
                    s.title,
                    fmt_opt(s.detection.mean_t_d_ms, 1.0),
                    fmt_opt(s.detection.far, 100.0),
                    fmt_opt(s.detection.p_d, 100.0),
                    fmt_opt(c.map(|c| c.accuracy), 100.0),
                    fmt_opt(c.map(|c| c.macro_f1), 100.0),
                    s.auc
                        .map(|a| format!("{a:.3}"))
                        .unwrap_or_else(|| "-".into())
                );
            }
            let _ = writeln!(o, "report written to {}", out.display());
        }
    }
    Ok(text)
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() || matches!(e, Error::Io(_)) {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(text) => {
            // a closed pipe downstream is not an error of ours
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("statdiff: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
