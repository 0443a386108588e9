use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use seqfusion::harness::output::{
    self, write_deflection, write_roc, write_roc_file, write_validation,
};
use seqfusion::harness::{
    linspace, run_deflection_sweep, run_roc_fusion, run_roc_single, run_stopping_comparison,
    validate_moments, ComparisonSpec, ExperimentConfig,
};
use seqfusion::{Error, GaussianShiftModel, HumanAgent, Result, StoppingTime, ZeroHandling};

#[derive(Parser)]
#[command(
    name = "seqfusion",
    version,
    about = "Monte Carlo and closed-form experiments for sequential human decision fusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted and a single file is produced.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Clone, Copy)]
struct ModelArgs {
    /// Mean shift under H1, used when no config is given.
    #[arg(long)]
    s: Option<f64>,
    /// Observation noise variance, used when no config is given.
    #[arg(long)]
    sigma_sq: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ZeroArg {
    Truncate,
    Shift,
}

impl From<ZeroArg> for ZeroHandling {
    fn from(z: ZeroArg) -> Self {
        match z {
            ZeroArg::Truncate => ZeroHandling::Truncate,
            ZeroArg::Shift => ZeroHandling::Shift,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// ROC of one agent's local test.
    RocSingle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        agent: usize,
    },
    /// ROC of the global test for each configured fusion rule.
    RocFusion {
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form deflection over a (w, gamma) grid with Poisson stopping.
    DeflectionSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.25)]
        w_min: f64,
        #[arg(long, default_value_t = 1.75)]
        w_max: f64,
        #[arg(long, default_value_t = 25)]
        w_count: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 5.0])]
        gammas: Vec<f64>,
        #[arg(long, value_enum, default_value = "truncate")]
        zero_handling: ZeroArg,
    },
    /// Monte Carlo belief moments against the closed forms.
    ValidateMoments {
        #[command(flatten)]
        common: Common,
    },
    /// ROCs of one agent under a geometric and a Poisson stopping time.
    CompareStopping {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.5)]
        w: f64,
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        #[arg(long, value_enum, default_value = "truncate")]
        zero_handling: ZeroArg,
    },
}

fn apply_overrides(mut cfg: ExperimentConfig, common: &Common) -> Result<ExperimentConfig> {
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    if let Some(workers) = common.workers {
        cfg.workers = workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn require_config(common: &Common) -> Result<ExperimentConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this subcommand".into()))?;
    apply_overrides(ExperimentConfig::load(path)?, common)
}

/// Loads `--config` if given, otherwise builds a one-agent config around the
/// model flags. The agent is a placeholder for subcommands that define their
/// own agent shapes.
fn config_or_model(
    common: &Common,
    model: ModelArgs,
    default: (f64, f64),
) -> Result<ExperimentConfig> {
    let cfg = match &common.config {
        Some(path) => {
            let mut cfg = ExperimentConfig::load(path)?;
            if model.s.is_some() || model.sigma_sq.is_some() {
                cfg.model = GaussianShiftModel::new(
                    model.s.unwrap_or(cfg.model.s()),
                    model.sigma_sq.unwrap_or(cfg.model.sigma_sq()),
                )?;
            }
            cfg
        }
        None => {
            let m = GaussianShiftModel::new(
                model.s.unwrap_or(default.0),
                model.sigma_sq.unwrap_or(default.1),
            )?;
            let placeholder = HumanAgent::new(1.0, 0.0, StoppingTime::deterministic(1)?)?;
            ExperimentConfig::new(m, vec![placeholder])?
        }
    };
    apply_overrides(cfg, common)
}

fn emit<F>(out: Option<&Path>, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            write(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RocSingle { common, agent } => {
            let cfg = require_config(&common)?;
            let curve = run_roc_single(&cfg, agent)?;
            eprintln!(
                "agent {agent}: auc {:.6} (se {:.6})",
                curve.auc,
                curve.auc_se()
            );
            emit(common.out.as_deref(), |w| write_roc(w, &curve))
        }
        Command::RocFusion { common } => {
            let cfg = require_config(&common)?;
            let curves = run_roc_fusion(&cfg)?;
            for c in &curves {
                eprintln!(
                    "{}: auc {:.6} (se {:.6})",
                    c.rule,
                    c.curve.auc,
                    c.curve.auc_se()
                );
            }
            match (curves.as_slice(), common.out.as_deref()) {
                ([single], out) => emit(out, |w| write_roc(w, &single.curve)),
                (_, Some(path)) => {
                    for c in &curves {
                        write_roc_file(&output::sibling(path, c.rule), &c.curve)?;
                    }
                    Ok(())
                }
                (_, None) => Err(Error::Config(
                    "--out is required when more than one fusion rule is selected".into(),
                )),
            }
        }
        Command::DeflectionSweep {
            common,
            model,
            w_min,
            w_max,
            w_count,
            gammas,
            zero_handling,
        } => {
            let cfg = config_or_model(&common, model, (5.0, 1.0))?;
            if w_count == 0 || !(w_min.is_finite() && w_max.is_finite() && w_min <= w_max) {
                return Err(Error::Config(
                    "w grid needs count ≥ 1 and finite min ≤ max".into(),
                ));
            }
            let rows = run_deflection_sweep(
                &cfg,
                &linspace(w_min, w_max, w_count),
                &gammas,
                zero_handling.into(),
            )?;
            emit(common.out.as_deref(), |w| write_deflection(w, &rows))
        }
        Command::ValidateMoments { common } => {
            let cfg = require_config(&common)?;
            let rows = validate_moments(&cfg)?;
            let failed = rows
                .iter()
                .filter(|r| !r.pass && !r.quantity.ends_with("_literal"))
                .count();
            eprintln!("{} rows, {failed} corrected-formula failures", rows.len());
            emit(common.out.as_deref(), |w| write_validation(w, &rows))
        }
        Command::CompareStopping {
            common,
            model,
            w,
            rho,
            gamma,
            zero_handling,
        } => {
            let cfg = config_or_model(&common, model, (2.0, 2.0))?;
            let spec = ComparisonSpec {
                w,
                first: StoppingTime::geometric(rho)?,
                second: StoppingTime::poisson(gamma, zero_handling.into())?,
            };
            let cmp = run_stopping_comparison(&cfg, &spec)?;
            for arm in [&cmp.first, &cmp.second] {
                eprintln!(
                    "{}: mean tau {:.6}, auc {:.6} (se {:.6})",
                    arm.label,
                    arm.mean_tau,
                    arm.curve.auc,
                    arm.curve.auc_se()
                );
            }
            eprintln!("{}", cmp.note);
            match common.out.as_deref() {
                Some(path) => output::write_comparison_files(path, &cmp).map(|_| ()),
                None => emit(None, |w| output::write_comparison_summary(w, &cmp)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
