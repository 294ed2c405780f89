use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scod::experiment::{
    cmd_eval, cmd_fit, cmd_sweep, cmd_synth, load_fit_config, ExperimentConfig, SummaryFormat,
    SweepAxis, SynthOptions,
};
use scod::poscod::{FitConfig, Sigmoid};
use scod::Result;

#[derive(Parser)]
#[command(name = "scod", version, about = "Selective classification with OOD rejection: sample, fit, evaluate, sweep")]
struct Cli {
    /// Suppress the human-readable summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,

    /// Format of the evaluation summary file.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Overrides the seed (sampling seed for `synth`, recorded seed for `eval`/`sweep`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SigmoidArg {
    Corrected,
    Standard,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Alpha,
    #[value(name = "pi_o_tr")]
    PiOTr,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a table of ID, OOD and unlabeled rows from a Gaussian world.
    Synth {
        #[arg(long)]
        world: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n_id: usize,
        #[arg(long, default_value_t = 1000)]
        n_ood: usize,
        #[arg(long, default_value_t = 0)]
        n_mixture: usize,
        #[arg(long, default_value_t = 0.5)]
        pi_o_tr: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the likelihood-ratio model on ID and UNLABELED rows.
    Fit {
        #[arg(long)]
        table: PathBuf,
        /// Comma-separated feature columns.
        #[arg(long, value_delimiter = ',', required = true)]
        features: Vec<String>,
        #[arg(long, value_enum, default_value_t = SigmoidArg::Corrected)]
        sigmoid: SigmoidArg,
        /// Optimizer settings (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate score recipes on ID and OOD rows.
    Eval {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat the evaluation along alpha or the training OOD fraction.
    Sweep {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_experiment(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let say = |msg: String| {
        if !cli.quiet {
            print!("{msg}");
        }
    };
    match cli.command {
        Command::Synth {
            world,
            n_id,
            n_ood,
            n_mixture,
            pi_o_tr,
            out,
        } => {
            let opts = SynthOptions {
                n_id,
                n_ood,
                n_mixture,
                pi_o_tr,
                seed: cli.seed.unwrap_or(0),
            };
            let path = cmd_synth(&world, &opts, &out)?;
            say(format!("wrote {}\n", path.display()));
        }
        Command::Fit {
            table,
            features,
            sigmoid,
            config,
            out,
        } => {
            let fit = match config {
                Some(p) => load_fit_config(&p)?,
                None => FitConfig::default(),
            };
            let sigmoid = match sigmoid {
                SigmoidArg::Corrected => Sigmoid::Corrected,
                SigmoidArg::Standard => Sigmoid::Standard,
            };
            let (res, path) = cmd_fit(&table, &features, sigmoid, &fit, &out)?;
            say(format!(
                "a = {:.6}  pi_u = {:.4}  pi_o_tr_hat = {:.4}{}  epochs = {}\nwrote {}\n",
                res.model.a,
                res.model.pi_u,
                res.model.pi_o_tr_hat,
                if res.model.clamped { " (clamped)" } else { "" },
                res.epochs,
                path.display()
            ));
        }
        Command::Eval { table, config, out } => {
            let cfg = load_experiment(&config, cli.seed)?;
            let format = match cli.format {
                Format::Json => SummaryFormat::Json,
                Format::Csv => SummaryFormat::Csv,
            };
            let (report, paths) = cmd_eval(&table, &cfg, format, &out)?;
            say(report.human_summary());
            for p in paths {
                say(format!("wrote {}\n", p.display()));
            }
        }
        Command::Sweep {
            table,
            config,
            axis,
            values,
            out,
        } => {
            let cfg = load_experiment(&config, cli.seed)?;
            let axis = match axis {
                AxisArg::Alpha => SweepAxis::Alpha,
                AxisArg::PiOTr => SweepAxis::PiOTr,
            };
            let (rows, path) = cmd_sweep(&table, axis, &values, &cfg, &out)?;
            for r in &rows {
                say(format!(
                    "{}={:<6} {:<32} AuSRT {}\n",
                    axis.name(),
                    r.value,
                    r.recipe,
                    scod::experiment::percent(r.ausrt)
                ));
            }
            say(format!("wrote {}\n", path.display()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("scod: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
