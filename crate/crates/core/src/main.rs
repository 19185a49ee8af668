use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semiwell::config::{ExperimentConfig, GridSpec, Step};
use semiwell::run::{run, verdict_table};

/// Semiclassical single-well eigenpairs, Agmon bounds and limit measures.
#[derive(Parser)]
#[command(name = "semiwell", version)]
struct Cli {
    /// Read every setting from this config file; command-line flags are ignored.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (the SEMIWELL_OUT_DIR variable takes precedence).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Potential V(x).
    #[arg(long, default_value = "(x-1)^2")]
    potential: String,
    /// Domain length L.
    #[arg(long, default_value_t = 2.0)]
    length: f64,
    /// Perturbation q(eps, x).
    #[arg(long)]
    perturbation: Option<String>,
    /// Fixed number of interior grid points instead of the automatic rule.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Multiplier on the automatic grid size.
    #[arg(long, default_value_t = 1.0)]
    grid_factor: f64,
    /// Regime: ground, interior=E, high or high=E.
    #[arg(long, default_value = "ground")]
    regime: String,
}

#[derive(Args, Clone)]
struct ScheduleArg {
    /// Comma-separated, strictly decreasing eps values.
    #[arg(long, default_value = "0.1,0.05,0.025,0.0125", value_delimiter = ',')]
    schedule: Vec<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenvalues with residuals and wall derivatives.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.02)]
        eps: f64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Energy window lo,hi instead of a count.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        window: Option<Vec<f64>>,
    },
    /// Samples of one eigenfunction.
    Eigen {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.02)]
        eps: f64,
        /// Mode index; defaults to the regime's choice.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Agmon distance profile.
    Agmon {
        #[command(flatten)]
        common: Common,
        /// Energy; defaults to the regime energy.
        #[arg(long)]
        energy: Option<f64>,
        #[arg(long, default_value_t = 1024)]
        points: usize,
    },
    /// Empirical moments and wall traces against the limit measure.
    Measure {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: ScheduleArg,
        /// Basket name (standard, moments) or a list like x,x2,ind:0.9:1.1.
        #[arg(long, default_value = "standard")]
        phi: String,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
    /// Husimi density on a phase-space grid.
    Husimi {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.02)]
        eps: f64,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 201)]
        nx: usize,
        #[arg(long, default_value_t = 201)]
        nxi: usize,
    },
    /// Agmon exponents and lemma margins along a schedule.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: ScheduleArg,
        /// Observation window a,b.
        #[arg(long, conflicts_with = "boundary")]
        window: Option<String>,
        /// Observation wall: 0 or L.
        #[arg(long)]
        boundary: Option<String>,
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
    },
    /// Full verification battery with a verdict table.
    Report {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: ScheduleArg,
        #[arg(long, conflicts_with = "boundary")]
        window: Option<String>,
        #[arg(long)]
        boundary: Option<String>,
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
    },
    /// Every step listed in the config file.
    Run,
}

fn base(common: &Common) -> ExperimentConfig {
    ExperimentConfig {
        potential_src: common.potential.clone(),
        length: common.length,
        perturbation_src: common.perturbation.clone(),
        regime_src: common.regime.clone(),
        grid: match common.grid_n {
            Some(n) => GridSpec::Fixed(n),
            None => GridSpec::Auto {
                factor: common.grid_factor,
            },
        },
        ..ExperimentConfig::default()
    }
}

fn from_flags(command: &Command) -> Option<(ExperimentConfig, Step)> {
    Some(match command {
        Command::Spectrum { common, eps, count, window } => {
            let mut c = base(common);
            c.eps = Some(*eps);
            c.schedule = vec![*eps];
            c.spectrum_count = *count;
            c.spectrum_window = window.as_ref().map(|w| (w[0], w[1]));
            (c, Step::Spectrum)
        }
        Command::Eigen { common, eps, k } => {
            let mut c = base(common);
            c.eps = Some(*eps);
            c.schedule = vec![*eps];
            c.mode_index = *k;
            (c, Step::Eigen)
        }
        Command::Agmon { common, energy, points } => {
            let mut c = base(common);
            c.agmon_energy = *energy;
            c.agmon_points = *points;
            (c, Step::Agmon)
        }
        Command::Measure { common, schedule, phi, tol } => {
            let mut c = base(common);
            c.schedule = schedule.schedule.clone();
            c.phi = phi.clone();
            c.measure_tol = *tol;
            (c, Step::Measure)
        }
        Command::Husimi { common, eps, k, nx, nxi } => {
            let mut c = base(common);
            c.eps = Some(*eps);
            c.schedule = vec![*eps];
            c.mode_index = *k;
            c.husimi_nx = *nx;
            c.husimi_nxi = *nxi;
            (c, Step::Husimi)
        }
        Command::Bounds { common, schedule, window, boundary, alpha }
        | Command::Report { common, schedule, window, boundary, alpha } => {
            let mut c = base(common);
            c.schedule = schedule.schedule.clone();
            c.window = window.clone();
            c.boundary = boundary.clone();
            c.alpha = *alpha;
            let step = if matches!(command, Command::Bounds { .. }) { Step::Bounds } else { Step::Report };
            (c, step)
        }
        Command::Run => return None,
    })
}

fn step_of(command: &Command) -> Option<Step> {
    match command {
        Command::Spectrum { .. } => Some(Step::Spectrum),
        Command::Eigen { .. } => Some(Step::Eigen),
        Command::Agmon { .. } => Some(Step::Agmon),
        Command::Measure { .. } => Some(Step::Measure),
        Command::Husimi { .. } => Some(Step::Husimi),
        Command::Bounds { .. } => Some(Step::Bounds),
        Command::Report { .. } => Some(Step::Report),
        Command::Run => None,
    }
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let line = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{line}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => match ExperimentConfig::from_file(path) {
            Ok(mut c) => {
                if let Some(step) = step_of(&cli.command) {
                    c.steps = vec![step];
                }
                c
            }
            Err(e) => return fail(e.kind(), &e.to_string()),
        },
        None => match from_flags(&cli.command) {
            Some((mut c, step)) => {
                c.steps = vec![step];
                c
            }
            None => return fail("Usage", "the run command needs --config"),
        },
    };
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    match run(&config) {
        Ok(manifest) => {
            print!("{}", verdict_table(&manifest.verdicts));
            for f in &manifest.outputs {
                println!("wrote {}/{} sha256={}", manifest.output_dir, f.file, f.sha256);
            }
            if manifest.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
