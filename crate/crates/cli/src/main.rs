//! `geobias`: simulate sensor logs, inject biases, run the observer, sweep its
//! constants and summarize runs. All outputs are CSV.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geobias_core::io;
use geobias_core::metrics::{sweep, RunReport};
use geobias_core::observer::{run_estimation, EstimationRun, GapStats};
use geobias_core::sim::{simulate, BiasSet};
use geobias_core::{Error, HeadingMode, ObserverConfig, ScenarioConfig, Vec3};

#[derive(Parser)]
#[command(name = "geobias", version, about = "GNSS/IMU virtual-platform bias observer harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate truth.csv and sensors.csv from a scenario file.
    Simulate {
        /// Scenario file (TOML); the built-in curved scenario when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Add constant biases to a sensor log.
    Inject {
        #[arg(long)]
        sensors: PathBuf,
        /// Gyro bias x,y,z in deg/s.
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,0")]
        bg_dps: Vec3,
        /// Accelerometer bias x,y,z in m/s².
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,0")]
        ba: Vec3,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the observer over a sensor log; writes estimates.csv and report.csv.
    Estimate {
        #[arg(long)]
        sensors: PathBuf,
        #[command(flatten)]
        params: ObserverArgs,
        #[command(flatten)]
        truth: TruthArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Rerun the observer with each constant scaled by 1 ± perturbation.
    Sweep {
        /// Scenario to simulate (used when --sensors is absent).
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, conflicts_with = "scenario")]
        sensors: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.2)]
        perturbation: f64,
        #[command(flatten)]
        params: ObserverArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Summarize an estimates.csv into report.csv.
    Report {
        #[arg(long)]
        estimates: PathBuf,
        #[command(flatten)]
        params: ObserverArgs,
        #[command(flatten)]
        truth: TruthArgs,
        #[arg(long, default_value = "report.csv")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum HeadingArg {
    Slaved,
    Reset,
}

#[derive(Args)]
struct ObserverArgs {
    /// Attitude correction time constant, s.
    #[arg(long, default_value_t = 4.0)]
    tau_s: f64,
    /// Gyro bias observer time constant, s.
    #[arg(long, default_value_t = 40.0)]
    tau_g_s: f64,
    /// Accelerometer bias observer rate constant, deg/s.
    #[arg(long, default_value_t = 45.0)]
    omega_a_dps: f64,
    /// Lever arm for the positioning-error equivalents, m.
    #[arg(long, default_value_t = 3.0)]
    h_m: f64,
    #[arg(long, value_enum, default_value = "slaved")]
    heading_mode: HeadingArg,
}

impl ObserverArgs {
    fn config(&self) -> ObserverConfig {
        let mut cfg = ObserverConfig::with_constants(self.tau_s, self.tau_g_s, self.omega_a_dps);
        cfg.attitude.heading_mode = match self.heading_mode {
            HeadingArg::Slaved => HeadingMode::Slaved,
            HeadingArg::Reset => HeadingMode::Reset,
        };
        cfg
    }
}

#[derive(Args)]
struct TruthArgs {
    /// Total true gyro bias x,y,z in deg/s, enabling error statistics.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    truth_bg_dps: Option<Vec3>,
    /// Total true accelerometer bias x,y,z in m/s².
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    truth_ba: Option<Vec3>,
}

impl TruthArgs {
    fn biases(&self) -> Option<BiasSet> {
        if self.truth_bg_dps.is_none() && self.truth_ba.is_none() {
            return None;
        }
        let bg = self.truth_bg_dps.unwrap_or_default();
        Some(BiasSet::new(
            Vec3::new(bg.x.to_radians(), bg.y.to_radians(), bg.z.to_radians()),
            self.truth_ba.unwrap_or_default(),
        ))
    }
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got `{s}`"));
    }
    let mut v = Vec3::zeros();
    for (i, p) in parts.iter().enumerate() {
        v[i] = p.parse().map_err(|_| format!("`{p}` is not a number"))?;
        if !v[i].is_finite() {
            return Err(format!("`{p}` is not finite"));
        }
    }
    Ok(v)
}

/// Failure carrying a machine-readable kind.
struct Failure {
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        kind: "io",
        message: format!("{}: {e}", path.display()),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn load_scenario(path: Option<&Path>, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match path {
        Some(p) => io::parse_scenario(&read_text(p)?)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    for w in cfg.envelope_warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn read_sensors(path: &Path) -> Result<Vec<geobias_core::SensorRecord>, Failure> {
    let file = File::open(path).map_err(|e| io_failure(path, e))?;
    Ok(io::read_sensors(std::io::BufReader::new(file))?)
}

fn write_report(path: &Path, run: &EstimationRun, truth: Option<&BiasSet>, h: f64) -> Result<RunReport, Failure> {
    let report = RunReport::from_run(run, truth, h)?;
    io::write_report(create(path)?, &report)?;
    Ok(report)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { scenario, seed, out } => {
            let cfg = load_scenario(scenario.as_deref(), seed)?;
            let (truth, sensors) = simulate(&cfg)?;
            out_dir(&out)?;
            io::write_truth(create(&out.join("truth.csv"))?, &truth)?;
            io::write_sensors(create(&out.join("sensors.csv"))?, &sensors)?;
        }
        Command::Inject { sensors, bg_dps, ba, out } => {
            let text = read_text(&sensors)?;
            let bg = Vec3::new(bg_dps.x.to_radians(), bg_dps.y.to_radians(), bg_dps.z.to_radians());
            let shifted = io::inject_text(&text, &bg, &ba)?;
            fs::write(&out, shifted).map_err(|e| io_failure(&out, e))?;
        }
        Command::Estimate {
            sensors,
            params,
            truth,
            out,
        } => {
            let records = read_sensors(&sensors)?;
            let cfg = params.config();
            let run = run_estimation(&records, &cfg)?;
            let truth = truth.biases();
            out_dir(&out)?;
            let report = write_report(&out.join("report.csv"), &run, truth.as_ref(), params.h_m)?;
            io::write_estimates(
                create(&out.join("estimates.csv"))?,
                &run.outputs,
                report.lyapunov.as_deref(),
            )?;
            if run.gaps.imu_gaps > 0 || report.frozen_epochs > 0 {
                eprintln!(
                    "warning: {} IMU gap(s); corrections frozen for {} output epoch(s)",
                    run.gaps.imu_gaps, report.frozen_epochs
                );
            }
        }
        Command::Sweep {
            scenario,
            sensors,
            seed,
            perturbation,
            params,
            out,
        } => {
            let records = match sensors {
                Some(p) => read_sensors(&p)?,
                None => simulate(&load_scenario(scenario.as_deref(), seed)?)?.1,
            };
            let report = sweep(&records, &params.config(), perturbation)?;
            out_dir(&out)?;
            io::write_sweep(create(&out.join("sweep.csv"))?, &report)?;
        }
        Command::Report {
            estimates,
            params,
            truth,
            out,
        } => {
            let file = File::open(&estimates).map_err(|e| io_failure(&estimates, e))?;
            let outputs = io::read_estimates(std::io::BufReader::new(file))?;
            let run = EstimationRun {
                config: params.config(),
                outputs,
                gaps: GapStats::default(),
            };
            write_report(&out, &run, truth.biases().as_ref(), params.h_m)?;
        }
    }
    Ok(())
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{body}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim()),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f.kind, &f.message),
    }
}
