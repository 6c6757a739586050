use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use ufls_core::{load_system, BusId, PowerSystem};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ufls_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 validation, 2 infeasible plan, 3 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(ufls_core::Error::Infeasible(_)) => 2,
            CliError::Core(ufls_core::Error::Io(_)) | CliError::Io { .. } => 3,
            _ => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "ufls", version, about = "Cooperative-game under-frequency load shedding scenarios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the Δf and ROCOF characteristic functions of the candidate coalitions.
    Charfun,
    /// Shapley and equivalent Shapley values of the candidate buses.
    Shapley,
    /// Shedding plan: locations and amounts.
    Plan,
    /// Outage traces without and with the planned shed.
    Simulate,
}

#[derive(Debug, Args)]
pub struct Opts {
    /// System file (TOML).
    #[arg(long, global = true)]
    pub system: Option<PathBuf>,

    /// Characteristic-function file, or `simulate` to generate one.
    #[arg(long, global = true, default_value = "simulate")]
    pub charfun: String,

    /// Candidate load buses, comma separated. Defaults to every sheddable load
    /// (simulated source) or every bus in the file.
    #[arg(long, global = true, value_delimiter = ',')]
    pub candidates: Vec<BusId>,

    /// Disturbance as `<machine>@<time s>`.
    #[arg(long, global = true)]
    pub outage: Option<Outage>,

    /// Delay between the outage and the shed, s.
    #[arg(long, global = true, default_value_t = 2.0)]
    pub shed_delay: f64,

    /// Disturbance power in MW, or `auto` to measure it from the simulated ROCOF.
    #[arg(long, global = true, default_value = "auto")]
    pub pd: PowerSpec,

    /// Shed granularity, MW.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub granularity: f64,

    /// Integration and sampling step, s.
    #[arg(long, global = true, default_value_t = 0.001)]
    pub dt: f64,

    /// Simulated time, s.
    #[arg(long, global = true, default_value_t = 30.0)]
    pub duration: f64,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Weight of the Δf game in the equivalent Shapley value.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub eqv_weight: f64,

    /// Shedding trigger threshold, Hz [default: 59.5 Hz scaled to the nominal frequency].
    #[arg(long, global = true)]
    pub threshold: Option<f64>,

    /// Window of the initial-ROCOF fit, s.
    #[arg(long, global = true, default_value_t = 0.1)]
    pub rocof_window: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outage {
    pub machine: String,
    pub time: f64,
}

impl FromStr for Outage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (machine, time) = s
            .split_once('@')
            .ok_or_else(|| format!("expected <machine>@<time>, got '{s}'"))?;
        let time: f64 = time.trim().parse().map_err(|_| format!("bad outage time '{time}'"))?;
        if machine.trim().is_empty() || !(time >= 0.0 && time.is_finite()) {
            return Err(format!("expected <machine>@<time>=0>, got '{s}'"));
        }
        Ok(Outage {
            machine: machine.trim().to_string(),
            time,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerSpec {
    Auto,
    Mw(f64),
}

impl FromStr for PowerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(PowerSpec::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(PowerSpec::Mw(v)),
            _ => Err(format!("expected a non-negative MW value or 'auto', got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CharfunSource {
    Simulate,
    File(PathBuf),
}

/// Validated scenario shared by every subcommand.
#[derive(Debug)]
pub struct Scenario {
    pub system: PowerSystem,
    pub source: CharfunSource,
    pub candidates: Vec<BusId>,
    pub outage: Option<Outage>,
    pub shed_delay: f64,
    pub pd: PowerSpec,
    pub granularity: f64,
    pub dt: f64,
    pub duration: f64,
    pub out: PathBuf,
    pub eqv_weight: f64,
    pub threshold: f64,
    pub rocof_window: f64,
}

impl Cli {
    pub fn scenario(&self) -> CliResult<Scenario> {
        let o = &self.opts;
        let path = o
            .system
            .as_ref()
            .ok_or_else(|| CliError::Usage("--system <path> is required".into()))?;
        let system = load_system(path).map_err(|e| match e {
            ufls_core::Error::Io(source) => CliError::io(path, source),
            other => other.into(),
        })?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::Usage(format!("--{name} must be > 0, got {v}")))
            }
        };
        if !(o.shed_delay >= 0.0 && o.shed_delay.is_finite()) {
            return Err(CliError::Usage(format!("--shed-delay must be >= 0, got {}", o.shed_delay)));
        }
        if !(0.0..=1.0).contains(&o.eqv_weight) {
            return Err(CliError::Usage(format!("--eqv-weight must lie in [0, 1], got {}", o.eqv_weight)));
        }
        for (i, b) in o.candidates.iter().enumerate() {
            if o.candidates[..i].contains(b) {
                return Err(CliError::Usage(format!("candidate bus {b} listed twice")));
            }
        }
        if let Some(out) = &o.outage {
            if system.machine(&out.machine).is_none() {
                return Err(CliError::Usage(format!("--outage names unknown machine '{}'", out.machine)));
            }
        }
        let source = if o.charfun == "simulate" {
            CharfunSource::Simulate
        } else {
            CharfunSource::File(PathBuf::from(&o.charfun))
        };
        Ok(Scenario {
            threshold: o
                .threshold
                .unwrap_or_else(|| ufls_core::ufls_planner::default_trigger_threshold(system.nominal_frequency())),
            system,
            source,
            candidates: o.candidates.clone(),
            outage: o.outage.clone(),
            shed_delay: o.shed_delay,
            pd: o.pd,
            granularity: positive("granularity", o.granularity)?,
            dt: positive("dt", o.dt)?,
            duration: positive("duration", o.duration)?,
            out: o.out.clone(),
            eqv_weight: o.eqv_weight,
            rocof_window: positive("rocof-window", o.rocof_window)?,
        })
    }
}
