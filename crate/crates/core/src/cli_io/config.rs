use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};

use crate::error::{Error, Result};
use crate::experiments::{Axis, ScanGrid};
use crate::qsl_metrics::QubitAngles;
use crate::spin_core::{validate_alpha, validate_lambda, validate_size, Frame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Spectrum,
    Dos,
    Quench,
    QslScan,
    Scaling,
    CriticalLocus,
    Heatmap,
    NmScan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Dos => "dos",
            Command::Quench => "quench",
            Command::QslScan => "qsl-scan",
            Command::Scaling => "scaling",
            Command::CriticalLocus => "critical-locus",
            Command::Heatmap => "heatmap",
            Command::NmScan => "nm-scan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (csv or json)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Time step choice: the default resolution rule or an explicit value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StepChoice {
    #[default]
    Auto,
    Fixed(f64),
}

impl FromStr for StepChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            Ok(StepChoice::Auto)
        } else {
            s.parse::<f64>()
                .map(StepChoice::Fixed)
                .map_err(|_| format!("expected `auto` or a number, got `{s}`"))
        }
    }
}

impl fmt::Display for StepChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepChoice::Auto => f.write_str("auto"),
            StepChoice::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl StepChoice {
    pub fn value(self) -> Option<f64> {
        match self {
            StepChoice::Auto => None,
            StepChoice::Fixed(v) => Some(v),
        }
    }
}

macro_rules! settings {
    ($( $field:ident : $ty:ty => $key:literal, $help:literal; )*) => {
        /// Every configurable parameter; unset entries fall back to per-command
        /// defaults. Config-file keys are the long flag names.
        #[derive(Debug, Clone, Default, Args)]
        pub struct Settings {
            $(
                #[arg(long = $key, help = $help)]
                pub $field: Option<$ty>,
            )*
        }

        impl Settings {
            pub const KEYS: &'static [&'static str] = &[$($key),*];

            /// Sets `key` from its text form.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                let key = key.trim().replace('_', "-");
                match key.as_str() {
                    $(
                        $key => {
                            let parsed = value
                                .trim()
                                .parse::<$ty>()
                                .map_err(|e| Error::config($key, format!("cannot parse `{}`: {e}", value.trim())))?;
                            self.$field = Some(parsed);
                        }
                    )*
                    other => return Err(Error::config(other, "unknown configuration key")),
                }
                Ok(())
            }

            /// Entries set in `top` replace those in `self`.
            pub fn overlay(mut self, top: &Settings) -> Settings {
                $(
                    if top.$field.is_some() {
                        self.$field = top.$field.clone();
                    }
                )*
                self
            }
        }
    };
}

settings! {
    n: usize => "n", "environment size N (even)";
    alpha: f64 => "alpha", "control parameter alpha";
    lambda: f64 => "lambda", "coupling strength for the quench command";
    lambda_min: f64 => "lambda-min", "first coupling of the lambda grid";
    lambda_max: f64 => "lambda-max", "last coupling of the lambda grid";
    lambda_step: f64 => "lambda-step", "lambda grid step";
    tau_e: f64 => "tau-e", "evolution time";
    tau_min: f64 => "tau-min", "first evolution time of the heatmap";
    tau_max: f64 => "tau-max", "last evolution time of the heatmap";
    tau_step: f64 => "tau-step", "heatmap evolution-time step";
    alpha_min: f64 => "alpha-min", "first alpha of the alpha grid";
    alpha_max: f64 => "alpha-max", "last alpha of the alpha grid";
    alpha_step: f64 => "alpha-step", "alpha grid step";
    n_min: usize => "n-min", "smallest size of the scaling grid";
    n_max: usize => "n-max", "largest size of the scaling grid";
    n_step: usize => "n-step", "scaling grid step";
    theta: f64 => "theta", "polar angle of the initial qubit state";
    phi: f64 => "phi", "azimuthal angle of the initial qubit state";
    frame: Frame => "frame", "energy frame: critical or interaction";
    dt: StepChoice => "dt", "time step, or auto";
    bins: usize => "bins", "number of energy bins";
    phase_grid: usize => "phase-grid", "phase-space points per angle for the classical density";
    output: PathBuf => "output", "output directory";
    format: OutputFormat => "format", "table format: csv or json";
}

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Settings> {
    let mut settings = Settings::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`")))?;
        settings.set(key, value)?;
    }
    Ok(settings)
}

pub fn read_config_file(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    fn grid(&self, axis: Axis) -> Result<ScanGrid> {
        ScanGrid::uniform(axis, self.min, self.max, self.step)
    }
}

/// Fully resolved and validated run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub lambdas: GridSpec,
    pub tau_e: f64,
    pub taus: GridSpec,
    pub alphas: GridSpec,
    pub sizes: (usize, usize, usize),
    pub angles: QubitAngles,
    pub frame: Frame,
    pub dt: StepChoice,
    pub bins: usize,
    pub phase_grid: usize,
    pub output: PathBuf,
    pub format: OutputFormat,
}

fn keyed<T>(key: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter { name, reason } => Error::config(key, format!("{name}: {reason}")),
        other => other,
    })
}

impl RunConfig {
    /// Applies per-command defaults to `settings` and validates the result.
    pub fn resolve(command: Command, s: &Settings) -> Result<RunConfig> {
        let (default_n, default_alpha, default_bins) = match command {
            Command::Spectrum => (40, 0.4, 100),
            Command::Dos => (2000, 0.3, 100),
            Command::Quench => (1000, 0.4, 40),
            _ => (1000, 0.4, 100),
        };
        let alpha_defaults = match command {
            Command::CriticalLocus => (0.0, 0.72, 0.08),
            _ => (0.0, 1.0, 0.005),
        };
        let cfg = RunConfig {
            command,
            n: s.n.unwrap_or(default_n),
            alpha: s.alpha.unwrap_or(default_alpha),
            lambda: s.lambda.unwrap_or(1.0),
            lambdas: GridSpec {
                min: s.lambda_min.unwrap_or(0.05),
                max: s.lambda_max.unwrap_or(2.0),
                step: s.lambda_step.unwrap_or(0.005),
            },
            tau_e: s.tau_e.unwrap_or(1.0),
            taus: GridSpec {
                min: s.tau_min.unwrap_or(1.0),
                max: s.tau_max.unwrap_or(10.0),
                step: s.tau_step.unwrap_or(1.0),
            },
            alphas: GridSpec {
                min: s.alpha_min.unwrap_or(alpha_defaults.0),
                max: s.alpha_max.unwrap_or(alpha_defaults.1),
                step: s.alpha_step.unwrap_or(alpha_defaults.2),
            },
            sizes: (s.n_min.unwrap_or(200), s.n_max.unwrap_or(2000), s.n_step.unwrap_or(200)),
            angles: QubitAngles {
                theta: s.theta.unwrap_or(FRAC_PI_2),
                phi: s.phi.unwrap_or(0.0),
            },
            frame: s.frame.unwrap_or_default(),
            dt: s.dt.unwrap_or_default(),
            bins: s.bins.unwrap_or(default_bins),
            phase_grid: s.phase_grid.unwrap_or(4000),
            output: s.output.clone().unwrap_or_else(|| PathBuf::from(".")),
            format: s.format.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        keyed("n", validate_size(self.n))?;
        keyed("alpha", validate_alpha(self.alpha))?;
        keyed("lambda", validate_lambda(self.lambda))?;
        keyed("theta", QubitAngles::new(self.angles.theta, self.angles.phi).map(|_| ()))?;
        if !(self.tau_e > 0.0 && self.tau_e.is_finite()) {
            return Err(Error::config("tau-e", "evolution time must be positive"));
        }
        if let StepChoice::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config("dt", "time step must be positive"));
            }
        }
        if self.bins < 10 {
            return Err(Error::config("bins", "need at least 10 bins"));
        }
        if self.phase_grid == 0 {
            return Err(Error::config("phase-grid", "must be positive"));
        }
        keyed("lambda-step", self.lambda_grid())?;
        if self.lambdas.min < 0.0 {
            return Err(Error::config("lambda-min", "couplings must be non-negative"));
        }
        keyed("tau-step", self.tau_grid())?;
        if self.taus.min <= 0.0 {
            return Err(Error::config("tau-min", "evolution times must be positive"));
        }
        keyed("alpha-step", self.alpha_grid())?;
        if self.alphas.min < 0.0 || self.alphas.max > 1.0 {
            return Err(Error::config("alpha-min", "alpha grid must lie within [0, 1]"));
        }
        let sizes = keyed("n-step", self.size_grid())?;
        for n in sizes {
            keyed("n-min", validate_size(n))?;
        }
        Ok(())
    }

    pub fn lambda_grid(&self) -> Result<ScanGrid> {
        self.lambdas.grid(Axis::Lambda)
    }

    pub fn tau_grid(&self) -> Result<ScanGrid> {
        self.taus.grid(Axis::TauE)
    }

    pub fn alpha_grid(&self) -> Result<ScanGrid> {
        self.alphas.grid(Axis::Alpha)
    }

    pub fn size_grid(&self) -> Result<Vec<usize>> {
        let (lo, hi, step) = self.sizes;
        if step == 0 || hi < lo {
            return Err(Error::invalid("N", "size grid needs n-min <= n-max and n-step > 0"));
        }
        Ok((lo..=hi).step_by(step).collect())
    }

    /// Every effective parameter as `(key, value)`, in key order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let keys = Settings::KEYS;
        let values = [
            self.n.to_string(),
            self.alpha.to_string(),
            self.lambda.to_string(),
            self.lambdas.min.to_string(),
            self.lambdas.max.to_string(),
            self.lambdas.step.to_string(),
            self.tau_e.to_string(),
            self.taus.min.to_string(),
            self.taus.max.to_string(),
            self.taus.step.to_string(),
            self.alphas.min.to_string(),
            self.alphas.max.to_string(),
            self.alphas.step.to_string(),
            self.sizes.0.to_string(),
            self.sizes.1.to_string(),
            self.sizes.2.to_string(),
            self.angles.theta.to_string(),
            self.angles.phi.to_string(),
            self.frame.to_string(),
            self.dt.to_string(),
            self.bins.to_string(),
            self.phase_grid.to_string(),
            self.output.display().to_string(),
            self.format.to_string(),
        ];
        keys.iter().copied().zip(values).collect()
    }
}
