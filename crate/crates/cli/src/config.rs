//! Run configuration from command-line flags and an optional config file.
//!
//! Files are either a JSON object or flat `key = value` lines (`#` starts a
//! comment). Flags override file values, file values override defaults.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use annuli_core::geometry::{AnnulusPair, SpacingMode};
use annuli_core::verify::Tolerances;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    /// Nodes equispaced in t.
    UniformT,
    /// Nodes equispaced in 1/t.
    UniformInverse,
}

impl From<Spacing> for SpacingMode {
    fn from(s: Spacing) -> Self {
        match s {
            Spacing::UniformT => SpacingMode::UniformT,
            Spacing::UniformInverse => SpacingMode::UniformInverse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Energy,
    Minimize,
    Nitsche,
    Verify,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    InnerRadius,
    OuterRadius,
    InnerTarget,
    OuterTarget,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::InnerRadius => "r",
            Param::OuterRadius => "R",
            Param::InnerTarget => "rstar",
            Param::OuterTarget => "Rstar",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// `param=lo:hi:count`, sampled at `count` equispaced points including both
/// ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAxis {
    pub param: Param,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, range) = s
            .split_once('=')
            .ok_or_else(|| format!("sweep `{s}`: expected param=lo:hi:count"))?;
        let param = match name.trim() {
            "r" => Param::InnerRadius,
            "R" => Param::OuterRadius,
            "rstar" => Param::InnerTarget,
            "Rstar" => Param::OuterTarget,
            other => {
                return Err(format!(
                    "sweep `{s}`: unknown parameter `{other}` (expected r, R, rstar or Rstar)"
                ))
            }
        };
        let parts: Vec<&str> = range.split(':').map(str::trim).collect();
        let [lo, hi, count] = parts[..] else {
            return Err(format!("sweep `{s}`: expected param=lo:hi:count"));
        };
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| format!("sweep `{s}`: `{v}` is not a number"))
        };
        let (lo, hi) = (num(lo)?, num(hi)?);
        let count: usize = count
            .parse()
            .map_err(|_| format!("sweep `{s}`: `{count}` is not a point count"))?;
        if count == 0 || !(lo <= hi) || (count == 1 && lo != hi) {
            return Err(format!("sweep `{s}`: empty range"));
        }
        Ok(SweepAxis { param, lo, hi, count })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub pair: AnnulusPair<f64>,
    pub grid_n: usize,
    pub sphere_order: usize,
    pub radial_order: usize,
    pub seed: u64,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub spacing: SpacingMode,
    pub tolerances: Tolerances,
    pub sweep: Vec<SweepAxis>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug)]
pub enum ParseOutcome {
    Run(RunConfig),
    /// Help or version text; print it and exit successfully.
    Info(String),
}

#[derive(Parser, Debug)]
#[command(name = "annuli", version, about = "Weighted energies of maps between annuli in R^3")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Subcommand, Debug)]
enum CommandArgs {
    /// Minimum weighted energy, closed form against quadrature of both minimizers.
    Energy(Flags),
    /// Discrete minimizer of the radial energy, tabulated against the closed form.
    Minimize(Flags),
    /// Existence condition and Dirichlet energy of the radial harmonic map.
    Nitsche(Flags),
    /// Run the seeded verification suite.
    Verify(Flags),
    /// Closed-form quantities over a grid of one or two radii.
    Sweep(Flags),
}

#[derive(Args, Debug, Default)]
#[command(allow_negative_numbers = true)]
struct Flags {
    /// Config file, JSON or key = value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inner domain radius.
    #[arg(long = "r")]
    r: Option<f64>,
    /// Outer domain radius.
    #[arg(long = "R")]
    big_r: Option<f64>,
    /// Inner target radius.
    #[arg(long)]
    rstar: Option<f64>,
    /// Outer target radius.
    #[arg(long = "Rstar")]
    big_rstar: Option<f64>,
    /// Grid intervals for the radial solvers [default: 1000].
    #[arg(long)]
    grid_n: Option<usize>,
    /// Gauss-Legendre order in the polar angle [default: 32].
    #[arg(long)]
    sphere_order: Option<usize>,
    /// Gauss-Legendre order in the radius [default: 64].
    #[arg(long)]
    radial_order: Option<usize>,
    /// [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// [default: csv]
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Grid spacing for `minimize` [default: uniform-t].
    #[arg(long, value_enum)]
    spacing: Option<Spacing>,
    /// Set every verification tolerance to this value.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    tol_quadrature: Option<f64>,
    #[arg(long)]
    tol_energy: Option<f64>,
    #[arg(long)]
    tol_residual: Option<f64>,
    #[arg(long)]
    tol_sphere: Option<f64>,
    #[arg(long)]
    tol_lower_bound: Option<f64>,
    #[arg(long)]
    tol_oracle: Option<f64>,
    #[arg(long)]
    tol_gradient: Option<f64>,
    /// Swept parameter as param=lo:hi:count; give at most two.
    #[arg(long)]
    sweep: Vec<SweepAxis>,
}

/// Values a config file may set. Keys are the long flag names, with `-` or
/// `_` as separator.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileValues {
    r: Option<f64>,
    #[serde(rename = "R")]
    big_r: Option<f64>,
    rstar: Option<f64>,
    #[serde(rename = "Rstar")]
    big_rstar: Option<f64>,
    #[serde(alias = "grid-n")]
    grid_n: Option<usize>,
    #[serde(alias = "sphere-order")]
    sphere_order: Option<usize>,
    #[serde(alias = "radial-order")]
    radial_order: Option<usize>,
    seed: Option<u64>,
    format: Option<OutputFormat>,
    output: Option<PathBuf>,
    spacing: Option<Spacing>,
    tolerance: Option<f64>,
    #[serde(alias = "tol-quadrature")]
    tol_quadrature: Option<f64>,
    #[serde(alias = "tol-energy")]
    tol_energy: Option<f64>,
    #[serde(alias = "tol-residual")]
    tol_residual: Option<f64>,
    #[serde(alias = "tol-sphere")]
    tol_sphere: Option<f64>,
    #[serde(alias = "tol-lower-bound")]
    tol_lower_bound: Option<f64>,
    #[serde(alias = "tol-oracle")]
    tol_oracle: Option<f64>,
    #[serde(alias = "tol-gradient")]
    tol_gradient: Option<f64>,
    sweep: Option<SweepList>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SweepList {
    One(String),
    Many(Vec<String>),
}

impl FileValues {
    fn merge(&mut self, o: FileValues) {
        macro_rules! take {
            ($($f:ident),*) => { $( if o.$f.is_some() { self.$f = o.$f; } )* };
        }
        take!(
            r,
            big_r,
            rstar,
            big_rstar,
            grid_n,
            sphere_order,
            radial_order,
            seed,
            format,
            output,
            spacing,
            tolerance,
            tol_quadrature,
            tol_energy,
            tol_residual,
            tol_sphere,
            tol_lower_bound,
            tol_oracle,
            tol_gradient,
            sweep
        );
    }
}

/// Parses a config file body; JSON when it starts with `{`.
fn parse_file_values(text: &str, origin: &Path) -> Result<FileValues, UsageError> {
    let origin = origin.display();
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| UsageError(format!("{origin}: {e}")));
    }
    let mut values = FileValues::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| UsageError(format!("{origin}:{}: {msg}", i + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(format!("expected key = value, found `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let json_value = match serde_json::from_str::<serde_json::Value>(value) {
            Ok(v @ serde_json::Value::Number(_)) => v,
            _ => serde_json::Value::String(value.to_string()),
        };
        let single = serde_json::json!({ key: json_value });
        let parsed: FileValues = serde_json::from_value(single).map_err(|e| at(format!("field `{key}`: {e}")))?;
        values.merge(parsed);
    }
    Ok(values)
}

/// Parses `argv` (including the program name) and the config file it names.
pub fn parse_config<I, S>(argv: I) -> Result<ParseOutcome, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Ok(ParseOutcome::Info(e.to_string()))
                }
                _ => Err(UsageError(e.to_string().trim_end().to_string())),
            }
        }
    };
    let (command, flags) = match cli.command {
        CommandArgs::Energy(f) => (Command::Energy, f),
        CommandArgs::Minimize(f) => (Command::Minimize, f),
        CommandArgs::Nitsche(f) => (Command::Nitsche, f),
        CommandArgs::Verify(f) => (Command::Verify, f),
        CommandArgs::Sweep(f) => (Command::Sweep, f),
    };
    let file = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
            parse_file_values(&text, path)?
        }
        None => FileValues::default(),
    };
    build(command, flags, file).map(ParseOutcome::Run)
}

fn build(command: Command, flags: Flags, file: FileValues) -> Result<RunConfig, UsageError> {
    let usage = |m: String| UsageError(m);
    macro_rules! pick {
        ($f:ident, $default:expr) => {
            flags.$f.or(file.$f).unwrap_or($default)
        };
    }
    let r = pick!(r, 1.0);
    let big_r = pick!(big_r, 2.0);
    let rstar = pick!(rstar, 1.0);
    let big_rstar = pick!(big_rstar, std::f64::consts::E);
    let pair = AnnulusPair::from_radii(r, big_r, rstar, big_rstar).map_err(|e| usage(e.to_string()))?;
    pair.require_positive().map_err(|e| usage(e.to_string()))?;

    let grid_n = pick!(grid_n, 1000);
    let sphere_order = pick!(sphere_order, 32);
    let radial_order = pick!(radial_order, 64);
    if grid_n < 2 {
        return Err(usage(format!("grid-n must be at least 2, got {grid_n}")));
    }
    for (name, v) in [("sphere-order", sphere_order), ("radial-order", radial_order)] {
        if v < 4 {
            return Err(usage(format!("{name} must be at least 4, got {v}")));
        }
    }

    let mut tolerances = match flags.tolerance.or(file.tolerance) {
        Some(t) => Tolerances::uniform(t),
        None => Tolerances::default(),
    };
    for (slot, flag, from_file) in [
        (&mut tolerances.quadrature_1d, flags.tol_quadrature, file.tol_quadrature),
        (&mut tolerances.energy_3d, flags.tol_energy, file.tol_energy),
        (&mut tolerances.residual, flags.tol_residual, file.tol_residual),
        (&mut tolerances.sphere, flags.tol_sphere, file.tol_sphere),
        (&mut tolerances.lower_bound, flags.tol_lower_bound, file.tol_lower_bound),
        (&mut tolerances.oracle, flags.tol_oracle, file.tol_oracle),
        (&mut tolerances.gradient, flags.tol_gradient, file.tol_gradient),
    ] {
        if let Some(v) = flag.or(from_file) {
            *slot = v;
        }
    }
    let all = [
        tolerances.quadrature_1d,
        tolerances.energy_3d,
        tolerances.residual,
        tolerances.sphere,
        tolerances.lower_bound,
        tolerances.oracle,
        tolerances.gradient,
    ];
    if all.iter().any(|t| !(*t >= 0.0)) {
        return Err(usage("tolerances must be nonnegative".to_string()));
    }

    let sweep = if !flags.sweep.is_empty() {
        flags.sweep
    } else {
        match file.sweep {
            None => Vec::new(),
            Some(SweepList::One(s)) => vec![s.parse().map_err(usage)?],
            Some(SweepList::Many(v)) => v.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(usage)?,
        }
    };
    if command == Command::Sweep {
        if sweep.is_empty() || sweep.len() > 2 {
            return Err(usage("sweep needs one or two --sweep param=lo:hi:count".to_string()));
        }
        if sweep.len() == 2 && sweep[0].param == sweep[1].param {
            return Err(usage(format!("parameter {} swept twice", sweep[0].param.name())));
        }
    } else if !sweep.is_empty() {
        return Err(usage("--sweep applies only to the sweep command".to_string()));
    }

    Ok(RunConfig {
        command,
        pair,
        grid_n,
        sphere_order,
        radial_order,
        seed: pick!(seed, 42),
        output_format: pick!(format, OutputFormat::Csv),
        output_path: flags.output.or(file.output),
        spacing: pick!(spacing, Spacing::UniformT).into(),
        tolerances,
        sweep,
    })
}

/// `[r, R, r★, R★]` of `base` with `values` substituted for the swept radii.
pub fn substitute(base: &AnnulusPair<f64>, axes: &[SweepAxis], values: &[f64]) -> [f64; 4] {
    let mut radii = [base.r(), base.big_r(), base.r_star(), base.big_r_star()];
    for (axis, v) in axes.iter().zip(values) {
        radii[axis.param.index()] = *v;
    }
    radii
}
