//! Subcommands and their drivers.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use kinscape::critana::{find_critical_points_on, verify_tables, ExtremeValues, RowSelector, SearchConfig, VerifyConfig};
use kinscape::dynamics::{
    anti_zeno_pmax, bound_search, conservation_suite, crosscheck_suite, BoundSearchConfig, SystemHamiltonians,
};
use kinscape::landscape::{evaluate_grid, GridAxis};
use kinscape::quantum::Level;
use serde::Serialize;

use crate::descriptor::{parse_angle, parse_descriptor};
use crate::output::{antizeno_csv, critical_report, emit, fmt_float, grid_csv, kv_report, verify_report, RunManifest};
use crate::CliError;

/// Starts used to estimate extremes of charts without closed-form ones.
const EXTREME_SCAN_STARTS: usize = 200;

#[derive(Debug, Parser, Serialize)]
#[command(name = "kinscape", version, about = "Kinematic control landscapes of a measured spin-1 system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Evaluate a landscape on a lattice and write it as CSV.
    Grid(GridArgs),
    /// Locate and classify critical points by multi-start search.
    Critical(CriticalArgs),
    /// Check the reference tables of critical points.
    Verify(VerifyArgs),
    /// Property checks of the controlled dynamics.
    Dynamics(DynamicsArgs),
    /// Best transfer probability with N intermediate measurements.
    Antizeno(AntizenoArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    /// Landscape descriptor, e.g. "l1" or "conv=zyz,zyz freeze=a1:0 measured=1 target=2".
    #[arg(long)]
    pub landscape: String,
    /// One per coordinate, in coordinate order: name=min:max:steps.
    #[arg(long = "axis", required = true)]
    pub axes: Vec<String>,
    /// Sample cell centres instead of including both endpoints.
    #[arg(long)]
    pub centered: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CriticalArgs {
    /// Landscape descriptor; `pin=name:value,...` restricts the search to a surface.
    #[arg(long)]
    pub landscape: String,
    #[arg(long, default_value_t = 2000)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub zero_eig_tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub dedup_radius: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Comma-separated tables or rows (T1, T2, T4, T5, T6, TT, or e.g. T1.7); all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub tables: Vec<String>,
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub value_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub hessian_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub spectrum_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub zero_eig_tol: f64,
    /// Samples of the free coordinates per row.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DynamicsArgs {
    #[command(subcommand)]
    pub check: DynamicsCheck,
    /// Coupling strength of the control Hamiltonian.
    #[arg(long, default_value_t = 1.0, global = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum DynamicsCheck {
    /// Drift of the conserved quantity along random controlled trajectories.
    Conserve {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Best transfer probability over Fourier control fields.
    Bound {
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        /// Level measured between the two fields, or "none" for a single coherent field.
        #[arg(long, default_value = "none")]
        measured: String,
        #[arg(long, default_value_t = 2)]
        target: u8,
        #[arg(long, default_value_t = 4)]
        harmonics: usize,
        #[arg(long, default_value_t = 20.0)]
        duration: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        /// Required best value; defaults to 0.499 coherent-only and 0.68 when measuring level 1 for target 2.
        #[arg(long)]
        at_least: Option<f64>,
    },
    /// Dynamic against kinematic transition probabilities.
    Crosscheck {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct AntizenoArgs {
    #[arg(long)]
    pub n_max: u64,
    /// Rotation angle between initial and final states, in radians (pi tokens allowed).
    #[arg(long, allow_hyphen_values = true)]
    pub delta_phi: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status of a completed command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    PropertyFailed,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::PropertyFailed => 1,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Success
        } else {
            Status::PropertyFailed
        }
    }
}

struct Run {
    command: &'static str,
    config: serde_json::Value,
    seed: Option<u64>,
    started: Instant,
}

impl Run {
    fn new(command: &'static str, args: &impl Serialize, seed: Option<u64>) -> Self {
        let config = serde_json::to_value(args).unwrap_or(serde_json::Value::Null);
        Self { command, config, seed, started: Instant::now() }
    }

    fn manifest(self) -> RunManifest {
        RunManifest {
            command: self.command.to_string(),
            config: self.config,
            seed: self.seed,
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: self.started.elapsed().as_secs_f64(),
        }
    }
}

fn parse_axis(s: &str, centered: bool) -> Result<(String, GridAxis), CliError> {
    let bad = || CliError::Usage(format!("bad axis {s:?}; expected name=min:max:steps"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    let [lo, hi, steps] = parts[..] else { return Err(bad()) };
    let (lo, hi) = (parse_angle(lo)?, parse_angle(hi)?);
    let steps: usize = steps.parse().map_err(|_| bad())?;
    let axis = if centered && steps > 0 && hi > lo {
        let half = 0.5 * (hi - lo) / steps as f64;
        GridAxis::new(lo + half, hi - half, steps)?
    } else {
        GridAxis::new(lo, hi, steps)?
    };
    Ok((name.to_string(), axis))
}

fn grid(args: &GridArgs, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let run = Run::new("grid", args, None);
    let spec = parse_descriptor(&args.landscape)?;
    let names = spec.landscape.names();
    let parsed = args.axes.iter().map(|a| parse_axis(a, args.centered)).collect::<Result<Vec<_>, _>>()?;
    let given: Vec<&String> = parsed.iter().map(|(n, _)| n).collect();
    if given.len() != names.len() || given.iter().zip(&names).any(|(a, b)| *a != b) {
        return Err(CliError::Usage(format!("axes must be given for {} in that order", names.join(","))));
    }
    let axes: Vec<GridAxis> = parsed.into_iter().map(|(_, a)| a).collect();
    let rows = evaluate_grid(spec.landscape.as_ref(), &axes)?;
    emit(args.out.as_deref(), &grid_csv(&names, &rows), &run.manifest(), stdout)?;
    Ok(Status::Success)
}

fn critical(args: &CriticalArgs, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let run = Run::new("critical", args, Some(args.seed));
    let spec = parse_descriptor(&args.landscape)?;
    let cfg = SearchConfig {
        starts: args.starts,
        seed: args.seed,
        grad_tol: args.grad_tol,
        zero_eig_tol: args.zero_eig_tol,
        dedup_radius: args.dedup_radius,
        max_iterations: args.max_iterations,
        ..SearchConfig::default()
    };
    cfg.validate()?;
    let extremes = match spec.extremes {
        Some(e) => e,
        None => ExtremeValues::scan(spec.landscape.as_ref(), EXTREME_SCAN_STARTS, args.seed)?,
    };
    let outcome = find_critical_points_on(spec.landscape.as_ref(), &spec.pins, &cfg, &extremes)?;
    emit(args.out.as_deref(), &critical_report(&spec.describe(), &outcome), &run.manifest(), stdout)?;
    Ok(Status::Success)
}

fn verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let run = Run::new("verify", args, Some(args.seed));
    let selection = args.tables.iter().map(|t| RowSelector::parse(t.trim())).collect::<Result<Vec<_>, _>>()?;
    let cfg = VerifyConfig {
        grad_tol: args.grad_tol,
        value_tol: args.value_tol,
        hessian_tol: args.hessian_tol,
        spectrum_tol: args.spectrum_tol,
        zero_eig_tol: args.zero_eig_tol,
        samples: args.samples,
        seed: args.seed,
    };
    let report = verify_tables(&selection, &cfg)?;
    emit(args.out.as_deref(), &verify_report(&report), &run.manifest(), stdout)?;
    Ok(Status::from_pass(report.passed()))
}

fn parse_measured(s: &str) -> Result<Option<Level>, CliError> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    s.parse::<u8>()
        .ok()
        .and_then(|n| Level::from_number(n).ok())
        .map(Some)
        .ok_or_else(|| CliError::Usage(format!("bad measured level {s:?}; expected none, 1, 2 or 3")))
}

fn dynamics(args: &DynamicsArgs, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let run = Run::new("dynamics", args, Some(args.seed));
    let sys = SystemHamiltonians::new(args.mu)?;
    let (name, pass, pairs) = match &args.check {
        DynamicsCheck::Conserve { samples, tol } => {
            let r = conservation_suite(*samples, args.seed, &sys);
            let pass = r.max_drift <= *tol && r.max_phase_drift <= *tol;
            let pairs = vec![
                ("samples", r.samples.to_string()),
                ("max_drift", fmt_float(r.max_drift)),
                ("max_phase_drift", fmt_float(r.max_phase_drift)),
                ("tolerance", fmt_float(*tol)),
            ];
            ("dynamics conserve", pass, pairs)
        }
        DynamicsCheck::Bound { budget, measured, target, harmonics, duration, steps, restarts, at_least } => {
            let measured = parse_measured(measured)?;
            let target = Level::from_number(*target).map_err(|_| CliError::Usage(format!("bad target {target}")))?;
            let cfg = BoundSearchConfig {
                budget: *budget,
                seed: args.seed,
                harmonics: *harmonics,
                duration: *duration,
                steps: *steps,
                measured,
                target,
                restarts: *restarts,
            };
            let r = bound_search(&cfg, &sys)?;
            let ceiling = match measured {
                None if target == Level::Two => Some(0.5),
                None => Some(1.0),
                Some(m) => ExtremeValues::known(m, target).map(|e| e.max),
            };
            let floor = at_least.unwrap_or(match (measured, target) {
                (None, Level::Two) => 0.499,
                (Some(Level::One), Level::Two) => 0.68,
                _ => 0.0,
            });
            let below_ceiling = ceiling.is_none_or(|c| r.best <= c + 1e-9);
            let pass = below_ceiling && r.best >= floor;
            let mut pairs = vec![
                ("measured", measured.map_or_else(|| "none".to_string(), |m| m.to_string())),
                ("target", target.to_string()),
                ("evaluations", r.evaluations.to_string()),
                ("best", fmt_float(r.best)),
                ("required_at_least", fmt_float(floor)),
                ("ceiling", ceiling.map_or_else(|| "-".to_string(), fmt_float)),
            ];
            for (i, c) in r.coefficients.iter().enumerate() {
                let list: Vec<String> = c.iter().map(|&x| fmt_float(x)).collect();
                pairs.push((if i == 0 { "field1" } else { "field2" }, list.join(",")));
            }
            ("dynamics bound", pass, pairs)
        }
        DynamicsCheck::Crosscheck { samples, tol } => {
            let r = crosscheck_suite(*samples, args.seed, &sys)?;
            let pass = r.max_discrepancy <= *tol;
            let pairs = vec![
                ("samples", r.samples.to_string()),
                ("max_discrepancy", fmt_float(r.max_discrepancy)),
                ("tolerance", fmt_float(*tol)),
            ];
            ("dynamics crosscheck", pass, pairs)
        }
    };
    let mut pairs = pairs;
    pairs.push(("status", if pass { "PASS" } else { "FAIL" }.to_string()));
    emit(args.out.as_deref(), &kv_report(name, &pairs), &run.manifest(), stdout)?;
    Ok(Status::from_pass(pass))
}

fn antizeno(args: &AntizenoArgs, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let run = Run::new("antizeno", args, None);
    let delta_phi = parse_angle(&args.delta_phi)?;
    if args.n_max == 0 {
        return Err(CliError::Usage("n-max must be at least 1".into()));
    }
    let rows = (1..=args.n_max)
        .map(|n| Ok((n, anti_zeno_pmax(n, delta_phi)?)))
        .collect::<Result<Vec<_>, kinscape::Error>>()?;
    emit(args.out.as_deref(), &antizeno_csv(&rows), &run.manifest(), stdout)?;
    Ok(Status::Success)
}

/// Runs one parsed command, writing to `stdout` whatever is not sent to a file.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<Status, CliError> {
    match &cli.command {
        Command::Grid(a) => grid(a, stdout),
        Command::Critical(a) => critical(a, stdout),
        Command::Verify(a) => verify(a, stdout),
        Command::Dynamics(a) => dynamics(a, stdout),
        Command::Antizeno(a) => antizeno(a, stdout),
    }
}
