//! Command-line interface: argument parsing and the subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::assembly::{assemble_3d, assemble_axisymmetric, GalerkinOperator};
use crate::error::{Error, Result};
use crate::eta::{
    circle_eta, circle_eta_numeric, eta_invariant_heat, HeatParams, CIRCLE_EXPONENTS, CIRCLE_PAIRS, C_ZERO,
};
use crate::geometry::MetricFamily;
use crate::perturbation::{c_routes, coefficient_c, family_series, ORTHOGONALITY_TOL};
use crate::report::RunReport;
use crate::spec_file::{load_spec, LoadedSpec};
use crate::spectral::{eig_hermitian, lambda0_sweep, verify_pairing, Assembly, Sweep};
use crate::verify::{run_all, VerifyConfig, DEFAULT_SEED};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DIRAC_ASYM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "dirac-asym",
    version,
    about = "Spectral asymmetry of the Dirac operator on a perturbed 3-torus"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Second-order coefficient c by every applicable route.
    C {
        #[command(flatten)]
        common: Common,
    },
    /// Smallest-modulus eigenvalue over a range of epsilon and a fit of c.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Range `start:stop:step`, endpoints included.
        #[arg(long, value_parser = parse_range)]
        epsilons: EpsilonRange,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, value_enum, default_value_t = AssemblyArg::Full)]
        assembly: AssemblyArg,
    },
    /// Perturbation coefficients of the protected eigenvalue.
    Series {
        #[command(flatten)]
        common: Common,
        /// Highest order K, at most 6.
        #[arg(long, default_value_t = 2)]
        order: usize,
    },
    /// Eta invariant of an assembled operator or of the circle model.
    Eta {
        #[command(flatten)]
        common: Common,
        #[arg(long, required_unless_present = "circle")]
        epsilon: Option<f64>,
        /// Evaluate the circle model `(1/i) d/dx + ε` instead of a metric.
        #[arg(long, conflicts_with = "spec")]
        circle: Option<f64>,
        /// Axial truncation for families depending on `x¹` only.
        #[arg(long, default_value_t = 40)]
        axial_truncation: usize,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        /// Spectral cutoff.
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Full spectrum at one epsilon.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = AssemblyArg::Full)]
        assembly: AssemblyArg,
    },
    /// Runs the verification suite and prints one line per criterion.
    Verify {
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Metric spec file (JSON).
    pub spec: Option<PathBuf>,
    /// Truncation N: modes with max |m_i| <= N.
    #[arg(long, default_value_t = 3)]
    pub truncation: usize,
    /// FFT grid size; defaults to max(8N, 32).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed echoed in the report.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AssemblyArg {
    Full,
    Axisymmetric,
}

impl From<AssemblyArg> for Assembly {
    fn from(a: AssemblyArg) -> Self {
        match a {
            AssemblyArg::Full => Assembly::Full,
            AssemblyArg::Axisymmetric => Assembly::Axisymmetric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl EpsilonRange {
    /// `start + i·step` for every `i` reaching at most `stop` (with a relative
    /// slack of 1e-9 steps).
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

pub fn parse_range(s: &str) -> std::result::Result<EpsilonRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got {s:?}"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let r = EpsilonRange {
        start: num(a)?,
        stop: num(b)?,
        step: num(c)?,
    };
    if !(r.step > 0.0) || !(r.stop >= r.start) || !r.start.is_finite() || !r.stop.is_finite() {
        return Err(format!("need step > 0 and stop >= start, got {s:?}"));
    }
    if r.values().len() > 10_000 {
        return Err("range has more than 10000 points".into());
    }
    Ok(r)
}

/// What a finished command asks the process to do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    /// Written to `--out` or stdout.
    pub output: String,
    pub out: Option<PathBuf>,
    /// 0 when every check passed, 1 otherwise.
    pub exit_code: i32,
}

/// Exit code for an error: 2 for usage and input problems, 1 for numerical
/// failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Spec(_)
        | Error::InvalidArgument(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::RealityViolation { .. }
        | Error::NotAxisymmetric { .. }
        | Error::GridTooSmall { .. }
        | Error::BoxTooSmall { .. } => 2,
        _ => 1,
    }
}

/// Caps the global thread pool when the environment asks for it.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // A pool that is already built keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

struct Clock {
    start: Instant,
    enabled: bool,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Self {
            start: Instant::now(),
            enabled,
        }
    }

    fn record(&self, report: &mut RunReport, name: &str) {
        if self.enabled {
            report.timing(name, self.start.elapsed().as_secs_f64());
        }
    }
}

fn load(common: &Common) -> Result<LoadedSpec> {
    let path = common
        .spec
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("a spec file is required".into()))?;
    load_spec(path)
}

fn grid(common: &Common, n: usize) -> usize {
    common.grid.unwrap_or_else(|| crate::default_grid(n))
}

fn echo(common: &Common, spec: &LoadedSpec, n: usize, g: usize) -> serde_json::Value {
    json!({
        "spec_path": common.spec.as_deref().map(Path::to_string_lossy),
        "spec": spec.spec,
        "truncation": n,
        "grid": g,
        "seed": common.seed,
    })
}

fn json_outcome(report: &RunReport, out: Option<PathBuf>, exit_code: i32) -> Result<Outcome> {
    Ok(Outcome {
        output: report.to_json()?,
        out,
        exit_code,
    })
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::C { common } => cmd_c(&common),
        Command::Sweep {
            common,
            epsilons,
            format,
            assembly,
        } => cmd_sweep(&common, &epsilons, format, assembly),
        Command::Series { common, order } => cmd_series(&common, order),
        Command::Eta {
            common,
            epsilon,
            circle,
            axial_truncation,
            t_min,
            t_max,
            cutoff,
        } => match circle {
            Some(eps) => cmd_eta_circle(&common, eps),
            None => cmd_eta(
                &common,
                epsilon.ok_or_else(|| Error::InvalidArgument("--epsilon is required".into()))?,
                axial_truncation,
                HeatParams {
                    t_min,
                    t_max,
                    cutoff,
                    ..HeatParams::default()
                },
            ),
        },
        Command::Spectrum {
            common,
            epsilon,
            assembly,
        } => cmd_spectrum(&common, epsilon, assembly),
        Command::Verify { out, seed, timings } => cmd_verify(out, seed, timings),
    }
}

pub fn cmd_c(common: &Common) -> Result<Outcome> {
    let clock = Clock::new(common.timings);
    let spec = load(common)?;
    let (n, g) = (common.truncation, grid(common, common.truncation));
    let routes = c_routes(&spec.family, n, g)?;
    let mut report = RunReport::new("c", echo(common, &spec, n, g))?.with_results(json!({ "c": routes }))?;
    report.warnings = spec.warnings.clone();
    report.residual("max_route_delta", routes.max_delta);
    report.residual("rellich_error_indicator", routes.rellich_error_indicator);
    report.residual("rellich_orthogonality", routes.rellich_orthogonality_residual);
    clock.record(&mut report, "total");
    json_outcome(&report, common.out.clone(), 0)
}

pub fn sweep_csv(sweep: &Sweep) -> String {
    let mut s = String::from("epsilon,lambda0,lambda0_over_eps2\n");
    for r in &sweep.rows {
        let ratio = r.lambda0_over_eps2.map(|x| format!("{x:.16e}")).unwrap_or_default();
        s.push_str(&format!("{:.16e},{:.16e},{ratio}\n", r.epsilon, r.lambda0));
    }
    s
}

pub fn cmd_sweep(common: &Common, range: &EpsilonRange, format: Format, assembly: AssemblyArg) -> Result<Outcome> {
    let clock = Clock::new(common.timings);
    let spec = load(common)?;
    let (n, g) = (common.truncation, grid(common, common.truncation));
    let sweep = lambda0_sweep(&spec.family, &range.values(), n, g, assembly.into())?;
    if format == Format::Csv {
        return Ok(Outcome {
            output: sweep_csv(&sweep),
            out: common.out.clone(),
            exit_code: 0,
        });
    }
    let mut inputs = echo(common, &spec, n, g);
    inputs["epsilons"] = serde_json::to_value(range)?;
    inputs["assembly"] = serde_json::to_value(assembly)?;
    let mut report = RunReport::new("sweep", inputs)?.with_results(&sweep)?;
    report.warnings = spec.warnings.clone();
    report.residual("max_fit_residual", sweep.max_residual);
    clock.record(&mut report, "total");
    json_outcome(&report, common.out.clone(), 0)
}

pub fn cmd_series(common: &Common, order: usize) -> Result<Outcome> {
    let clock = Clock::new(common.timings);
    let spec = load(common)?;
    // The axial basis is cheap, so it is widened to keep every order exact.
    let (assembly, n) = if spec.family.is_axisymmetric() {
        (Assembly::Axisymmetric, common.truncation.max(2 * order + 2))
    } else {
        (Assembly::Full, common.truncation)
    };
    let g = grid(common, n);
    let (series, taylor) = family_series(&spec.family, n, g, assembly, order)?;
    let mut inputs = echo(common, &spec, n, g);
    inputs["order"] = json!(order);
    inputs["assembly"] = serde_json::to_value(assembly)?;
    let mut report = RunReport::new("series", inputs)?.with_results(json!({
        "lambdas": series.lambdas,
        "orthogonality_residuals": series.orthogonality_residuals,
        "taylor_error_indicators": taylor.error_indicators,
        "taylor_radius": taylor.radius,
        "taylor_nodes": taylor.nodes,
    }))?;
    report.warnings = spec.warnings.clone();
    let worst = series.orthogonality_residuals.iter().copied().fold(0.0, f64::max);
    report.residual("max_orthogonality", worst);
    clock.record(&mut report, "total");
    let code = if worst <= ORTHOGONALITY_TOL { 0 } else { 1 };
    json_outcome(&report, common.out.clone(), code)
}

fn assemble(fam: &MetricFamily, eps: f64, n: usize, g: usize, assembly: Assembly) -> Result<GalerkinOperator> {
    match assembly {
        Assembly::Full => assemble_3d(fam, eps, n, g),
        Assembly::Axisymmetric => assemble_axisymmetric(fam, eps, n, g),
    }
}

pub fn cmd_eta(common: &Common, eps: f64, axial_truncation: usize, params: HeatParams) -> Result<Outcome> {
    let clock = Clock::new(common.timings);
    let spec = load(common)?;
    let (assembly, n) = if spec.family.is_axisymmetric() {
        (Assembly::Axisymmetric, axial_truncation)
    } else {
        (Assembly::Full, common.truncation)
    };
    let g = grid(common, n);
    let op = assemble(&spec.family, eps, n, g, assembly)?;
    let spectrum = eig_hermitian(&op, false)?;
    let eta = eta_invariant_heat(&spectrum, params)?;
    let c = coefficient_c(&spec.family.h())?;
    let sign_check = if c.abs() < C_ZERO {
        "skipped"
    } else if eta.value != 0.0 && eta.value.signum() == c.signum() {
        "pass"
    } else {
        "fail"
    };
    let mut inputs = echo(common, &spec, n, g);
    inputs["epsilon"] = json!(eps);
    inputs["assembly"] = serde_json::to_value(assembly)?;
    let mut report = RunReport::new("eta", inputs)?.with_results(json!({
        "eta": eta,
        "lambda0": spectrum.lambda0,
        "c": c,
        "sign_check": sign_check,
    }))?;
    report.warnings = spec.warnings.clone();
    report.warnings.extend(op.warnings.iter().cloned());
    report.residual("aliasing", op.aliasing_residual);
    clock.record(&mut report, "total");
    let code = if sign_check == "fail" { 1 } else { 0 };
    json_outcome(&report, common.out.clone(), code)
}

pub fn cmd_eta_circle(common: &Common, eps: f64) -> Result<Outcome> {
    let exact = circle_eta(eps)?;
    let numeric = circle_eta_numeric(eps)?;
    let report = RunReport::new(
        "eta",
        json!({ "circle": eps, "pairs": CIRCLE_PAIRS, "exponents": CIRCLE_EXPONENTS }),
    )?
    .with_results(json!({ "closed_form": exact, "continuation": numeric, "difference": numeric - exact }))?;
    json_outcome(&report, common.out.clone(), 0)
}

pub fn cmd_spectrum(common: &Common, eps: f64, assembly: AssemblyArg) -> Result<Outcome> {
    let clock = Clock::new(common.timings);
    let spec = load(common)?;
    let (n, g) = (common.truncation, grid(common, common.truncation));
    let op = assemble(&spec.family, eps, n, g, assembly.into())?;
    let spectrum = eig_hermitian(&op, true)?;
    let pairing = verify_pairing(&spectrum, f64::INFINITY)?;
    // Truncation convergence is judged empirically from one more shell.
    let next = n + 1;
    let lambda0_next = eig_hermitian(
        &assemble(&spec.family, eps, next, g.max(4 * next + 4), assembly.into())?,
        false,
    )?
    .lambda0;
    let mut inputs = echo(common, &spec, n, g);
    inputs["epsilon"] = json!(eps);
    inputs["assembly"] = serde_json::to_value(assembly)?;
    let mut report = RunReport::new("spectrum", inputs)?.with_results(json!({
        "dimension": op.dim(),
        "eigenvalues": spectrum.eigenvalues,
        "lambda0": spectrum.lambda0,
        "tie": spectrum.tie,
        "pairing_max_gap": pairing.max_gap,
        "lambda0_next_truncation": lambda0_next,
    }))?;
    report.warnings = spec.warnings.clone();
    report.warnings.extend(op.warnings.iter().cloned());
    report.residual("aliasing", op.aliasing_residual);
    report.residual("hermiticity", op.hermiticity_defect());
    report.residual("truncation_delta", (lambda0_next - spectrum.lambda0).abs());
    if let Some(r) = pairing.conjugation_residual {
        report.residual("conjugation_span", r);
    }
    clock.record(&mut report, "total");
    json_outcome(&report, common.out.clone(), 0)
}

pub fn cmd_verify(out: Option<PathBuf>, seed: u64, timings: bool) -> Result<Outcome> {
    let clock = Clock::new(timings);
    let results = run_all(VerifyConfig { seed });
    let all = results.iter().all(|r| r.pass);
    let mut table = String::new();
    for r in &results {
        table.push_str(&r.details());
        table.push('\n');
    }
    table.push_str(if all {
        "all criteria passed\n"
    } else {
        "some criteria FAILED\n"
    });
    let code = if all { 0 } else { 1 };
    if let Some(path) = out {
        let mut report = RunReport::new("verify", json!({ "seed": seed }))?.with_results(&results)?;
        clock.record(&mut report, "total");
        report.write(&path)?;
    }
    Ok(Outcome {
        output: table,
        out: None,
        exit_code: code,
    })
}

/// Writes an outcome to its destination.
pub fn emit(outcome: &Outcome) -> Result<()> {
    match &outcome.out {
        Some(path) => std::fs::write(path, &outcome.output)?,
        None => std::io::stdout().lock().write_all(outcome.output.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_includes_endpoint() {
        let r = parse_range("0.01:0.05:0.01").unwrap();
        let v = r.values();
        assert_eq!(v.len(), 5);
        assert!((v[4] - 0.05).abs() < 1e-15);
        assert_eq!(parse_range("0:0.2:0.1").unwrap().values()[0], 0.0);
    }

    #[test]
    fn bad_ranges() {
        for s in ["0.1:0.05:0.01", "0:1:0", "0:1", "a:1:0.1", "0:1:-1"] {
            assert!(parse_range(s).is_err(), "{s}");
        }
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(exit_code(&Error::Spec("x".into())), 2);
        assert_eq!(
            exit_code(&Error::SymmetryBreaking {
                order: 2,
                residual: 1.0
            }),
            1
        );
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from(["dirac-asym", "eta", "--circle", "0.25"]).unwrap();
        assert!(matches!(cli.command, Command::Eta { circle: Some(_), .. }));
        assert!(Cli::try_parse_from(["dirac-asym", "eta", "spec.json"]).is_err());
    }
}
