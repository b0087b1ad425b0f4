//! Command-line front end. [`run`] parses arguments, dispatches a subcommand
//! and returns the process exit code:
//!
//! - `0`: the command ran (a negative verification result still exits 0)
//! - `1`: usage error (bad arguments, grammar, configuration, unreadable file)
//! - `2`: numerical failure (singular solve, eigensolver breakdown, failed rows)

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use scatterlab_core::eigencalc::{bounded_factor_lambda1, fd_dirichlet_eigs, GridDomain};
use scatterlab_core::forward::{far_field, solve_exterior_dirichlet, AngleGrid, WaveParams};
use scatterlab_core::harness::{parse_region, selftest, separation_sweep, write_csv, SweepConfig};
use scatterlab_core::supersolution::{
    verify_with_method, ResidualMethod, SupersolutionCandidate,
};
use scatterlab_core::{
    uniqueness_threshold, BoundaryCurve, EigenError, Error, ForwardError, HarnessError,
    RegionSpec, SupersolutionError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "scatterlab", version, about = "Sound-soft scattering and uniqueness thresholds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Analytic,
    Fd,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Wavenumber threshold k0 and first eigenvalue of a region.
    Threshold {
        /// `ball m R`, `rect R h`, `interval h`, `cylinder R h`, `slab h` or `mask FILE`
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        region: Vec<String>,
    },
    /// Finite-difference Dirichlet eigenvalues of a mask file (JSON).
    Eig {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Checks a supersolution candidate at wavenumber k (JSON report).
    Verify {
        /// `disk R`, `ball R`, `rect R h`, `cylinder R h`, `interval h`, `slab h` or `grid FILE`
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        candidate: Vec<String>,
        #[arg(long, allow_negative_numbers = true)]
        k: f64,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long, value_enum, default_value = "analytic")]
        method: MethodArg,
    },
    /// Far-field pattern of one obstacle (CSV `theta,re,im`).
    Forward {
        /// `circle cx cy r`, `ellipse cx cy a b`, `kite cx cy s` or `star cx cy r0 c1 .. [sin s1 ..]`
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        curve: Vec<String>,
        #[arg(long, allow_negative_numbers = true)]
        k: f64,
        /// Incident direction angle in radians.
        #[arg(long, allow_negative_numbers = true)]
        d: f64,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[arg(long, default_value_t = 360)]
        angles: usize,
    },
    /// Separation sweep from a JSON configuration (CSV).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configuration's output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Quick invariant checks.
    Selftest,
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn exit_code(error: &Error) -> i32 {
    let numerical = match error {
        Error::Forward(e) | Error::Harness(HarnessError::Forward(e)) => {
            matches!(e, ForwardError::Singular { .. })
        }
        Error::Eigen(e)
        | Error::Harness(HarnessError::Eigen(e))
        | Error::Supersolution(SupersolutionError::Eigen(e)) => {
            matches!(e, EigenError::NonConvergence { .. })
        }
        Error::Supersolution(SupersolutionError::Positivity { .. }) => true,
        Error::SpecFun(_) => true,
        _ => false,
    };
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

fn read_mask(path: &Path) -> Result<GridDomain, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Ok(GridDomain::from_text(&text)?)
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::usage(format!("cannot write output: {e}")))
}

fn threshold(region: &[String], out: &mut dyn Write) -> Result<i32, Failure> {
    let region = parse_region(&region.join(" "), None)?;
    let k0 = uniqueness_threshold(&region)?;
    let lambda1 = bounded_factor_lambda1(&region)?;
    write_out(out, &format!("k0 {k0}\nlambda1 {lambda1}\n"))?;
    Ok(EXIT_OK)
}

fn eig(mask: &Path, count: usize, out: &mut dyn Write) -> Result<i32, Failure> {
    let domain = read_mask(mask)?;
    let result = fd_dirichlet_eigs(&domain, count)?;
    let json = serde_json::to_string(&result).expect("eigen result is plain data");
    write_out(out, &format!("{json}\n"))?;
    Ok(EXIT_OK)
}

fn candidate(spec: &[String]) -> Result<SupersolutionCandidate, Failure> {
    if spec.first().map(|s| s.eq_ignore_ascii_case("grid")) == Some(true) {
        if spec.len() != 2 {
            return Err(Failure::usage("`grid` takes one mask path"));
        }
        let domain = read_mask(Path::new(&spec[1]))?;
        return Ok(SupersolutionCandidate::grid(&domain)?);
    }
    let mut tokens = spec.to_vec();
    let region = match tokens.first().map(|s| s.to_ascii_lowercase()).as_deref() {
        Some("disk") => {
            tokens.splice(0..1, ["ball".to_string(), "2".to_string()]);
            RegionSpec::from_tokens(&tokens)?
        }
        Some("ball") => {
            tokens.splice(0..1, ["ball".to_string(), "3".to_string()]);
            RegionSpec::from_tokens(&tokens)?
        }
        _ => RegionSpec::from_tokens(&tokens)?,
    };
    Ok(SupersolutionCandidate::for_region(&region)?)
}

fn verify(
    spec: &[String],
    k: f64,
    spacing: Option<f64>,
    method: MethodArg,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let candidate = candidate(spec)?;
    let method = match method {
        MethodArg::Analytic => ResidualMethod::Analytic,
        MethodArg::Fd => ResidualMethod::FiniteDifference,
    };
    let report = verify_with_method(&candidate, k, spacing, method)?;
    write_out(out, &format!("{}\n", report.to_json()))?;
    Ok(EXIT_OK)
}

fn forward(
    curve: &[String],
    k: f64,
    d: f64,
    n: usize,
    angles: usize,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let curve = BoundaryCurve::from_tokens(curve)?;
    let wave = WaveParams::from_angle(k, d)?;
    let grid = AngleGrid::uniform(angles)?;
    let density = solve_exterior_dirichlet(&curve, wave, n)?;
    let pattern = far_field(&curve, &density, wave, grid)?;
    let mut text = String::from("theta,re,im\n");
    for (theta, f) in pattern.angles.iter().zip(&pattern.values) {
        text.push_str(&format!("{theta:.16e},{:.16e},{:.16e}\n", f.re, f.im));
    }
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

fn sweep(
    config: &Path,
    output: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let cfg = SweepConfig::load(config)?;
    let plan = cfg.plan(config.parent())?;
    let rows = separation_sweep(&plan)?;
    let mut csv = Vec::new();
    write_csv(&rows, &mut csv).expect("writing to memory");
    match output.or(plan.output) {
        Some(path) => fs::write(&path, &csv).map_err(|e| io_failure(&path, e))?,
        None => out
            .write_all(&csv)
            .map_err(|e| Failure::usage(format!("cannot write output: {e}")))?,
    }
    let mut code = EXIT_OK;
    for row in &rows {
        if let Some(reason) = &row.failure {
            let _ = writeln!(err, "row k = {}: {reason}", row.k);
            code = EXIT_NUMERICAL;
        }
    }
    Ok(code)
}

fn run_selftest(out: &mut dyn Write) -> Result<i32, Failure> {
    let checks = selftest();
    let mut text = String::new();
    for c in &checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        text.push_str(&format!("{verdict} {} ({})\n", c.name, c.detail));
    }
    write_out(out, &text)?;
    Ok(if checks.iter().all(|c| c.pass) {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    })
}

/// Runs the command line `args` (program name first) against the given
/// output streams and returns the exit code.
pub fn run_with<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Threshold { region } => threshold(&region, out),
        Command::Eig { mask, count } => eig(&mask, count, out),
        Command::Verify {
            candidate,
            k,
            spacing,
            method,
        } => verify(&candidate, k, spacing, method, out),
        Command::Forward {
            curve,
            k,
            d,
            n,
            angles,
        } => forward(&curve, k, d, n, angles, out),
        Command::Sweep { config, output } => sweep(&config, output, out, err),
        Command::Selftest => run_selftest(out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// [`run_with`] on the process's stdout and stderr.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
