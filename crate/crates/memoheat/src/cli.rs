//! Command-line front end: `solve`, `spectrum`, `verify`, `asymptotics`.
//!
//! Exit status: 0 when every check passed and no error occurred, 1 on any
//! fail verdict or runtime failure, 2 on usage or configuration errors.
//! `--jobs` (or the `MEMOHEAT_JOBS` environment variable) sizes the worker
//! pool; outputs do not depend on it.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laplace::{self, LineQuadrature, SymbolKind};
use crate::output::{self, NormEntry};
use crate::scenario::{self, Scenario, ScenarioFile};
use crate::spaces;
use crate::spectrum::compute_spectrum;
use crate::verify::{self, Report, StrongVariant};
use crate::{modes, VERSION};

#[derive(Parser)]
#[command(name = "memoheat", version, about = "Modal solver and estimate verifier for heat conduction with exponential-sum memory kernels")]
struct Cli {
    /// Worker pool size (fallback: MEMOHEAT_JOBS, then all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and emit per-mode trajectory CSVs plus a norm summary.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for mode_XXXX.csv and norms.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the certified spectrum for n = 1..N of the scenario.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Residual certification tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Run a verification check and emit a report.
    Verify {
        /// One of: lemma1 | lm1 | regularity | perturbation | strong | continuity.
        #[arg(long)]
        check: String,
        #[arg(long)]
        config: PathBuf,
        /// Smoothness index override (defaults to the scenario's s).
        #[arg(long)]
        s: Option<f64>,
        /// Mode set, e.g. "8:512:dyadic", "1:16", "1,2,5", or combinations.
        #[arg(long)]
        n: Option<String>,
        /// Seed for randomized scenario batches (reproducible).
        #[arg(long)]
        seed: Option<u64>,
        /// Report JSON path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also export a line scan CSV for the first mode of the check.
        #[arg(long)]
        line_scan: Option<PathBuf>,
        /// Strong-estimate variant: vv | strong.
        #[arg(long)]
        variant: Option<String>,
        /// Scan half-width for line-based checks.
        #[arg(long)]
        y_max: Option<f64>,
    },
    /// Tabulate expansion residuals of K(z) and check their decay.
    Asymptotics {
        #[arg(long)]
        config: PathBuf,
        /// Residual table CSV path.
        #[arg(long)]
        out_csv: Option<PathBuf>,
        /// Report JSON path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Expansion orders to test.
        #[arg(long, default_value = "1,2,3")]
        orders: String,
        /// Ray angle in radians, |angle| <= pi/2.
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
    },
}

/// Parses an n-set spec: comma-separated items, each `lo:hi:dyadic`,
/// `lo:hi` (inclusive), or a single integer.
pub fn parse_n_spec(spec: &str) -> Result<Vec<u32>> {
    let bad = |msg: String| Error::Scenario {
        field: "n".into(),
        message: msg,
    };
    let mut out = Vec::new();
    for item in spec.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        let parse = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| bad(format!("`{s}` is not a mode index")))
        };
        match parts.as_slice() {
            [single] => out.push(parse(single)?),
            [lo, hi] => {
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if lo > hi || lo == 0 {
                    return Err(bad(format!("invalid range {lo}:{hi}")));
                }
                out.extend(lo..=hi);
            }
            [lo, hi, kind] if *kind == "dyadic" => {
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if lo > hi || lo == 0 {
                    return Err(bad(format!("invalid range {lo}:{hi}")));
                }
                let mut n = lo;
                while n <= hi {
                    out.push(n);
                    match n.checked_mul(2) {
                        Some(next) => n = next,
                        None => break,
                    }
                }
            }
            _ => return Err(bad(format!("cannot parse n item `{item}`"))),
        }
    }
    if out.is_empty() {
        return Err(bad("empty n set".into()));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn init_pool(jobs: Option<usize>) {
    let jobs = jobs.or_else(|| {
        std::env::var("MEMOHEAT_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(jobs) = jobs {
        // a second initialization (e.g. in tests) keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
}

fn print_run_header(scenario: &Scenario) {
    let header = serde_json::json!({
        "tool_version": VERSION,
        "scenario_digest": scenario.digest(),
        "scenario": scenario.echo(),
    });
    println!("{}", serde_json::to_string_pretty(&header).expect("header serializes"));
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return code;
        }
    };
    init_pool(cli.jobs);
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Scenario { .. } | Error::ScenarioParse(_) | Error::Io(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Solve { config, out } => cmd_solve(&config, &out),
        Command::Spectrum { config, out, tol } => cmd_spectrum(&config, &out, tol),
        Command::Verify {
            check,
            config,
            s,
            n,
            seed,
            out,
            line_scan,
            variant,
            y_max,
        } => cmd_verify(VerifyArgs {
            check,
            config,
            s,
            n,
            seed,
            out,
            line_scan,
            variant,
            y_max,
        }),
        Command::Asymptotics {
            config,
            out_csv,
            out,
            orders,
            angle,
        } => cmd_asymptotics(&config, out_csv.as_deref(), out.as_deref(), &orders, angle),
    }
}

fn cmd_solve(config: &Path, out_dir: &Path) -> Result<i32> {
    let scenario = scenario::load_scenario(config)?;
    print_run_header(&scenario);
    std::fs::create_dir_all(out_dir)?;
    let field = modes::solve_field(&scenario)?;
    for traj in field.modes() {
        let path = out_dir.join(format!("mode_{:04}.csv", traj.n));
        std::fs::write(&path, output::trajectory_csv(traj, scenario.digest()))?;
    }
    let norms = vec![
        NormEntry::new(
            "theta",
            scenario.s,
            scenario.eps,
            spaces::field_norm(&field, scenario.s, scenario.eps, false),
        ),
        NormEntry::new(
            "theta_dot",
            scenario.s,
            scenario.eps,
            spaces::field_norm(&field, scenario.s, scenario.eps, true),
        ),
        NormEntry::new(
            "theta_h2",
            2.0,
            scenario.eps,
            spaces::field_norm(&field, 2.0, scenario.eps, false),
        ),
    ];
    output::write_norms_json(&out_dir.join("norms.json"), scenario.digest(), &norms)?;
    let uncertified = field.modes().iter().filter(|m| !m.step_certified).count();
    if uncertified > 0 {
        eprintln!(
            "note: {uncertified} mode(s) exceed the n*sqrt(alpha)*step <= {} resolution certificate",
            modes::STEP_CERTIFICATE_LIMIT
        );
    }
    Ok(0)
}

fn cmd_spectrum(config: &Path, out: &Path, tol: f64) -> Result<i32> {
    let scenario = scenario::load_scenario(config)?;
    print_run_header(&scenario);
    let mut results = Vec::with_capacity(scenario.n_modes as usize);
    for n in 1..=scenario.n_modes {
        results.push(compute_spectrum(scenario.kernel(), n, tol)?);
    }
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out, output::spectrum_csv(&results, scenario.digest()))?;
    Ok(0)
}

struct VerifyArgs {
    check: String,
    config: PathBuf,
    s: Option<f64>,
    n: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    line_scan: Option<PathBuf>,
    variant: Option<String>,
    y_max: Option<f64>,
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let file: ScenarioFile = scenario::load_scenario_file(&args.config)?;
    let scenario = Scenario::from_file(file.clone())?;
    print_run_header(&scenario);
    let kernel = scenario.kernel().clone();
    let eps = scenario.eps;
    let s = args.s.unwrap_or(scenario.s);
    let n_spec = |default: &str| -> Result<Vec<u32>> {
        parse_n_spec(args.n.as_deref().unwrap_or(default))
    };

    let mut scan: Option<(u32, SymbolKind, LineQuadrature)> = None;
    let reports: Vec<Report> = match args.check.as_str() {
        "lemma1" => {
            let n_set = n_spec("1:512:dyadic")?;
            let quad = LineQuadrature::standard(eps, args.y_max.unwrap_or(64.0));
            scan = Some((n_set[0], SymbolKind::InvG, quad));
            vec![verify::check_lemma_bounds(&kernel, &n_set, eps, &quad)?]
        }
        "lm1" => {
            let n_set = n_spec("16:256:dyadic")?;
            let y_grid = verify::default_y_grid(&kernel, &n_set);
            scan = Some((
                n_set[0],
                SymbolKind::G,
                LineQuadrature::standard(0.0, args.y_max.unwrap_or(4.0 * *n_set.last().unwrap() as f64)),
            ));
            vec![verify::check_gn_equivalence(&kernel, &n_set, &y_grid)?]
        }
        "regularity" => {
            let sizes = n_spec("8,32,128")?;
            vec![verify::check_regularity_batch(&file, &sizes, args.seed)?]
        }
        "perturbation" => {
            let n_set = n_spec("8:512:dyadic")?;
            let quad = LineQuadrature::standard(0.0, args.y_max.unwrap_or(64.0));
            scan = Some((n_set[0], SymbolKind::D, quad));
            let main = verify::check_perturbation(&kernel, s, &n_set, &quad)?;
            let n_max = (*n_set.last().unwrap()).min(64);
            let corollary = verify::check_perturbation_corollary(
                &kernel,
                s,
                n_max,
                &scenario.grid,
                eps,
            )?;
            vec![main, corollary]
        }
        "strong" => {
            let sizes = n_spec("8,32,128")?;
            let variant = match args.variant.as_deref() {
                Some("vv") => StrongVariant::VV,
                None | Some("strong") => StrongVariant::Strong,
                Some(other) => {
                    return Err(Error::Scenario {
                        field: "variant".into(),
                        message: format!("must be vv|strong, got `{other}`"),
                    })
                }
            };
            vec![verify::check_strong_batch(&file, &sizes, variant, args.seed)?]
        }
        "continuity" => vec![verify::check_continuity(&scenario)?],
        other => {
            return Err(Error::Scenario {
                field: "check".into(),
                message: format!(
                    "unknown check `{other}` (expected lemma1|lm1|regularity|perturbation|strong|continuity)"
                ),
            })
        }
    };

    if let (Some(path), Some((n, kind, quad))) = (&args.line_scan, scan) {
        let rows = laplace::line_scan(&kernel, n, kind, &quad)?;
        std::fs::write(path, output::line_scan_csv(&rows, scenario.digest()))?;
    }

    match &args.out {
        Some(path) => output::write_reports_json(path, scenario.digest(), &reports)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&reports).expect("reports serialize")
        ),
    }
    for r in &reports {
        eprintln!(
            "{}: {:?} (statistic {:.6e}, tolerance {:.3e})",
            r.check_name, r.verdict, r.statistic, r.tolerance
        );
    }
    Ok(if reports.iter().any(|r| r.verdict == verify::Verdict::Fail) {
        1
    } else {
        0
    })
}

fn cmd_asymptotics(
    config: &Path,
    out_csv: Option<&Path>,
    out: Option<&Path>,
    orders: &str,
    angle: f64,
) -> Result<i32> {
    let scenario = scenario::load_scenario(config)?;
    print_run_header(&scenario);
    let orders: Vec<u8> = orders
        .split(',')
        .map(|t| {
            t.trim().parse::<u8>().map_err(|_| Error::Scenario {
                field: "orders".into(),
                message: format!("`{t}` is not an order"),
            })
        })
        .collect::<Result<_>>()?;
    // |z| capped at 1e4: the order-3 subtraction loses to rounding beyond
    let magnitudes = verify::geometric_magnitudes(1.0, 1e4, 8);
    let report = verify::check_asymptotics(scenario.kernel(), angle, &magnitudes, &orders)?;
    if let Some(path) = out_csv {
        let (unit, _scale) = scenario.kernel().normalized();
        let mut rows = Vec::new();
        for &order in &orders {
            for &r in &magnitudes {
                let z = Complex64::from_polar(r, angle);
                let v = (z.powu(order as u32) * unit.asymptotic_residual(z, order)?).norm();
                rows.push((order, r, v));
            }
        }
        std::fs::write(path, output::asymptotics_csv(&rows, scenario.digest()))?;
    }
    match out {
        Some(path) => output::write_reports_json(path, scenario.digest(), std::slice::from_ref(&report))?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        ),
    }
    Ok(if report.passed() { 0 } else { 1 })
}
