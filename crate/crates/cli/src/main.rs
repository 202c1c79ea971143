//! `fba`: command-line access to the verification suites, the ground-state
//! Baxter solver, tropical seeds and the thermodynamic formulas.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a
//! computation errors out, 2 on usage errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fba_core::baxterflow::{solve_ground_with, BetheSolution, SolveOptions};
use fba_core::thermo::{
    density_complex, density_functional_residual, density_mean, density_tropical, empirical_density, partition_integral,
    partition_per_site, sample_points, DensityModel,
};
use fba_core::tropical::{even_seed, ground_seed, k_branches, one_particle_seed, verify_seed};
use fba_core::verify::{inversion_suite, pentagon_suite, sixj_suite, special_function_suite, states_suite, CheckSummary};
use fba_core::{baxterflow, QParams, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const SCHEMA: &str = "fba-spec-1";

#[derive(Parser)]
#[command(name = "fba", version, about = "Functional Bethe Ansatz checks and solvers for the real-q sinh-Gordon chain")]
struct Cli {
    /// Seed for every sampled check
    #[arg(long, global = true, default_value_t = 20_240_917)]
    seed: u64,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Special-function identities, pentagon, 6j and inversion checks
    VerifyIdentities(IdentityArgs),
    /// Eigen-relations of the separated states for n = 2 and n = 3
    VerifyStates(StatesArgs),
    /// Quantized ground-state transfer polynomial with certificates
    SolveGround(SolveArgs),
    /// Order-q^0 seed state with its exact verification
    TropicalSeed(SeedArgs),
    /// Root density on the unit circle
    Density(DensityArgs),
    /// Free energy per site, series against integral form
    Partition(PartitionArgs),
}

/// `re` or `re:im`.
fn parse_c64(s: &str) -> Result<C64, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}"));
    match s.split_once(':') {
        Some((re, im)) => Ok(C64::new(parse(re)?, parse(im)?)),
        None => Ok(C64::new(parse(s)?, 0.0)),
    }
}

#[derive(Args)]
struct IdentityArgs {
    #[arg(long, value_parser = parse_c64, default_value = "0.2")]
    q: C64,
    #[arg(long, value_parser = parse_c64, default_value = "0.5")]
    s: C64,
    /// Circle nodes for the contour integrals
    #[arg(long, default_value_t = 512)]
    nodes: usize,
    /// Random points per special-function identity
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Random parameter sets for the pentagon and 6j integrals
    #[arg(long, default_value_t = 5)]
    sets: usize,
}

#[derive(Args)]
struct StatesArgs {
    #[arg(long, value_parser = parse_c64, default_value = "0.2")]
    q: C64,
    #[arg(long, value_parser = parse_c64, default_value = "0.5")]
    s: C64,
    #[arg(long, default_value_t = 128)]
    nodes: usize,
    #[arg(long, default_value_t = 50)]
    points2: usize,
    #[arg(long, default_value_t = 10)]
    points3: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, value_parser = parse_c64, default_value = "0.1")]
    q: C64,
    #[arg(long, value_parser = parse_c64, default_value = "0.5")]
    s: C64,
    /// Initial number of geometric continuation steps in q
    #[arg(long, default_value_t = 16)]
    q_steps: usize,
    /// Newton tolerance on the Bethe residuals
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Parameter sweep, e.g. `q=0.05,0.1,0.15` or `s=0.4,0.5`
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Args)]
struct SeedArgs {
    #[arg(long)]
    n: usize,
    /// Number of excitation pairs (0 for the unitary ground seed)
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long, value_parser = parse_c64, default_value = "0.5")]
    s: C64,
    /// Phase of the total v for the ground seed
    #[arg(long, default_value_t = 0.0)]
    v_phase: f64,
    /// Momentum label of a one-particle seed
    #[arg(long, allow_hyphen_values = true)]
    j: Option<i64>,
    /// Excitation labels of an even seed
    #[arg(long, value_delimiter = ',')]
    subset: Option<Vec<usize>>,
    /// `1` or `half` (k = e^{i pi/n})
    #[arg(long, default_value = "1")]
    branch: String,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long, value_parser = parse_c64, default_value = "-0.1", allow_hyphen_values = true)]
    q: C64,
    #[arg(long, value_parser = parse_c64, default_value = "0.5")]
    s: C64,
    /// Angles in the output table
    #[arg(long, default_value_t = 64)]
    points: usize,
    /// Sample points for the functional-equation residual
    #[arg(long, default_value_t = 16)]
    samples: usize,
    /// Add a spacing estimate from the exact q = 0 roots of this chain length
    #[arg(long)]
    roots_n: Option<usize>,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long, value_parser = parse_c64, default_value = "-0.1", allow_hyphen_values = true)]
    q: C64,
    #[arg(long, value_parser = parse_c64, default_value = "0.5")]
    s: C64,
    #[arg(long, default_value_t = 16)]
    points: usize,
}

/// Result of one command: the JSON document, optional CSV rows and the verdict.
struct Outcome {
    doc: Value,
    csv: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    passed: bool,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<fba_core::FbaError> for Failure {
    fn from(e: fba_core::FbaError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn cpair(c: C64) -> [f64; 2] {
    [c.re, c.im]
}

fn all_passed(checks: &[CheckSummary]) -> bool {
    checks.iter().all(|c| c.passed)
}

fn verify_identities(a: &IdentityArgs, seed: u64) -> Result<Outcome, Failure> {
    let p = QParams::with_policy(a.q, a.s, 1e-17, a.nodes.max(16))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = special_function_suite(&p, a.points, &mut rng)?;
    checks.push(pentagon_suite(&p, a.sets, a.nodes, &mut rng)?);
    checks.push(sixj_suite(&p, a.sets, a.nodes, &mut rng)?);
    checks.push(inversion_suite(&p, &[0, 1, -2, 3], 64, &mut rng)?);
    let passed = all_passed(&checks);
    Ok(Outcome { doc: json!({ "q": cpair(a.q), "s": cpair(a.s), "nodes": a.nodes, "checks": checks }), csv: None, passed })
}

fn verify_states(a: &StatesArgs, seed: u64) -> Result<Outcome, Failure> {
    let p = QParams::new(a.q, a.s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = states_suite(&p, a.points2, a.points3, a.nodes, &mut rng)?;
    let passed = report.passed;
    Ok(Outcome { doc: json!({ "q": cpair(a.q), "s": cpair(a.s), "report": report }), csv: None, passed })
}

fn certified(sol: &BetheSolution) -> bool {
    let c = &sol.certificates;
    c.baxter_grid_residual <= 1e-9
        && c.pole_residuals.iter().all(|r| *r <= 1e-9)
        && c.wronskian_scatter <= 1e-8
        && (sol.root_product() - 1.0).norm() <= 1e-10
}

fn solve_one(n: usize, q: C64, s: C64, opts: &SolveOptions) -> (Value, bool) {
    match QParams::new(q, s).and_then(|p| solve_ground_with(n, &p, opts)) {
        Ok(sol) => {
            let ok = certified(&sol);
            (json!({ "solution": sol, "certified": ok }), ok)
        }
        Err(e) => (json!({ "q": cpair(q), "s": cpair(s), "error": e.to_string() }), false),
    }
}

fn worker_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("FBA_THREADS") {
        let n: usize = v.parse().map_err(|_| Failure::Usage(format!("FBA_THREADS='{v}' is not a thread count")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Failure::Runtime(e.to_string()))
}

fn solve_ground_cmd(a: &SolveArgs) -> Result<Outcome, Failure> {
    let opts = SolveOptions { q_steps: a.q_steps, tol: a.tol, ..Default::default() };
    let Some(sweep) = &a.sweep else {
        let (doc, passed) = solve_one(a.n, a.q, a.s, &opts);
        return Ok(Outcome { doc, csv: None, passed });
    };
    let (key, list) = sweep.split_once('=').ok_or_else(|| Failure::Usage(format!("--sweep '{sweep}': expected q=... or s=...")))?;
    if key != "q" && key != "s" {
        return Err(Failure::Usage(format!("--sweep: unknown parameter '{key}'")));
    }
    let values = list.split(',').map(parse_c64).collect::<Result<Vec<_>, _>>().map_err(|e| Failure::Usage(format!("--sweep: {e}")))?;
    let pool = worker_pool()?;
    // collect keeps sweep order regardless of completion order
    let results: Vec<(Value, bool)> = pool.install(|| {
        values
            .par_iter()
            .map(|&x| if key == "q" { solve_one(a.n, x, a.s, &opts) } else { solve_one(a.n, a.q, x, &opts) })
            .collect()
    });
    let passed = results.iter().all(|r| r.1);
    let entries: Vec<Value> = values.iter().zip(results).map(|(x, (doc, _))| json!({ key: cpair(*x), "result": doc })).collect();
    Ok(Outcome { doc: json!({ "n": a.n, "sweep": key, "entries": entries }), csv: None, passed })
}

fn tropical_seed_cmd(a: &SeedArgs) -> Result<Outcome, Failure> {
    let seed = if let Some(j) = a.j {
        if a.subset.is_some() {
            return Err(Failure::Usage("--j and --subset are exclusive".into()));
        }
        one_particle_seed(a.n, a.s, j)?
    } else if let Some(subset) = &a.subset {
        let k = match a.branch.as_str() {
            "1" => k_branches(a.n)[0],
            "half" => k_branches(a.n)[1],
            other => return Err(Failure::Usage(format!("--branch '{other}': expected 1 or half"))),
        };
        even_seed(a.n, a.m, a.s, subset, k)?
    } else {
        if a.m != 0 {
            return Err(Failure::Usage("--m > 0 needs --subset (or --j for one particle)".into()));
        }
        ground_seed(a.n, C64::from_polar(1.0, a.v_phase), a.s)?
    };
    let report = verify_seed(&seed);
    let passed = report.passed;
    Ok(Outcome { doc: json!({ "seed": seed, "report": report }), csv: None, passed })
}

#[derive(Serialize)]
struct DensityChecks {
    functional_residual: f64,
    normalization_error: f64,
    empirical_sup_error: Option<f64>,
}

fn density_cmd(a: &DensityArgs) -> Result<Outcome, Failure> {
    let dm = DensityModel::new(a.s, a.q)?;
    let residual = density_functional_residual(&dm, a.samples)?;
    let norm_err = (density_mean(&dm, 1024)? - 1.0).norm();
    let emp = match a.roots_n {
        Some(n) => Some(empirical_density(&baxterflow::tropical_roots(n, a.s), 0.0)?),
        None => None,
    };
    let mut rows = Vec::with_capacity(a.points);
    let mut table = Vec::with_capacity(a.points);
    for k in 0..a.points {
        let phi = -PI + 2.0 * PI * (k as f64 + 0.5) / a.points as f64;
        let w = C64::from_polar(1.0, phi);
        let ps = density_complex(w, &dm)?.re;
        let pt = density_tropical(w, a.s).re;
        let pe = emp.as_ref().map(|e| e.eval(phi));
        rows.push(vec![phi.to_string(), ps.to_string(), pt.to_string(), pe.map(|x| x.to_string()).unwrap_or_default()]);
        table.push(json!({ "phi": phi, "P_series": ps, "P_tropical": pt, "P_empirical": pe }));
    }
    let sup = emp.as_ref().map(|e| {
        e.midpoints
            .iter()
            .zip(&e.values)
            .map(|(m, v)| (v - density_tropical(C64::from_polar(1.0, *m), a.s).re).abs())
            .fold(0.0, f64::max)
    });
    let checks = DensityChecks { functional_residual: residual, normalization_error: norm_err, empirical_sup_error: sup };
    let passed = residual <= 1e-8 && norm_err <= 1e-13 && sup.is_none_or(|x| x <= 0.15);
    let header = vec!["phi", "P_series", "P_tropical", "P_empirical"];
    Ok(Outcome {
        doc: json!({ "q": cpair(a.q), "s": cpair(a.s), "terms": dm.terms, "checks": checks, "table": table }),
        csv: Some((header, rows)),
        passed,
    })
}

fn partition_cmd(a: &PartitionArgs) -> Result<Outcome, Failure> {
    let dm = DensityModel::new(a.s, a.q)?;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut worst: f64 = 0.0;
    for z in sample_points(a.points) {
        let series = partition_per_site(z, &dm)?;
        let integral = partition_integral(z, &dm)?;
        let diff = (series - integral).norm();
        worst = worst.max(diff);
        rows.push(vec![z.arg().to_string(), series.re.to_string(), series.im.to_string(), integral.re.to_string(), integral.im.to_string()]);
        table.push(json!({ "phi": z.arg(), "series": cpair(series), "integral": cpair(integral), "difference": diff }));
    }
    let passed = worst <= 1e-8;
    Ok(Outcome {
        doc: json!({ "q": cpair(a.q), "s": cpair(a.s), "max_difference": worst, "table": table }),
        csv: Some((vec!["phi", "series_re", "series_im", "integral_re", "integral_im"], rows)),
        passed,
    })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::VerifyIdentities(_) => "verify-identities",
        Command::VerifyStates(_) => "verify-states",
        Command::SolveGround(_) => "solve-ground",
        Command::TropicalSeed(_) => "tropical-seed",
        Command::Density(_) => "density",
        Command::Partition(_) => "partition",
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    if cli.format == Format::Csv && !matches!(cli.command, Command::Density(_) | Command::Partition(_)) {
        return Err(Failure::Usage("--format csv is only available for density and partition".into()));
    }
    match &cli.command {
        Command::VerifyIdentities(a) => verify_identities(a, cli.seed),
        Command::VerifyStates(a) => verify_states(a, cli.seed),
        Command::SolveGround(a) => solve_ground_cmd(a),
        Command::TropicalSeed(a) => tropical_seed_cmd(a),
        Command::Density(a) => density_cmd(a),
        Command::Partition(a) => partition_cmd(a),
    }
}

fn emit(cli: &Cli, out: &Outcome) -> std::io::Result<()> {
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    match (&cli.format, &out.csv) {
        (Format::Csv, Some((header, rows))) => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        _ => {
            let doc = json!({
                "schema": SCHEMA,
                "command": command_name(&cli.command),
                "seed": cli.seed,
                "passed": out.passed,
                "result": out.doc,
            });
            serde_json::to_writer_pretty(&mut sink, &doc)?;
            writeln!(sink)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&cli, &out) {
                eprintln!("fba: cannot write output: {e}");
                return ExitCode::from(1);
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("fba: {}: one or more checks failed", command_name(&cli.command));
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("fba: usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("fba: {msg}");
            ExitCode::from(1)
        }
    }
}
