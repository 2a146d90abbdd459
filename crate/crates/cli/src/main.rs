use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use maxprin::operator::DriftPartSpec;
use maxprin::scenario::{
    bundled, bundled_names, run_batch, run_scenario, summary_csv, Check, OUTPUT_DIR_ENV,
};
use maxprin::{
    bony_check, mixed_norm_detailed, solve_forward, ExponentPair, Family, GridFunction,
    MixedNormSpec, NormOrder, PointSingularity, PositivitySet, Scenario, ScenarioOutcome,
};

#[derive(Parser)]
#[command(name = "maxprin", version, about = "Maximum-principle experiments for parabolic operators")]
struct Cli {
    /// Output directory for reports.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV, default_value = "maxprin-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve L u = f and write the solution CSV.
    Solve(Source),
    /// Mixed norm of a grid-function CSV.
    Norm(NormArgs),
    /// Solve and report both sides of the maximum-principle bound.
    VerifyBound(VerifyArgs),
    /// Check the normalized Lu at an interior nonnegative maximum.
    BonyCheck(BonyArgs),
    /// Singular-drift counterexample and the drift-norm refinement study.
    Counterexample(CounterexampleArgs),
    /// Radial barrier and composite-barrier verification.
    Barrier(BarrierArgs),
    /// Bound ratio across mesh sizes.
    Scan(ScanArgs),
    /// Run scenario files or bundled scenarios.
    Run(RunArgs),
    /// List bundled scenarios.
    List,
}

#[derive(Args, Clone)]
struct Source {
    /// Scenario file.
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Bundled scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// Override the mesh: `nx` spatial and `nx` temporal nodes.
    #[arg(long)]
    nx: Option<usize>,
    /// Override the number of time levels.
    #[arg(long)]
    nt: Option<usize>,
}

impl Source {
    fn load(&self, default: &str) -> Result<Scenario> {
        let mut s = match (&self.config, &self.scenario) {
            (Some(p), _) => Scenario::from_file(p)?,
            (None, Some(n)) => bundled(n)?,
            (None, None) => bundled(default)?,
        };
        if let Some(nx) = self.nx {
            s.grid.nx = nx;
            s.grid.nt = self.nt.unwrap_or(nx);
        } else if let Some(nt) = self.nt {
            s.grid.nt = nt;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Args)]
struct NormArgs {
    /// Grid-function CSV.
    #[arg(long)]
    input: PathBuf,
    /// Exponent pair `p,q`.
    #[arg(long, default_value = "inf,inf")]
    pair: String,
    #[arg(long, value_enum, default_value_t = OrderArg::Auto)]
    order: OrderArg,
    /// Nonnegative weight CSV on the same grid.
    #[arg(long)]
    weight: Option<PathBuf>,
    /// Restriction set CSV (0/1 values) on the same grid.
    #[arg(long)]
    restriction: Option<PathBuf>,
    /// Correct for a `|x|^-order` point singularity at the origin.
    #[arg(long)]
    singularity_order: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    SpaceOuter,
    TimeOuter,
    Auto,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    /// Override `(p0, q0)`.
    #[arg(long)]
    pair: Option<String>,
    /// Override the rescaling exponent.
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args)]
struct BonyArgs {
    #[command(flatten)]
    source: Source,
    /// Check this grid function instead of the solution.
    #[arg(long)]
    function: Option<PathBuf>,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 81)]
    nx: usize,
    #[arg(long, default_value_t = 81)]
    nt: usize,
    /// Mesh sizes for the drift-norm refinement study.
    #[arg(long, value_delimiter = ',', default_value = "41,81,161,321")]
    refinements: Vec<usize>,
}

#[derive(Args)]
struct BarrierArgs {
    /// Scenario file; when given, the drift flags are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 41)]
    nx: usize,
    #[arg(long, default_value_t = 41)]
    nt: usize,
    /// Exponent of the singular part `strength x / |x|^alpha`.
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    strength: f64,
    /// Amplitude of the bounded oscillating part; 0 drops it.
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Exponent pair of the singular part.
    #[arg(long)]
    p1: Option<String>,
    /// Exponent pair of the oscillating part.
    #[arg(long)]
    p2: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    source: Source,
    /// Mesh sizes; each run uses `nt = nx`.
    #[arg(long, value_delimiter = ',', default_value = "41,81,161")]
    sizes: Vec<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario files or bundled names.
    scenarios: Vec<String>,
    /// Run every bundled scenario.
    #[arg(long)]
    all: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(passed)`; errors leave no report files behind.
fn dispatch(cli: &Cli) -> Result<bool> {
    let out = &cli.out;
    match &cli.command {
        Command::Solve(src) => solve(src, out),
        Command::Norm(a) => norm(a),
        Command::VerifyBound(a) => {
            let mut s = a.source.load("heat_baseline")?;
            if let Some(p) = &a.pair {
                s.exponents.p0 = ExponentPair::parse(p).context("--pair")?;
            }
            if let Some(k) = a.kappa {
                s.estimate.kappa = k;
            }
            run_checks(s, &[Check::VerifyBound], out)
        }
        Command::BonyCheck(a) => bony(a, out),
        Command::Counterexample(a) => {
            let mut s = bundled("remark41_alpha2")?;
            s.grid.dim = a.dim;
            s.grid.nx = a.nx;
            s.grid.nt = a.nt;
            s.counterexample.alpha = a.alpha;
            s.counterexample.refinements = a.refinements.clone();
            if let Family::SingularDrift { alpha, .. } = &mut s.operator {
                *alpha = a.alpha;
            }
            run_checks(s, &[Check::Counterexample], out)
        }
        Command::Barrier(a) => {
            let s = match &a.config {
                Some(p) => Scenario::from_file(p)?,
                None => barrier_scenario(a)?,
            };
            run_checks(s, &[Check::Barrier], out)
        }
        Command::Scan(a) => scan(a, out),
        Command::Run(a) => run(a, out),
        Command::List => {
            for name in bundled_names() {
                let s = bundled(name)?;
                println!("{name}\t{}", s.description);
            }
            Ok(true)
        }
    }
}

fn report(outcome: &ScenarioOutcome, out: &Path) -> Result<bool> {
    let files = outcome.write(out)?;
    for c in &outcome.checks {
        let status = match (c.applicable, c.passed) {
            (false, _) => "n/a",
            (true, true) => "pass",
            (true, false) => "FAIL",
        };
        println!("{}: {} {status}", outcome.scenario.name, c.check.name());
    }
    if let Some(dir) = files.first().and_then(|p| p.parent()) {
        println!("reports in {}", dir.display());
    }
    Ok(outcome.passed())
}

fn run_checks(mut s: Scenario, checks: &[Check], out: &Path) -> Result<bool> {
    s.checks = checks.to_vec();
    s.validate()?;
    let outcome = run_scenario(&s)?;
    report(&outcome, out)
}

fn solve(src: &Source, out: &Path) -> Result<bool> {
    let s = src.load("heat_baseline")?;
    let op = maxprin::scenario::scenario_operator(&s)?;
    let f = s.forcing.build(op.grid())?;
    let sol = solve_forward(&op, &f, &s.scheme)?;
    let summary = serde_json::json!({
        "schema_version": maxprin::scenario::SCHEMA_VERSION,
        "scenario": s.name,
        "solve": sol.summary(),
        "max": sol.u.max(),
        "min": sol.u.min(),
    });
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    let dir = out.join(&s.name);
    std::fs::create_dir_all(&dir)?;
    sol.u.write_csv_file(dir.join("solution.csv"))?;
    std::fs::write(dir.join("solve.json"), text)?;
    println!(
        "{}: residual {:.3e}, m-matrix {}, max u {:.6e}",
        s.name,
        sol.residual,
        sol.m_matrix,
        sol.u.max().unwrap_or(f64::NAN)
    );
    Ok(true)
}

fn norm(a: &NormArgs) -> Result<bool> {
    let u = GridFunction::read_csv_file(&a.input, None)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let g = *u.grid();
    let e = ExponentPair::parse(&a.pair).context("--pair")?;
    let order = match a.order {
        OrderArg::SpaceOuter => NormOrder::SpaceOuter,
        OrderArg::TimeOuter => NormOrder::TimeOuter,
        OrderArg::Auto => NormOrder::Auto,
    };
    let mut spec = MixedNormSpec::new(e).with_order(order);
    if let Some(p) = &a.weight {
        spec = spec.with_weight(GridFunction::read_csv_file(p, Some(g))?);
    }
    if let Some(p) = &a.restriction {
        spec = spec.with_restriction(PositivitySet::read_csv_file(p, Some(g))?);
    }
    if let Some(s) = a.singularity_order {
        spec = spec.with_singularity(PointSingularity::at_origin(s));
    }
    let d = mixed_norm_detailed(&u, &spec)?;
    println!("{}", serde_json::to_string_pretty(&d)?);
    Ok(true)
}

fn bony(a: &BonyArgs, out: &Path) -> Result<bool> {
    let s = a.source.load("random_bony")?;
    let Some(path) = &a.function else {
        return run_checks(s, &[Check::Bony], out);
    };
    let op = maxprin::scenario::scenario_operator(&s)?;
    let u = GridFunction::read_csv_file(path, Some(*op.grid()))?;
    let r = bony_check(&op, &u)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(r.passed)
}

fn barrier_scenario(a: &BarrierArgs) -> Result<Scenario> {
    let mut s = bundled("composite_barrier")?;
    s.name = "barrier".into();
    s.grid.dim = a.dim;
    s.grid.nx = a.nx;
    s.grid.nt = a.nt;
    let pair = |t: &Option<String>| -> Result<_> {
        t.as_deref()
            .map(ExponentPair::parse)
            .transpose()
            .context("exponent pair")
    };
    let (p1, p2) = (pair(&a.p1)?, pair(&a.p2)?);
    let mut parts = vec![DriftPartSpec::Singular {
        alpha: a.alpha,
        strength: Some(a.strength),
        eps_factor: 0.5,
        p: p1.map(|e| e.p),
        q: p1.map(|e| e.q),
    }];
    if a.amplitude != 0.0 {
        parts.push(DriftPartSpec::Oscillating {
            amplitude: a.amplitude,
            frequency: 1.0,
            p: p2.map(|e| e.p),
            q: p2.map(|e| e.q),
        });
    }
    s.operator = Family::Composite {
        parts,
        sigma: 1.0,
        c: a.c,
    };
    s.validate()?;
    Ok(s)
}

fn scan(a: &ScanArgs, out: &Path) -> Result<bool> {
    let base = a.source.load("singular_alpha15")?;
    if a.sizes.is_empty() {
        bail!("--sizes needs at least one mesh size");
    }
    let scenarios = a
        .sizes
        .iter()
        .map(|&nx| {
            let mut s = base.clone();
            s.name = format!("{}_nx{nx}", base.name);
            s.grid.nx = nx;
            s.grid.nt = nx;
            s.checks = vec![Check::VerifyBound];
            s.validate()?;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes = run_batch(&scenarios)
        .into_iter()
        .collect::<maxprin::Result<Vec<_>>>()?;
    let rows: Vec<_> = outcomes.iter().map(|o| o.summary()).collect();
    let dir = out.join(format!("{}_scan", base.name));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("scan.csv"), summary_csv(&rows)?)?;
    for r in &rows {
        println!(
            "nx={:<5} lhs_sup={:.6e} rhs={:.6e} ratio={:.6e}",
            r.nx,
            r.lhs_sup.unwrap_or(f64::NAN),
            r.rhs_norm.unwrap_or(f64::NAN),
            r.ratio.unwrap_or(f64::NAN)
        );
    }
    println!("scan in {}", dir.display());
    Ok(outcomes.iter().all(|o| o.passed()))
}

fn run(a: &RunArgs, out: &Path) -> Result<bool> {
    let mut names: Vec<String> = a.scenarios.clone();
    if a.all {
        names.extend(bundled_names().into_iter().map(String::from));
    }
    if names.is_empty() {
        bail!("no scenarios given; pass files, bundled names or --all");
    }
    // Parse everything before running anything.
    let scenarios = names
        .iter()
        .map(|n| {
            let p = Path::new(n);
            if p.exists() {
                Scenario::from_file(p).with_context(|| format!("loading {n}"))
            } else {
                bundled(n).with_context(|| format!("`{n}` is neither a file nor a bundled scenario"))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes = run_batch(&scenarios)
        .into_iter()
        .zip(&scenarios)
        .map(|(r, s)| r.with_context(|| format!("scenario {}", s.name)))
        .collect::<Result<Vec<_>>>()?;
    let mut all = true;
    for o in &outcomes {
        all &= report(o, out)?;
    }
    let rows: Vec<_> = outcomes.iter().map(|o| o.summary()).collect();
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("summary.csv"), summary_csv(&rows)?)?;
    Ok(all)
}
