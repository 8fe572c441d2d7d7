mod fmt;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unitary_stc::bounds::{estimate_f, sine_product_check, verify_three_element_bounds, HALF_ROOT3};
use unitary_stc::channel::{simulate_bler, SimConfig};
use unitary_stc::constellation::{
    builtin, builtin_names, builtin_structure, io, ChainReading, Constellation, Form,
    ProductVariant, StructureKind,
};
use unitary_stc::diversity::{
    self, chernoff_diversity, db_to_linear, diversity_function_curve, exact_diversity, ChannelConfig,
};
use unitary_stc::optimize::{
    genetic_algorithm, grid_search_u2, refine_from, simulated_annealing, GaConfig, GridConfig,
    Objective, OptimizerTrace, SaConfig, Seed,
};
use unitary_stc::Error;

use fmt::{num, pair};

#[derive(Parser)]
#[command(name = "ustc", version, about = "Design and evaluate unitary space-time constellations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diversity product, sum and rate of a constellation.
    Evaluate(EvaluateArgs),
    /// Simulated annealing over a generator structure, or refinement of an
    /// existing constellation.
    OptimizeSa(SaArgs),
    /// Genetic search over free special-form constellations.
    OptimizeGa(GaArgs),
    /// Exhaustive grid over the explicit parameterisation of U(2).
    GridSearch(GridArgs),
    /// Monte-Carlo block error rate over an SNR grid.
    Simulate(SimArgs),
    /// Diversity function over an SNR grid.
    Curve(CurveArgs),
    /// Three-element bounds: F(n), the U(2) optimum and the sine-product lemma.
    Bounds(BoundsArgs),
    /// Writes a builtin constellation as JSON.
    BuiltinExport(ExportArgs),
    /// Reruns the scripted cells of one of the published tables.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// Name of a builtin constellation.
    #[arg(long)]
    builtin: Option<String>,
    /// Constellation JSON file.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct SeedInput {
    /// Refine this builtin instead of starting from random generators.
    #[arg(long)]
    builtin: Option<String>,
    /// Refine the constellation in this file.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveFlag {
    Product,
    Sum,
    Chernoff,
    Exact,
}

#[derive(Args)]
struct ObjectiveArgs {
    #[arg(long, value_enum, default_value = "product")]
    objective: ObjectiveFlag,
    /// SNR in dB for the chernoff and exact objectives: a single value or
    /// `LO:HI:STEP`. A chernoff range minimises the worst pair over the range.
    #[arg(long = "snr-db", value_name = "SNR")]
    snr_db: Option<String>,
    /// Receive antennas.
    #[arg(long, default_value_t = 2)]
    n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum StructureFlag {
    /// A^k B^l
    Akbl,
    /// A^k B^l C^m
    Akblcm,
    /// I, A, AB, ABA, …
    Ab,
    /// I, A, AB, ABC, …
    Abc,
    /// A^k B^k
    Akbk,
    /// A^k B^k C^k
    Akbkck,
    /// General-form frames A^k B
    AkbGeneral,
    /// {C^k} × {I, A, AB, …}
    PowersTimesChain,
    /// {I, A, AB, …} × {I, C, CD, …}
    ChainTimesChain,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReadingFlag {
    Printed,
    Prefix,
}

#[derive(Args)]
struct StructureArgs {
    #[arg(long, value_enum, default_value = "akbl")]
    structure: StructureFlag,
    /// First exponent bound, chain length, or power count.
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Second exponent bound (second factor length for products).
    #[arg(long, default_value_t = 1)]
    q: u32,
    /// Third exponent bound.
    #[arg(long, default_value_t = 1)]
    r: u32,
    /// Transmit antennas M.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Block length T for general-form structures (default 2M).
    #[arg(long)]
    t: Option<usize>,
    /// Reading of the second chain in chain-times-chain.
    #[arg(long, value_enum, default_value = "printed")]
    chain_reading: ReadingFlag,
}

impl StructureArgs {
    fn kind(&self) -> StructureKind {
        let (p, q, r) = (self.p, self.q, self.r);
        match self.structure {
            StructureFlag::Akbl => StructureKind::PowersAB { p, q },
            StructureFlag::Akblcm => StructureKind::PowersABC { p, q, r },
            StructureFlag::Ab => StructureKind::WordChainAB { n: p },
            StructureFlag::Abc => StructureKind::WordChainABC { n: p },
            StructureFlag::Akbk => StructureKind::DiagonalPowersAB { n: p },
            StructureFlag::Akbkck => StructureKind::DiagonalPowersABC { n: p },
            StructureFlag::AkbGeneral => StructureKind::GeneralAkB { l: p, m: self.m },
            StructureFlag::PowersTimesChain => StructureKind::ProductS1S2 {
                variant: ProductVariant::PowersTimesChain,
                n1: p,
                n2: q,
            },
            StructureFlag::ChainTimesChain => StructureKind::ProductS1S2 {
                variant: ProductVariant::ChainTimesChain(match self.chain_reading {
                    ReadingFlag::Printed => ChainReading::Printed,
                    ReadingFlag::Prefix => ChainReading::Prefix,
                }),
                n1: p,
                n2: q,
            },
        }
    }

    fn t(&self) -> usize {
        self.t.unwrap_or(2 * self.m)
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: Input,
    /// Also report the Chernoff and exact diversity functions at these SNRs.
    #[arg(long = "snr-db", value_name = "SNR")]
    snr_db: Option<String>,
    #[arg(long, default_value_t = 2)]
    n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args)]
struct SaArgs {
    #[command(flatten)]
    structure: StructureArgs,
    #[command(flatten)]
    seed_input: SeedInput,
    #[command(flatten)]
    objective: ObjectiveArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 20_000)]
    iterations: usize,
    /// Stop after this many iterations without a new best.
    #[arg(long, default_value_t = 5_000)]
    stall: usize,
    #[arg(long, default_value_t = 200)]
    steps_per_temperature: usize,
    /// Initial perturbation scale.
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    /// Initial temperature (default: a tenth of the starting score).
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long, value_enum, default_value = "on")]
    metropolis: OnOff,
    /// Wall-clock cap; runs cut short by it are not reproducible.
    #[arg(long = "budget-seconds")]
    budget_seconds: Option<u64>,
    /// Print every improvement of the best value.
    #[arg(long)]
    trace: bool,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GaArgs {
    /// Transmit antennas M.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Constellation size L.
    #[arg(long, default_value_t = 3)]
    size: usize,
    #[command(flatten)]
    objective: ObjectiveArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 20_000)]
    iterations: usize,
    #[arg(long, default_value_t = 5_000)]
    stall: usize,
    #[arg(long, default_value_t = 1)]
    replace_count: usize,
    #[arg(long, default_value_t = 0.7)]
    mutation_rate: f64,
    #[arg(long = "budget-seconds")]
    budget_seconds: Option<u64>,
    #[arg(long)]
    trace: bool,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    structure: StructureArgs,
    #[command(flatten)]
    objective: ObjectiveArgs,
    /// Samples per angle.
    #[arg(long, default_value_t = 4)]
    density: usize,
    #[arg(long, default_value_t = 50_000_000)]
    max_points: u128,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long = "snr-db", value_name = "SNR", default_value = "0:20:5")]
    snr_db: String,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long)]
    max_errors: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 2)]
    n: usize,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long = "snr-db", value_name = "SNR", default_value = "0:30:2")]
    snr_db: String,
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Also evaluate the exact diversity function.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct BoundsArgs {
    /// Largest n for the F(n) estimate (2..=5).
    #[arg(long, default_value_t = 3)]
    n_max: usize,
    /// Annealing iterations per restart of the F(n) estimate.
    #[arg(long, default_value_t = 20_000)]
    budget: usize,
    /// Random three-element constellations to sample.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Angles per axis of the diagonal grid.
    #[arg(long, default_value_t = 12)]
    density: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExportArgs {
    /// Builtin name; omit to list the available names.
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Table id, `table1` … `table10`.
    #[arg(long)]
    table: String,
    /// Wall-clock cap per cell.
    #[arg(long = "budget-seconds", default_value_t = 10)]
    budget_seconds: u64,
    #[arg(long)]
    seed: Option<u64>,
}

/// Command failures, split by exit code.
pub enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

/// `X` or `LO:HI:STEP` in dB.
pub fn parse_snr(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let parse = |p: &str| {
        p.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Failure::Usage(format!("--snr-db: `{p}` is not a number")))
    };
    match parts.as_slice() {
        [x] => Ok(vec![parse(x)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
            if !(step > 0.0) || hi < lo {
                return usage("--snr-db: need LO ≤ HI and STEP > 0");
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            if count > 10_000 {
                return usage("--snr-db: more than 10000 points");
            }
            Ok((0..count).map(|k| lo + k as f64 * step).collect())
        }
        _ => usage("--snr-db: expected X or LO:HI:STEP"),
    }
}

fn load(builtin_name: &Option<String>, path: &Option<PathBuf>) -> CliResult<(String, Constellation)> {
    match (builtin_name, path) {
        (Some(name), _) => Ok((name.clone(), builtin(name)?)),
        (None, Some(p)) => Ok((p.display().to_string(), io::read(p)?)),
        (None, None) => usage("need --builtin or --in"),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    let seed = seed.unwrap_or_else(rand::random);
    row!("seed", seed);
    seed
}

fn objective(args: &ObjectiveArgs, t: usize, m: usize) -> CliResult<Objective> {
    let needs_snr = matches!(args.objective, ObjectiveFlag::Chernoff | ObjectiveFlag::Exact);
    let grid = match (&args.snr_db, needs_snr) {
        (Some(s), true) => parse_snr(s)?,
        (None, true) => return usage("--snr-db is required for the chernoff and exact objectives"),
        (Some(_), false) => return usage("--snr-db only applies to the chernoff and exact objectives"),
        (None, false) => Vec::new(),
    };
    let base = |db: f64| ChannelConfig::from_db(t, m, args.n, db);
    Ok(match args.objective {
        ObjectiveFlag::Product => Objective::MaxProduct,
        ObjectiveFlag::Sum => Objective::MaxSum,
        ObjectiveFlag::Chernoff if grid.len() == 1 => Objective::MinChernoffAtRho(base(grid[0])?),
        ObjectiveFlag::Chernoff => Objective::MinChernoffOverInterval {
            base: base(grid[0])?,
            rhos: grid.iter().map(|&d| db_to_linear(d)).collect(),
        },
        ObjectiveFlag::Exact if grid.len() == 1 => Objective::MinExactAtRho(base(grid[0])?),
        ObjectiveFlag::Exact => return usage("the exact objective takes a single SNR"),
    })
}

fn print_report(c: &Constellation) -> CliResult {
    let r = diversity::evaluate(c)?;
    let rate = c.rate();
    row!("form", match c.form() { Form::Special => "special", Form::General => "general" });
    row!("T", c.t());
    row!("M", c.m());
    row!("L", c.len());
    row!("rate", num(rate.rate));
    row!("product", num(r.product));
    row!("argmin_product", pair(r.argmin_product));
    row!("sum", num(r.sum));
    row!("argmin_sum", pair(r.argmin_sum));
    if let Some(d) = r.min_abs_det {
        row!("min_abs_det", num(d));
    }
    row!("pairs", r.pairwise_count);
    Ok(())
}

fn finish(obj: &Objective, t: &OptimizerTrace, trace: bool, out: &Option<PathBuf>) -> CliResult {
    row!("objective", obj.name());
    row!("best_value", num(t.best_value));
    row!("iterations", t.iterations_run);
    row!("accepted", t.accepted_count);
    row!("rejected", t.rejected_count);
    row!("stop", serde_json::to_value(t.stop_reason).map_err(|e| Error::Parse(e.to_string()))?.as_str().unwrap_or("?"));
    if trace {
        for (it, v) in &t.iterations {
            row!("trace", it, num(*v));
        }
    }
    print_report(&t.final_constellation)?;
    if let Some(path) = out {
        io::write(path, &t.final_constellation)?;
        row!("written", path.display());
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> CliResult {
    let (name, c) = load(&a.input.builtin, &a.input.input)?;
    row!("source", name);
    print_report(&c)?;
    if let Some(s) = &a.snr_db {
        for db in parse_snr(s)? {
            let cfg = ChannelConfig::from_db(c.t(), c.m(), a.n, db)?;
            row!("chernoff", num(db), num(chernoff_diversity(&c, &cfg)?));
            row!("exact", num(db), num(exact_diversity(&c, &cfg)?));
        }
    }
    Ok(())
}

fn optimize_sa(a: SaArgs) -> CliResult {
    let seed = resolve_seed(a.seed);
    let cfg = SaConfig {
        seed,
        initial_temperature: a.temperature,
        initial_sigma: a.sigma,
        steps_per_temperature: a.steps_per_temperature,
        max_iterations: a.iterations,
        stall_limit: a.stall,
        metropolis: matches!(a.metropolis, OnOff::On),
        time_budget: a.budget_seconds.map(|s| s as f64),
        ..SaConfig::default()
    };
    let refine = a.seed_input.builtin.is_some() || a.seed_input.input.is_some();
    if refine {
        let start = match &a.seed_input.builtin {
            Some(name) => match builtin_structure(name) {
                Ok(g) => Seed::Structure(g),
                Err(Error::ReductionUnavailable(_)) => Seed::Free(builtin(name)?),
                Err(e) => return Err(e.into()),
            },
            None => Seed::Free(load(&None, &a.seed_input.input)?.1),
        };
        let (t, m) = match &start {
            Seed::Structure(g) => match g.kind() {
                StructureKind::GeneralAkB { m, .. } => (g.generator_dim(), *m),
                _ => (2 * g.generator_dim(), g.generator_dim()),
            },
            Seed::Free(c) => (c.t(), c.m()),
        };
        let obj = objective(&a.objective, t, m)?;
        let trace = refine_from(start, &obj, &cfg)?;
        return finish(&obj, &trace, a.trace, &a.out);
    }
    let kind = a.structure.kind();
    let (t, m, dim) = if kind.is_general() {
        (a.structure.t(), a.structure.m, a.structure.t())
    } else {
        (2 * a.structure.m, a.structure.m, a.structure.m)
    };
    let obj = objective(&a.objective, t, m)?;
    let trace = simulated_annealing(kind, dim, &obj, &cfg)?;
    finish(&obj, &trace, a.trace, &a.out)
}

fn optimize_ga(a: GaArgs) -> CliResult {
    let seed = resolve_seed(a.seed);
    let cfg = GaConfig {
        seed,
        replace_count: a.replace_count,
        mutation_rate: a.mutation_rate,
        max_iterations: a.iterations,
        stall_limit: a.stall,
        time_budget: a.budget_seconds.map(|s| s as f64),
        ..GaConfig::default()
    };
    let obj = objective(&a.objective, 2 * a.m, a.m)?;
    let trace = genetic_algorithm(a.m, a.size, &obj, &cfg)?;
    finish(&obj, &trace, a.trace, &a.out)
}

fn grid_search(a: GridArgs) -> CliResult {
    if a.structure.m != 2 {
        return usage("grid search covers U(2) only; use --m 2");
    }
    let obj = objective(&a.objective, 4, 2)?;
    let cfg = GridConfig { density: a.density, max_points: a.max_points };
    let trace = grid_search_u2(a.structure.kind(), &obj, &cfg)?;
    finish(&obj, &trace, false, &a.out)
}

fn simulate(a: SimArgs) -> CliResult {
    let (name, c) = load(&a.input.builtin, &a.input.input)?;
    let seed = resolve_seed(a.seed);
    row!("source", name);
    let sim = SimConfig {
        base: ChannelConfig::new(c.t(), c.m(), a.n, 1.0)?,
        snr_db: parse_snr(&a.snr_db)?,
        trials_per_point: a.trials,
        seed,
        max_errors: a.max_errors,
    };
    let result = simulate_bler(&c, &sim)?;
    row!("rho_db", "trials", "errors", "bler", "wilson_lo", "wilson_hi");
    for r in result.rows {
        row!(num(r.rho_db), r.trials, r.errors, num(r.bler), num(r.wilson_lo), num(r.wilson_hi));
    }
    Ok(())
}

fn curve(a: CurveArgs) -> CliResult {
    let (name, c) = load(&a.input.builtin, &a.input.input)?;
    row!("source", name);
    let dbs = parse_snr(&a.snr_db)?;
    let rhos: Vec<f64> = dbs.iter().map(|&d| db_to_linear(d)).collect();
    let base = ChannelConfig::new(c.t(), c.m(), a.n, 1.0)?;
    let chernoff = diversity_function_curve(&c, &base, &rhos, false)?;
    if a.exact {
        let exact = diversity_function_curve(&c, &base, &rhos, true)?;
        row!("rho_db", "rho", "chernoff", "exact");
        for (p, e) in chernoff.iter().zip(&exact) {
            row!(num(p.rho_db), num(p.rho), num(p.value), num(e.value));
        }
    } else {
        row!("rho_db", "rho", "chernoff");
        for p in &chernoff {
            row!(num(p.rho_db), num(p.rho), num(p.value));
        }
    }
    Ok(())
}

fn bounds(a: BoundsArgs) -> CliResult {
    if !(2..=5).contains(&a.n_max) {
        return usage("--n-max must lie in 2..=5");
    }
    let seed = resolve_seed(a.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    row!("n", "F_estimate", "product_bound", "achieved_by_construction");
    for n in 2..=a.n_max {
        let r = estimate_f(n, a.budget, &mut rng)?;
        let constructed = if n == 2 { num(HALF_ROOT3) } else { "-".into() };
        row!(n, num(r.f_estimate), num(r.product_bound), constructed);
    }
    let t = verify_three_element_bounds(a.density, &mut rng, a.samples)?;
    row!("three_element_samples", t.samples);
    row!("sampled_max_product", num(t.sampled_max_product));
    row!("sampled_max_sum", num(t.sampled_max_sum));
    row!("refined_max_product", num(t.refined_max_product));
    row!("refined_max_sum", num(t.refined_max_sum));
    row!("constructed_product", num(t.constructed_product));
    row!("constructed_sum", num(t.constructed_sum));
    row!("diagonal_max_sum", num(t.diagonal_max_sum));
    row!("within_bound", t.overall_max() <= HALF_ROOT3 + 1e-6);
    row!("m", "n", "sine_max", "expected", "angle_error");
    for (m, n) in [(1, 2), (1, 3), (2, 3), (2, 4)] {
        let s = sine_product_check(m, n)?;
        row!(m, n, num(s.maximum), num(s.expected), num(s.angle_error));
    }
    Ok(())
}

fn builtin_export(a: ExportArgs) -> CliResult {
    let Some(name) = a.builtin else {
        for n in builtin_names() {
            row!(n);
        }
        return Ok(());
    };
    let c = builtin(&name)?;
    match a.out {
        Some(path) => io::write(&path, &c)?,
        None => row!(io::to_string(&c)),
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Evaluate(a) => evaluate(a),
        Command::OptimizeSa(a) => optimize_sa(a),
        Command::OptimizeGa(a) => optimize_ga(a),
        Command::GridSearch(a) => grid_search(a),
        Command::Simulate(a) => simulate(a),
        Command::Curve(a) => curve(a),
        Command::Bounds(a) => bounds(a),
        Command::BuiltinExport(a) => builtin_export(a),
        Command::Reproduce(a) => {
            reproduce::check_id(&a.table)?;
            let seed = resolve_seed(a.seed);
            reproduce::run(&a.table, a.budget_seconds, seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
