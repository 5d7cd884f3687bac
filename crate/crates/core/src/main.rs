use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hdloc::io::{
    colon_pipeline, emit_results, load_colon, load_csv, ColonMode, ColumnRef, CsvOptions,
    LabelSource, OutputFormat, RunConfig, Tabular,
};
use hdloc::permutation::permutation_pvalue;
use hdloc::simulation::{
    convergence_diagnostic, default_delta_grid, estimate_size_power, power_curve, BaseLaw,
    EigenProfile, Model, ModelSpec, ShiftDirection, ShiftSpec, SimulationConfig, TestId,
};
use hdloc::{run_test, Error, KernelSpec, PValueMethod, Result, TestOutcome};

#[derive(Parser)]
#[command(name = "hdloc", version, about = "Kernel-based multi-sample location tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test equality of locations on a CSV file.
    Test(TestArgs),
    /// Permutation test on a CSV file.
    Perm(TestArgs),
    /// Monte Carlo size or power at one shift.
    Simulate(SimArgs),
    /// Monte Carlo power over a grid of shifts.
    Powercurve(SimArgs),
    /// Colon tissue data, full matrix or 50 blocks of 40 genes.
    Realdata(RealArgs),
    /// Distance to the weighted chi-square limit over a grid of n and p.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct Common {
    /// key = value file with defaults for the flags below
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Leave the generation time out of JSON output.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct TestArgs {
    /// Observations, one per row.
    input: PathBuf,
    /// Zero-based index or header name of the label column.
    #[arg(long, conflicts_with = "labels")]
    label_col: Option<String>,
    /// File with one label per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    header: bool,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Number of random relabellings for the permutation method.
    #[arg(long)]
    permutations: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimArgs {
    /// 1 Gaussian, 2 t with 4 df, 3 Cauchy.
    #[arg(long)]
    model: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    /// Comma-separated shifts, starting at 0 (powercurve only).
    #[arg(long)]
    grid: Option<String>,
    /// Comma-separated subset of ss,zgzc,bs1996,cq2010,ht2.
    #[arg(long)]
    tests: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RealArgs {
    /// Genes x samples expression matrix.
    matrix: PathBuf,
    /// Tissue labels (negative ids or "tumor" for tumour samples).
    labels: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    mode: ModeArg,
    /// Take log2 of the expression values first.
    #[arg(long)]
    log2: bool,
    #[arg(long)]
    tests: Option<String>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long, default_value = "20,200")]
    n_grid: String,
    #[arg(long, default_value = "5,20,80")]
    p_grid: String,
    #[arg(long)]
    reps: Option<usize>,
    /// Geometric ratio of the variance profile.
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
    #[arg(long, value_enum, default_value = "lognormal")]
    base: BaseArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Diff,
    Ss,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Hbe,
    Ws,
    Imhof,
    Perm,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Ramp,
    Ones,
    E2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Blocks,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaseArg {
    Gaussian,
    Exponential,
    Lognormal,
}

impl FromStr for FormatArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}
impl FromStr for KernelArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}
impl FromStr for MethodArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}
impl FromStr for DirectionArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

/// Command-line value, else config-file value, else `default`.
fn pick<T: FromStr>(cli: Option<T>, cfg: &RunConfig, key: &str, default: T) -> Result<T> {
    match cli {
        Some(v) => Ok(v),
        None => Ok(cfg.parsed(key)?.unwrap_or(default)),
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    common
        .config
        .as_deref()
        .map(RunConfig::from_file)
        .transpose()
        .map(Option::unwrap_or_default)
}

fn emit<C: Serialize, R: Tabular>(results: &R, echo: &C, common: &Common, cfg: &RunConfig) -> Result<()> {
    let format = match pick(common.format, cfg, "format", FormatArg::Json)? {
        FormatArg::Json => OutputFormat::Json,
        FormatArg::Csv => OutputFormat::Csv,
    };
    let out = common.out.clone().or_else(|| cfg.get("out").map(PathBuf::from));
    let timestamp = !common.no_timestamp && cfg.parsed::<bool>("timestamp")?.unwrap_or(true);
    emit_results(results, echo, format, out.as_deref(), timestamp)
}

fn pvalue_method(m: MethodArg) -> PValueMethod {
    match m {
        MethodArg::Imhof => PValueMethod::Imhof,
        MethodArg::Ws => PValueMethod::TwoMoment,
        _ => PValueMethod::ThreeMoment,
    }
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::InvalidArgument(format!("bad {what} '{t}'"))))
        .collect()
}

fn parse_tests(s: &str) -> Result<Vec<TestId>> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(TestId::parse).collect()
}

#[derive(Serialize)]
struct TestEcho {
    input: PathBuf,
    kernel: KernelSpec,
    method: String,
    permutations: Option<usize>,
    seed: Option<u64>,
}

fn cmd_test(args: &TestArgs, force_perm: bool) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let labels = match (&args.labels, &args.label_col) {
        (Some(path), _) => LabelSource::Sidecar(path.clone()),
        (None, Some(col)) => LabelSource::Column(match col.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(col.clone()),
        }),
        (None, None) => match (cfg.get("labels"), cfg.get("label_col")) {
            (Some(path), _) => LabelSource::Sidecar(PathBuf::from(path)),
            (None, Some(col)) => LabelSource::Column(match col.parse::<usize>() {
                Ok(i) => ColumnRef::Index(i),
                Err(_) => ColumnRef::Name(col.to_string()),
            }),
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "give --label-col or --labels".into(),
                ))
            }
        },
    };
    let has_header = args.header || cfg.parsed::<bool>("header")?.unwrap_or(false);
    let sample = load_csv(&args.input, &CsvOptions { labels, has_header })?;
    let kernel = match pick(args.kernel, &cfg, "kernel", KernelArg::Ss)? {
        KernelArg::Diff => KernelSpec::difference(),
        KernelArg::Ss => KernelSpec::spatial_sign(),
    };
    let method = if force_perm {
        MethodArg::Perm
    } else {
        pick(args.method, &cfg, "method", MethodArg::Hbe)?
    };
    let (outcome, perms, seed): (TestOutcome, _, _) = if method == MethodArg::Perm {
        let b = pick(args.permutations, &cfg, "permutations", 999)?;
        let seed = pick(args.common.seed, &cfg, "seed", 0)?;
        (permutation_pvalue(&sample, &kernel, b, seed)?, Some(b), Some(seed))
    } else {
        (run_test(&sample, &kernel, pvalue_method(method))?, None, None)
    };
    let echo = TestEcho {
        input: args.input.clone(),
        kernel,
        method: method
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default(),
        permutations: perms,
        seed,
    };
    let results = vec![(kernel.to_string(), outcome)];
    emit(&results, &echo, &args.common, &cfg)
}

fn sim_config(args: &SimArgs, cfg: &RunConfig) -> Result<SimulationConfig> {
    let model = Model::from_index(pick(args.model, cfg, "model", 1)?)?;
    let p = pick(args.p, cfg, "p", 30)?;
    let direction = match pick(args.direction, cfg, "direction", DirectionArg::Ramp)? {
        DirectionArg::Ramp => ShiftDirection::NormalizedRamp,
        DirectionArg::Ones => ShiftDirection::Ones2D,
        DirectionArg::E2 => ShiftDirection::E2_2D,
    };
    let tests = match args.tests.as_deref().or(cfg.get("tests")) {
        Some(t) => parse_tests(t)?,
        None if p < 40 + 50 - 2 => vec![TestId::Ss, TestId::Zgzc, TestId::Bs1996, TestId::Cq2010, TestId::Ht2],
        None => vec![TestId::Ss, TestId::Zgzc, TestId::Bs1996, TestId::Cq2010],
    };
    let mut c = SimulationConfig::new(
        ModelSpec::new(model, p)?,
        ShiftSpec {
            delta: pick(args.delta, cfg, "delta", 0.0)?,
            direction,
        },
        tests,
    );
    c.n1 = pick(args.n1, cfg, "n1", c.n1)?;
    c.n2 = pick(args.n2, cfg, "n2", c.n2)?;
    c.reps = pick(args.reps, cfg, "reps", c.reps)?;
    c.level = pick(args.level, cfg, "level", c.level)?;
    c.seed = pick(args.common.seed, cfg, "seed", c.seed)?;
    let method = pick(args.method, cfg, "method", MethodArg::Hbe)?;
    if method == MethodArg::Perm {
        return Err(Error::InvalidArgument(
            "simulations use asymptotic p-values; choose hbe, ws or imhof".into(),
        ));
    }
    c.method = pvalue_method(method);
    c.validate()?;
    Ok(c)
}

fn report_aborted(table: &hdloc::simulation::SizePowerTable) {
    for a in &table.aborted {
        eprintln!(
            "warning: {} at delta {} dropped after {} failures: {}",
            a.test.name(),
            a.delta,
            a.failures,
            a.first_error
        );
    }
}

fn cmd_simulate(args: &SimArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let config = sim_config(args, &cfg)?;
    let table = estimate_size_power(&config)?;
    report_aborted(&table);
    emit(&table, &config, &args.common, &cfg)
}

#[derive(Serialize)]
struct CurveEcho<'a> {
    config: &'a SimulationConfig,
    grid: &'a [f64],
}

fn cmd_powercurve(args: &SimArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let config = sim_config(args, &cfg)?;
    let grid = match args.grid.as_deref().or(cfg.get("grid")) {
        Some(g) => parse_list::<f64>(g, "shift")?,
        None => default_delta_grid(config.model.model),
    };
    let table = power_curve(&config, &grid)?;
    report_aborted(&table);
    emit(&table, &CurveEcho { config: &config, grid: &grid }, &args.common, &cfg)
}

#[derive(Serialize)]
struct RealEcho {
    matrix: PathBuf,
    labels: PathBuf,
    mode: ColonMode,
    log2: bool,
    tests: Vec<TestId>,
}

fn cmd_realdata(args: &RealArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let log2 = args.log2 || cfg.parsed::<bool>("log2")?.unwrap_or(false);
    let sample = load_colon(&args.matrix, &args.labels, log2)?;
    let tests = match args.tests.as_deref().or(cfg.get("tests")) {
        Some(t) => parse_tests(t)?,
        None => vec![TestId::Ss, TestId::Zgzc, TestId::Bs1996, TestId::Cq2010],
    };
    let mode = match args.mode {
        ModeArg::Full => ColonMode::Full,
        ModeArg::Blocks => ColonMode::Blocks,
    };
    let method = pvalue_method(pick(args.method, &cfg, "method", MethodArg::Hbe)?);
    let report = colon_pipeline(&sample, mode, &tests, method)?;
    let echo = RealEcho {
        matrix: args.matrix.clone(),
        labels: args.labels.clone(),
        mode,
        log2,
        tests,
    };
    emit(&report, &echo, &args.common, &cfg)
}

#[derive(Serialize)]
struct ConvergeEcho {
    n_grid: Vec<usize>,
    p_grid: Vec<usize>,
    reps: usize,
    profile: EigenProfile,
    base: BaseLaw,
    seed: u64,
}

fn cmd_converge(args: &ConvergeArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let echo = ConvergeEcho {
        n_grid: parse_list(&args.n_grid, "sample size")?,
        p_grid: parse_list(&args.p_grid, "dimension")?,
        reps: pick(args.reps, &cfg, "reps", 2000)?,
        profile: EigenProfile::Geometric { ratio: args.ratio },
        base: match args.base {
            BaseArg::Gaussian => BaseLaw::Gaussian,
            BaseArg::Exponential => BaseLaw::CenteredExponential,
            BaseArg::Lognormal => BaseLaw::StandardizedLognormal,
        },
        seed: pick(args.common.seed, &cfg, "seed", 0)?,
    };
    let report = convergence_diagnostic(&echo.profile, &echo.n_grid, &echo.p_grid, echo.reps, echo.seed, echo.base)?;
    if !report.nonincreasing(0.0) {
        eprintln!("warning: sup-over-p distance increased along the n grid");
    }
    emit(&report, &echo, &args.common, &cfg)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HDLOC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("HDLOC_THREADS='{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match &cli.command {
        Command::Test(a) => cmd_test(a, false),
        Command::Perm(a) => cmd_test(a, true),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Powercurve(a) => cmd_powercurve(a),
        Command::Realdata(a) => cmd_realdata(a),
        Command::Converge(a) => cmd_converge(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
