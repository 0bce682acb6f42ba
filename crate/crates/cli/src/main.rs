use anyhow::{bail, Context, Result};
use cam_core::pipeline::{analyze_bundle, analyze_mutants, Analysis, Summary};
use cam_core::{
    generate_foms, pair_homs, parse_unified_diff, simulate, spearman, kendall_tau_a, CommitDiff, MatrixBundle,
    Mutant, OperatorSet, PipelineConfig, RelevanceOptions, RelevanceReport, SimulationConfig, SimulationInputs,
    Strategy, SubsumeReport,
};
use cam_minilang::{parse_program, parse_tests, ProgramUnit, TestSuite, DEFAULT_STEP_BUDGET};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cam", version, about = "Commit-aware mutation analysis for MiniLang programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline; writes mutants, matrix, relevance, subsume and summary JSON.
    Run(RunArgs),
    /// List first-order mutants and second-order pairs.
    Mutants(MutantArgs),
    /// Execute all rows and write the matrix bundle.
    Matrix(MatrixArgs),
    /// Commit-relevance from a matrix bundle.
    Relevance(RelevanceArgs),
    /// Subsumption and subsuming commit-relevant sets.
    Subsume(SubsumeArgs),
    /// Mutant-selection simulation, as CSV.
    Simulate(SimulateArgs),
    /// Rank correlation between two columns across summary files.
    Correlate(CorrelateArgs),
}

#[derive(Args, Clone)]
struct GenArgs {
    #[arg(long)]
    program: PathBuf,
    /// Unified diff of the commit; omitted means an empty diff.
    #[arg(long)]
    diff: Option<PathBuf>,
    #[arg(long, default_value = "ror,aor,uoi,crcr,obbn,invneg,sdl")]
    operators: OperatorSet,
    /// Keep at most this many outside-change mutants per statement when pairing.
    #[arg(long)]
    hom_cap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct ExecArgs {
    #[command(flatten)]
    gen: GenArgs,
    #[arg(long)]
    tests: PathBuf,
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    step_budget: u64,
    /// Use this mutant catalog instead of generating one.
    #[arg(long)]
    mutants: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    exec: ExecArgs,
    #[arg(long)]
    include_unkillable_on_change: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct MutantArgs {
    #[command(flatten)]
    gen: GenArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    exec: ExecArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write the matrix cells as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RelevanceArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    include_unkillable_on_change: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SubsumeArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    relevance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    relevance: PathBuf,
    #[arg(long)]
    subsume: PathBuf,
    #[arg(long)]
    strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 20)]
    picks: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-pick medians as JSON.
    #[arg(long)]
    medians: Option<PathBuf>,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Summary JSON files, one per commit.
    #[arg(required = true)]
    summaries: Vec<PathBuf>,
    #[arg(long, default_value = "on_change")]
    x: String,
    #[arg(long, default_value = "relevant")]
    y: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct Catalog {
    mutants: Vec<Mutant>,
    pairs: Vec<cam_core::HomPair>,
    on_change: usize,
    outside_change: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).with_context(|| format!("invalid JSON in {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_program(path: &Path) -> Result<ProgramUnit> {
    Ok(parse_program(&read(path)?, &path.to_string_lossy())?)
}

fn load_diff(path: Option<&Path>) -> Result<CommitDiff> {
    match path {
        Some(p) => parse_unified_diff(&read(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(CommitDiff::default()),
    }
}

fn load_suite(path: &Path, program: &ProgramUnit) -> Result<TestSuite> {
    Ok(parse_tests(&read(path)?, &path.to_string_lossy(), program.next_id)?)
}

fn catalog(gen: &GenArgs) -> Result<Catalog> {
    let program = load_program(&gen.program)?;
    let diff = load_diff(gen.diff.as_deref())?;
    let mutants = generate_foms(&program, &gen.operators, &diff);
    let pairs = pair_homs(&mutants, gen.hom_cap, gen.seed);
    let on_change = mutants.iter().filter(|m| m.is_on_change()).count();
    Ok(Catalog {
        on_change,
        outside_change: mutants.len() - on_change,
        mutants,
        pairs,
    })
}

fn execute(exec: &ExecArgs, options: RelevanceOptions) -> Result<Analysis> {
    let program = load_program(&exec.gen.program)?;
    let suite = load_suite(&exec.tests, &program)?;
    let diff = load_diff(exec.gen.diff.as_deref())?;
    let mutants = match &exec.mutants {
        Some(p) => read_json::<Catalog>(p)?.mutants,
        None => generate_foms(&program, &exec.gen.operators, &diff),
    };
    let config = PipelineConfig {
        operators: exec.gen.operators.clone(),
        hom_cap: exec.gen.hom_cap,
        seed: exec.gen.seed,
        step_budget: exec.step_budget,
        relevance: options,
    };
    if exec.step_budget == 0 {
        bail!("--step-budget must be positive");
    }
    Ok(analyze_mutants(&program, &suite, &diff, mutants, &config)?)
}

fn catalog_of(a: &Analysis) -> Catalog {
    let on_change = a.bundle.mutants.iter().filter(|m| m.is_on_change()).count();
    Catalog {
        mutants: a.bundle.mutants.clone(),
        pairs: a.bundle.matrix.pairs.clone(),
        on_change,
        outside_change: a.bundle.mutants.len() - on_change,
    }
}

fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let options = RelevanceOptions {
        include_unkillable_on_change: args.include_unkillable_on_change,
    };
    let a = execute(&args.exec, options)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let out = |name: &str| args.out_dir.join(name);
    emit(Some(&out("mutants.json")), &to_json(&catalog_of(&a))?)?;
    emit(Some(&out("matrix.json")), &to_json(&a.bundle)?)?;
    emit(Some(&out("relevance.json")), &to_json(&a.relevance)?)?;
    emit(Some(&out("subsume.json")), &to_json(&a.subsume)?)?;
    let mut summary = serde_json::to_value(Summary::of(&a))?;
    summary["generated_at"] = unix_time().into();
    emit(Some(&out("summary.json")), &to_json(&summary)?)?;
    let s = Summary::of(&a);
    log::info!(
        "{} mutants, {} relevant ({} outside change), {} subsuming relevant",
        s.mutants,
        s.relevant,
        s.relevant_outside,
        s.subsuming_relevant
    );
    Ok(())
}

fn cmd_matrix(args: &MatrixArgs) -> Result<()> {
    let a = execute(&args.exec, RelevanceOptions::default())?;
    emit(Some(&args.out), &to_json(&a.bundle)?)?;
    if let Some(p) = &args.csv {
        emit(Some(p), &a.bundle.matrix.to_csv()?)?;
    }
    Ok(())
}

fn cmd_relevance(args: &RelevanceArgs) -> Result<()> {
    let bundle: MatrixBundle = read_json(&args.matrix)?;
    let options = RelevanceOptions {
        include_unkillable_on_change: args.include_unkillable_on_change,
    };
    let a = analyze_bundle(bundle, options)?;
    emit(args.out.as_deref(), &to_json(&a.relevance)?)
}

fn cmd_subsume(args: &SubsumeArgs) -> Result<()> {
    let bundle: MatrixBundle = read_json(&args.matrix)?;
    let relevance: RelevanceReport = read_json(&args.relevance)?;
    let all = bundle.mutants.iter().map(|m| m.id).collect();
    let report = cam_core::subsume_report(&bundle.kills, &all, &relevance)?;
    emit(args.out.as_deref(), &to_json(&report)?)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let bundle: MatrixBundle = read_json(&args.matrix)?;
    let relevance: RelevanceReport = read_json(&args.relevance)?;
    let subsume: SubsumeReport = read_json(&args.subsume)?;
    let inputs = SimulationInputs {
        kills: &bundle.kills,
        foms: &bundle.mutants,
        relevance: &relevance,
        subsuming_relevant: &subsume.subsuming_commit_relevant,
    };
    let config = SimulationConfig {
        strategy: args.strategy,
        max_picks: args.picks,
        repetitions: args.reps,
        seed: args.seed,
    };
    let result = simulate(&inputs, config)?;
    emit(args.out.as_deref(), &result.to_csv()?)?;
    if let Some(p) = &args.medians {
        emit(Some(p), &to_json(&result.medians)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CorrelationReport {
    x: String,
    y: String,
    n: usize,
    spearman: cam_core::RankCorrelation,
    kendall_tau_a: cam_core::RankCorrelation,
}

fn column(summary: &serde_json::Value, name: &str, path: &Path) -> Result<f64> {
    summary
        .get(name)
        .and_then(serde_json::Value::as_f64)
        .with_context(|| format!("{}: no numeric column `{name}`", path.display()))
}

fn cmd_correlate(args: &CorrelateArgs) -> Result<()> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in &args.summaries {
        let s: serde_json::Value = read_json(p)?;
        xs.push(column(&s, &args.x, p)?);
        ys.push(column(&s, &args.y, p)?);
    }
    let report = CorrelationReport {
        x: args.x.clone(),
        y: args.y.clone(),
        n: xs.len(),
        spearman: spearman(&xs, &ys)?,
        kendall_tau_a: kendall_tau_a(&xs, &ys)?,
    };
    emit(args.out.as_deref(), &to_json(&report)?)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CAM_THREADS") {
        let n: usize = v.parse().with_context(|| format!("CAM_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("CAM_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    init_threads()?;
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Mutants(a) => emit(a.out.as_deref(), &to_json(&catalog(&a.gen)?)?),
        Command::Matrix(a) => cmd_matrix(a),
        Command::Relevance(a) => cmd_relevance(a),
        Command::Subsume(a) => cmd_subsume(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Correlate(a) => cmd_correlate(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
