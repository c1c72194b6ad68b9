use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ryusplit::bench::{
    generate_instance, run_bench, run_experiment, summarize, summary_table, write_summary_csv,
    write_trace_file, Algorithm, BenchConfig, ExperimentConfig, RunReport,
};
use ryusplit::diagnostics::run_checks;
use ryusplit::splitting::{write_trace_csv, write_trace_json, StoppingRule};
use ryusplit::{plan, Error, Execution};

#[derive(Parser)]
#[command(name = "ryusplit", version, about = "Relaxed Ryu splitting solver and matrix completion benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the stepsize plan for given moduli and relaxation parameters
    Plan(PlanArgs),
    /// Run one algorithm on one generated instance
    Solve(SolveArgs),
    /// Seed sweep over sizes and algorithms
    Bench(BenchArgs),
    /// Run the invariant and oracle check suite
    Check(CheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    l1: f64,
    #[arg(long)]
    l2: f64,
    #[arg(long, default_value_t = 1.0)]
    lam: f64,
    #[arg(long, default_value_t = 0.99)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

/// Instance and solver flags shared by `solve` and `bench`.
#[derive(Args, Clone)]
struct ProblemArgs {
    #[arg(long, default_value_t = 10)]
    rank: usize,
    #[arg(long, default_value_t = 0.99)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    lam: f64,
    #[arg(long, default_value_t = 10.0)]
    lambda1: f64,
    #[arg(long, default_value_t = 5.0)]
    lambda2: f64,
    #[arg(long, default_value_t = 100.0)]
    tau: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Stepsize of the residual's gradient-prox map
    #[arg(long, default_value_t = 5e-3)]
    proxgamma: f64,
    /// Fixed stepsize (ryu, dys) or initial stepsize (ryu+)
    #[arg(long)]
    gamma: Option<f64>,
    /// DYS stepsize; defaults to 0.99/(L1+L2)
    #[arg(long)]
    gamma_dys: Option<f64>,
}

impl ProblemArgs {
    fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            lambda: self.lam,
            alpha: self.alpha,
            gamma: self.gamma,
            gamma_dys: self.gamma_dys,
            stop: StoppingRule {
                prox_gamma: self.proxgamma,
                tol: self.tol,
                max_iter: self.max_iter,
            },
            ..ExperimentConfig::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_parser = parse_algo)]
    algo: Algorithm,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    s: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    problem: ProblemArgs,
    /// Trace output; `.json` selects JSON, anything else CSV
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Comma-separated n:s pairs
    #[arg(long, default_value = "100:1000,300:10000", value_parser = parse_sizes)]
    sizes: Sizes,
    /// Comma-separated subset of ryu, ryu+, dys
    #[arg(long, default_value = "ryu,ryu+,dys", value_parser = parse_algos)]
    algos: Algos,
    /// Worker threads; 1 runs sequentially
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone)]
struct Sizes(Vec<(usize, usize)>);

#[derive(Clone)]
struct Algos(Vec<Algorithm>);

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_algos(s: &str) -> Result<Algos, String> {
    s.split(',').map(|a| parse_algo(a.trim())).collect::<Result<_, _>>().map(Algos)
}

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    s.split(',')
        .map(|pair| {
            let (n, m) = pair
                .split_once(':')
                .ok_or_else(|| format!("size {pair:?} is not of the form n:s"))?;
            let n = n.trim().parse().map_err(|e| format!("bad n in {pair:?}: {e}"))?;
            let m = m.trim().parse().map_err(|e| format!("bad s in {pair:?}: {e}"))?;
            Ok((n, m))
        })
        .collect::<Result<_, String>>()
        .map(Sizes)
}

enum Failure {
    /// Some check or acceptance condition did not hold.
    Check(String),
    Lib(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(Error::Json(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Lib(Error::Numerical(_) | Error::Divergence { .. }) => 3,
            Failure::Lib(_) | Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Check(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
            Failure::Io(e) => format!("i/o: {e}"),
        }
    }
}

fn input(msg: impl Into<String>) -> Failure {
    Failure::Lib(Error::Input(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn cmd_plan(a: PlanArgs) -> Result<(), Failure> {
    let p = plan(a.l1, a.l2, a.lam, a.alpha)?;
    let mut out = io::stdout().lock();
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&p)?)?,
        Format::Text => write!(out, "{}", p.to_text())?,
        Format::Csv => {
            let v = serde_json::to_value(p)?;
            let obj = v.as_object().expect("plan serializes as an object");
            writeln!(out, "{}", obj.keys().cloned().collect::<Vec<_>>().join(","))?;
            writeln!(out, "{}", obj.values().map(|x| x.to_string()).collect::<Vec<_>>().join(","))?;
        }
    }
    Ok(())
}

fn print_report(r: &RunReport, format: Format) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(r)?)?,
        Format::Csv => {
            writeln!(out, "algo,n,s,seed,iterations,time_ms,objective,residual,converged,gamma")?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.algo, r.n, r.s, r.seed, r.iterations, r.time_ms, r.objective, r.residual, r.converged, r.gamma
            )?;
        }
        Format::Text => {
            writeln!(out, "algo        {}", r.algo)?;
            writeln!(out, "instance    {}x{}, s={}, seed={}", r.m, r.n, r.s, r.seed)?;
            writeln!(out, "iterations  {}{}", if r.capped { "*" } else { "" }, r.iterations)?;
            writeln!(out, "time_ms     {:.1}", r.time_ms)?;
            writeln!(out, "objective   {:.6}", r.objective)?;
            writeln!(out, "residual    {:.3e}", r.residual)?;
            writeln!(out, "converged   {}", r.converged)?;
            writeln!(out, "gamma       {:.6e}", r.gamma)?;
            if let Some(m) = r.envelope_monotone {
                writeln!(out, "envelope    {}", if m { "nonincreasing" } else { "NOT monotone" })?;
            }
            if let Some(d) = &r.diverged {
                writeln!(out, "diverged    {d}")?;
            }
        }
    }
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn write_trace(path: &Path, r: &RunReport) -> Result<(), Failure> {
    let file = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e == "json") {
        write_trace_json(file, &r.trace)?;
    } else {
        write_trace_csv(file, &r.trace)?;
    }
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Result<(), Failure> {
    let p = &a.problem;
    let inst = generate_instance(a.n, a.n, p.rank, a.s, a.seed, p.lambda1, p.lambda2, p.tau)?;
    let report = run_experiment(&inst, a.algo, &p.experiment())?;
    let path = a.trace.clone().unwrap_or_else(|| PathBuf::from(report.trace_file_name()));
    write_trace(&path, &report)?;
    print_report(&report, a.format)?;
    eprintln!("trace written to {}", path.display());
    match &report.diverged {
        Some(d) => Err(Failure::Lib(Error::Numerical(format!("run diverged: {d}")))),
        None => Ok(()),
    }
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    if a.seeds == 0 {
        return Err(input("--seeds must be at least 1"));
    }
    if a.jobs == Some(0) {
        return Err(input("--jobs must be at least 1"));
    }
    fs::create_dir_all(&a.out_dir)?;
    let cfg = BenchConfig {
        sizes: a.sizes.0,
        seeds: (1..=a.seeds).collect(),
        algos: a.algos.0,
        rank: a.problem.rank,
        lambda1: a.problem.lambda1,
        lambda2: a.problem.lambda2,
        tau: a.problem.tau,
        experiment: a.problem.experiment(),
        out_dir: None,
        exec: Execution::from_jobs(a.jobs),
    };
    let reports = run_bench(&cfg)?;
    for r in &reports {
        write_trace_file(&a.out_dir, r)?;
    }
    let rows = summarize(&reports);
    write_summary_csv(BufWriter::new(File::create(a.out_dir.join("summary.csv"))?), &rows)?;
    let mut out = io::stdout().lock();
    match a.format {
        Format::Text => write!(out, "{}", summary_table(&rows))?,
        Format::Csv => write_summary_csv(&mut out, &rows)?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?,
    }
    Ok(())
}

fn cmd_check(a: CheckArgs) -> Result<(), Failure> {
    let outcomes = run_checks()?;
    let mut out = io::stdout().lock();
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&outcomes)?)?,
        _ => {
            for o in &outcomes {
                writeln!(
                    out,
                    "[{}] {:<34} worst {:.3e}  limit {:.3e}",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.worst,
                    o.limit
                )?;
            }
        }
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("checks failed: {}", failed.join(", "))))
    }
}
