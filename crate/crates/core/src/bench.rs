//! Nonnegative low-rank matrix completion benchmark: instance generation,
//! single runs, seed sweeps and the summary table.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_dys, DysParams, DysRoles};
use crate::error::{input, Error, Result};
use crate::exec::Execution;
use crate::planner::{plan, AdaptiveController, StepsizePlan};
use crate::problem::{gaussian_vector, CompositeProblem};
use crate::prox::{MaskedQuadratic, NonnegDistance, SpectralMcp};
use crate::splitting::{
    envelope_monotone, run_ryu_with, write_trace_csv, EnvelopeTracing, IterRecord,
    RelaxationParams, RunOptions, StoppingRule,
};
use crate::vector::{RealVector, Shape};

#[derive(Debug, Clone)]
pub struct CompletionInstance {
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    pub seed: u64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: f64,
    /// `M = A B`, row-major `m x n`.
    pub target: RealVector,
    /// Observed linear indices, sorted.
    pub observed: Vec<usize>,
}

/// `M = A B` with standard Gaussian `A` (`m x r`) and `B` (`r x n`), then `s`
/// entries sampled uniformly without replacement. ChaCha8 seeded with `seed`;
/// Gaussians by ziggurat.
#[allow(clippy::too_many_arguments)]
pub fn generate_instance(
    m: usize,
    n: usize,
    r: usize,
    s: usize,
    seed: u64,
    lambda1: f64,
    lambda2: f64,
    tau: f64,
) -> Result<CompletionInstance> {
    if m == 0 || n == 0 {
        return input("matrix dimensions must be positive");
    }
    if r == 0 || r > m.min(n) {
        return input(format!("rank must lie in [1, {}], got {r}", m.min(n)));
    }
    if s > m * n {
        return input(format!("cannot observe {s} of {} entries", m * n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_vector(&mut rng, Shape::Matrix { rows: m, cols: r }, 1.0).into_vec();
    let b = gaussian_vector(&mut rng, Shape::Matrix { rows: r, cols: n }, 1.0).into_vec();
    let mut target = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut target[i * n..(i + 1) * n];
        for l in 0..r {
            let ail = a[i * r + l];
            for (t, bj) in row.iter_mut().zip(&b[l * n..(l + 1) * n]) {
                *t += ail * bj;
            }
        }
    }
    let mut observed = rand::seq::index::sample(&mut rng, m * n, s).into_vec();
    observed.sort_unstable();
    Ok(CompletionInstance {
        m,
        n,
        rank: r,
        seed,
        lambda1,
        lambda2,
        tau,
        target: RealVector::matrix(m, n, target)?,
        observed,
    })
}

impl CompletionInstance {
    pub fn s(&self) -> usize {
        self.observed.len()
    }

    pub fn shape(&self) -> Shape {
        self.target.shape()
    }

    /// `f1 = (lambda1/2)|min(X,0)|^2`, `f2 = |P_Omega(X - M)|^2/2`,
    /// `f3 = lambda2 * spectral MCP`.
    pub fn problem(&self) -> Result<CompositeProblem> {
        CompositeProblem::new(
            Arc::new(NonnegDistance::new(self.lambda1)?),
            Arc::new(MaskedQuadratic::new(self.target.clone(), self.observed.clone())?),
            Arc::new(SpectralMcp::new(self.lambda2, self.tau)?),
            self.shape(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ryu")]
    Ryu,
    #[serde(rename = "ryu+")]
    RyuPlus,
    #[serde(rename = "dys")]
    Dys,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ryu, Algorithm::RyuPlus, Algorithm::Dys];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Ryu => "ryu",
            Algorithm::RyuPlus => "ryu+",
            Algorithm::Dys => "dys",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ryu" => Ok(Algorithm::Ryu),
            "ryu+" | "ryu-plus" => Ok(Algorithm::RyuPlus),
            "dys" => Ok(Algorithm::Dys),
            other => input(format!("unknown algorithm {other:?}; expected ryu, ryu+ or dys")),
        }
    }
}

/// Solver settings for one run. `None` fields take the protocol defaults.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub lambda: f64,
    pub alpha: f64,
    /// Fixed stepsize for ryu / dys, or the initial stepsize for ryu+.
    pub gamma: Option<f64>,
    /// DYS stepsize; also sets the ryu+ start at ten times its value.
    pub gamma_dys: Option<f64>,
    pub stop: StoppingRule,
    pub envelope: EnvelopeTracing,
    pub c0: f64,
    pub c1: f64,
    pub dys_roles: DysRoles,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            alpha: 0.99,
            gamma: None,
            gamma_dys: None,
            stop: StoppingRule::default(),
            envelope: EnvelopeTracing::Auto,
            c0: AdaptiveController::DEFAULT_C0,
            c1: AdaptiveController::DEFAULT_C1,
            dys_roles: DysRoles::default(),
        }
    }
}

/// `0.99 / (L1 + L2)`
pub fn default_gamma_dys(l1: f64, l2: f64) -> f64 {
    0.99 / (l1 + l2)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub algo: Algorithm,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub seed: u64,
    pub iterations: usize,
    pub time_ms: f64,
    pub objective: f64,
    pub residual: f64,
    pub converged: bool,
    /// Stopped by the iteration cap.
    pub capped: bool,
    /// Set when the run produced a non-finite iterate.
    pub diverged: Option<String>,
    /// `None` when the envelope was not traced.
    pub envelope_monotone: Option<bool>,
    /// Stepsize in force at termination.
    pub gamma: f64,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub trace: Vec<IterRecord>,
}

impl RunReport {
    pub fn trace_file_name(&self) -> String {
        trace_file_name(self.algo, self.n, self.s, self.seed)
    }
}

pub fn trace_file_name(algo: Algorithm, n: usize, s: usize, seed: u64) -> String {
    format!("trace_{algo}_{n}x{n}_s{s}_seed{seed}.csv")
}

/// Envelope slack used for the report's monotonicity flag.
pub const ENVELOPE_SLACK: f64 = 1e-10;

pub fn run_experiment(
    inst: &CompletionInstance,
    algo: Algorithm,
    cfg: &ExperimentConfig,
) -> Result<RunReport> {
    let p = inst.problem()?;
    let (l1, l2) = (p.l1(), p.l2());
    let gamma_dys = cfg.gamma_dys.unwrap_or_else(|| default_gamma_dys(l1, l2));
    let start = Instant::now();
    let zero = RealVector::zeros(p.shape());
    let threshold = 1.0 / (l1 + l2);

    let ryu = |gamma: f64, controller: Option<AdaptiveController>| {
        let params = RelaxationParams::new(gamma, cfg.lambda, cfg.alpha)?;
        let envelope = match cfg.envelope {
            EnvelopeTracing::Auto if controller.is_none() && gamma >= threshold => {
                EnvelopeTracing::Always
            }
            other => other,
        };
        let opts = RunOptions {
            envelope,
            controller,
        };
        Ok::<_, Error>(run_ryu_with(&p, params, zero.clone(), zero.clone(), &cfg.stop, opts))
    };
    let planned = || -> Result<StepsizePlan> { plan(l1, l2, cfg.lambda, cfg.alpha) };

    let outcome = match algo {
        Algorithm::Ryu => {
            let gamma = match cfg.gamma {
                Some(g) => g,
                None => planned()?.gamma_ryu,
            };
            ryu(gamma, None)?.map(RunOutcome::from_ryu)
        }
        Algorithm::RyuPlus => {
            let pl = planned()?;
            let gamma0 = cfg.gamma.unwrap_or(10.0 * gamma_dys);
            let ctrl = AdaptiveController::new(gamma0, pl.gamma_ryu)?.with_thresholds(
                cfg.c0,
                cfg.c1,
                AdaptiveController::DEFAULT_SHRINK,
            )?;
            ryu(gamma0, Some(ctrl))?.map(RunOutcome::from_ryu)
        }
        Algorithm::Dys => {
            let gamma = cfg.gamma.unwrap_or(gamma_dys);
            let params = DysParams::new(&p, gamma, cfg.lambda, cfg.dys_roles)?;
            run_dys(&p, &params, zero.clone(), &cfg.stop).map(|r| RunOutcome {
                iterations: r.iterations(),
                residual: r.residual,
                converged: r.converged,
                gamma,
                warnings: Vec::new(),
                trace: r.trace,
            })
        }
    };
    let time_ms = start.elapsed().as_secs_f64() * 1e3;
    let base = |o: RunOutcome, diverged: Option<String>| {
        let objective = o.trace.last().map_or(f64::NAN, |r| r.objective);
        RunReport {
            algo,
            m: inst.m,
            n: inst.n,
            s: inst.s(),
            seed: inst.seed,
            iterations: o.iterations,
            time_ms,
            objective,
            residual: o.residual,
            converged: o.converged,
            capped: !o.converged && diverged.is_none(),
            envelope_monotone: envelope_monotone(&o.trace, ENVELOPE_SLACK),
            diverged,
            gamma: o.gamma,
            warnings: o.warnings,
            trace: o.trace,
        }
    };
    match outcome {
        Ok(o) => Ok(base(o, None)),
        Err(Error::Divergence {
            quantity,
            k,
            last_good,
        }) => {
            let trace: Vec<IterRecord> = last_good.map(|r| vec![*r]).unwrap_or_default();
            let o = RunOutcome {
                iterations: k,
                residual: f64::INFINITY,
                converged: false,
                gamma: cfg.gamma.unwrap_or(f64::NAN),
                warnings: Vec::new(),
                trace,
            };
            Ok(base(o, Some(format!("{quantity} not finite at k={k}"))))
        }
        Err(e) => Err(e),
    }
}

struct RunOutcome {
    iterations: usize,
    residual: f64,
    converged: bool,
    gamma: f64,
    warnings: Vec<String>,
    trace: Vec<IterRecord>,
}

impl RunOutcome {
    fn from_ryu(r: crate::splitting::RyuRun) -> Self {
        Self {
            iterations: r.iterations(),
            residual: r.residual,
            converged: r.converged,
            gamma: r.gamma,
            warnings: r.warnings,
            trace: r.trace,
        }
    }
}

/// Per (algorithm, size) means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algo: Algorithm,
    pub n: usize,
    pub s: usize,
    pub mean_iter: f64,
    pub mean_time_ms: f64,
    pub mean_obj: f64,
    pub conv_rate: f64,
    /// Some run of the group hit the iteration cap.
    pub capped: bool,
}

/// Groups in first-seen order.
pub fn summarize(reports: &[RunReport]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Algorithm, usize, usize, usize)> = Vec::new();
    for r in reports {
        let key = (r.algo, r.m, r.n, r.s);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(algo, m, n, s)| {
            let group: Vec<&RunReport> = reports
                .iter()
                .filter(|r| (r.algo, r.m, r.n, r.s) == (algo, m, n, s))
                .collect();
            let count = group.len() as f64;
            let mean = |f: &dyn Fn(&RunReport) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / count;
            SummaryRow {
                algo,
                n,
                s,
                mean_iter: mean(&|r| r.iterations as f64),
                mean_time_ms: mean(&|r| r.time_ms),
                mean_obj: mean(&|r| r.objective),
                conv_rate: mean(&|r| if r.converged { 1.0 } else { 0.0 }),
                capped: group.iter().any(|r| r.capped),
            }
        })
        .collect()
}

pub const SUMMARY_CSV_HEADER: &str = "algo,n,s,mean_iter,mean_time_ms,mean_obj,conv_rate,capped";

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_CSV_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.algo.tag().to_string(),
            r.n.to_string(),
            r.s.to_string(),
            r.mean_iter.to_string(),
            r.mean_time_ms.to_string(),
            r.mean_obj.to_string(),
            r.conv_rate.to_string(),
            r.capped.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Aligned text table; capped groups get an asterisk before the iteration count.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let header = ["algo", "n", "s", "iter", "time_ms", "obj", "conv"];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            let star = if r.capped { "*" } else { "" };
            [
                r.algo.tag().to_string(),
                r.n.to_string(),
                r.s.to_string(),
                format!("{star}{:.0}", r.mean_iter),
                format!("{:.1}", r.mean_time_ms),
                format!("{:.4}", r.mean_obj),
                format!("{:.2}", r.conv_rate),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ");
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    for row in &body {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

/// A seed sweep over problem sizes and algorithms.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// `(n, s)` pairs for square `n x n` instances.
    pub sizes: Vec<(usize, usize)>,
    pub seeds: Vec<u64>,
    pub algos: Vec<Algorithm>,
    pub rank: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: f64,
    pub experiment: ExperimentConfig,
    /// Directory for per-run trace files.
    pub out_dir: Option<PathBuf>,
    pub exec: Execution,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![(100, 1000), (300, 10_000)],
            seeds: (1..=5).collect(),
            algos: Algorithm::ALL.to_vec(),
            rank: 10,
            lambda1: 10.0,
            lambda2: 5.0,
            tau: 100.0,
            experiment: ExperimentConfig::default(),
            out_dir: None,
            exec: Execution::default(),
        }
    }
}

pub fn write_trace_file(dir: &Path, report: &RunReport) -> Result<PathBuf> {
    let path = dir.join(report.trace_file_name());
    write_trace_csv(BufWriter::new(File::create(&path)?), &report.trace)?;
    Ok(path)
}

/// Runs every (size, seed, algorithm) combination. Reports come back in
/// size-major, then seed, then algorithm order whatever the execution mode.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<RunReport>> {
    if cfg.sizes.is_empty() || cfg.seeds.is_empty() || cfg.algos.is_empty() {
        return input("bench needs at least one size, seed and algorithm");
    }
    let mut instances = Vec::new();
    for &(n, s) in &cfg.sizes {
        for &seed in &cfg.seeds {
            instances.push(Arc::new(generate_instance(
                n,
                n,
                cfg.rank,
                s,
                seed,
                cfg.lambda1,
                cfg.lambda2,
                cfg.tau,
            )?));
        }
    }
    let jobs: Vec<(Arc<CompletionInstance>, Algorithm)> = instances
        .iter()
        .flat_map(|inst| cfg.algos.iter().map(move |&a| (Arc::clone(inst), a)))
        .collect();
    let results = cfg.exec.map(jobs, |(inst, algo)| {
        let report = run_experiment(&inst, algo, &cfg.experiment)?;
        if let Some(dir) = &cfg.out_dir {
            write_trace_file(dir, &report)?;
        }
        Ok::<_, Error>(report)
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::singular_values;

    #[test]
    fn rank_one_two_by_two() {
        let inst = generate_instance(2, 2, 1, 3, 9, 10.0, 5.0, 100.0).unwrap();
        let m = inst.target.as_slice();
        let minor = m[0] * m[3] - m[1] * m[2];
        assert!(minor.abs() < 1e-12 * (1.0 + m.iter().map(|v| v * v).sum::<f64>()));
        assert_eq!(inst.s(), 3);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_instance(20, 15, 3, 40, 7, 10.0, 5.0, 100.0).unwrap();
        let b = generate_instance(20, 15, 3, 40, 7, 10.0, 5.0, 100.0).unwrap();
        let c = generate_instance(20, 15, 3, 40, 8, 10.0, 5.0, 100.0).unwrap();
        assert_eq!(a.target, b.target);
        assert_eq!(a.observed, b.observed);
        assert_ne!(a.target, c.target);
    }

    #[test]
    fn benchmark_size_rank_and_sampling() {
        let inst = generate_instance(100, 100, 10, 1000, 3, 10.0, 5.0, 100.0).unwrap();
        assert_eq!(inst.s(), 1000);
        assert!(inst.observed.windows(2).all(|w| w[0] < w[1]));
        assert!(*inst.observed.last().unwrap() < 10_000);
        let sv = singular_values(&inst.target).unwrap();
        assert!(sv[9] > 1e-8 * sv[0]);
        assert!(sv[10..].iter().all(|&s| s < 1e-8 * sv[0]));
    }

    #[test]
    fn generator_rejects_bad_sizes() {
        assert!(generate_instance(3, 3, 1, 10, 0, 1.0, 1.0, 1.0).is_err());
        assert!(generate_instance(3, 3, 4, 2, 0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn algorithm_tags_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.tag().parse::<Algorithm>().unwrap(), a);
        }
        assert!("admm".parse::<Algorithm>().is_err());
        assert_eq!(trace_file_name(Algorithm::RyuPlus, 100, 1000, 4), "trace_ryu+_100x100_s1000_seed4.csv");
    }

    fn report(algo: Algorithm, iterations: usize, converged: bool, obj: f64) -> RunReport {
        RunReport {
            algo,
            m: 100,
            n: 100,
            s: 1000,
            seed: 1,
            iterations,
            time_ms: 2.0,
            objective: obj,
            residual: if converged { 1e-4 } else { 1.0 },
            converged,
            capped: !converged,
            diverged: None,
            envelope_monotone: None,
            gamma: 0.1,
            warnings: Vec::new(),
            trace: Vec::new(),
        }
    }

    #[test]
    fn summary_means_and_marker() {
        let single = summarize(&[report(Algorithm::Dys, 40, true, 3.0)]);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].mean_iter, 40.0);
        assert_eq!(single[0].mean_obj, 3.0);
        assert_eq!(single[0].conv_rate, 1.0);
        assert!(!single[0].capped);

        let mixed = summarize(&[
            report(Algorithm::Ryu, 20_000, false, 5.0),
            report(Algorithm::Ryu, 100, true, 3.0),
            report(Algorithm::Dys, 50, true, 1.0),
        ]);
        assert_eq!(mixed.len(), 2);
        assert_eq!(mixed[0].algo, Algorithm::Ryu);
        assert!(mixed[0].capped);
        assert_eq!(mixed[0].conv_rate, 0.5);
        assert_eq!(mixed[0].mean_iter, 10_050.0);
        let table = summary_table(&mixed);
        assert!(table.contains("*10050"));
        let mut csv = Vec::new();
        write_summary_csv(&mut csv, &mixed).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with(SUMMARY_CSV_HEADER));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn small_runs_are_deterministic_and_report_consistently() {
        let inst = generate_instance(12, 12, 2, 80, 5, 10.0, 5.0, 100.0).unwrap();
        let cfg = ExperimentConfig {
            stop: StoppingRule {
                max_iter: 300,
                ..StoppingRule::default()
            },
            ..ExperimentConfig::default()
        };
        for algo in Algorithm::ALL {
            let a = run_experiment(&inst, algo, &cfg).unwrap();
            let b = run_experiment(&inst, algo, &cfg).unwrap();
            assert_eq!(a.iterations, b.iterations);
            assert_eq!(a.objective.to_bits(), b.objective.to_bits());
            assert_eq!(a.converged, a.residual < cfg.stop.tol);
            assert_eq!(a.trace.len(), a.iterations + 1);
        }
    }

    #[test]
    fn bench_order_independent_of_execution() {
        let mut cfg = BenchConfig {
            sizes: vec![(8, 30)],
            seeds: vec![1, 2],
            rank: 2,
            exec: Execution::Sequential,
            ..BenchConfig::default()
        };
        cfg.experiment.stop.max_iter = 50;
        let seq = run_bench(&cfg).unwrap();
        cfg.exec = Execution::Parallel;
        let par = run_bench(&cfg).unwrap();
        assert_eq!(seq.len(), 6);
        for (a, b) in seq.iter().zip(&par) {
            assert_eq!((a.algo, a.seed, a.iterations), (b.algo, b.seed, b.iterations));
            assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        }
    }
}
