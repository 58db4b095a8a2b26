use std::fs::File;
use std::io::{BufReader, Write};
use std::time::Instant;

use rayon::prelude::*;

use crate::consensus::{
    guaranteed_rounds, run_consensus, ConvergenceReport, MomentumParams, StopNorm,
};
use crate::error::{Error, Result};
use crate::graphs::{
    complete_graph, geometric_random_graph, grid_2d, lazy_metropolis, line_graph, lollipop_graph,
    random_connected_graph, spectral_report, star_graph, Graph,
};
use crate::multiagent::{
    read_formation, run_formation, run_leader_follow, target_formation, FormationSpec,
    LeaderConfig, Points,
};
use crate::optimize::{run_optimize, ObjectiveSet};
use crate::rng::SeededRng;

use super::config::{Command, ExperimentConfig, GraphFamily, Schedule, Start};

/// Absolute slack allowed when comparing a measured value with its bound.
pub const BOUND_SLACK: f64 = 1e-9;
const GEOMETRIC_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone)]
pub struct Row {
    pub values: Vec<String>,
    pub wall_ms: f64,
}

/// Results of one sweep, in size order.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
    /// Human-readable descriptions of every bound that failed.
    pub violations: Vec<String>,
    /// Per-size round traces for the iterative subcommands.
    pub traces: Vec<(usize, ConvergenceReport)>,
}

impl RunRecord {
    /// Config echo, column header, then one row per size. The trailing
    /// `wall_ms` column is the only non-deterministic field.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(self.config.header().as_bytes())?;
        writeln!(out, "{},wall_ms", self.columns.join(","))?;
        for row in &self.rows {
            writeln!(out, "{},{:.3}", row.values.join(","), row.wall_ms)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// `n,t,actual,bound` for every recorded round of every size.
    pub fn write_trace<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,t,actual,bound")?;
        for (n, report) in &self.traces {
            for (k, (a, b)) in report.l2sq_dev.iter().zip(&report.bound).enumerate() {
                writeln!(out, "{},{},{},{}", n, k + 1, a, b)?;
            }
        }
        Ok(())
    }
}

/// The CSV with the trailing timing column removed from the column header
/// and every data row.
pub fn deterministic_section(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            if line.starts_with('#') {
                line.to_string()
            } else {
                match line.rsplit_once(',') {
                    Some((head, _)) => head.to_string(),
                    None => line.to_string(),
                }
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn derive_seed(seed: u64, n: usize, stream: u64) -> u64 {
    seed.wrapping_add((n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Graph of size `n` for the configured family. Disconnected geometric
/// draws are redrawn with the next derived seed.
pub fn build_graph(cfg: &ExperimentConfig, n: usize) -> Result<Graph> {
    match cfg.graph {
        GraphFamily::Line => line_graph(n),
        GraphFamily::Lollipop => lollipop_graph(n),
        GraphFamily::Grid => grid_2d((n as f64).sqrt().round() as usize),
        GraphFamily::Complete => complete_graph(n),
        GraphFamily::Star => star_graph(n),
        GraphFamily::Random { p } => random_connected_graph(n, p, derive_seed(cfg.seed, n, 0)),
        GraphFamily::Geometric { c } => {
            let nf = n as f64;
            let r = (8.0 * c * nf.ln() / nf)
                .sqrt()
                .min(std::f64::consts::SQRT_2);
            for attempt in 0..GEOMETRIC_ATTEMPTS {
                let geo = geometric_random_graph(n, r, derive_seed(cfg.seed, n, attempt))?;
                if geo.graph.is_connected() {
                    return Ok(geo.graph);
                }
            }
            Err(Error::Config(format!(
                "graph: no connected geometric draw for n={n} in {GEOMETRIC_ATTEMPTS} attempts"
            )))
        }
    }
}

fn momentum_for(cfg: &ExperimentConfig, u: f64) -> Result<MomentumParams> {
    match cfg.schedule {
        Schedule::Default => MomentumParams::default_schedule(u),
        Schedule::Grid(c) => MomentumParams::grid_schedule(u, c),
    }
}

struct SizeOutcome {
    values: Vec<String>,
    violations: Vec<String>,
    trace: Option<ConvergenceReport>,
}

fn fmt<T: ToString>(v: T) -> String {
    v.to_string()
}

fn trace_violation(n: usize, report: &ConvergenceReport, label: &str) -> Option<String> {
    let excess = report.worst_bound_excess();
    (excess > BOUND_SLACK).then(|| format!("n={n}: {label} trace exceeds its bound by {excess:e}"))
}

fn cmd_consensus(cfg: &ExperimentConfig, n: usize) -> Result<SizeOutcome> {
    let g = build_graph(cfg, n)?;
    let u = cfg.u_mode.bound_for(n);
    let p = momentum_for(cfg, u)?;
    let mut x1 = vec![0.0; n];
    x1[0] = 1.0;
    let run = run_consensus(&g, &x1, &p, cfg.eps, StopNorm::Inf, cfg.max_iter)?;
    let initial_sq = (n as f64 - 1.0) / n as f64;
    let bound = guaranteed_rounds(&p, initial_sq, cfg.eps);
    let mut violations = Vec::new();
    if u >= n as f64 && cfg.schedule == Schedule::Default {
        violations.extend(trace_violation(n, &run.report, "deviation"));
        let late = if run.report.converged {
            run.report.rounds > bound
        } else {
            cfg.max_iter >= bound
        };
        if late {
            violations.push(format!(
                "n={n}: {} rounds exceeds the guaranteed {bound}",
                run.report.rounds
            ));
        }
    }
    Ok(SizeOutcome {
        values: vec![
            fmt(n),
            fmt(u),
            fmt(run.report.rounds),
            fmt(bound),
            fmt(run.report.converged),
        ],
        violations,
        trace: Some(run.report),
    })
}

/// `w_i = i mod 10` for `i = 1..n/2`, followed by the negated copy.
pub fn median_targets(n: usize) -> Vec<f64> {
    let half: Vec<f64> = (1..=n / 2).map(|i| (i % 10) as f64).collect();
    half.iter()
        .copied()
        .chain(half.iter().map(|v| -v))
        .collect()
}

fn cmd_median(cfg: &ExperimentConfig, n: usize) -> Result<SizeOutcome> {
    let g = build_graph(cfg, n)?;
    let u = cfg.u_mode.bound_for(n);
    let rounds = (cfg.t_mult * n as f64).round() as usize;
    if rounds == 0 {
        return Err(Error::Config(format!("t-mult: gives T = 0 for n={n}")));
    }
    let w = median_targets(n);
    let obj = ObjectiveSet::absolute(&w)?;
    let r = run_optimize(&g, &w, &obj, u, rounds)?;
    let avg_abs_dev = r.yhat.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
    let err = r.err.expect("median objective has a known minimizer");
    let bound_err = r.bound_err.expect("median objective has a known minimizer");
    let mut violations = Vec::new();
    if r.bounds_apply {
        if !r.disp_within_bound(BOUND_SLACK) {
            violations.push(format!(
                "n={n}: disp {} above bound {}",
                r.disp, r.bound_disp
            ));
        }
        if err > bound_err + BOUND_SLACK {
            violations.push(format!("n={n}: err {err} above bound {bound_err}"));
        }
    }
    Ok(SizeOutcome {
        values: vec![
            fmt(n),
            fmt(rounds),
            fmt(u),
            fmt(avg_abs_dev),
            fmt(r.disp),
            fmt(r.bound_disp),
            fmt(err),
            fmt(bound_err),
        ],
        violations,
        trace: None,
    })
}

fn cmd_spectrum(cfg: &ExperimentConfig, n: usize) -> Result<SizeOutcome> {
    let g = build_graph(cfg, n)?;
    let report = spectral_report(&lazy_metropolis(&g)?)?;
    let margin = report.margin();
    let violations = if margin > 0.0 {
        Vec::new()
    } else {
        vec![format!(
            "n={n}: lambda2 {} reaches the gap bound",
            report.lambda2
        )]
    };
    Ok(SizeOutcome {
        values: vec![
            fmt(n),
            fmt(report.lambda2),
            fmt(report.gap_bound),
            fmt(margin),
        ],
        violations,
        trace: None,
    })
}

fn uniform_points(n: usize, dim: usize, seed: u64) -> Points {
    let mut rng = SeededRng::new(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
        .collect()
}

fn line_offsets(g: &Graph) -> Result<FormationSpec> {
    let reference: Points = (0..g.node_count()).map(|i| vec![i as f64, 0.0]).collect();
    FormationSpec::from_positions(g, &reference)
}

fn cmd_formation(
    cfg: &ExperimentConfig,
    n: usize,
    file: Option<&FormationSpec>,
) -> Result<SizeOutcome> {
    let g = build_graph(cfg, n)?;
    let spec = match file {
        Some(spec) => spec.clone(),
        None => line_offsets(&g)?,
    };
    let dim = spec.dim();
    let p1 = match cfg.start {
        Start::Origin => vec![vec![0.0; dim]; n],
        Start::Ones => vec![vec![1.0; dim]; n],
        Start::Random => uniform_points(n, dim, derive_seed(cfg.seed, n, 1)),
        Start::Formation => target_formation(&g, &spec, &vec![vec![0.0; dim]; n])?,
    };
    let u = cfg.u_mode.bound_for(n);
    let run = run_formation(&g, &spec, &p1, u, cfg.eps, cfg.max_iter)?;
    let mut violations = Vec::new();
    if u >= n as f64 {
        violations.extend(trace_violation(n, &run.report, "formation"));
    }
    Ok(SizeOutcome {
        values: vec![
            fmt(n),
            fmt(u),
            fmt(run.report.rounds),
            fmt(run.report.converged),
            fmt(run.report.worst_bound_excess()),
        ],
        violations,
        trace: Some(run.report),
    })
}

fn cmd_leader(cfg: &ExperimentConfig, n: usize) -> Result<SizeOutcome> {
    let g = build_graph(cfg, n)?;
    let u = cfg.u_mode.bound_for(n);
    let leaders: Vec<usize> = cfg.leaders.iter().map(|&l| l - 1).collect();
    let lc = LeaderConfig::new(n, &leaders, cfg.value.clone(), u)?;
    let dim = cfg.value.len();
    let x1 = match cfg.start {
        Start::Origin => vec![vec![0.0; dim]; n],
        Start::Ones => vec![cfg.value.iter().map(|v| v + 1.0).collect(); n],
        Start::Random => uniform_points(n, dim, derive_seed(cfg.seed, n, 1)),
        Start::Formation => {
            return Err(Error::Config(
                "start: `formation` does not apply to leader".into(),
            ))
        }
    };
    let run = run_leader_follow(&g, &lc, &x1, cfg.eps, cfg.max_iter)?;
    let mut violations = Vec::new();
    if u >= n as f64 {
        violations.extend(trace_violation(n, &run.report, "leader"));
    }
    Ok(SizeOutcome {
        values: vec![
            fmt(n),
            fmt(u),
            fmt(run.report.rounds),
            fmt(run.report.converged),
            fmt(run.report.worst_bound_excess()),
        ],
        violations,
        trace: Some(run.report),
    })
}

fn columns(command: Command) -> Vec<&'static str> {
    match command {
        Command::Consensus => vec!["n", "U", "rounds", "theorem_round_bound", "converged"],
        Command::Median => vec![
            "n",
            "T",
            "U",
            "avg_abs_dev",
            "disp",
            "bound_disp",
            "err",
            "bound_err",
        ],
        Command::Spectrum => vec!["n", "lambda2", "lemma1_bound", "margin"],
        Command::Formation | Command::Leader => {
            vec!["n", "U", "rounds", "converged", "max_bound_excess"]
        }
    }
}

fn load_formation(cfg: &ExperimentConfig) -> Result<Option<FormationSpec>> {
    match (&cfg.command, &cfg.formation) {
        (Command::Formation, Some(path)) => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            Ok(Some(read_formation(BufReader::new(file))?))
        }
        _ => Ok(None),
    }
}

/// Runs every size of the sweep in parallel; rows come back in size order.
pub fn run(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let spec = load_formation(cfg)?;
    let outcomes: Vec<Result<(SizeOutcome, f64)>> = cfg
        .sizes
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let outcome = match cfg.command {
                Command::Consensus => cmd_consensus(cfg, n),
                Command::Median => cmd_median(cfg, n),
                Command::Spectrum => cmd_spectrum(cfg, n),
                Command::Formation => cmd_formation(cfg, n, spec.as_ref()),
                Command::Leader => cmd_leader(cfg, n),
            }?;
            Ok((outcome, start.elapsed().as_secs_f64() * 1e3))
        })
        .collect();
    let mut record = RunRecord {
        config: cfg.clone(),
        columns: columns(cfg.command),
        rows: Vec::new(),
        violations: Vec::new(),
        traces: Vec::new(),
    };
    for (&n, outcome) in cfg.sizes.iter().zip(outcomes) {
        let (outcome, wall_ms) = outcome?;
        record.rows.push(Row {
            values: outcome.values,
            wall_ms,
        });
        record.violations.extend(outcome.violations);
        if let Some(trace) = outcome.trace {
            record.traces.push((n, trace));
        }
    }
    Ok(record)
}
