use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};

use super::config::{
    default_start, parse_leader_list, parse_sizes, parse_value_list, Command, ExperimentConfig,
    DEFAULT_EPS, DEFAULT_T_MULT,
};
use super::{exit_code, run, EXIT_BOUND, EXIT_CONFIG, EXIT_OK};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Consensus,
    Median,
    Formation,
    Leader,
    Spectrum,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Consensus => Command::Consensus,
            Sub::Median => Command::Median,
            Sub::Formation => Command::Formation,
            Sub::Leader => Command::Leader,
            Sub::Spectrum => Command::Spectrum,
        }
    }
}

/// Accelerated consensus experiments over graph-size sweeps.
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
pub struct Cli {
    #[arg(value_enum)]
    subcommand: Sub,
    /// line, lollipop, grid, complete, star, geometric[:c=2], random[:p=0.1]
    #[arg(long, default_value = "line")]
    graph: String,
    /// Comma list or inclusive range `lo..hi:step`.
    #[arg(long, default_value = "8,16,32,64")]
    sizes: String,
    /// `exact` (U = n) or `factor:k` (U = k n).
    #[arg(long, default_value = "exact")]
    u_mode: String,
    /// Stopping tolerance.
    #[arg(long, default_value_t = DEFAULT_EPS, allow_hyphen_values = true)]
    eps: f64,
    /// Median horizon T = t_mult * n.
    #[arg(long, default_value_t = DEFAULT_T_MULT, allow_hyphen_values = true)]
    t_mult: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `default` or `grid:c`.
    #[arg(long, default_value = "default")]
    schedule: String,
    #[arg(long, default_value_t = crate::consensus::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Offset file for `formation` (lines `i j r_1 ... r_d`, 1-based).
    #[arg(long)]
    formation: Option<PathBuf>,
    /// origin, ones, random or formation.
    #[arg(long)]
    start: Option<String>,
    /// 1-based leader ids.
    #[arg(long, default_value = "1")]
    leaders: String,
    /// Leader value, one entry per coordinate.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    value: String,
    /// Per-round `n,t,actual,bound` CSV for the iterative subcommands.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Result CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let command = Command::from(self.subcommand);
        let cfg = ExperimentConfig {
            command,
            graph: self.graph.parse()?,
            sizes: parse_sizes(&self.sizes)?,
            u_mode: self.u_mode.parse()?,
            eps: self.eps,
            t_mult: self.t_mult,
            seed: self.seed,
            schedule: self.schedule.parse()?,
            max_iter: self.max_iter,
            formation: self.formation.clone(),
            start: match &self.start {
                Some(s) => s.parse()?,
                None => default_start(command),
            },
            leaders: parse_leader_list(&self.leaders)?,
            value: parse_value_list(&self.value)?,
            trace: self.trace.clone(),
            out: self.out.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_to<F>(path: &PathBuf, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

fn execute(cfg: &ExperimentConfig) -> Result<i32> {
    let record = run(cfg)?;
    match &cfg.out {
        Some(path) => write_to(path, |w| record.write_csv(w))?,
        None => {
            let stdout = std::io::stdout();
            record
                .write_csv(stdout.lock())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    if let Some(path) = &cfg.trace {
        write_to(path, |w| record.write_trace(w))?;
    }
    for v in &record.violations {
        eprintln!("bound violated: {v}");
    }
    Ok(if record.violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_BOUND
    })
}

/// Parses arguments, runs the sweep and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.to_config().and_then(|cfg| execute(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bench: {e}");
            exit_code(&e)
        }
    }
}
