use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Consensus,
    Median,
    Formation,
    Leader,
    Spectrum,
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "consensus" => Command::Consensus,
            "median" => Command::Median,
            "formation" => Command::Formation,
            "leader" => Command::Leader,
            "spectrum" => Command::Spectrum,
            _ => return Err(Error::Config(format!("unknown subcommand {s:?}"))),
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Consensus => "consensus",
            Command::Median => "median",
            Command::Formation => "formation",
            Command::Leader => "leader",
            Command::Spectrum => "spectrum",
        })
    }
}

/// Graph family; `n` comes from the size sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphFamily {
    Line,
    Lollipop,
    /// `n` must be a perfect square.
    Grid,
    Complete,
    Star,
    /// Unit-square geometric graph with `r^2 = 8 c ln(n) / n`.
    Geometric {
        c: f64,
    },
    /// Random spanning tree plus independent extra edges with probability `p`.
    Random {
        p: f64,
    },
}

fn param(family: &str, params: &str, key: &str, default: f64) -> Result<f64> {
    if params.is_empty() {
        return Ok(default);
    }
    let (k, v) = params
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("graph parameter {params:?} lacks '='")))?;
    if k != key {
        return Err(Error::Config(format!(
            "{family} takes parameter {key}, got {k:?}"
        )));
    }
    let value: f64 = v
        .parse()
        .map_err(|_| Error::Config(format!("bad {family} parameter {v:?}")))?;
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::Config(format!(
            "{family} parameter must be positive"
        )));
    }
    Ok(value)
}

impl FromStr for GraphFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let plain = |g: GraphFamily| {
            if params.is_empty() {
                Ok(g)
            } else {
                Err(Error::Config(format!(
                    "graph family {name} takes no parameters"
                )))
            }
        };
        match name {
            "line" => plain(GraphFamily::Line),
            "lollipop" => plain(GraphFamily::Lollipop),
            "grid" => plain(GraphFamily::Grid),
            "complete" => plain(GraphFamily::Complete),
            "star" => plain(GraphFamily::Star),
            "geometric" => Ok(GraphFamily::Geometric {
                c: param(name, params, "c", 2.0)?,
            }),
            "random" => {
                let p = param(name, params, "p", 0.1)?;
                if p > 1.0 {
                    return Err(Error::Config("random edge probability must be <= 1".into()));
                }
                Ok(GraphFamily::Random { p })
            }
            _ => Err(Error::Config(format!("unknown graph family {name:?}"))),
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphFamily::Line => f.write_str("line"),
            GraphFamily::Lollipop => f.write_str("lollipop"),
            GraphFamily::Grid => f.write_str("grid"),
            GraphFamily::Complete => f.write_str("complete"),
            GraphFamily::Star => f.write_str("star"),
            GraphFamily::Geometric { c } => write!(f, "geometric:c={c}"),
            GraphFamily::Random { p } => write!(f, "random:p={p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UMode {
    Exact,
    Factor(f64),
}

impl UMode {
    pub fn bound_for(&self, n: usize) -> f64 {
        match *self {
            UMode::Exact => n as f64,
            UMode::Factor(k) => k * n as f64,
        }
    }
}

impl FromStr for UMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(UMode::Exact);
        }
        match s.strip_prefix("factor:").map(str::parse::<f64>) {
            Some(Ok(k)) if k > 0.0 && k.is_finite() => Ok(UMode::Factor(k)),
            _ => Err(Error::Config(format!(
                "u-mode must be `exact` or `factor:k` with k > 0, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for UMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UMode::Exact => f.write_str("exact"),
            UMode::Factor(k) => write!(f, "factor:{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Default,
    Grid(f64),
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "default" {
            return Ok(Schedule::Default);
        }
        match s.strip_prefix("grid:").map(str::parse::<f64>) {
            Some(Ok(c)) if c > 0.0 && c.is_finite() => Ok(Schedule::Grid(c)),
            _ => Err(Error::Config(format!(
                "schedule must be `default` or `grid:c` with c > 0, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Default => f.write_str("default"),
            Schedule::Grid(c) => write!(f, "grid:{c}"),
        }
    }
}

/// Initial configuration for the multi-agent subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// Every agent at the origin.
    Origin,
    /// Followers at the leader value plus one in every coordinate.
    Ones,
    /// Seeded uniform draws in `[-1, 1]^d`.
    Random,
    /// Already in formation.
    Formation,
}

impl FromStr for Start {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "origin" => Start::Origin,
            "ones" => Start::Ones,
            "random" => Start::Random,
            "formation" => Start::Formation,
            _ => return Err(Error::Config(format!("unknown start {s:?}"))),
        })
    }
}

impl fmt::Display for Start {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Start::Origin => "origin",
            Start::Ones => "ones",
            Start::Random => "random",
            Start::Formation => "formation",
        })
    }
}

/// Parses `8,16,32` or an inclusive range with step, `8..64:8`.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("bad size list {s:?}"));
    let sizes: Vec<usize> = if let Some((range, step)) = s.split_once(':') {
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        let step: usize = step.trim().parse().map_err(|_| bad())?;
        if step == 0 || lo > hi {
            return Err(bad());
        }
        (lo..=hi).step_by(step).collect()
    } else {
        s.split(',')
            .filter(|v| !v.trim().is_empty())
            .map(|v| v.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if sizes.is_empty() {
        return Err(Error::Config("size list is empty".into()));
    }
    Ok(sizes)
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_list<T: FromStr>(field: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| Error::Config(format!("bad entry {v:?} in {field}")))
        })
        .collect()
}

pub const DEFAULT_EPS: f64 = 0.01;
pub const DEFAULT_T_MULT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub graph: GraphFamily,
    pub sizes: Vec<usize>,
    pub u_mode: UMode,
    pub eps: f64,
    pub t_mult: f64,
    pub seed: u64,
    pub schedule: Schedule,
    pub max_iter: usize,
    /// Offset file for `formation`; unit x-offsets `r_ij = (j - i, 0)` when absent.
    pub formation: Option<PathBuf>,
    pub start: Start,
    /// 1-based leader ids.
    pub leaders: Vec<usize>,
    pub value: Vec<f64>,
    pub trace: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: Command, graph: GraphFamily, sizes: Vec<usize>) -> Self {
        ExperimentConfig {
            command,
            graph,
            sizes,
            u_mode: UMode::Exact,
            eps: DEFAULT_EPS,
            t_mult: DEFAULT_T_MULT,
            seed: 0,
            schedule: Schedule::Default,
            max_iter: crate::consensus::DEFAULT_MAX_ITER,
            formation: None,
            start: default_start(command),
            leaders: vec![1],
            value: vec![0.0],
            trace: None,
            out: None,
        }
    }

    /// Field-level checks that do not need to build a graph.
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::Config("sizes: list is empty".into()));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::Config(format!(
                "eps: must be positive, got {}",
                self.eps
            )));
        }
        if !(self.t_mult > 0.0) || !self.t_mult.is_finite() {
            return Err(Error::Config(format!(
                "t-mult: must be positive, got {}",
                self.t_mult
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max-iter: must be positive".into()));
        }
        if self.value.is_empty() {
            return Err(Error::Config("value: needs at least one coordinate".into()));
        }
        if self.leaders.is_empty() || self.leaders.contains(&0) {
            return Err(Error::Config(
                "leaders: nonempty list of 1-based ids".into(),
            ));
        }
        for &n in &self.sizes {
            self.validate_size(n)?;
        }
        Ok(())
    }

    fn validate_size(&self, n: usize) -> Result<()> {
        let fail = |why: &str| Err(Error::Config(format!("sizes: n={n} {why}")));
        let min = match self.graph {
            GraphFamily::Lollipop => 4,
            _ => 2,
        };
        if n < min {
            return fail(&format!("is below the family minimum {min}"));
        }
        match self.graph {
            GraphFamily::Lollipop if !n.is_multiple_of(2) => {
                return fail("must be even for lollipop")
            }
            GraphFamily::Grid => {
                let k = (n as f64).sqrt().round() as usize;
                if k * k != n {
                    return fail("must be a perfect square for grid");
                }
            }
            _ => {}
        }
        if self.command == Command::Median && !n.is_multiple_of(2) {
            return fail("must be even for the median experiment");
        }
        if self.command == Command::Leader {
            if let Some(&bad) = self.leaders.iter().find(|&&l| l > n) {
                return fail(&format!("has no node {bad} for the leader set"));
            }
        }
        let u = self.u_mode.bound_for(n);
        if u < 1.0 {
            return fail("gives U < 1");
        }
        if let Schedule::Grid(_) = self.schedule {
            if u < 2.0 {
                return fail("gives U < 2, which the grid schedule needs");
            }
        }
        Ok(())
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        vec![
            ("command", self.command.to_string()),
            ("graph", self.graph.to_string()),
            ("sizes", join(&self.sizes)),
            ("u_mode", self.u_mode.to_string()),
            ("eps", self.eps.to_string()),
            ("t_mult", self.t_mult.to_string()),
            ("seed", self.seed.to_string()),
            ("schedule", self.schedule.to_string()),
            ("max_iter", self.max_iter.to_string()),
            ("formation", path(&self.formation)),
            ("start", self.start.to_string()),
            ("leaders", join(&self.leaders)),
            ("value", join(&self.value)),
            ("trace", path(&self.trace)),
            ("out", path(&self.out)),
        ]
    }

    /// `# key=value` lines, one per field.
    pub fn header(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(k, v)| format!("# {k}={v}\n"))
            .collect()
    }

    /// Rebuilds a config from the `#` lines of an output file.
    pub fn from_header(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines() {
            let Some(body) = line.strip_prefix("# ") else {
                if line.starts_with('#') {
                    continue;
                }
                break;
            };
            if let Some((k, v)) = body.split_once('=') {
                map.insert(k.to_string(), v.to_string());
            }
        }
        let get = |k: &str| {
            map.get(k)
                .cloned()
                .ok_or_else(|| Error::Config(format!("header lacks {k}")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Config(format!("header field {k} is not a number")))
        };
        let path = |k: &str| -> Result<Option<PathBuf>> {
            let v = get(k)?;
            Ok((!v.is_empty()).then(|| PathBuf::from(v)))
        };
        Ok(ExperimentConfig {
            command: get("command")?.parse()?,
            graph: get("graph")?.parse()?,
            sizes: parse_sizes(&get("sizes")?)?,
            u_mode: get("u_mode")?.parse()?,
            eps: num("eps")?,
            t_mult: num("t_mult")?,
            seed: get("seed")?
                .parse()
                .map_err(|_| Error::Config("header field seed is not an integer".into()))?,
            schedule: get("schedule")?.parse()?,
            max_iter: get("max_iter")?
                .parse()
                .map_err(|_| Error::Config("header field max_iter is not an integer".into()))?,
            formation: path("formation")?,
            start: get("start")?.parse()?,
            leaders: parse_list("leaders", &get("leaders")?)?,
            value: parse_list("value", &get("value")?)?,
            trace: path("trace")?,
            out: path("out")?,
        })
    }
}

pub fn default_start(command: Command) -> Start {
    match command {
        Command::Leader => Start::Ones,
        _ => Start::Random,
    }
}

pub(crate) fn parse_value_list(s: &str) -> Result<Vec<f64>> {
    parse_list("value", s)
}

pub(crate) fn parse_leader_list(s: &str) -> Result<Vec<usize>> {
    parse_list("leaders", s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_lists() {
        assert_eq!(parse_sizes("8,16, 32").unwrap(), vec![8, 16, 32]);
        assert_eq!(parse_sizes("8..32:8").unwrap(), vec![8, 16, 24, 32]);
        assert!(parse_sizes("").is_err());
        assert!(parse_sizes("8..4:1").is_err());
        assert!(parse_sizes("a").is_err());
    }

    #[test]
    fn enums_round_trip() {
        for s in ["line", "lollipop", "grid", "geometric:c=2", "random:p=0.25"] {
            assert_eq!(s.parse::<GraphFamily>().unwrap().to_string(), s);
        }
        assert_eq!(
            "geometric".parse::<GraphFamily>().unwrap(),
            GraphFamily::Geometric { c: 2.0 }
        );
        for s in ["exact", "factor:2.5"] {
            assert_eq!(s.parse::<UMode>().unwrap().to_string(), s);
        }
        for s in ["default", "grid:3"] {
            assert_eq!(s.parse::<Schedule>().unwrap().to_string(), s);
        }
        assert!("factor:0".parse::<UMode>().is_err());
        assert!("grid:-1".parse::<Schedule>().is_err());
        assert!("line:p=1".parse::<GraphFamily>().is_err());
        assert!("torus".parse::<GraphFamily>().is_err());
    }

    #[test]
    fn header_round_trip() {
        let mut cfg = ExperimentConfig::new(
            Command::Leader,
            GraphFamily::Random { p: 0.2 },
            vec![10, 20],
        );
        cfg.u_mode = UMode::Factor(1.5);
        cfg.eps = 1e-3;
        cfg.seed = 42;
        cfg.leaders = vec![1, 3];
        cfg.value = vec![0.5, -2.0];
        cfg.out = Some(PathBuf::from("/tmp/x.csv"));
        let text = format!("{}n,rounds\n10,3\n", cfg.header());
        assert_eq!(ExperimentConfig::from_header(&text).unwrap(), cfg);
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::new(Command::Consensus, GraphFamily::Line, vec![8]);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.eps = -1.0;
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let mut bad = ok.clone();
        bad.command = Command::Median;
        bad.sizes = vec![7];
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.t_mult = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.graph = GraphFamily::Grid;
        bad.sizes = vec![10];
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.command = Command::Leader;
        bad.leaders = vec![9];
        assert!(bad.validate().is_err());
    }
}
