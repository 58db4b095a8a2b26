use crate::error::{Error, Result};

/// Scalar convex loss held privately by one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `|theta - target|`; the subgradient at the kink is 0.
    Abs {
        target: f64,
    },
    /// `(theta - target)^2`, with the subgradient clamped to `[-limit, limit]`
    /// where `limit` is the slope magnitude at the far end of the box.
    Quad {
        target: f64,
        limit: f64,
    },
    Zero,
}

impl Objective {
    pub fn value(&self, theta: f64) -> f64 {
        match *self {
            Objective::Abs { target } => (theta - target).abs(),
            Objective::Quad { target, .. } => (theta - target).powi(2),
            Objective::Zero => 0.0,
        }
    }

    pub fn subgradient(&self, theta: f64) -> f64 {
        match *self {
            Objective::Abs { target } => {
                if theta > target {
                    1.0
                } else if theta < target {
                    -1.0
                } else {
                    0.0
                }
            }
            Objective::Quad { target, limit } => (2.0 * (theta - target)).clamp(-limit, limit),
            Objective::Zero => 0.0,
        }
    }
}

/// One objective per node, a uniform subgradient bound `L`, and the global
/// minimizer of the average objective when it is known.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSet {
    funcs: Vec<Objective>,
    lipschitz: f64,
    optimum: Option<f64>,
}

/// Lower middle order statistic.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(sorted[(sorted.len() - 1) / 2])
}

impl ObjectiveSet {
    pub fn new(funcs: Vec<Objective>, lipschitz: f64, optimum: Option<f64>) -> Result<Self> {
        if funcs.is_empty() {
            return Err(Error::InvalidParameter("objective set is empty".into()));
        }
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "subgradient bound must be positive, got {lipschitz}"
            )));
        }
        Ok(ObjectiveSet {
            funcs,
            lipschitz,
            optimum,
        })
    }

    /// `f_i(theta) = |theta - w_i|`, `L = 1`; the optimum is the lower median
    /// of `w`.
    pub fn absolute(w: &[f64]) -> Result<Self> {
        let funcs = w.iter().map(|&target| Objective::Abs { target }).collect();
        ObjectiveSet::new(funcs, 1.0, lower_median(w))
    }

    /// `f_i(theta) = (theta - w_i)^2` on the box `[lo, hi]`, where the
    /// subgradient magnitude is at most `L = 2 max_i max(|lo - w_i|, |hi - w_i|)`.
    /// Outside the box the subgradient is clamped to `[-L, L]`. The optimum
    /// is the mean of `w`.
    pub fn quadratic(w: &[f64], lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("empty box [{lo}, {hi}]")));
        }
        if let Some(&bad) = w.iter().find(|&&v| v < lo || v > hi) {
            return Err(Error::InvalidParameter(format!(
                "target {bad} lies outside the box [{lo}, {hi}]"
            )));
        }
        let limit = w
            .iter()
            .map(|&v| 2.0 * (v - lo).abs().max((hi - v).abs()))
            .fold(0.0, f64::max);
        let funcs = w
            .iter()
            .map(|&target| Objective::Quad { target, limit })
            .collect();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        ObjectiveSet::new(funcs, limit, Some(mean))
    }

    /// All `f_i = 0` with `L = 1`; every point is optimal.
    pub fn zero(n: usize) -> Result<Self> {
        ObjectiveSet::new(vec![Objective::Zero; n], 1.0, Some(0.0))
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn optimum(&self) -> Option<f64> {
        self.optimum
    }

    pub fn get(&self, i: usize) -> &Objective {
        &self.funcs[i]
    }

    pub fn subgradient(&self, i: usize, theta: f64) -> f64 {
        self.funcs[i].subgradient(theta)
    }

    /// `f(theta) = (1/n) sum_i f_i(theta)`.
    pub fn average_value(&self, theta: f64) -> f64 {
        self.funcs.iter().map(|f| f.value(theta)).sum::<f64>() / self.len() as f64
    }

    /// `f(w*)` when the minimizer is known.
    pub fn optimal_value(&self) -> Option<f64> {
        self.optimum.map(|w| self.average_value(w))
    }
}

fn parse_list(field: &str, text: &str) -> Result<Vec<f64>> {
    text.split(';')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number {v:?} in objective field {field}")))
        })
        .collect()
}

/// Parses `abs:w=1;2;3`, `quad:w=1;2;3,box=-5;5` or `zero:n=4`.
pub fn parse_objective(spec: &str) -> Result<ObjectiveSet> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut targets = None;
    let mut bounds = None;
    let mut count = None;
    for field in rest.split(',').filter(|f| !f.is_empty()) {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("objective field {field:?} lacks '='")))?;
        match key.trim() {
            "w" => targets = Some(parse_list("w", value)?),
            "box" => bounds = Some(parse_list("box", value)?),
            "n" => {
                count = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad node count {value:?}")))?,
                )
            }
            other => return Err(Error::Config(format!("unknown objective field {other:?}"))),
        }
    }
    match kind.trim() {
        "abs" => {
            let w = targets.ok_or_else(|| Error::Config("abs objective needs w=".into()))?;
            ObjectiveSet::absolute(&w)
        }
        "quad" => {
            let w = targets.ok_or_else(|| Error::Config("quad objective needs w=".into()))?;
            match bounds.as_deref() {
                Some(&[lo, hi]) => ObjectiveSet::quadratic(&w, lo, hi),
                _ => Err(Error::Config("quad objective needs box=lo;hi".into())),
            }
        }
        "zero" => {
            let n = count.ok_or_else(|| Error::Config("zero objective needs n=".into()))?;
            ObjectiveSet::zero(n)
        }
        other => Err(Error::Config(format!("unknown objective kind {other:?}"))),
    }
}
