//! Closed-form cache sizing under a step-function reuse histogram.
//!
//! The histogram has constant mass on distances `0..D` and none beyond, so a
//! cache of `x <= D` blocks misses with rate `M(x) = (D - x) / D`. With
//! quadratic cost `a * x^2` and the delay bound
//! `CPI_base + sum(m_i * M(x_i)) <= T` the optimum has a closed form for one
//! and two levels. Levels are treated inclusively: each `M(x_i)` depends on
//! its own size only. The exclusive analogue would use cumulative sizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelCoeffs {
    /// `a` in `a * x^2`.
    pub unit_cost: f64,
    /// `m`, cycles added per miss.
    pub miss_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepModel {
    /// `D`, the reuse-distance cutoff in blocks.
    pub cutoff: f64,
    /// Histogram height. It cancels out of every miss rate.
    #[serde(default)]
    pub step_height: Option<f64>,
    pub cpi_base: f64,
    /// `T`, the delay bound.
    pub target_delay: f64,
    pub levels: Vec<LevelCoeffs>,
}

impl StepModel {
    pub fn one_level(
        cutoff: f64,
        cpi_base: f64,
        target_delay: f64,
        unit_cost: f64,
        miss_penalty: f64,
    ) -> Self {
        Self {
            cutoff,
            step_height: None,
            cpi_base,
            target_delay,
            levels: vec![LevelCoeffs {
                unit_cost,
                miss_penalty,
            }],
        }
    }

    pub fn two_level(
        cutoff: f64,
        cpi_base: f64,
        target_delay: f64,
        l1: LevelCoeffs,
        l2: LevelCoeffs,
    ) -> Self {
        Self {
            cutoff,
            step_height: None,
            cpi_base,
            target_delay,
            levels: vec![l1, l2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.cutoff) {
            return Err(Error::InvalidModel(format!(
                "cutoff D = {} must be positive",
                self.cutoff
            )));
        }
        if !(self.cpi_base.is_finite() && self.target_delay.is_finite()) {
            return Err(Error::InvalidModel("CPI_base and T must be finite".into()));
        }
        if let Some(h) = self.step_height.filter(|h| !positive(*h)) {
            return Err(Error::InvalidModel(format!(
                "step height {h} must be positive"
            )));
        }
        if self.levels.is_empty() || self.levels.len() > 2 {
            return Err(Error::InvalidModel(format!(
                "closed forms exist for one or two levels, got {}",
                self.levels.len()
            )));
        }
        for (i, l) in self.levels.iter().enumerate() {
            if !positive(l.unit_cost) || !positive(l.miss_penalty) {
                return Err(Error::InvalidModel(format!(
                    "L{} needs positive a and m (a = {}, m = {})",
                    i + 1,
                    l.unit_cost,
                    l.miss_penalty
                )));
            }
        }
        Ok(())
    }

    pub fn miss_rate(&self, x: f64) -> f64 {
        ((self.cutoff - x) / self.cutoff).clamp(0.0, 1.0)
    }

    pub fn delay(&self, sizes: &[f64]) -> f64 {
        self.cpi_base
            + self
                .levels
                .iter()
                .zip(sizes)
                .map(|(l, &x)| l.miss_penalty * self.miss_rate(x))
                .sum::<f64>()
    }

    pub fn cost(&self, sizes: &[f64]) -> f64 {
        self.levels
            .iter()
            .zip(sizes)
            .map(|(l, &x)| l.unit_cost * x * x)
            .sum()
    }

    /// Delay the caches must remove: `CPI_base + sum(m_i) - T`.
    pub fn excess(&self) -> f64 {
        self.cpi_base + self.levels.iter().map(|l| l.miss_penalty).sum::<f64>() - self.target_delay
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// The unclamped closed form lies in `[0, D]` per level.
    Interior,
    /// The bound is met without any cache.
    NoCache,
    /// The closed form left `[0, D]`; the best point on the box boundary is returned.
    Clamped,
    /// `T < CPI_base`: no cache size can meet the bound.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    /// Optimal sizes in blocks; empty when infeasible.
    pub sizes: Vec<f64>,
    pub cost: Option<f64>,
    pub delay: Option<f64>,
}

impl Solution {
    fn new(model: &StepModel, status: Status, sizes: Vec<f64>) -> Self {
        let (cost, delay) = if sizes.is_empty() {
            (None, None)
        } else {
            (Some(model.cost(&sizes)), Some(model.delay(&sizes)))
        };
        Self {
            status,
            sizes,
            cost,
            delay,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status != Status::Infeasible
    }
}

/// `x_1 = D * (1 - (T - CPI_base) / m)`, clamped to zero when the bound
/// needs no cache.
pub fn optimal_one_level(model: &StepModel) -> Result<Solution> {
    model.validate()?;
    let [l] = model.levels[..] else {
        return Err(Error::InvalidModel("expected a one-level model".into()));
    };
    let slack = model.target_delay - model.cpi_base;
    Ok(if slack < 0.0 {
        Solution::new(model, Status::Infeasible, Vec::new())
    } else if slack >= l.miss_penalty {
        Solution::new(model, Status::NoCache, vec![0.0])
    } else {
        let x = model.cutoff * (1.0 - slack / l.miss_penalty);
        Solution::new(model, Status::Interior, vec![x])
    })
}

/// The unclamped two-level stationary point `(a_2 m_1 P, a_1 m_2 P)`.
pub fn two_level_interior(model: &StepModel) -> Result<[f64; 2]> {
    model.validate()?;
    let [l1, l2] = model.levels[..] else {
        return Err(Error::InvalidModel("expected a two-level model".into()));
    };
    let (a1, m1, a2, m2) = (l1.unit_cost, l1.miss_penalty, l2.unit_cost, l2.miss_penalty);
    let p = model.cutoff * model.excess() / (a1 * m2 * m2 + a2 * m1 * m1);
    Ok([a2 * m1 * p, a1 * m2 * p])
}

pub fn optimal_two_level(model: &StepModel) -> Result<Solution> {
    let [x1, x2] = two_level_interior(model)?;
    let (m1, m2) = (model.levels[0].miss_penalty, model.levels[1].miss_penalty);
    let d = model.cutoff;
    let excess = model.excess();
    if model.target_delay < model.cpi_base {
        return Ok(Solution::new(model, Status::Infeasible, Vec::new()));
    }
    if excess <= 0.0 {
        return Ok(Solution::new(model, Status::NoCache, vec![0.0, 0.0]));
    }
    if x1 <= d && x2 <= d {
        return Ok(Solution::new(model, Status::Interior, vec![x1, x2]));
    }
    // The optimum sits on the binding line m_1 x_1 + m_2 x_2 = D * excess.
    // Restricted to the box the line is a segment and the cost is convex
    // along it, so the best point is the segment end nearest the stationary
    // point. Try every place the line meets the box and keep the cheapest.
    let target = d * excess;
    let candidates = [
        [d, (target - m1 * d) / m2],
        [(target - m2 * d) / m1, d],
        [0.0, target / m2],
        [target / m1, 0.0],
    ];
    let eps = 1e-12 * d;
    let best = candidates
        .into_iter()
        .filter(|c| c.iter().all(|&x| (-eps..=d + eps).contains(&x)))
        .map(|c| [c[0].clamp(0.0, d), c[1].clamp(0.0, d)])
        .min_by(|a, b| model.cost(a).total_cmp(&model.cost(b)))
        .unwrap_or([d, d]);
    Ok(Solution::new(model, Status::Clamped, best.to_vec()))
}

pub fn optimal(model: &StepModel) -> Result<Solution> {
    match model.levels.len() {
        1 => optimal_one_level(model),
        _ => optimal_two_level(model),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameter {
    UnitCost(usize),
    MissPenalty(usize),
    CpiBase,
    TargetDelay,
}

impl Parameter {
    fn apply(&self, model: &mut StepModel, factor: f64) -> Result<()> {
        let slot = match *self {
            Parameter::UnitCost(i) => model.levels.get_mut(i).map(|l| &mut l.unit_cost),
            Parameter::MissPenalty(i) => model.levels.get_mut(i).map(|l| &mut l.miss_penalty),
            Parameter::CpiBase => Some(&mut model.cpi_base),
            Parameter::TargetDelay => Some(&mut model.target_delay),
        };
        let v = slot
            .ok_or_else(|| Error::InvalidModel(format!("{self} does not exist in this model")))?;
        *v *= factor;
        Ok(())
    }
}

impl std::fmt::Display for Parameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Parameter::UnitCost(i) => write!(f, "a{}", i + 1),
            Parameter::MissPenalty(i) => write!(f, "m{}", i + 1),
            Parameter::CpiBase => f.write_str("cpi"),
            Parameter::TargetDelay => f.write_str("t"),
        }
    }
}

impl std::str::FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let level = |rest: &str| {
            rest.parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .map(|n| n - 1)
                .ok_or_else(|| Error::InvalidModel(format!("unknown parameter {s:?}")))
        };
        match s.to_ascii_lowercase().as_str() {
            "cpi" | "cpi_base" => Ok(Parameter::CpiBase),
            "t" | "target" => Ok(Parameter::TargetDelay),
            p if p.starts_with('a') => level(&p[1..]).map(Parameter::UnitCost),
            p if p.starts_with('m') => level(&p[1..]).map(Parameter::MissPenalty),
            _ => Err(Error::InvalidModel(format!("unknown parameter {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub parameter: Parameter,
    pub relative_delta: f64,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    /// `after - before` per level.
    pub change: Vec<f64>,
}

/// Size change when `parameter` is scaled by `1 + relative_delta`. Both the
/// base and the perturbed model must have an interior optimum.
pub fn sensitivity(
    model: &StepModel,
    parameter: Parameter,
    relative_delta: f64,
) -> Result<Sensitivity> {
    let before = optimal(model)?;
    let mut perturbed = model.clone();
    parameter.apply(&mut perturbed, 1.0 + relative_delta)?;
    let after = optimal(&perturbed)?;
    if before.status != Status::Interior || after.status != Status::Interior {
        return Err(Error::InvalidModel(format!(
            "perturbing {parameter} by {relative_delta} leaves the interior region"
        )));
    }
    let change = after
        .sizes
        .iter()
        .zip(&before.sizes)
        .map(|(a, b)| a - b)
        .collect();
    Ok(Sensitivity {
        parameter,
        relative_delta,
        before: before.sizes,
        after: after.sizes,
        change,
    })
}

fn relative(actual: f64, expected: f64) -> f64 {
    (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `sum(m_i x_i) / D` against `CPI_base + sum(m_i) - T`, relative.
    pub constraint: f64,
    /// `x_1 / x_2` against `a_2 m_1 / (a_1 m_2)`, relative; two-level only.
    pub stationarity: Option<f64>,
}

/// Optimality-condition residuals of an interior solution.
pub fn residuals(model: &StepModel, sizes: &[f64]) -> Residuals {
    let lhs: f64 = model
        .levels
        .iter()
        .zip(sizes)
        .map(|(l, x)| l.miss_penalty * x / model.cutoff)
        .sum();
    let stationarity = match (&model.levels[..], sizes) {
        ([l1, l2], [x1, x2]) => Some(relative(
            x1 / x2,
            l2.unit_cost * l1.miss_penalty / (l1.unit_cost * l2.miss_penalty),
        )),
        _ => None,
    };
    Residuals {
        constraint: relative(lhs, model.excess()),
        stationarity,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub parameter: Parameter,
    pub relative_delta: f64,
    /// `None` when the perturbation leaves the interior region.
    pub change: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport {
    pub model: StepModel,
    pub solution: Solution,
    /// Present for interior solutions only.
    pub residuals: Option<Residuals>,
    pub sensitivity: Vec<SensitivityRow>,
    pub notes: Vec<String>,
}

impl AnalyticReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Solves the model and perturbs every unit cost and miss penalty by
/// `relative_delta`.
pub fn report(model: &StepModel, relative_delta: f64) -> Result<AnalyticReport> {
    let solution = optimal(model)?;
    let interior = solution.status == Status::Interior;
    let residuals = interior.then(|| residuals(model, &solution.sizes));
    let parameters =
        (0..model.levels.len()).flat_map(|i| [Parameter::UnitCost(i), Parameter::MissPenalty(i)]);
    let sensitivity = if interior {
        parameters
            .map(|parameter| SensitivityRow {
                parameter,
                relative_delta,
                change: sensitivity(model, parameter, relative_delta)
                    .ok()
                    .map(|s| s.change),
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut notes = Vec::new();
    match solution.status {
        Status::NoCache => notes.push(
            "the delay bound holds with no cache; a cache here only adds cost".to_string(),
        ),
        Status::Clamped => notes.push(
            "the stationary point exceeds the cutoff D on some level; the boundary optimum is reported"
                .to_string(),
        ),
        Status::Infeasible => notes.push("T is below CPI_base; no cache size meets it".to_string()),
        Status::Interior => {}
    }
    if model.step_height.is_some() {
        notes.push("step height does not affect miss rates".to_string());
    }
    Ok(AnalyticReport {
        model: model.clone(),
        solution,
        residuals,
        sensitivity,
        notes,
    })
}
