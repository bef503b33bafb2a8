//! Scanning search over power-of-two cache sizes.
//!
//! Every size tuple of the grid is evaluated: per-level miss rates come from
//! the histogram (or, for cross-validation, from the simulator), then the
//! average access delay `t = CPI_base + sum(m_i * miss_rate_i)`, the total cost
//! and the total power are computed. The winner is the feasible row with the
//! smallest objective; ties go to the smaller total size, then to the
//! lexicographically smaller tuple.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{estimate, estimate_with_curve, HierarchyConfig, Inclusion};
use crate::reuse::ReuseHistogram;
use crate::simulate::{simulate, Associativity, Replacement, SimConfig};
use crate::trace::BlockTrace;

/// Inclusive exponent range `[lo, hi]`; sizes are `2^e` bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentRange {
    pub lo: u32,
    pub hi: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeGrid {
    pub levels: Vec<ExponentRange>,
}

impl SizeGrid {
    pub fn new(ranges: &[(u32, u32)]) -> Self {
        Self {
            levels: ranges
                .iter()
                .map(|&(lo, hi)| ExponentRange { lo, hi })
                .collect(),
        }
    }

    /// L1 `2^10..2^23`, L2 `2^11..2^24`, L3 `2^12..2^25` bytes.
    pub fn three_level_default() -> Self {
        Self::new(&[(10, 23), (11, 24), (12, 25)])
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }
}

impl std::str::FromStr for SizeGrid {
    type Err = Error;

    /// `"10..23,11..24"` or `"10-23,11-24"`; a bare exponent is a single size.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::config(format!("bad exponent {t:?} in grid {s:?}")))
        };
        let levels = s
            .split(',')
            .map(|part| {
                let (lo, hi) = part
                    .split_once("..")
                    .or_else(|| part.split_once('-'))
                    .unwrap_or((part, part));
                Ok(ExponentRange {
                    lo: parse(lo)?,
                    hi: parse(hi)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { levels })
    }
}

/// All size tuples (bytes) with strictly increasing exponents, in
/// lexicographic order.
pub fn enumerate_grid(grid: &SizeGrid) -> Result<Vec<Vec<u64>>> {
    if grid.levels.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for (i, r) in grid.levels.iter().enumerate() {
        if r.lo > r.hi || r.hi > 62 {
            return Err(Error::config(format!(
                "L{} exponent range {}..{} is invalid",
                i + 1,
                r.lo,
                r.hi
            )));
        }
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(grid.levels.len());
    extend(&grid.levels, &mut current, &mut out);
    Ok(out)
}

fn extend(ranges: &[ExponentRange], current: &mut Vec<u32>, out: &mut Vec<Vec<u64>>) {
    let Some(range) = ranges.get(current.len()) else {
        out.push(current.iter().map(|&e| 1u64 << e).collect());
        return;
    };
    let lo = current
        .last()
        .map_or(range.lo, |&prev| range.lo.max(prev + 1));
    for e in lo..=range.hi {
        current.push(e);
        extend(ranges, current, out);
        current.pop();
    }
}

/// Per-level cost `c_i(x)`; the hierarchy cost is the sum over levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "form")]
pub enum CostModel {
    /// `c_i(x) = a_i * x^2`, `x` in bytes.
    Quadratic { coeffs: Vec<f64> },
    /// Explicit cost per size (bytes) for every level.
    Table { levels: Vec<BTreeMap<u64, f64>> },
}

impl CostModel {
    pub fn num_levels(&self) -> usize {
        match self {
            CostModel::Quadratic { coeffs } => coeffs.len(),
            CostModel::Table { levels } => levels.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CostModel::Quadratic { coeffs } => {
                if let Some(a) = coeffs.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
                    return Err(Error::InvalidModel(format!(
                        "cost coefficient {a} must be positive"
                    )));
                }
            }
            CostModel::Table { levels } => {
                for (i, table) in levels.iter().enumerate() {
                    if table
                        .values()
                        .zip(table.values().skip(1))
                        .any(|(a, b)| b <= a)
                    {
                        return Err(Error::InvalidModel(format!(
                            "L{} cost table is not increasing in size",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn level_cost(&self, level: usize, size_bytes: u64) -> Result<f64> {
        match self {
            CostModel::Quadratic { coeffs } => {
                let x = size_bytes as f64;
                Ok(coeffs[level] * x * x)
            }
            CostModel::Table { levels } => {
                levels[level].get(&size_bytes).copied().ok_or_else(|| {
                    Error::InvalidModel(format!("no L{} cost for {size_bytes} bytes", level + 1))
                })
            }
        }
    }

    pub fn total(&self, sizes: &[u64]) -> Result<f64> {
        sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| self.level_cost(i, s))
            .sum()
    }
}

/// Static power proportional to size plus dynamic energy per access.
///
/// Level 1 is accessed by every reference, level `i` by the misses of level
/// `i - 1`, and memory by the misses of the last level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub static_per_byte: Vec<f64>,
    pub dynamic_per_access: Vec<f64>,
    pub memory_per_access: f64,
}

impl PowerModel {
    pub fn zero(levels: usize) -> Self {
        Self {
            static_per_byte: vec![0.0; levels],
            dynamic_per_access: vec![0.0; levels],
            memory_per_access: 0.0,
        }
    }

    pub fn validate(&self, levels: usize) -> Result<()> {
        if self.static_per_byte.len() != levels || self.dynamic_per_access.len() != levels {
            return Err(Error::InvalidModel(format!(
                "power model needs {levels} levels"
            )));
        }
        let all = self
            .static_per_byte
            .iter()
            .chain(&self.dynamic_per_access)
            .chain(std::iter::once(&self.memory_per_access));
        for c in all {
            if !(c.is_finite() && *c >= 0.0) {
                return Err(Error::InvalidModel(format!(
                    "power coefficient {c} must be non-negative"
                )));
            }
        }
        Ok(())
    }

    pub fn total(&self, sizes: &[u64], miss_counts: &[u64], total_accesses: u64) -> f64 {
        let mut accesses = total_accesses;
        let mut p = 0.0;
        for (i, (&size, &misses)) in sizes.iter().zip(miss_counts).enumerate() {
            p += self.static_per_byte[i] * size as f64
                + self.dynamic_per_access[i] * accesses as f64;
            accesses = misses;
        }
        p + self.memory_per_access * accesses as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Objective {
    /// Minimize total cost subject to `t <= max_delay`.
    MinCost { max_delay: f64 },
    /// Minimize total power subject to `t <= max_delay`.
    MinPower { max_delay: f64 },
    /// Minimize `t` subject to total cost `<= max_cost`.
    MinDelay { max_cost: f64 },
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::MinCost { .. } => "min-cost",
            Objective::MinPower { .. } => "min-power",
            Objective::MinDelay { .. } => "min-delay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub objective: Objective,
    pub cpi_base: f64,
    /// Miss penalty per level, in cycles.
    pub miss_penalties: Vec<f64>,
    pub inclusion: Inclusion,
    pub cost: CostModel,
    pub power: PowerModel,
}

impl ObjectiveSpec {
    pub fn num_levels(&self) -> usize {
        self.miss_penalties.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_levels();
        if n == 0 {
            return Err(Error::InvalidModel(
                "at least one miss penalty is required".into(),
            ));
        }
        if let Some(m) = self
            .miss_penalties
            .iter()
            .find(|m| !(m.is_finite() && **m > 0.0))
        {
            return Err(Error::InvalidModel(format!(
                "miss penalty {m} must be positive"
            )));
        }
        if !self.cpi_base.is_finite() {
            return Err(Error::InvalidModel("CPI_base must be finite".into()));
        }
        let bound = match self.objective {
            Objective::MinCost { max_delay } | Objective::MinPower { max_delay } => max_delay,
            Objective::MinDelay { max_cost } => max_cost,
        };
        if bound.is_nan() {
            return Err(Error::InvalidModel("bound must be a number".into()));
        }
        if self.cost.num_levels() != n {
            return Err(Error::InvalidModel(format!("cost model needs {n} levels")));
        }
        self.cost.validate()?;
        self.power.validate(n)
    }

    /// `CPI_base + sum(m_i * miss_rate_i)`.
    pub fn delay_from_rates(&self, miss_rates: &[f64]) -> f64 {
        self.cpi_base
            + self
                .miss_penalties
                .iter()
                .zip(miss_rates)
                .map(|(m, r)| m * r)
                .sum::<f64>()
    }
}

/// Average access delay of one hierarchy, with miss rates from the histogram.
pub fn delay(hist: &ReuseHistogram, config: &HierarchyConfig, spec: &ObjectiveSpec) -> Result<f64> {
    if config.levels.len() != spec.num_levels() {
        return Err(Error::InvalidModel(format!(
            "{} miss penalties for a {}-level hierarchy",
            spec.num_levels(),
            config.levels.len()
        )));
    }
    let est = estimate(hist, config)?;
    Ok(spec.delay_from_rates(&est.miss_rates()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub sizes: Vec<u64>,
    pub miss_counts: Vec<u64>,
    pub miss_rates: Vec<f64>,
    pub delay: f64,
    pub cost: f64,
    pub power: f64,
    pub feasible: bool,
}

impl ScanRow {
    pub fn total_size(&self) -> u64 {
        self.sizes.iter().sum()
    }

    pub fn objective_value(&self, objective: &Objective) -> f64 {
        match objective {
            Objective::MinCost { .. } => self.cost,
            Objective::MinPower { .. } => self.power,
            Objective::MinDelay { .. } => self.delay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub objective: Objective,
    /// Index into `rows` of the winner; `None` when nothing is feasible.
    pub best: Option<usize>,
    pub rows: Vec<ScanRow>,
}

#[derive(Serialize)]
struct Summary<'a> {
    objective: &'a Objective,
    feasible: bool,
    objective_value: Option<f64>,
    best: Option<&'a ScanRow>,
}

#[derive(Serialize)]
struct JsonExport<'a> {
    #[serde(flatten)]
    summary: Summary<'a>,
    rows: &'a [ScanRow],
}

impl OptimizationResult {
    pub fn best_row(&self) -> Option<&ScanRow> {
        self.best.map(|i| &self.rows[i])
    }

    pub fn objective_value(&self) -> Option<f64> {
        self.best_row().map(|r| r.objective_value(&self.objective))
    }

    fn summary(&self) -> Summary<'_> {
        Summary {
            objective: &self.objective,
            feasible: self.best.is_some(),
            objective_value: self.objective_value(),
            best: self.best_row(),
        }
    }

    fn levels(&self) -> usize {
        self.rows.first().map_or(0, |r| r.sizes.len())
    }

    /// CSV `x1..xn,miss1..missn,t,cost,power,feasible`; `miss_i` is a rate.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let n = self.levels();
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (1..=n)
            .map(|i| format!("x{i}"))
            .chain((1..=n).map(|i| format!("miss{i}")))
            .chain(["t", "cost", "power", "feasible"].map(String::from))
            .collect();
        w.write_record(&header)?;
        for row in &self.rows {
            let record: Vec<String> = row
                .sizes
                .iter()
                .map(u64::to_string)
                .chain(row.miss_rates.iter().map(f64::to_string))
                .chain([
                    row.delay.to_string(),
                    row.cost.to_string(),
                    row.power.to_string(),
                    row.feasible.to_string(),
                ])
                .collect();
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<optimization csv>", e))?;
        Ok(())
    }

    /// One-record CSV naming the winner (empty size fields when infeasible).
    pub fn write_summary_csv(&self, writer: impl Write) -> Result<()> {
        let n = self.levels();
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = ["mode", "feasible"]
            .map(String::from)
            .into_iter()
            .chain((1..=n).map(|i| format!("x{i}")))
            .chain(["t", "cost", "power", "objective"].map(String::from))
            .collect();
        w.write_record(&header)?;
        let mut record = vec![
            self.objective.name().to_string(),
            self.best.is_some().to_string(),
        ];
        match self.best_row() {
            Some(row) => {
                record.extend(row.sizes.iter().map(u64::to_string));
                record.extend([
                    row.delay.to_string(),
                    row.cost.to_string(),
                    row.power.to_string(),
                    row.objective_value(&self.objective).to_string(),
                ]);
            }
            None => record.extend(std::iter::repeat_n(String::new(), n + 4)),
        }
        w.write_record(&record)?;
        w.flush().map_err(|e| Error::io("<optimization csv>", e))?;
        Ok(())
    }

    /// JSON with the same fields as the CSV table plus the winner summary.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&JsonExport {
            summary: self.summary(),
            rows: &self.rows,
        })?)
    }
}

/// Simulator settings used when scanning with simulated miss counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimTemplate {
    pub associativity: Associativity,
    pub replacement: Replacement,
    pub lru_inheritance: bool,
}

impl Default for SimTemplate {
    fn default() -> Self {
        Self {
            associativity: Associativity::Full,
            replacement: Replacement::Lru,
            lru_inheritance: false,
        }
    }
}

impl SimTemplate {
    pub fn config(&self, sizes: &[u64], line_size_bytes: u64, inclusion: Inclusion) -> SimConfig {
        SimConfig::uniform(
            sizes,
            line_size_bytes,
            inclusion,
            self.associativity,
            self.replacement,
        )
        .with_inheritance(self.lru_inheritance)
    }
}

fn prepare(grid: &SizeGrid, spec: &ObjectiveSpec, line_size_bytes: u64) -> Result<Vec<Vec<u64>>> {
    spec.validate()?;
    if grid.num_levels() != spec.num_levels() {
        return Err(Error::InvalidModel(format!(
            "grid has {} levels but the objective has {}",
            grid.num_levels(),
            spec.num_levels()
        )));
    }
    let tuples = enumerate_grid(grid)?;
    if let Some(t) = tuples.first() {
        HierarchyConfig::new(t.clone(), line_size_bytes, spec.inclusion)?;
    }
    Ok(tuples)
}

fn make_row(
    spec: &ObjectiveSpec,
    sizes: Vec<u64>,
    miss_counts: Vec<u64>,
    total: u64,
) -> Result<ScanRow> {
    let miss_rates: Vec<f64> = miss_counts
        .iter()
        .map(|&m| crate::estimate::rate(m, total))
        .collect();
    let delay = spec.delay_from_rates(&miss_rates);
    let cost = spec.cost.total(&sizes)?;
    let power = spec.power.total(&sizes, &miss_counts, total);
    let feasible = match spec.objective {
        Objective::MinCost { max_delay } | Objective::MinPower { max_delay } => delay <= max_delay,
        Objective::MinDelay { max_cost } => cost <= max_cost,
    };
    Ok(ScanRow {
        sizes,
        miss_counts,
        miss_rates,
        delay,
        cost,
        power,
        feasible,
    })
}

fn select_best(objective: &Objective, rows: &[ScanRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, row) in rows.iter().enumerate().filter(|(_, r)| r.feasible) {
        let better = match best.map(|b| &rows[b]) {
            None => true,
            Some(cur) => {
                let (a, b) = (
                    row.objective_value(objective),
                    cur.objective_value(objective),
                );
                a < b || (a == b && (row.total_size(), &row.sizes) < (cur.total_size(), &cur.sizes))
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Evaluates every grid tuple with histogram-based miss counts.
pub fn scan_search(
    hist: &ReuseHistogram,
    grid: &SizeGrid,
    spec: &ObjectiveSpec,
) -> Result<OptimizationResult> {
    let tuples = prepare(grid, spec, hist.block_size_bytes)?;
    let curve = hist.miss_curve();
    let rows = tuples
        .into_par_iter()
        .map(|sizes| {
            let config = HierarchyConfig {
                levels: sizes,
                line_size_bytes: hist.block_size_bytes,
                inclusion: spec.inclusion,
            };
            config.validate()?;
            let est = estimate_with_curve(&curve, &config);
            make_row(spec, config.levels, est.miss_counts(), hist.total_accesses)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimizationResult {
        objective: spec.objective,
        best: select_best(&spec.objective, &rows),
        rows,
    })
}

/// Same scan with miss counts from the reference simulator.
pub fn scan_search_simulated(
    trace: &BlockTrace,
    grid: &SizeGrid,
    spec: &ObjectiveSpec,
    template: &SimTemplate,
) -> Result<OptimizationResult> {
    let tuples = prepare(grid, spec, trace.line_size_bytes())?;
    let rows = tuples
        .into_par_iter()
        .map(|sizes| {
            let config = template.config(&sizes, trace.line_size_bytes(), spec.inclusion);
            let sim = simulate(trace, &config)?;
            make_row(spec, sizes, sim.miss_counts(), sim.total_accesses)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimizationResult {
        objective: spec.objective,
        best: select_best(&spec.objective, &rows),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reuse::histogram_fast;
    use crate::trace::{gen_cyclic, BlockTrace};

    fn abc_hist() -> ReuseHistogram {
        histogram_fast(&BlockTrace::new(vec![1, 2, 3, 2, 3, 1], 64).unwrap())
    }

    fn spec(objective: Objective, penalties: Vec<f64>, coeffs: Vec<f64>) -> ObjectiveSpec {
        let n = penalties.len();
        ObjectiveSpec {
            objective,
            cpi_base: 1.0,
            miss_penalties: penalties,
            inclusion: Inclusion::Exclusive,
            cost: CostModel::Quadratic { coeffs },
            power: PowerModel::zero(n),
        }
    }

    #[test]
    fn grid_counts() {
        assert_eq!(
            enumerate_grid(&SizeGrid::three_level_default())
                .unwrap()
                .len(),
            560
        );
        let one = enumerate_grid(&SizeGrid::new(&[(10, 23)])).unwrap();
        assert_eq!(one.len(), 14);
        assert_eq!(one[0], vec![1024]);
        assert!(enumerate_grid(&SizeGrid::new(&[(10, 10), (10, 10)]))
            .unwrap()
            .is_empty());
        assert!(matches!(
            enumerate_grid(&SizeGrid::new(&[])),
            Err(Error::EmptyGrid)
        ));
        assert!(enumerate_grid(&SizeGrid::new(&[(5, 4)])).is_err());
    }

    #[test]
    fn grid_order_is_lexicographic_and_increasing() {
        let tuples = enumerate_grid(&SizeGrid::new(&[(1, 4), (2, 5), (3, 6)])).unwrap();
        assert!(tuples.windows(2).all(|w| w[0] < w[1]));
        assert!(tuples.iter().all(|t| t[0] < t[1] && t[1] < t[2]));
    }

    #[test]
    fn grid_parsing() {
        let g: SizeGrid = "10..23,11-24,12".parse().unwrap();
        assert_eq!(g, SizeGrid::new(&[(10, 23), (11, 24), (12, 12)]));
        assert!("a..b".parse::<SizeGrid>().is_err());
    }

    #[test]
    fn delay_cases() {
        let h = abc_hist();
        let s = spec(
            Objective::MinCost { max_delay: 100.0 },
            vec![10.0, 100.0],
            vec![2.0, 1.0],
        );
        // caps (2, 4) blocks: L1 misses 4/6, L2 misses 3/6
        let cfg = HierarchyConfig::new(vec![128, 256], 64, Inclusion::Exclusive).unwrap();
        let t = delay(&h, &cfg, &s).unwrap();
        assert!((t - (1.0 + 10.0 * 4.0 / 6.0 + 100.0 * 3.0 / 6.0)).abs() < 1e-12);
        assert!((t - 57.666_666_666_666_67).abs() < 1e-9);

        let one = spec(
            Objective::MinCost { max_delay: 100.0 },
            vec![10.0],
            vec![1.0],
        );
        let cold_only = BlockTrace::new(vec![1, 2, 3], 64).unwrap();
        let cfg = HierarchyConfig::new(vec![64], 64, Inclusion::Exclusive).unwrap();
        assert_eq!(
            delay(&histogram_fast(&cold_only), &cfg, &one).unwrap(),
            11.0
        );
        assert_eq!(one.delay_from_rates(&[0.0]), 1.0);
    }

    #[test]
    fn single_level_picks_smallest_feasible() {
        // working set of 64 blocks: every capacity below misses everything
        let h = histogram_fast(&gen_cyclic(64, 50).unwrap());
        let s = spec(Objective::MinCost { max_delay: 1.5 }, vec![10.0], vec![1.0]);
        let r = scan_search(&h, &SizeGrid::new(&[(0, 10)]), &s).unwrap();
        assert_eq!(r.rows.len(), 11);
        assert_eq!(r.best_row().unwrap().sizes, vec![64]);
        for row in &r.rows {
            assert_eq!(row.feasible, row.sizes[0] >= 64);
        }
    }

    #[test]
    fn unattainable_bound_is_infeasible() {
        let h = histogram_fast(&gen_cyclic(8, 4).unwrap());
        let s = spec(Objective::MinCost { max_delay: 0.5 }, vec![10.0], vec![1.0]);
        let r = scan_search(&h, &SizeGrid::new(&[(0, 6)]), &s).unwrap();
        assert!(r.best.is_none());
        assert_eq!(r.rows.len(), 7);
        let mut buf = Vec::new();
        r.write_summary_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "mode,feasible,x1,t,cost,power,objective\nmin-cost,false,,,,,\n"
        );
    }

    #[test]
    fn tie_break_prefers_smaller_total() {
        let h = histogram_fast(&gen_cyclic(4, 10).unwrap());
        // budget admits every tuple, so only delay and the tie-break matter
        let table: BTreeMap<u64, f64> =
            (0..8).map(|e| (1u64 << e, 1.0 + e as f64 * 1e-9)).collect();
        let mut s = spec(
            Objective::MinDelay { max_cost: 10.0 },
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        );
        s.cost = CostModel::Table {
            levels: vec![table.clone(), table],
        };
        let r = scan_search(&h, &SizeGrid::new(&[(0, 6), (1, 7)]), &s).unwrap();
        // delay bottoms out once L1 alone holds the 4-block loop
        let best = r.best_row().unwrap();
        assert_eq!(best.sizes, vec![4, 8]);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let h = abc_hist();
        let s = spec(Objective::MinCost { max_delay: 5.0 }, vec![10.0], vec![1.0]);
        assert!(scan_search(&h, &SizeGrid::new(&[(6, 8), (7, 9)]), &s).is_err());
        // 32-byte level smaller than the 64-byte line
        assert!(scan_search(&h, &SizeGrid::new(&[(5, 8)]), &s).is_err());
        let mut bad = s.clone();
        bad.miss_penalties = vec![0.0];
        assert!(scan_search(&h, &SizeGrid::new(&[(6, 8)]), &bad).is_err());
        let mut bad = s.clone();
        bad.cost = CostModel::Table {
            levels: vec![[(64, 2.0), (128, 1.0)].into_iter().collect()],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn power_accounting() {
        let p = PowerModel {
            static_per_byte: vec![1.0, 0.5],
            dynamic_per_access: vec![2.0, 3.0],
            memory_per_access: 10.0,
        };
        // 100 accesses, L1 misses 40, L2 misses 10
        let total = p.total(&[64, 256], &[40, 10], 100);
        assert_eq!(total, 64.0 + 128.0 + 2.0 * 100.0 + 3.0 * 40.0 + 10.0 * 10.0);
    }

    #[test]
    fn exports() {
        let h = abc_hist();
        let s = spec(
            Objective::MinCost { max_delay: 100.0 },
            vec![10.0, 100.0],
            vec![2.0, 1.0],
        );
        let r = scan_search(&h, &SizeGrid::new(&[(6, 7), (7, 8)]), &s).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next(),
            Some("x1,x2,miss1,miss2,t,cost,power,feasible")
        );
        assert_eq!(text.lines().count(), 1 + r.rows.len());
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["rows"].as_array().unwrap().len(), r.rows.len());
        assert_eq!(json["objective"]["mode"], "min-cost");
        assert_eq!(
            json["best"]["sizes"],
            serde_json::json!(r.best_row().unwrap().sizes)
        );
    }

    #[test]
    fn simulated_scan_matches_histogram_scan_for_exclusive_lru() {
        let t = crate::trace::gen_random(64, 3000, 5).unwrap();
        let h = histogram_fast(&t);
        let s = spec(
            Objective::MinCost { max_delay: 4.0 },
            vec![5.0, 20.0],
            vec![4.0, 1.0],
        );
        let grid = SizeGrid::new(&[(0, 5), (1, 6)]);
        let est = scan_search(&h, &grid, &s).unwrap();
        let sim = scan_search_simulated(&t, &grid, &s, &SimTemplate::default()).unwrap();
        assert_eq!(est, sim);
    }

    proptest::proptest! {
        #[test]
        fn infeasibility_is_inherited_by_smaller_tuples(seed in 0u64..200, bound in 1.5f64..40.0) {
            let h = histogram_fast(&crate::trace::gen_random(300, 3000, seed).unwrap());
            let s = spec(Objective::MinCost { max_delay: bound }, vec![8.0, 60.0], vec![1.0, 0.5]);
            let r = scan_search(&h, &SizeGrid::new(&[(0, 7), (1, 9)]), &s).unwrap();
            for x in r.rows.iter().filter(|r| !r.feasible) {
                for y in &r.rows {
                    if y.sizes.iter().zip(&x.sizes).all(|(a, b)| a <= b) {
                        proptest::prop_assert!(!y.feasible, "{:?} feasible but {:?} is not", y.sizes, x.sizes);
                    }
                }
            }
            if let Some(best) = r.best_row() {
                proptest::prop_assert!(best.delay <= bound);
                proptest::prop_assert_eq!(best.cost, s.cost.total(&best.sizes).unwrap());
            }
        }
    }
}
