//! Estimator against the reference simulator over a set of hierarchies.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{estimate_with_curve, HierarchyConfig, Inclusion};
use crate::optimize::SimTemplate;
use crate::reuse::histogram_fast;
use crate::simulate::simulate;
use crate::trace::BlockTrace;

/// `|estimated - simulated| / max(simulated, 1)`.
pub fn relative_error(estimated: u64, simulated: u64) -> f64 {
    estimated.abs_diff(simulated) as f64 / simulated.max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub sizes: Vec<u64>,
    pub estimated: Vec<u64>,
    pub simulated: Vec<u64>,
    pub relative_error: Vec<f64>,
}

impl CompareRow {
    pub fn exact(&self) -> bool {
        self.estimated == self.simulated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub inclusion: Inclusion,
    pub simulator: SimTemplate,
    pub total_accesses: u64,
    pub rows: Vec<CompareRow>,
    /// Mean relative error per level.
    pub mean_error: Vec<f64>,
    /// Max relative error per level.
    pub max_error: Vec<f64>,
}

impl CompareReport {
    pub fn all_exact(&self) -> bool {
        self.rows.iter().all(CompareRow::exact)
    }

    /// Mean over every (row, level) pair.
    pub fn overall_mean_error(&self) -> f64 {
        let errors: Vec<f64> = self
            .rows
            .iter()
            .flat_map(|r| r.relative_error.iter().copied())
            .collect();
        if errors.is_empty() {
            0.0
        } else {
            errors.iter().sum::<f64>() / errors.len() as f64
        }
    }

    pub fn overall_max_error(&self) -> f64 {
        self.max_error.iter().copied().fold(0.0, f64::max)
    }

    /// CSV `x1..xn,est1..estn,sim1..simn,err1..errn`.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let n = self.rows.first().map_or(0, |r| r.sizes.len());
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = ["x", "est", "sim", "err"]
            .iter()
            .flat_map(|p| (1..=n).map(move |i| format!("{p}{i}")))
            .collect();
        w.write_record(&header)?;
        for r in &self.rows {
            let record: Vec<String> = r
                .sizes
                .iter()
                .chain(&r.estimated)
                .chain(&r.simulated)
                .map(u64::to_string)
                .chain(r.relative_error.iter().map(f64::to_string))
                .collect();
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<compare csv>", e))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the estimator and the simulator on every size tuple (bytes).
pub fn compare(
    trace: &BlockTrace,
    configs: &[Vec<u64>],
    inclusion: Inclusion,
    simulator: &SimTemplate,
) -> Result<CompareReport> {
    let line = trace.line_size_bytes();
    let hist = histogram_fast(trace);
    let curve = hist.miss_curve();
    let rows = configs
        .par_iter()
        .map(|sizes| {
            let config = HierarchyConfig::new(sizes.clone(), line, inclusion)?;
            let estimated = estimate_with_curve(&curve, &config).miss_counts();
            let simulated =
                simulate(trace, &simulator.config(sizes, line, inclusion))?.miss_counts();
            let relative_error = estimated
                .iter()
                .zip(&simulated)
                .map(|(&e, &s)| relative_error(e, s))
                .collect();
            Ok(CompareRow {
                sizes: sizes.clone(),
                estimated,
                simulated,
                relative_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.iter().map(|r| r.sizes.len()).max().unwrap_or(0);
    let mut mean_error = vec![0.0; n];
    let mut max_error = vec![0.0f64; n];
    let mut counts = vec![0usize; n];
    for r in &rows {
        for (i, &e) in r.relative_error.iter().enumerate() {
            mean_error[i] += e;
            max_error[i] = max_error[i].max(e);
            counts[i] += 1;
        }
    }
    for (m, c) in mean_error.iter_mut().zip(&counts) {
        *m /= (*c).max(1) as f64;
    }
    Ok(CompareReport {
        inclusion,
        simulator: *simulator,
        total_accesses: hist.total_accesses,
        rows,
        mean_error,
        max_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::{enumerate_grid, SizeGrid};
    use crate::trace::gen_random;

    #[test]
    fn relative_error_cases() {
        assert_eq!(relative_error(4, 4), 0.0);
        assert_eq!(relative_error(5, 4), 0.25);
        assert_eq!(relative_error(3, 4), 0.25);
        assert_eq!(relative_error(2, 0), 2.0);
    }

    #[test]
    fn exclusive_is_exact() {
        let t = gen_random(300, 5000, 11).unwrap();
        let configs = enumerate_grid(&SizeGrid::new(&[(2, 6), (3, 8)])).unwrap();
        let r = compare(&t, &configs, Inclusion::Exclusive, &SimTemplate::default()).unwrap();
        assert!(r.all_exact());
        assert_eq!(r.overall_max_error(), 0.0);
        assert_eq!(r.rows.len(), configs.len());
    }

    #[test]
    fn inclusive_errors_are_reported() {
        let t = gen_random(300, 5000, 11).unwrap();
        let configs = enumerate_grid(&SizeGrid::new(&[(4, 6), (5, 8)])).unwrap();
        let r = compare(&t, &configs, Inclusion::Inclusive, &SimTemplate::default()).unwrap();
        for row in &r.rows {
            assert!(row
                .relative_error
                .iter()
                .all(|e| e.is_finite() && *e >= 0.0));
        }
        assert!(r.overall_mean_error().is_finite());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next(),
            Some("x1,x2,est1,est2,sim1,sim2,err1,err2")
        );
    }
}
