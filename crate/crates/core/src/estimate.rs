//! Per-level miss counts of a multi-level hierarchy from one top-level histogram.
//!
//! Capacities are converted to blocks before they are compared with reuse
//! distances. An access with distance `d` hits a fully-associative LRU cache
//! of `c` blocks exactly when `d < c`.
//!
//! * Exclusive: levels hold disjoint blocks and victims move outward, so
//!   `L1..Li` together behave like one LRU cache of `cap_1 + .. + cap_i` blocks.
//! * Inclusive: every level holds a superset of the one inside it, so level `i`
//!   misses whenever the distance reaches its own capacity `cap_i`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reuse::{MissCurve, ReuseHistogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Inclusion {
    Exclusive,
    Inclusive,
}

impl std::str::FromStr for Inclusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exclusive" => Ok(Inclusion::Exclusive),
            "inclusive" => Ok(Inclusion::Inclusive),
            other => Err(Error::config(format!("unknown inclusion policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    /// Level sizes in bytes, level 1 first.
    pub levels: Vec<u64>,
    pub line_size_bytes: u64,
    pub inclusion: Inclusion,
}

impl HierarchyConfig {
    pub fn new(levels: Vec<u64>, line_size_bytes: u64, inclusion: Inclusion) -> Result<Self> {
        let config = Self {
            levels,
            line_size_bytes,
            inclusion,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        crate::trace::check_line_size(self.line_size_bytes)?;
        validate_sizes(&self.levels, self.line_size_bytes)
    }

    pub fn capacities_blocks(&self) -> Vec<u64> {
        self.levels
            .iter()
            .map(|s| s / self.line_size_bytes)
            .collect()
    }

    /// Capacity (in blocks) whose one-level miss count equals level `i`'s miss count.
    pub fn effective_capacities(&self) -> Vec<u64> {
        let caps = self.capacities_blocks();
        match self.inclusion {
            Inclusion::Inclusive => caps,
            Inclusion::Exclusive => caps
                .iter()
                .scan(0u64, |acc, c| {
                    *acc += c;
                    Some(*acc)
                })
                .collect(),
        }
    }
}

pub(crate) fn validate_sizes(levels: &[u64], line_size_bytes: u64) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::config("hierarchy needs at least one level"));
    }
    for (i, &s) in levels.iter().enumerate() {
        if !s.is_power_of_two() {
            return Err(Error::config(format!(
                "L{} size {s} is not a power of two",
                i + 1
            )));
        }
        if s % line_size_bytes != 0 {
            return Err(Error::config(format!(
                "L{} size {s} is not a multiple of the {line_size_bytes}-byte line",
                i + 1
            )));
        }
    }
    if let Some(w) = levels.windows(2).position(|w| w[0] >= w[1]) {
        return Err(Error::config(format!(
            "level sizes must strictly increase (L{} = {}, L{} = {})",
            w + 1,
            levels[w],
            w + 2,
            levels[w + 1]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStat {
    pub size_bytes: u64,
    pub miss_count: u64,
    pub miss_rate: f64,
    /// Misses per thousand accesses.
    pub mpka: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub total_accesses: u64,
    pub levels: Vec<LevelStat>,
}

impl LevelEstimate {
    pub fn miss_counts(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.miss_count).collect()
    }

    pub fn miss_rates(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.miss_rate).collect()
    }

    pub(crate) fn from_counts(sizes: &[u64], misses: &[u64], total: u64) -> Self {
        let levels = sizes
            .iter()
            .zip(misses)
            .map(|(&size_bytes, &miss_count)| {
                let miss_rate = rate(miss_count, total);
                LevelStat {
                    size_bytes,
                    miss_count,
                    miss_rate,
                    mpka: miss_rate * 1000.0,
                }
            })
            .collect();
        Self {
            total_accesses: total,
            levels,
        }
    }

    /// CSV `level,size_bytes,miss_count,miss_rate,mpka`.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["level", "size_bytes", "miss_count", "miss_rate", "mpka"])?;
        for (i, l) in self.levels.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                l.size_bytes.to_string(),
                l.miss_count.to_string(),
                l.miss_rate.to_string(),
                l.mpka.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<estimate csv>", e))?;
        Ok(())
    }
}

pub(crate) fn rate(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

fn check_block_size(hist: &ReuseHistogram, config: &HierarchyConfig) -> Result<()> {
    if hist.block_size_bytes != config.line_size_bytes {
        return Err(Error::BlockSizeMismatch {
            histogram: hist.block_size_bytes,
            config: config.line_size_bytes,
        });
    }
    Ok(())
}

pub fn estimate(hist: &ReuseHistogram, config: &HierarchyConfig) -> Result<LevelEstimate> {
    check_block_size(hist, config)?;
    config.validate()?;
    let misses: Vec<u64> = config
        .effective_capacities()
        .into_iter()
        .map(|cap| hist.misses_beyond(cap))
        .collect();
    Ok(LevelEstimate::from_counts(
        &config.levels,
        &misses,
        hist.total_accesses,
    ))
}

/// Same as [`estimate`] against a precomputed [`MissCurve`]; used by the
/// scanning search where one histogram is queried many times.
pub fn estimate_with_curve(curve: &MissCurve, config: &HierarchyConfig) -> LevelEstimate {
    let misses: Vec<u64> = config
        .effective_capacities()
        .into_iter()
        .map(|cap| curve.misses_beyond(cap))
        .collect();
    LevelEstimate::from_counts(&config.levels, &misses, curve.total_accesses())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reuse::histogram_fast;
    use crate::trace::{gen_random, BlockTrace};
    use proptest::prelude::*;

    fn abc_hist() -> ReuseHistogram {
        histogram_fast(&BlockTrace::new(vec![1, 2, 3, 2, 3, 1], 64).unwrap())
    }

    #[test]
    fn exclusive_worked_example() {
        // L2 must be strictly larger than L1; caps (2, 4) give the same L2 count
        // as (2, 2) because nothing in the trace has distance in 4..6.
        let h = abc_hist();
        assert_eq!(h.misses_beyond(2), 4);
        assert_eq!(h.misses_beyond(4), 3);
        let cfg = HierarchyConfig::new(vec![128, 256], 64, Inclusion::Exclusive).unwrap();
        assert_eq!(estimate(&h, &cfg).unwrap().miss_counts(), vec![4, 3]);
    }

    #[test]
    fn inclusive_worked_example() {
        let cfg = HierarchyConfig::new(vec![128, 256], 64, Inclusion::Inclusive).unwrap();
        let e = estimate(&abc_hist(), &cfg).unwrap();
        assert_eq!(e.miss_counts(), vec![4, 3]);
        assert!((e.levels[0].miss_rate - 4.0 / 6.0).abs() < 1e-12);
        assert!((e.levels[1].mpka - 500.0).abs() < 1e-9);
    }

    #[test]
    fn one_level_compulsory_only() {
        let cfg = HierarchyConfig::new(vec![1024], 64, Inclusion::Inclusive).unwrap();
        assert_eq!(estimate(&abc_hist(), &cfg).unwrap().miss_counts(), vec![3]);
    }

    #[test]
    fn rejects_bad_configs() {
        let h = abc_hist();
        let cfg = HierarchyConfig {
            levels: vec![128, 256],
            line_size_bytes: 128,
            inclusion: Inclusion::Inclusive,
        };
        assert!(matches!(
            estimate(&h, &cfg),
            Err(Error::BlockSizeMismatch { .. })
        ));
        assert!(HierarchyConfig::new(vec![256, 256], 64, Inclusion::Exclusive).is_err());
        assert!(HierarchyConfig::new(vec![512, 256], 64, Inclusion::Exclusive).is_err());
        assert!(HierarchyConfig::new(vec![96], 32, Inclusion::Exclusive).is_err());
        assert!(HierarchyConfig::new(vec![32], 64, Inclusion::Exclusive).is_err());
        assert!(HierarchyConfig::new(vec![], 64, Inclusion::Exclusive).is_err());
    }

    #[test]
    fn csv_layout() {
        let cfg = HierarchyConfig::new(vec![128, 256], 64, Inclusion::Inclusive).unwrap();
        let mut buf = Vec::new();
        estimate(&abc_hist(), &cfg)
            .unwrap()
            .write_csv(&mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("level,size_bytes,miss_count,miss_rate,mpka")
        );
        assert_eq!(
            lines.next(),
            Some("1,128,4,0.6666666666666666,666.6666666666666")
        );
        assert_eq!(lines.next(), Some("2,256,3,0.5,500"));
    }

    proptest! {
        #[test]
        fn level_rules(seed in 0u64..1000, e1 in 0u32..6, d2 in 1u32..4, d3 in 1u32..4) {
            let t = gen_random(200, 2000, seed).unwrap();
            let h = histogram_fast(&t);
            let sizes = vec![1u64 << e1, 1 << (e1 + d2), 1 << (e1 + d2 + d3)];
            let inc = estimate(&h, &HierarchyConfig::new(sizes.clone(), 1, Inclusion::Inclusive).unwrap()).unwrap();
            let exc = estimate(&h, &HierarchyConfig::new(sizes.clone(), 1, Inclusion::Exclusive).unwrap()).unwrap();
            let mut acc = 0;
            for (i, s) in sizes.iter().enumerate() {
                acc += s;
                prop_assert_eq!(inc.levels[i].miss_count, h.misses_beyond(*s));
                prop_assert_eq!(exc.levels[i].miss_count, h.misses_beyond(acc));
                prop_assert!(exc.levels[i].miss_count <= inc.levels[i].miss_count);
                prop_assert!((0.0..=1.0).contains(&inc.levels[i].miss_rate));
            }
            for w in inc.levels.windows(2).chain(exc.levels.windows(2)) {
                prop_assert!(w[1].miss_count <= w[0].miss_count);
            }
            // inclusive level 2 ignores level 1
            let other = estimate(&h, &HierarchyConfig::new(vec![(sizes[0] / 2).max(1), sizes[1], sizes[2]], 1, Inclusion::Inclusive).unwrap()).unwrap();
            prop_assert_eq!(other.levels[1].miss_count, inc.levels[1].miss_count);
        }
    }
}
