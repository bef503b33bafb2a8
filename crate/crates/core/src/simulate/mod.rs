//! Reference multi-level cache simulator.
//!
//! Functional only: every access is a block id, there is no timing and no
//! write traffic. Levels are probed from L1 outward.
//!
//! Exclusive hierarchies keep each block in at most one level. A hit at an
//! outer level moves the block to L1; every level that receives a block
//! pushes its victim to the next level's MRU position, and last-level victims
//! are dropped.
//!
//! Inclusive hierarchies copy a block into every level inside the one that
//! supplied it. Evictions from an outer level back-invalidate all inner
//! copies, so each level always contains the level inside it. An inner hit
//! never refreshes outer copies. With `lru_inheritance`, an outer copy's
//! recency is parked while an inner level holds the block and the inner
//! victim's stamp is handed to it on eviction, which makes every LRU level
//! rank blocks by their true last use.

mod level;
pub mod replacement;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{rate, Inclusion};
use crate::trace::BlockTrace;
use level::{Evicted, Level};
pub use replacement::{Replacement, ReplacementState};

/// Standard modulo set mapping.
pub fn set_index(block_id: u64, num_sets: u64) -> u64 {
    block_id % num_sets
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Associativity {
    Full,
    Ways(u32),
}

impl std::str::FromStr for Associativity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "fa" => Ok(Associativity::Full),
            n => n
                .parse::<u32>()
                .ok()
                .filter(|&w| w > 0)
                .map(Associativity::Ways)
                .ok_or_else(|| Error::config(format!("bad associativity {n:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelConfig {
    pub size_bytes: u64,
    pub associativity: Associativity,
    pub replacement: Replacement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub levels: Vec<LevelConfig>,
    pub line_size_bytes: u64,
    pub inclusion: Inclusion,
    #[serde(default)]
    pub lru_inheritance: bool,
}

impl SimConfig {
    /// Fully-associative LRU at every level.
    pub fn fully_associative_lru(
        sizes: &[u64],
        line_size_bytes: u64,
        inclusion: Inclusion,
    ) -> Self {
        Self::uniform(
            sizes,
            line_size_bytes,
            inclusion,
            Associativity::Full,
            Replacement::Lru,
        )
    }

    pub fn uniform(
        sizes: &[u64],
        line_size_bytes: u64,
        inclusion: Inclusion,
        associativity: Associativity,
        replacement: Replacement,
    ) -> Self {
        Self {
            levels: sizes
                .iter()
                .map(|&size_bytes| LevelConfig {
                    size_bytes,
                    associativity,
                    replacement,
                })
                .collect(),
            line_size_bytes,
            inclusion,
            lru_inheritance: false,
        }
    }

    pub fn with_inheritance(mut self, on: bool) -> Self {
        self.lru_inheritance = on;
        self
    }

    /// `(num_sets, ways)` per level.
    pub fn geometry(&self) -> Result<Vec<(u64, usize)>> {
        crate::trace::check_line_size(self.line_size_bytes)?;
        if self.levels.is_empty() {
            return Err(Error::config("hierarchy needs at least one level"));
        }
        if self.lru_inheritance && self.inclusion != Inclusion::Inclusive {
            return Err(Error::config(
                "LRU inheritance applies to inclusive hierarchies only",
            ));
        }
        if let Some(i) = self
            .levels
            .windows(2)
            .position(|w| w[0].size_bytes >= w[1].size_bytes)
        {
            return Err(Error::config(format!(
                "level sizes must strictly increase (L{} >= L{})",
                i + 1,
                i + 2
            )));
        }
        self.levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let name = format!("L{}", i + 1);
                if l.size_bytes == 0 || l.size_bytes % self.line_size_bytes != 0 {
                    return Err(Error::config(format!(
                        "{name} size {} is not a positive multiple of the {}-byte line",
                        l.size_bytes, self.line_size_bytes
                    )));
                }
                let lines = l.size_bytes / self.line_size_bytes;
                let ways = match l.associativity {
                    Associativity::Full => lines,
                    Associativity::Ways(w) => u64::from(w),
                };
                if ways == 0 || !lines.is_multiple_of(ways) {
                    return Err(Error::config(format!(
                        "{name}: {lines} lines cannot be split into {ways}-way sets"
                    )));
                }
                if l.replacement == Replacement::TreePlru && !ways.is_power_of_two() {
                    return Err(Error::config(format!(
                        "{name}: tree-PLRU needs power-of-two associativity, got {ways}"
                    )));
                }
                Ok((lines / ways, ways as usize))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelCounters {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub total_accesses: u64,
    pub levels: Vec<LevelCounters>,
}

impl SimResult {
    pub fn miss_counts(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.misses).collect()
    }

    pub fn mpka(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|l| rate(l.misses, self.total_accesses) * 1000.0)
            .collect()
    }

    /// CSV `level,accesses,hits,misses,mpka`.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["level", "accesses", "hits", "misses", "mpka"])?;
        for (i, (l, mpka)) in self.levels.iter().zip(self.mpka()).enumerate() {
            w.write_record([
                (i + 1).to_string(),
                l.accesses.to_string(),
                l.hits.to_string(),
                l.misses.to_string(),
                mpka.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<simulation csv>", e))?;
        Ok(())
    }
}

/// Step-by-step hierarchy state.
#[derive(Debug, Clone)]
pub struct Simulator {
    inclusion: Inclusion,
    inheritance: bool,
    levels: Vec<Level>,
    hits: Vec<u64>,
    misses: Vec<u64>,
    clock: u64,
}

impl Simulator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        let levels = config
            .geometry()?
            .into_iter()
            .zip(&config.levels)
            .map(|((sets, ways), l)| Level::new(sets, ways, l.replacement))
            .collect::<Result<Vec<_>>>()?;
        let n = levels.len();
        Ok(Self {
            inclusion: config.inclusion,
            inheritance: config.lru_inheritance,
            levels,
            hits: vec![0; n],
            misses: vec![0; n],
            clock: 0,
        })
    }

    /// Performs one access; returns the index of the level that hit, or
    /// `None` when the block came from memory.
    pub fn access(&mut self, block: u64) -> Option<usize> {
        let now = self.clock;
        self.clock += 1;
        let hit = self.levels.iter().position(|l| l.contains(block));
        let probed = hit.unwrap_or(self.levels.len());
        self.misses[..probed].iter_mut().for_each(|m| *m += 1);
        if let Some(i) = hit {
            self.hits[i] += 1;
        }
        match self.inclusion {
            Inclusion::Exclusive => self.access_exclusive(block, hit, now),
            Inclusion::Inclusive => self.access_inclusive(block, hit, now),
        }
        hit
    }

    fn access_exclusive(&mut self, block: u64, hit: Option<usize>, now: u64) {
        if hit == Some(0) {
            self.levels[0].touch(block, now);
            return;
        }
        if let Some(i) = hit {
            self.levels[i].remove(block);
        }
        let mut incoming = Some(block);
        for level in &mut self.levels {
            match incoming {
                Some(b) => incoming = level.insert(b, now).map(|e| e.block),
                None => break,
            }
        }
    }

    fn access_inclusive(&mut self, block: u64, hit: Option<usize>, now: u64) {
        let fill_below = match hit {
            Some(i) => {
                self.levels[i].touch(block, now);
                i
            }
            None => self.levels.len(),
        };
        // outer levels first, so every insert lands below an existing copy
        for j in (0..fill_below).rev() {
            if let Some(evicted) = self.levels[j].insert(block, now) {
                self.evict_inclusive(j, evicted);
            }
        }
        if self.inheritance {
            for j in 1..=fill_below.min(self.levels.len() - 1) {
                self.levels[j].detach(block);
            }
        }
    }

    fn evict_inclusive(&mut self, level: usize, evicted: Evicted) {
        let mut stamp = evicted.stamp;
        for inner in &mut self.levels[..level] {
            if let Some(s) = inner.remove(evicted.block) {
                stamp = stamp.max(s);
            }
        }
        if self.inheritance {
            if let (Some(outer), Some(s)) = (self.levels.get_mut(level + 1), stamp) {
                outer.attach(evicted.block, s);
            }
        }
    }

    pub fn result(&self) -> SimResult {
        let total = self.clock;
        let levels = self
            .hits
            .iter()
            .zip(&self.misses)
            .map(|(&hits, &misses)| LevelCounters {
                accesses: hits + misses,
                hits,
                misses,
            })
            .collect();
        SimResult {
            total_accesses: total,
            levels,
        }
    }

    pub fn contains(&self, level: usize, block: u64) -> bool {
        self.levels[level].contains(block)
    }

    /// Checks the placement invariant of the configured inclusion policy.
    pub fn check_invariants(&self) -> Result<(), String> {
        match self.inclusion {
            Inclusion::Exclusive => {
                for (i, inner) in self.levels.iter().enumerate() {
                    for b in inner.blocks() {
                        if let Some(j) = self.levels[i + 1..].iter().position(|o| o.contains(b)) {
                            return Err(format!("block {b} in L{} and L{}", i + 1, i + j + 2));
                        }
                    }
                }
            }
            Inclusion::Inclusive => {
                for (i, pair) in self.levels.windows(2).enumerate() {
                    if let Some(b) = pair[0].blocks().find(|&b| !pair[1].contains(b)) {
                        return Err(format!("block {b} in L{} but not L{}", i + 1, i + 2));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn simulate(trace: &BlockTrace, config: &SimConfig) -> Result<SimResult> {
    if trace.line_size_bytes() != config.line_size_bytes {
        return Err(Error::BlockSizeMismatch {
            histogram: trace.line_size_bytes(),
            config: config.line_size_bytes,
        });
    }
    let mut sim = Simulator::new(config)?;
    for &b in trace.blocks() {
        sim.access(b);
    }
    Ok(sim.result())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{gen_cyclic, gen_random};

    fn abc() -> BlockTrace {
        BlockTrace::new(vec![1, 2, 3, 2, 3, 1], 64).unwrap()
    }

    /// Hand-run of a b c b c a through exclusive FA-LRU L1=2, L2=4 blocks:
    /// a,b,c miss both; c pushes a to L2; b,c hit L1; a hits L2.
    #[test]
    fn exclusive_worked_example() {
        let cfg = SimConfig::fully_associative_lru(&[128, 256], 64, Inclusion::Exclusive);
        let r = simulate(&abc(), &cfg).unwrap();
        assert_eq!(r.miss_counts(), vec![4, 3]);
        assert_eq!(r.levels[1].accesses, 4);
        assert_eq!(r.levels[1].hits, 1);
    }

    #[test]
    fn single_block() {
        let t = BlockTrace::new(vec![9, 9, 9], 1).unwrap();
        for inclusion in [Inclusion::Exclusive, Inclusion::Inclusive] {
            let cfg = SimConfig::fully_associative_lru(&[1, 2], 1, inclusion);
            let r = simulate(&t, &cfg).unwrap();
            assert_eq!((r.levels[0].hits, r.levels[0].misses), (2, 1));
        }
    }

    #[test]
    fn cyclic_fits() {
        let t = gen_cyclic(16, 10).unwrap();
        let cfg = SimConfig::fully_associative_lru(&[16], 1, Inclusion::Inclusive);
        assert_eq!(simulate(&t, &cfg).unwrap().miss_counts(), vec![16]);
        let cfg = SimConfig::fully_associative_lru(&[8], 1, Inclusion::Inclusive);
        assert_eq!(simulate(&t, &cfg).unwrap().miss_counts(), vec![160]);
    }

    #[test]
    fn set_index_cases() {
        assert_eq!(set_index(17, 16), 1);
        assert_eq!(set_index(17, 1), 0);
        for b in [0u64, 5, 123_456, u64::MAX] {
            assert_eq!(set_index(b, 64), b & 63);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::uniform(
            &[64 * 12],
            64,
            Inclusion::Inclusive,
            Associativity::Ways(8),
            Replacement::Lru,
        );
        assert!(cfg.geometry().is_err());
        cfg.levels[0].size_bytes = 64 * 16;
        assert_eq!(cfg.geometry().unwrap(), vec![(2, 8)]);
        cfg.levels[0].associativity = Associativity::Ways(6);
        cfg.levels[0].size_bytes = 64 * 12;
        cfg.levels[0].replacement = Replacement::TreePlru;
        assert!(cfg.geometry().is_err());
        let cfg = SimConfig::fully_associative_lru(&[256, 256], 64, Inclusion::Exclusive);
        assert!(cfg.geometry().is_err());
        let cfg = SimConfig::fully_associative_lru(&[128, 256], 64, Inclusion::Exclusive)
            .with_inheritance(true);
        assert!(cfg.geometry().is_err());
        let cfg = SimConfig::fully_associative_lru(&[128], 64, Inclusion::Exclusive);
        assert!(matches!(
            simulate(&BlockTrace::new(vec![1], 32).unwrap(), &cfg),
            Err(Error::BlockSizeMismatch { .. })
        ));
    }

    #[test]
    fn accounting_and_invariants_hold_every_step() {
        let t = gen_random(300, 5000, 3).unwrap();
        let geometries = [
            (Associativity::Full, Replacement::Lru),
            (Associativity::Ways(4), Replacement::Lru),
            (Associativity::Ways(4), Replacement::TreePlru),
            (Associativity::Ways(4), Replacement::BitPlru),
            (Associativity::Ways(2), Replacement::Lru),
        ];
        for (assoc, repl) in geometries {
            for (inclusion, inherit) in [
                (Inclusion::Exclusive, false),
                (Inclusion::Inclusive, false),
                (Inclusion::Inclusive, true),
            ] {
                let cfg = SimConfig::uniform(&[16, 64, 128], 1, inclusion, assoc, repl)
                    .with_inheritance(inherit);
                let mut sim = Simulator::new(&cfg).unwrap();
                for (step, &b) in t.blocks().iter().enumerate() {
                    sim.access(b);
                    assert!(sim.contains(0, b));
                    if step % 97 == 0 {
                        sim.check_invariants().unwrap();
                    }
                }
                sim.check_invariants().unwrap();
                let r = sim.result();
                assert_eq!(r.levels[0].accesses, r.total_accesses);
                for w in r.levels.windows(2) {
                    assert_eq!(w[1].accesses, w[0].misses);
                }
                assert_eq!(r, simulate(&t, &cfg).unwrap());
            }
        }
    }

    #[test]
    fn csv_layout() {
        let cfg = SimConfig::fully_associative_lru(&[128, 256], 64, Inclusion::Exclusive);
        let mut buf = Vec::new();
        simulate(&abc(), &cfg).unwrap().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "level,accesses,hits,misses,mpka\n1,6,2,4,666.6666666666666\n2,4,1,3,500\n"
        );
    }

    proptest::proptest! {
        #[test]
        fn fully_associative_lru_matches_estimator(
            blocks in proptest::collection::vec(0u64..40, 0..400),
            e1 in 0u32..4,
            d2 in 1u32..3,
            d3 in 1u32..3,
        ) {
            let trace = BlockTrace::new(blocks, 1).unwrap();
            let hist = crate::reuse::histogram_naive(&trace);
            let sizes = [1u64 << e1, 1 << (e1 + d2), 1 << (e1 + d2 + d3)];
            for (inclusion, inherit) in [(Inclusion::Exclusive, false), (Inclusion::Inclusive, true)] {
                let sim = simulate(&trace, &SimConfig::fully_associative_lru(&sizes, 1, inclusion).with_inheritance(inherit)).unwrap();
                let config = crate::estimate::HierarchyConfig::new(sizes.to_vec(), 1, inclusion).unwrap();
                let est = crate::estimate::estimate(&hist, &config).unwrap();
                proptest::prop_assert_eq!(sim.miss_counts(), est.miss_counts());
            }
        }
    }
}
