//! Reuse-distance histograms.
//!
//! The reuse distance of an access is the number of distinct blocks touched
//! since the previous access to the same block; a first access has infinite
//! distance and is counted separately as cold. Distances are measured in
//! blocks of the trace's line size.
//!
//! Two engines produce identical histograms: [`histogram_naive`] walks an
//! explicit LRU stack and serves as the oracle, [`histogram_fast`] counts live
//! timestamps in a Fenwick tree in `O(N log N)`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::trace::BlockTrace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReuseHistogram {
    /// Finite reuse distance (blocks) to occurrence count. Zero counts are never stored.
    pub counts: BTreeMap<u64, u64>,
    pub cold_count: u64,
    pub total_accesses: u64,
    pub block_size_bytes: u64,
}

impl ReuseHistogram {
    pub fn empty(block_size_bytes: u64) -> Self {
        Self {
            counts: BTreeMap::new(),
            cold_count: 0,
            total_accesses: 0,
            block_size_bytes,
        }
    }

    pub fn max_distance(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }

    /// Accesses that miss a fully-associative LRU cache of `capacity_blocks`:
    /// every cold access plus every access with distance `>= capacity_blocks`.
    pub fn misses_beyond(&self, capacity_blocks: u64) -> u64 {
        self.cold_count
            + self
                .counts
                .range(capacity_blocks..)
                .map(|(_, c)| c)
                .sum::<u64>()
    }

    pub fn hits_within(&self, capacity_blocks: u64) -> u64 {
        self.total_accesses - self.misses_beyond(capacity_blocks)
    }

    /// Precomputed miss curve for repeated capacity queries.
    pub fn miss_curve(&self) -> MissCurve {
        let distances: Vec<u64> = self.counts.keys().copied().collect();
        let mut suffix = vec![0u64; distances.len() + 1];
        for (i, c) in self.counts.values().enumerate().rev() {
            suffix[i] = suffix[i + 1] + c;
        }
        MissCurve {
            distances,
            suffix,
            cold: self.cold_count,
            total: self.total_accesses,
        }
    }

    pub fn normalize(&self) -> NormalizedHistogram {
        NormalizedHistogram {
            counts: self
                .counts
                .iter()
                .map(|(d, c)| (d * self.block_size_bytes, *c))
                .collect(),
            cold_count: self.cold_count,
            total_accesses: self.total_accesses,
            block_size_bytes: self.block_size_bytes,
        }
    }

    /// Counts grouped into power-of-two distance buckets `[2^k, 2^(k+1))`,
    /// with distance 0 reported under key 0. Display only.
    pub fn log2_buckets(&self) -> BTreeMap<u64, u64> {
        let mut out = BTreeMap::new();
        for (&d, &c) in &self.counts {
            let key = if d == 0 {
                0
            } else {
                1u64 << (63 - d.leading_zeros())
            };
            *out.entry(key).or_insert(0) += c;
        }
        out
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["distance", "count"])?;
        for (d, c) in &self.counts {
            w.write_record([d.to_string(), c.to_string()])?;
        }
        w.write_record(["cold".to_string(), self.cold_count.to_string()])?;
        w.write_record(["total".to_string(), self.total_accesses.to_string()])?;
        w.write_record(["block_size".to_string(), self.block_size_bytes.to_string()])?;
        w.flush().map_err(|e| Error::io("<histogram csv>", e))?;
        Ok(())
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut counts = BTreeMap::new();
        let (mut cold, mut total, mut block) = (None, None, None);
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let bad = |m: &str| Error::Parse {
                line,
                message: m.to_string(),
            };
            if rec.len() != 2 {
                return Err(bad("expected two fields"));
            }
            let value: u64 = rec[1].trim().parse().map_err(|_| bad("bad count"))?;
            match rec[0].trim() {
                "cold" => cold = Some(value),
                "total" => total = Some(value),
                "block_size" => block = Some(value),
                key => {
                    let d: u64 = key.parse().map_err(|_| bad("bad distance"))?;
                    if value > 0 {
                        counts.insert(d, value);
                    }
                }
            }
        }
        let missing = |what: &str| Error::Parse {
            line: 0,
            message: format!("missing `{what}` row"),
        };
        let hist = Self {
            counts,
            cold_count: cold.ok_or_else(|| missing("cold"))?,
            total_accesses: total.ok_or_else(|| missing("total"))?,
            block_size_bytes: block.ok_or_else(|| missing("block_size"))?,
        };
        let sum: u64 = hist.counts.values().sum::<u64>() + hist.cold_count;
        if sum != hist.total_accesses {
            return Err(Error::Parse {
                line: 0,
                message: format!("counts sum to {sum} but total is {}", hist.total_accesses),
            });
        }
        crate::trace::check_line_size(hist.block_size_bytes)?;
        Ok(hist)
    }
}

/// Histogram with distances rescaled to bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedHistogram {
    pub counts: BTreeMap<u64, u64>,
    pub cold_count: u64,
    pub total_accesses: u64,
    pub block_size_bytes: u64,
}

impl NormalizedHistogram {
    pub fn max_distance_bytes(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }
}

/// Suffix sums over the sorted distance keys.
#[derive(Debug, Clone)]
pub struct MissCurve {
    distances: Vec<u64>,
    suffix: Vec<u64>,
    cold: u64,
    total: u64,
}

impl MissCurve {
    pub fn misses_beyond(&self, capacity_blocks: u64) -> u64 {
        let idx = self.distances.partition_point(|&d| d < capacity_blocks);
        self.cold + self.suffix[idx]
    }

    pub fn total_accesses(&self) -> u64 {
        self.total
    }
}

/// Explicit LRU-stack reference implementation, `O(N * M)`.
pub fn histogram_naive(trace: &BlockTrace) -> ReuseHistogram {
    let mut hist = ReuseHistogram::empty(trace.line_size_bytes());
    // most recent block at the end
    let mut stack: Vec<u64> = Vec::with_capacity(trace.num_distinct_blocks());
    for &block in trace.blocks() {
        hist.total_accesses += 1;
        match stack.iter().rposition(|&b| b == block) {
            Some(pos) => {
                let distance = (stack.len() - 1 - pos) as u64;
                *hist.counts.entry(distance).or_insert(0) += 1;
                stack[pos..].rotate_left(1);
            }
            None => {
                hist.cold_count += 1;
                stack.push(block);
            }
        }
    }
    hist
}

/// Timestamp-counting implementation, `O(N log N)`.
///
/// A Fenwick tree over access indices marks the latest access of every block;
/// the distance of a reuse is the number of marks strictly between the
/// previous and the current access.
pub fn histogram_fast(trace: &BlockTrace) -> ReuseHistogram {
    let n = trace.len();
    let mut live = Fenwick::new(n);
    let mut last_seen: FxHashMap<u64, usize> = FxHashMap::default();
    last_seen.reserve(trace.num_distinct_blocks());
    let mut dense = vec![0u64; trace.num_distinct_blocks()];
    let mut cold = 0u64;
    for (t, &block) in trace.blocks().iter().enumerate() {
        match last_seen.insert(block, t) {
            Some(prev) => {
                let distance = live.prefix(t) - live.prefix(prev + 1);
                dense[distance as usize] += 1;
                live.add(prev, -1);
            }
            None => cold += 1,
        }
        live.add(t, 1);
    }
    ReuseHistogram {
        counts: dense
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c > 0)
            .map(|(d, c)| (d as u64, c))
            .collect(),
        cold_count: cold,
        total_accesses: n as u64,
        block_size_bytes: trace.line_size_bytes(),
    }
}
