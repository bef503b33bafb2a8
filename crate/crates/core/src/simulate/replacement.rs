//! Per-set replacement state: true LRU, bit-PLRU (MRU bits) and tree-PLRU.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Replacement {
    Lru,
    BitPlru,
    TreePlru,
}

impl std::str::FromStr for Replacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lru" => Ok(Replacement::Lru),
            "bit-plru" | "bitplru" => Ok(Replacement::BitPlru),
            "tree-plru" | "treeplru" => Ok(Replacement::TreePlru),
            other => Err(Error::config(format!(
                "unknown replacement policy {other:?}"
            ))),
        }
    }
}

/// Replacement bookkeeping for one set.
///
/// `stamp` arguments are global access times; only LRU uses them.
#[derive(Debug, Clone)]
pub enum ReplacementState {
    Lru(LruState),
    BitPlru(BitPlruState),
    TreePlru(TreePlruState),
}

impl ReplacementState {
    pub fn new(policy: Replacement, ways: usize) -> Result<Self> {
        if ways == 0 {
            return Err(Error::config("a set needs at least one way"));
        }
        Ok(match policy {
            Replacement::Lru => ReplacementState::Lru(LruState::new(ways)),
            Replacement::BitPlru => ReplacementState::BitPlru(BitPlruState::new(ways)),
            Replacement::TreePlru => {
                if !ways.is_power_of_two() {
                    return Err(Error::config(format!(
                        "tree-PLRU needs a power-of-two associativity, got {ways}"
                    )));
                }
                ReplacementState::TreePlru(TreePlruState::new(ways))
            }
        })
    }

    pub fn touch(&mut self, way: usize, stamp: u64) {
        match self {
            ReplacementState::Lru(s) => s.touch(way, stamp),
            ReplacementState::BitPlru(s) => s.touch(way),
            ReplacementState::TreePlru(s) => s.touch(way),
        }
    }

    /// The way is now empty.
    pub fn invalidate(&mut self, way: usize) {
        match self {
            ReplacementState::Lru(s) => s.invalidate(way),
            ReplacementState::BitPlru(s) => s.clear(way),
            ReplacementState::TreePlru(_) => {}
        }
    }

    /// Way to evict from a full set.
    pub fn victim(&self) -> usize {
        match self {
            ReplacementState::Lru(s) => s.victim(),
            ReplacementState::BitPlru(s) => s.victim(),
            ReplacementState::TreePlru(s) => s.victim(),
        }
    }

    pub fn stamp(&self, way: usize) -> Option<u64> {
        match self {
            ReplacementState::Lru(s) => Some(s.stamps[way]),
            _ => None,
        }
    }

    /// LRU only: hold the way out of victim selection, keeping its stamp.
    pub fn detach(&mut self, way: usize) {
        if let ReplacementState::Lru(s) = self {
            s.detach(way);
        }
    }

    /// LRU only: return a detached way to victim selection with a new stamp.
    pub fn attach(&mut self, way: usize, stamp: u64) {
        if let ReplacementState::Lru(s) = self {
            s.attach(way, stamp);
        }
    }
}

/// Exact LRU ordered by access stamp.
#[derive(Debug, Clone)]
pub struct LruState {
    stamps: Vec<u64>,
    order: BTreeSet<(u64, u32)>,
}

impl LruState {
    fn new(ways: usize) -> Self {
        Self {
            stamps: vec![0; ways],
            order: BTreeSet::new(),
        }
    }

    fn touch(&mut self, way: usize, stamp: u64) {
        self.attach(way, stamp);
    }

    fn invalidate(&mut self, way: usize) {
        self.order.remove(&(self.stamps[way], way as u32));
    }

    fn detach(&mut self, way: usize) {
        self.order.remove(&(self.stamps[way], way as u32));
    }

    fn attach(&mut self, way: usize, stamp: u64) {
        self.order.remove(&(self.stamps[way], way as u32));
        self.stamps[way] = stamp;
        self.order.insert((stamp, way as u32));
    }

    fn victim(&self) -> usize {
        match self.order.first() {
            Some(&(_, way)) => way as usize,
            // every way detached: fall back to the oldest stamp
            None => (0..self.stamps.len())
                .min_by_key(|&w| (self.stamps[w], w))
                .unwrap_or(0),
        }
    }
}

/// One MRU bit per way. Setting the last clear bit resets all others.
#[derive(Debug, Clone)]
pub struct BitPlruState {
    bits: Vec<u64>,
    ways: usize,
    set_count: usize,
}

impl BitPlruState {
    fn new(ways: usize) -> Self {
        Self {
            bits: vec![0; ways.div_ceil(64)],
            ways,
            set_count: 0,
        }
    }

    fn is_set(&self, way: usize) -> bool {
        self.bits[way / 64] >> (way % 64) & 1 == 1
    }

    fn touch(&mut self, way: usize) {
        if self.is_set(way) {
            return;
        }
        if self.set_count + 1 == self.ways {
            self.bits.iter_mut().for_each(|w| *w = 0);
            self.set_count = 0;
        }
        self.bits[way / 64] |= 1 << (way % 64);
        self.set_count += 1;
    }

    fn clear(&mut self, way: usize) {
        if self.is_set(way) {
            self.bits[way / 64] &= !(1 << (way % 64));
            self.set_count -= 1;
        }
    }

    fn victim(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .find(|(_, w)| **w != u64::MAX)
            .map(|(i, w)| i * 64 + w.trailing_ones() as usize)
            .filter(|&way| way < self.ways)
            .unwrap_or(0)
    }
}

/// Binary tree of direction bits in heap order; `false` points left.
#[derive(Debug, Clone)]
pub struct TreePlruState {
    nodes: Vec<bool>,
    depth: u32,
}

impl TreePlruState {
    fn new(ways: usize) -> Self {
        Self {
            nodes: vec![false; ways - 1],
            depth: ways.trailing_zeros(),
        }
    }

    fn touch(&mut self, way: usize) {
        let mut node = 0;
        for level in (0..self.depth).rev() {
            let right = (way >> level) & 1 == 1;
            self.nodes[node] = !right;
            node = 2 * node + 1 + right as usize;
        }
    }

    fn victim(&self) -> usize {
        let mut node = 0;
        let mut way = 0;
        for _ in 0..self.depth {
            let right = self.nodes[node];
            way = (way << 1) | right as usize;
            node = 2 * node + 1 + right as usize;
        }
        way
    }
}
