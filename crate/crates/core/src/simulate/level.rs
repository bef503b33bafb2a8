use rustc_hash::FxHashMap;

use super::replacement::{Replacement, ReplacementState};
use super::set_index;
use crate::error::Result;

/// One cache level: `num_sets` sets of `ways` slots holding block ids.
#[derive(Debug, Clone)]
pub(crate) struct Level {
    num_sets: u64,
    ways: usize,
    slots: Vec<Option<u64>>,
    index: FxHashMap<u64, u32>,
    free: Vec<Vec<u32>>,
    repl: Vec<ReplacementState>,
}

/// A block pushed out of a level together with its last recency stamp.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Evicted {
    pub block: u64,
    pub stamp: Option<u64>,
}

impl Level {
    pub fn new(num_sets: u64, ways: usize, policy: Replacement) -> Result<Self> {
        let repl = (0..num_sets)
            .map(|_| ReplacementState::new(policy, ways))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            num_sets,
            ways,
            slots: vec![None; num_sets as usize * ways],
            index: FxHashMap::default(),
            free: (0..num_sets)
                .map(|_| (0..ways as u32).rev().collect())
                .collect(),
            repl,
        })
    }

    fn locate(&self, block: u64) -> Option<(usize, usize)> {
        self.index
            .get(&block)
            .map(|&slot| (slot as usize / self.ways, slot as usize % self.ways))
    }

    pub fn contains(&self, block: u64) -> bool {
        self.index.contains_key(&block)
    }

    pub fn touch(&mut self, block: u64, stamp: u64) -> bool {
        match self.locate(block) {
            Some((set, way)) => {
                self.repl[set].touch(way, stamp);
                true
            }
            None => false,
        }
    }

    /// Places a block that is not resident, returning the displaced victim.
    pub fn insert(&mut self, block: u64, stamp: u64) -> Option<Evicted> {
        debug_assert!(!self.contains(block));
        let set = set_index(block, self.num_sets) as usize;
        let (way, evicted) = match self.free[set].pop() {
            Some(way) => (way as usize, None),
            None => {
                let way = self.repl[set].victim();
                let slot = set * self.ways + way;
                let old = self.slots[slot].expect("full set has no empty slot");
                self.index.remove(&old);
                let evicted = Evicted {
                    block: old,
                    stamp: self.repl[set].stamp(way),
                };
                self.repl[set].invalidate(way);
                (way, Some(evicted))
            }
        };
        let slot = set * self.ways + way;
        self.slots[slot] = Some(block);
        self.index.insert(block, slot as u32);
        self.repl[set].touch(way, stamp);
        evicted
    }

    /// Drops a resident block, returning its recency stamp (LRU only).
    pub fn remove(&mut self, block: u64) -> Option<Option<u64>> {
        let slot = self.index.remove(&block)? as usize;
        let (set, way) = (slot / self.ways, slot % self.ways);
        let stamp = self.repl[set].stamp(way);
        self.repl[set].invalidate(way);
        self.slots[slot] = None;
        self.free[set].push(way as u32);
        Some(stamp)
    }

    pub fn detach(&mut self, block: u64) {
        if let Some((set, way)) = self.locate(block) {
            self.repl[set].detach(way);
        }
    }

    pub fn attach(&mut self, block: u64, stamp: u64) {
        if let Some((set, way)) = self.locate(block) {
            self.repl[set].attach(way, stamp);
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = u64> + '_ {
        self.index.keys().copied()
    }
}
