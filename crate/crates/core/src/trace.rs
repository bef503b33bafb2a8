//! Memory-access traces: loading, writing, block mapping and synthetic generators.
//!
//! Addresses live in [`MemoryTrace`]; everything downstream consumes a
//! [`BlockTrace`], where each access is already a cache-block identifier.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk trace encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    /// One hexadecimal address per line, `0x` prefix optional.
    Text,
    /// Packed 64-bit little-endian addresses, no header.
    Binary,
}

impl std::str::FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(TraceFormat::Text),
            "binary" | "bin" => Ok(TraceFormat::Binary),
            other => Err(Error::config(format!("unknown trace format {other:?}"))),
        }
    }
}

/// Ordered sequence of byte addresses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryTrace {
    pub accesses: Vec<u64>,
    pub source: String,
}

impl MemoryTrace {
    pub fn new(accesses: Vec<u64>, source: impl Into<String>) -> Self {
        Self {
            accesses,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.accesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accesses.is_empty()
    }
}

/// Ordered sequence of cache-block identifiers at a fixed line size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockTrace {
    blocks: Vec<u64>,
    line_size_bytes: u64,
    num_distinct_blocks: usize,
}

impl BlockTrace {
    pub fn new(blocks: Vec<u64>, line_size_bytes: u64) -> Result<Self> {
        check_line_size(line_size_bytes)?;
        let num_distinct_blocks = blocks.iter().collect::<FxHashSet<_>>().len();
        Ok(Self {
            blocks,
            line_size_bytes,
            num_distinct_blocks,
        })
    }

    pub fn blocks(&self) -> &[u64] {
        &self.blocks
    }

    pub fn line_size_bytes(&self) -> u64 {
        self.line_size_bytes
    }

    pub fn num_distinct_blocks(&self) -> usize {
        self.num_distinct_blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Expands block ids back into byte addresses (first byte of each block).
    pub fn to_addresses(&self, source: impl Into<String>) -> MemoryTrace {
        MemoryTrace::new(
            self.blocks
                .iter()
                .map(|b| b * self.line_size_bytes)
                .collect(),
            source,
        )
    }
}

pub(crate) fn check_line_size(line_size_bytes: u64) -> Result<()> {
    if line_size_bytes.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::InvalidLineSize(line_size_bytes))
    }
}

pub fn load_trace(path: impl AsRef<Path>, format: TraceFormat) -> Result<MemoryTrace> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let accesses = match format {
        TraceFormat::Text => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            parse_text(BufReader::new(file)).map_err(|e| match e {
                Error::Io { source, .. } => Error::io(path, source),
                other => other,
            })?
        }
        TraceFormat::Binary => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_binary(&bytes)?
        }
    };
    Ok(MemoryTrace::new(accesses, source))
}

/// Parses the text format. A line may carry a leading access-type token
/// (e.g. `R 0x40`); the type is ignored.
pub fn parse_text(reader: impl BufRead) -> Result<Vec<u64>> {
    let mut accesses = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<text trace>", e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let token = match tokens.as_slice() {
            [addr] | [_, addr] => *addr,
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected an address, found {content:?}"),
                })
            }
        };
        let digits = token
            .strip_prefix("0x")
            .or_else(|| token.strip_prefix("0X"))
            .unwrap_or(token);
        let addr = u64::from_str_radix(digits, 16).map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad hex address {token:?}: {e}"),
        })?;
        accesses.push(addr);
    }
    Ok(accesses)
}

pub fn parse_binary(bytes: &[u8]) -> Result<Vec<u64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::BinaryLength(bytes.len() as u64));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn write_trace(trace: &MemoryTrace, path: impl AsRef<Path>, format: TraceFormat) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let res = match format {
        TraceFormat::Text => trace
            .accesses
            .iter()
            .try_for_each(|a| writeln!(out, "{a:#x}")),
        TraceFormat::Binary => trace
            .accesses
            .iter()
            .try_for_each(|a| out.write_all(&a.to_le_bytes())),
    };
    res.and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Maps byte addresses to block ids (`address / line_size_bytes`).
pub fn to_blocks(trace: &MemoryTrace, line_size_bytes: u64) -> Result<BlockTrace> {
    check_line_size(line_size_bytes)?;
    let shift = line_size_bytes.trailing_zeros();
    BlockTrace::new(
        trace.accesses.iter().map(|a| a >> shift).collect(),
        line_size_bytes,
    )
}

fn positive(name: &str, value: u64) -> Result<()> {
    if value == 0 {
        Err(Error::config(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

/// Blocks `0..working_set` in order, repeated `sweeps` times.
///
/// Every non-cold access has reuse distance `working_set - 1`.
pub fn gen_cyclic(working_set: u64, sweeps: u64) -> Result<BlockTrace> {
    positive("working set", working_set)?;
    positive("sweeps", sweeps)?;
    let blocks = (0..sweeps).flat_map(|_| 0..working_set).collect();
    Ok(BlockTrace {
        blocks,
        line_size_bytes: 1,
        num_distinct_blocks: working_set as usize,
    })
}

/// Trace whose reuse distances are uniform over `[0, depth)`.
///
/// The first `depth` accesses touch fresh blocks. Afterwards each access draws
/// a stack depth uniformly and re-touches the block found there, so its reuse
/// distance is exactly the drawn depth.
pub fn gen_uniform_stack(depth: u64, n: u64, seed: u64) -> Result<BlockTrace> {
    positive("depth", depth)?;
    if n < depth {
        return Err(Error::config(format!(
            "uniform stack needs n >= depth (n = {n}, depth = {depth})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // stack[0] is the most recently used block
    let mut stack: Vec<u64> = (0..depth).rev().collect();
    let mut blocks: Vec<u64> = (0..depth).collect();
    blocks.reserve((n - depth) as usize);
    for _ in depth..n {
        let d = rng.random_range(0..depth) as usize;
        let block = stack[d];
        stack[..=d].rotate_right(1);
        blocks.push(block);
    }
    Ok(BlockTrace {
        blocks,
        line_size_bytes: 1,
        num_distinct_blocks: depth as usize,
    })
}

/// `n` independent uniform draws from `[0, universe)`.
pub fn gen_random(universe: u64, n: u64, seed: u64) -> Result<BlockTrace> {
    positive("universe", universe)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = (0..n).map(|_| rng.random_range(0..universe)).collect();
    BlockTrace::new(blocks, 1)
}
