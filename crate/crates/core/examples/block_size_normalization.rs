//! Doubling the line size halves reuse distances; byte units line them up again.

use reusekit::reuse::histogram_fast;
use reusekit::trace::{gen_cyclic, to_blocks, BlockTrace};

fn main() -> reusekit::Result<()> {
    // cyclic sweep over 1024 distinct 64-byte-aligned addresses
    let ids = gen_cyclic(1024, 20)?;
    let addresses = BlockTrace::new(ids.blocks().to_vec(), 64)?.to_addresses("cyclic");
    for line in [64, 128, 256] {
        let hist = histogram_fast(&to_blocks(&addresses, line)?);
        println!(
            "line {line:>3}: max distance {:>4} blocks = {:>6} bytes",
            hist.max_distance().unwrap_or(0),
            hist.normalize().max_distance_bytes().unwrap_or(0)
        );
    }
    Ok(())
}
