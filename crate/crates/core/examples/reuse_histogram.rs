//! Reuse-distance histogram of a short trace and of a uniform-stack trace.

use reusekit::reuse::{histogram_fast, histogram_naive};
use reusekit::trace::{gen_uniform_stack, parse_text, to_blocks, MemoryTrace};

fn main() -> reusekit::Result<()> {
    // a b c b c a with 64-byte lines
    let text = "0x0\n0x40\n0x80\n0x40\n0x80\n0x0\n";
    let trace = to_blocks(
        &MemoryTrace::new(parse_text(text.as_bytes())?, "inline"),
        64,
    )?;
    let hist = histogram_fast(&trace);
    assert_eq!(hist, histogram_naive(&trace));
    hist.write_csv(std::io::stdout())?;

    let stack = gen_uniform_stack(1024, 200_000, 7)?;
    let hist = histogram_fast(&stack);
    println!("\nuniform stack, depth 1024: cold {}", hist.cold_count);
    for (bucket, count) in hist.log2_buckets() {
        println!("  [{bucket:>4}, {:>4}): {count}", (bucket * 2).max(1));
    }
    Ok(())
}
