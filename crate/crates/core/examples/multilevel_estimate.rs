//! One histogram, many hierarchies: exclusive and inclusive miss counts.

use reusekit::estimate::{estimate, HierarchyConfig, Inclusion};
use reusekit::reuse::histogram_fast;
use reusekit::trace::gen_uniform_stack;

fn main() -> reusekit::Result<()> {
    let trace = gen_uniform_stack(4096, 500_000, 1)?;
    let hist = histogram_fast(&trace);
    for sizes in [vec![256, 1024, 4096], vec![512, 2048, 8192]] {
        for inclusion in [Inclusion::Exclusive, Inclusion::Inclusive] {
            let config = HierarchyConfig::new(sizes.clone(), 1, inclusion)?;
            println!("{sizes:?} {inclusion:?}");
            estimate(&hist, &config)?.write_csv(std::io::stdout())?;
        }
    }
    Ok(())
}
