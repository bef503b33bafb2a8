//! Time one histogram plus every grid estimate against simulating every grid point.

use std::time::Instant;

use reusekit::estimate::{estimate_with_curve, HierarchyConfig, Inclusion};
use reusekit::optimize::{enumerate_grid, SizeGrid};
use reusekit::reuse::histogram_fast;
use reusekit::simulate::{simulate, SimConfig};
use reusekit::trace::gen_uniform_stack;

fn main() -> reusekit::Result<()> {
    let trace = gen_uniform_stack(4096, 1_000_000, 2)?;
    let configs = enumerate_grid(&SizeGrid::new(&[(4, 10), (5, 11), (6, 12)]))?;

    let start = Instant::now();
    let curve = histogram_fast(&trace).miss_curve();
    let mut checksum = 0;
    for sizes in &configs {
        let config = HierarchyConfig::new(sizes.clone(), 1, Inclusion::Exclusive)?;
        checksum += estimate_with_curve(&curve, &config).miss_counts()[2];
    }
    let fast = start.elapsed();

    let start = Instant::now();
    let mut sim_checksum = 0;
    for sizes in &configs {
        sim_checksum += simulate(
            &trace,
            &SimConfig::fully_associative_lru(sizes, 1, Inclusion::Exclusive),
        )?
        .miss_counts()[2];
    }
    let slow = start.elapsed();

    assert_eq!(checksum, sim_checksum);
    println!("{} configs", configs.len());
    println!("histogram + estimates: {:.3} s", fast.as_secs_f64());
    println!("simulation:            {:.3} s", slow.as_secs_f64());
    println!(
        "speedup:               {:.1}x",
        slow.as_secs_f64() / fast.as_secs_f64()
    );
    Ok(())
}
