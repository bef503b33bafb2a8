//! Set-associative and pseudo-LRU caches against fully-associative LRU.

use reusekit::estimate::Inclusion;
use reusekit::simulate::{simulate, Associativity, Replacement, SimConfig};
use reusekit::trace::{gen_random, gen_uniform_stack};

fn main() -> reusekit::Result<()> {
    let traces = [
        ("random", gen_random(8192, 300_000, 9)?),
        ("uniform-stack", gen_uniform_stack(4096, 300_000, 9)?),
    ];
    let sizes = [512, 4096];
    for (name, trace) in &traces {
        println!("{name}: L1/L2 MPKA");
        for (ways, policy) in [
            (Associativity::Full, Replacement::Lru),
            (Associativity::Ways(16), Replacement::Lru),
            (Associativity::Ways(8), Replacement::Lru),
            (Associativity::Ways(16), Replacement::BitPlru),
            (Associativity::Ways(16), Replacement::TreePlru),
        ] {
            let config = SimConfig::uniform(&sizes, 1, Inclusion::Exclusive, ways, policy);
            let mpka = simulate(trace, &config)?.mpka();
            println!("  {ways:?} {policy:?}: {:.2} / {:.2}", mpka[0], mpka[1]);
        }
    }
    Ok(())
}
