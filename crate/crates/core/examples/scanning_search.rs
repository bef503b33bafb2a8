//! Scanning search under each objective on a three-level grid.

use reusekit::estimate::Inclusion;
use reusekit::optimize::{
    enumerate_grid, scan_search, CostModel, Objective, ObjectiveSpec, PowerModel, SizeGrid,
};
use reusekit::reuse::histogram_fast;
use reusekit::trace::gen_uniform_stack;

fn main() -> reusekit::Result<()> {
    println!(
        "full grid: {} tuples",
        enumerate_grid(&SizeGrid::three_level_default())?.len()
    );

    // sizes in blocks (line size 1) so a desk-sized trace spans the grid
    let hist = histogram_fast(&gen_uniform_stack(2048, 400_000, 5)?);
    let grid = SizeGrid::new(&[(4, 10), (5, 11), (6, 12)]);
    let base = ObjectiveSpec {
        objective: Objective::MinCost { max_delay: 20.0 },
        cpi_base: 1.0,
        miss_penalties: vec![10.0, 40.0, 200.0],
        inclusion: Inclusion::Exclusive,
        cost: CostModel::Quadratic {
            coeffs: vec![1.0, 0.1, 0.01],
        },
        power: PowerModel {
            static_per_byte: vec![0.05, 0.01, 0.002],
            dynamic_per_access: vec![0.1, 0.5, 2.0],
            memory_per_access: 20.0,
        },
    };
    for objective in [
        Objective::MinCost { max_delay: 20.0 },
        Objective::MinPower { max_delay: 20.0 },
        Objective::MinDelay { max_cost: 50_000.0 },
    ] {
        let spec = ObjectiveSpec {
            objective,
            ..base.clone()
        };
        let result = scan_search(&hist, &grid, &spec)?;
        match result.best_row() {
            Some(b) => println!(
                "{:<10} {:?}  t={:.3} cost={:.1} power={:.1}",
                objective.name(),
                b.sizes,
                b.delay,
                b.cost,
                b.power
            ),
            None => println!("{:<10} infeasible", objective.name()),
        }
    }
    Ok(())
}
