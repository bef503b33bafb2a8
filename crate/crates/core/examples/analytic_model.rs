//! Closed-form sizes under a step histogram, with a sensitivity table.

use reusekit::analytic::{optimal, report, LevelCoeffs, StepModel};

fn main() -> reusekit::Result<()> {
    let one = StepModel::one_level(1000.0, 1.0, 5.0, 1.0, 10.0);
    println!("one level: {:?}", optimal(&one)?.sizes);

    let two = StepModel::two_level(
        1000.0,
        1.0,
        5.0,
        LevelCoeffs {
            unit_cost: 2.0,
            miss_penalty: 4.0,
        },
        LevelCoeffs {
            unit_cost: 1.0,
            miss_penalty: 8.0,
        },
    );
    let r = report(&two, 0.1)?;
    println!(
        "two level: {:?} ({:?})",
        r.solution.sizes, r.solution.status
    );
    for row in &r.sensitivity {
        if let Some(change) = &row.change {
            println!(
                "  {} +10%: dx1 {:+8.3}  dx2 {:+8.3}",
                row.parameter, change[0], change[1]
            );
        }
    }
    Ok(())
}
