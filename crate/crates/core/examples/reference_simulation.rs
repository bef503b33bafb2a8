//! Estimator against the reference simulator for the three placement modes.

use reusekit::compare::compare;
use reusekit::estimate::Inclusion;
use reusekit::optimize::{enumerate_grid, SimTemplate, SizeGrid};
use reusekit::trace::gen_random;

fn main() -> reusekit::Result<()> {
    let trace = gen_random(4096, 200_000, 3)?;
    let configs = enumerate_grid(&SizeGrid::new(&[(4, 9), (5, 11), (6, 12)]))?;
    let plain = SimTemplate::default();
    let inherit = SimTemplate {
        lru_inheritance: true,
        ..plain
    };
    for (label, inclusion, template) in [
        ("exclusive", Inclusion::Exclusive, plain),
        ("inclusive", Inclusion::Inclusive, plain),
        ("inclusive + inheritance", Inclusion::Inclusive, inherit),
    ] {
        let report = compare(&trace, &configs, inclusion, &template)?;
        println!(
            "{label:<24} {} configs  exact: {:<5}  mean err {:.5}  max err {:.5}",
            report.rows.len(),
            report.all_exact(),
            report.overall_mean_error(),
            report.overall_max_error()
        );
    }
    Ok(())
}
