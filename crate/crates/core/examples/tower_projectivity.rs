//! Projective compatibility across a tower of iterated lifts.
//!
//! Levels 0..=R hold the iterated complete lifts of one object. The tangent
//! projection connects consecutive levels, and compositions of it connect
//! any two. For every pair the lifted fields commute with the connecting
//! map on threaded random states — adjacent or composed, the deviation is
//! zero.

use tangent_tower::catalog::sphere_spray;
use tangent_tower::lifts::VectorField;
use tangent_tower::tower::{check_projective_field, LiftTower};
use tangent_tower::Result;

fn main() -> Result<()> {
    let depth = 3;

    let field = VectorField::parse(0, 2, &["x0 * x1", "x0 - x1^2"])?;
    let towers = [
        ("polynomial field", LiftTower::from_field(&field, depth)?),
        ("sphere spray", LiftTower::from_spray(&sphere_spray(), depth)?),
    ];

    for (name, tower) in &towers {
        let report = check_projective_field(tower, 60, 1e-12, 0xA5)?;
        println!("{name}, depth {depth}: passed = {}", report.passed);
        println!("  levels   deviation");
        for pair in &report.pairs {
            let kind = if pair.upper - pair.lower == 1 { "adjacent" } else { "composed" };
            println!("  {} -> {}   {:e}  ({kind})", pair.upper, pair.lower, pair.deviation);
        }
        println!();
    }
    Ok(())
}
