//! Semisprays, their defining properties, and complete lifts.
//!
//! A semispray at level r is the coefficient G of a second-order field
//! (y, -2G(x, y)); a spray is additionally quadratic in the fiber. Both
//! properties survive the complete lift, and the lift of the induced field
//! equals the field induced by the lifted coefficient.

use tangent_tower::catalog::{sphere_spray, HOMOGENEITY_LAMBDAS};
use tangent_tower::element::TangentElement;
use tangent_tower::metric::rel_dev;
use tangent_tower::spray::{homogeneity_check, is_semispray, semispray_to_field};
use tangent_tower::Result;

fn main() -> Result<()> {
    // the round-sphere spray in a stereographic chart
    let sphere = sphere_spray();
    let point = TangentElement::new(1, 2, vec![0.3, 0.1, 0.4, -0.2])?;
    println!("sphere coefficient at (x, y) = {:?}", sphere.coefficient_at(&point)?);

    for i in 0..=2usize {
        let lifted = sphere.iterated_complete_lift(i)?;
        let property = is_semispray(&lifted.as_field(), 40, 1e-12, 7)?;
        let hom = homogeneity_check(&lifted, &HOMOGENEITY_LAMBDAS, 40, 1e-10, 7)?;
        println!(
            "lift {i}: level {}, semispray deviation {:e}, homogeneity deviation {:e}",
            lifted.level(),
            property.max_deviation,
            hom.max_deviation
        );
    }
    println!();

    // lifting the spray then inducing the field agrees with lifting the
    // induced field directly
    let via_spray = semispray_to_field(&sphere.complete_lift()?);
    let via_field = sphere.as_field().complete_lift()?;
    let mut worst = 0.0f64;
    for k in 0..20 {
        let t = k as f64 * 0.05;
        let coords: Vec<f64> = (0..8).map(|j| 0.3 + 0.1 * t * (j as f64 + 1.0)).collect();
        let xi = TangentElement::new(2, 2, coords)?;
        worst = worst.max(rel_dev(&via_spray.fiber_at(&xi)?, &via_field.fiber_at(&xi)?));
    }
    println!("spray lift vs field lift, worst relative deviation: {worst:e}");
    Ok(())
}
