//! Loops of points treated as a single product state.
//!
//! A loop sampled at N points lives in the N-fold product of the model
//! space, and a spray induces a product spray there. Applying the lifted
//! dynamics pointwise agrees with lifting the product dynamics, and a loop
//! geodesic is nothing but N independent geodesics integrated in lockstep.

use tangent_tower::catalog::sphere_spray;
use tangent_tower::element::TangentElement;
use tangent_tower::flow::FlowSpec;
use tangent_tower::loop_space::{loop_geodesic, loop_lift_commutes, LoopPoint};
use tangent_tower::Result;

fn main() -> Result<()> {
    let spray = sphere_spray();
    let n = 8;

    // pointwise vs product: lifting commutes with the loop realization
    let probe = LoopPoint::random(n, spray.level() + 1, spray.base_dim(), 11)?;
    let report = loop_lift_commutes(&spray, &probe, 1e-12)?;
    println!(
        "lift commutation over {} samples: passed = {}, max deviation {:e}",
        report.n_samples, report.passed, report.max_deviation
    );
    println!();

    // a ring of initial positions with a common drift velocity
    let mut positions = Vec::with_capacity(n);
    let mut velocities = Vec::with_capacity(n);
    for s in 0..n {
        let angle = std::f64::consts::TAU * s as f64 / n as f64;
        positions.push(TangentElement::new(
            0,
            2,
            vec![0.3 + 0.2 * angle.cos(), 0.1 + 0.2 * angle.sin()],
        )?);
        velocities.push(TangentElement::new(0, 2, vec![0.4, -0.2])?);
    }
    let c0 = LoopPoint::new(positions)?;
    let v0 = LoopPoint::new(velocities)?;
    let spec = FlowSpec::new(0.0, 0.6, 0.01)?;
    let traj = loop_geodesic(&spray, &c0, &v0, &spec)?;
    let end = traj.final_point();
    println!("loop geodesic, {} samples, t in [0, 0.6]:", n);
    println!("{:>3}  {:>22}  {:>22}", "s", "start position", "end position");
    for s in 0..n {
        let start = c0.sample(s).coords();
        let finish = end.sample(s).block(0);
        println!(
            "{s:>3}  ({:>9.5}, {:>9.5})  ({:>9.5}, {:>9.5})",
            start[0], start[1], finish[0], finish[1]
        );
    }
    Ok(())
}
