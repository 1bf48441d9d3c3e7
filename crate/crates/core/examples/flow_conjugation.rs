//! The tangent map of a flow equals the flow of the lifted field.
//!
//! Two independent ways to transport a tangent vector along a flow: push it
//! through the dual-number flow map (differentiating the integrator), or
//! integrate the complete lift of the field from the seeded point. The two
//! trajectories are built from the same arithmetic, so they agree far below
//! the integrator's own truncation error. The example also probes finite
//! lifetimes on a field that blows up.

use tangent_tower::element::TangentElement;
use tangent_tower::flow::{flow_map_tangent, integrate_field, lifetime_probe, FlowSpec};
use tangent_tower::lifts::VectorField;
use tangent_tower::metric::rel_dev;
use tangent_tower::Result;

fn main() -> Result<()> {
    let spec = FlowSpec::new(0.0, 1.0, 1e-3)?;

    // a gently nonlinear planar field
    let field = VectorField::parse(0, 2, &["x1", "-sin(x0)"])?;
    let seeded = TangentElement::new(1, 2, vec![0.8, 0.3, 1.0, 0.0])?;

    let via_dual = flow_map_tangent(&field, &seeded, &spec)?;
    let via_lift = integrate_field(&field.complete_lift()?, &seeded, &spec)?;
    println!("flow map tangent : {:?}", via_dual.coords());
    println!("lifted field flow: {:?}", via_lift.final_state().coords());
    println!(
        "conjugation deviation: {:e}",
        rel_dev(via_dual.coords(), via_lift.final_state().coords())
    );
    println!();

    // one level up: the same identity for the already-lifted field
    let lifted = field.complete_lift()?;
    let seeded2 = TangentElement::new(2, 2, vec![0.8, 0.3, 1.0, 0.0, 0.2, -0.1, 0.0, 1.0])?;
    let a = flow_map_tangent(&lifted, &seeded2, &spec)?;
    let b = integrate_field(&lifted.complete_lift()?, &seeded2, &spec)?;
    println!(
        "one level up, deviation: {:e}",
        rel_dev(a.coords(), b.final_state().coords())
    );
    println!();

    // dx/dt = x^2 from x(0) = 1 leaves every bound at t -> 1
    let blowup = VectorField::parse(0, 1, &["x0^2"])?;
    let x0 = TangentElement::new(0, 1, vec![1.0])?;
    let probe_spec = FlowSpec::new(0.0, 2.0, 1e-3)?.with_blowup_bound(1e6);
    let t = lifetime_probe(&blowup, &x0, &probe_spec)?;
    println!("blow-up probe for dx/dt = x^2: last good time {t:.4} (exact lifetime 1)");
    Ok(())
}
