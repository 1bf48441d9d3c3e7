//! Vertical and complete lifts of functions and vector fields.
//!
//! Lifts are built as programs — selections, stacked maps, and tangent
//! nodes — so a lifted object can be lifted again. This example evaluates
//! them at concrete points and compares against the hand-written local
//! formulas.

use tangent_tower::element::TangentElement;
use tangent_tower::lifts::{ScalarFunction, VectorField};
use tangent_tower::metric::rel_dev;
use tangent_tower::Result;

fn main() -> Result<()> {
    // f(x0, x1) = x0^2 * x1 on a 2-dimensional chart
    let f = ScalarFunction::parse(0, 2, "x0^2 * x1")?;
    let point = TangentElement::new(1, 2, vec![3.0, 2.0, 0.5, -1.0])?;
    let (x, y) = (&[3.0, 2.0], &[0.5, -1.0]);

    // vertical lift reads the base point, complete lift is the directional
    // derivative: f_c(x, y) = 2 x0 x1 y0 + x0^2 y1
    println!("f   at x       = {}", f.value_at(&point.proj()?)?);
    println!("f_v at (x, y)  = {}", f.vertical_lift()?.value_at(&point)?);
    let expected = 2.0 * x[0] * x[1] * y[0] + x[0] * x[0] * y[1];
    println!("f_c at (x, y)  = {}  (formula: {expected})", f.complete_lift()?.value_at(&point)?);
    println!();

    // A = (x1, -x0), the rotation field
    let a = VectorField::parse(0, 2, &["x1", "-x0"])?;
    let xi = TangentElement::new(1, 2, vec![3.0, 2.0, 0.5, -1.0])?;

    // the vertical lift pads with zeros and reads the (x, X) blocks
    let av = a.vertical_lift()?;
    println!("A_v fiber at (x, y) = {:?}", av.fiber_at(&xi)?);
    println!("  blocks: (0, A(x, y_outer)) after the involution");

    // the complete lift differentiates the section and swaps layers back;
    // the functorial program and the local conjugated-derivative program
    // produce the same numbers
    let functorial = a.complete_lift()?;
    let local = a.complete_lift_local()?;
    let via_program = functorial.fiber_at(&xi)?;
    let via_formula = local.fiber_at(&xi)?;
    println!("A_c fiber, functorial = {via_program:?}");
    println!("A_c fiber, local      = {via_formula:?}");
    println!("agreement             = {:e}", rel_dev(&via_program, &via_formula));
    println!();

    // lifting twice: the order doubles each time, and the result is still a
    // program that can be evaluated anywhere
    let aa = a.iterated_complete_lift(2)?;
    let xi2 = TangentElement::new(2, 2, vec![1.0, 0.5, 0.25, 2.0, -1.0, 0.75, 0.1, 0.3])?;
    println!("A_cc lives at level {} with fiber {:?}", aa.level(), aa.fiber_at(&xi2)?);
    Ok(())
}
