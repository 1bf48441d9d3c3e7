//! Geodesic integration against closed forms.
//!
//! Three sprays with known geodesics: the flat spray (straight lines), the
//! one-dimensional coefficient G = y^2 / 2 (x(t) = log(1 + t)), and the
//! round sphere in a stereographic chart (great circles, conserved speed).

use tangent_tower::catalog::{flat_spray, sphere_spray};
use tangent_tower::element::TangentElement;
use tangent_tower::flow::{integrate_geodesic, FlowSpec};
use tangent_tower::spray::SprayFlags;
use tangent_tower::{Result, Semispray};

fn main() -> Result<()> {
    let spec = FlowSpec::new(0.0, 1.0, 1e-3)?;

    // straight line: x(t) = t
    let flat = flat_spray(1);
    let x0 = TangentElement::new(0, 1, vec![0.0])?;
    let v0 = TangentElement::new(0, 1, vec![1.0])?;
    let line = integrate_geodesic(&flat, &x0, &v0, &spec)?;
    println!("flat:      x(1) = {}  (exact 1)", line.final_state().coords()[0]);

    // x'' = -(x')^2 integrates to x(t) = log(1 + t)
    let log_spray = Semispray::parse(1, &["0.5 * x1^2"], SprayFlags::none())?;
    let curve = integrate_geodesic(&log_spray, &x0, &v0, &spec)?;
    println!("log spray: x(1) = {}  (log 2 = {})", curve.final_state().coords()[0], 2.0f64.ln());
    println!("           t        x(t)      log(1 + t)");
    for k in (0..=1000).step_by(250) {
        let t = curve.times()[k];
        println!(
            "           {t:<8.3} {:<9.6} {:.6}",
            curve.states()[k].coords()[0],
            (1.0 + t).ln()
        );
    }
    println!();

    // sphere geodesics conserve the conformal chart speed 2|y| / (1 + |x|^2)
    let sphere = sphere_spray();
    let speed =
        |s: &[f64]| 2.0 * (s[2] * s[2] + s[3] * s[3]).sqrt() / (1.0 + s[0] * s[0] + s[1] * s[1]);
    let x0 = TangentElement::new(0, 2, vec![0.3, 0.1])?;
    let v0 = TangentElement::new(0, 2, vec![0.4, -0.2])?;
    let spec = FlowSpec::new(0.0, std::f64::consts::TAU, 1e-3)?;
    let circle = integrate_geodesic(&sphere, &x0, &v0, &spec)?;
    let s0 = speed(circle.states()[0].coords());
    let drift = circle
        .states()
        .iter()
        .map(|s| (speed(s.coords()) - s0).abs() / s0)
        .fold(0.0f64, f64::max);
    println!("sphere:    chart speed {s0:.6}, worst relative drift over one period: {drift:e}");
    Ok(())
}
