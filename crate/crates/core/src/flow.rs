//! Fixed-step integration of integral curves and geodesics.
//!
//! One classical fourth-order Runge-Kutta integrator, generic over the
//! state scalar. Run on plain floats it produces trajectories; run on
//! dual-number state it differentiates the *discrete* flow map exactly, so
//! the tangent of the numerical flow comes out of the same code path with no
//! variational equations. Steps are uniform and deterministic — that is what
//! makes the cross-level consistency checks reproducible to rounding.

use crate::dual::DualScalar;
use crate::element::TangentElement;
use crate::error::{Error, EvalError, Result};
use crate::lifts::VectorField;
use crate::metric::max_norm;
use crate::spray::Semispray;

/// Default cap on the number of steps per integration.
pub const DEFAULT_MAX_STEPS: usize = 10_000_000;
/// Default max-norm bound used by the blow-up heuristic.
pub const DEFAULT_BLOWUP_BOUND: f64 = 1e9;

/// Time window and step size for one integration run.
#[derive(Debug, Clone, Copy)]
pub struct FlowSpec {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub blowup_bound: f64,
}

impl FlowSpec {
    pub fn new(t0: f64, t1: f64, dt: f64) -> Result<Self> {
        let spec = FlowSpec {
            t0,
            t1,
            dt,
            max_steps: DEFAULT_MAX_STEPS,
            blowup_bound: DEFAULT_BLOWUP_BOUND,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_blowup_bound(mut self, bound: f64) -> Self {
        self.blowup_bound = bound;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t0.is_finite() || !self.t1.is_finite() || self.t1 <= self.t0 {
            return Err(Error::FlowSpec(format!(
                "time window [{}, {}] must be finite with t1 > t0",
                self.t0, self.t1
            )));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::FlowSpec(format!(
                "time step {} must be positive",
                self.dt
            )));
        }
        self.grid().map(|_| ())
    }

    /// Number of uniform steps and the realized step size. The window is
    /// divided evenly, rounding the count so the grid lands on `t1`.
    pub(crate) fn grid(&self) -> Result<(usize, f64)> {
        let span = self.t1 - self.t0;
        let raw = (span / self.dt).round();
        let steps = if raw < 1.0 { 1 } else { raw as usize };
        if steps > self.max_steps {
            return Err(Error::FlowSpec(format!(
                "window/dt needs {steps} steps, over the budget of {}",
                self.max_steps
            )));
        }
        Ok((steps, span / steps as f64))
    }

    fn time_at(&self, k: usize, steps: usize) -> f64 {
        self.t0 + (self.t1 - self.t0) * (k as f64 / steps as f64)
    }
}

/// A uniformly sampled integral curve; every step is stored.
#[derive(Debug, Clone)]
pub struct Trajectory {
    level: usize,
    base_dim: usize,
    dt: f64,
    times: Vec<f64>,
    states: Vec<TangentElement>,
}

impl Trajectory {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[TangentElement] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &TangentElement {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Vector-space operations the integrator needs from a state.
pub trait OdeState: Clone {
    /// `self += a * other`, componentwise.
    fn axpy(&mut self, a: f64, other: &Self);
}

impl OdeState for Vec<f64> {
    fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.iter_mut().zip(other) {
            *s += a * o;
        }
    }
}

impl OdeState for Vec<DualScalar> {
    fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.iter_mut().zip(other) {
            *s = s.add(&o.scale(a));
        }
    }
}

/// One classical Runge-Kutta step of size `dt`.
fn rk4_step<S, F>(rhs: &F, state: &S, dt: f64) -> std::result::Result<S, EvalError>
where
    S: OdeState,
    F: Fn(&S) -> std::result::Result<S, EvalError>,
{
    let k1 = rhs(state)?;
    let mut mid = state.clone();
    mid.axpy(dt / 2.0, &k1);
    let k2 = rhs(&mid)?;
    let mut mid = state.clone();
    mid.axpy(dt / 2.0, &k2);
    let k3 = rhs(&mid)?;
    let mut end = state.clone();
    end.axpy(dt, &k3);
    let k4 = rhs(&end)?;
    let mut next = state.clone();
    next.axpy(dt / 6.0, &k1);
    next.axpy(dt / 3.0, &k2);
    next.axpy(dt / 3.0, &k3);
    next.axpy(dt / 6.0, &k4);
    Ok(next)
}

fn expect_order(xi: &TangentElement, order: usize, context: &'static str) -> Result<()> {
    if xi.order() != order {
        return Err(Error::OrderTooLow {
            context,
            min: order,
            got: xi.order(),
        });
    }
    Ok(())
}

/// Integrate `d/dt xi = fiber(xi)` from `xi0` across the window. An
/// evaluation failure mid-run is reported as a partial-trajectory error
/// carrying the last valid time.
pub fn integrate_field(
    field: &VectorField,
    xi0: &TangentElement,
    spec: &FlowSpec,
) -> Result<Trajectory> {
    expect_order(xi0, field.level(), "field integration start")?;
    let (steps, dt) = spec.grid()?;
    let fiber = field.fiber_map();
    let rhs = |s: &Vec<f64>| fiber.eval_raw::<f64>(s);
    let mut state = xi0.coords().to_vec();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(spec.t0);
    states.push(xi0.clone());
    for k in 0..steps {
        state = rk4_step(&rhs, &state, dt).map_err(|e| Error::PartialTrajectory {
            last_time: spec.time_at(k, steps),
            steps_done: k,
            source: e,
        })?;
        times.push(spec.time_at(k + 1, steps));
        states.push(TangentElement::new(
            field.level(),
            field.base_dim(),
            state.clone(),
        )?);
    }
    Ok(Trajectory {
        level: field.level(),
        base_dim: field.base_dim(),
        dt,
        times,
        states,
    })
}

/// Integrate the second-order system of a semispray from a position and a
/// velocity one order down; the trajectory carries the combined `(x, y)`
/// states.
pub fn integrate_geodesic(
    spray: &Semispray,
    x0: &TangentElement,
    v0: &TangentElement,
    spec: &FlowSpec,
) -> Result<Trajectory> {
    expect_order(x0, spray.level() - 1, "geodesic start position")?;
    expect_order(v0, spray.level() - 1, "geodesic start velocity")?;
    if x0.base_dim() != spray.base_dim() || v0.base_dim() != spray.base_dim() {
        return Err(Error::Dimension {
            context: "geodesic initial data",
            expected: spray.base_dim(),
            got: x0.base_dim().max(v0.base_dim()),
        });
    }
    let mut coords = x0.coords().to_vec();
    coords.extend_from_slice(v0.coords());
    let start = TangentElement::new(spray.level(), spray.base_dim(), coords)?;
    integrate_field(&spray.as_field(), &start, spec)
}

/// Tangent of the discrete flow, conjugated by the canonical involution:
/// seed the integrator with dual numbers along the involuted input, run the
/// very same steps, and involute back. Matches integrating the complete
/// lift of the field to rounding.
pub fn flow_map_tangent(
    field: &VectorField,
    xi: &TangentElement,
    spec: &FlowSpec,
) -> Result<TangentElement> {
    expect_order(xi, field.level() + 1, "flow tangent start")?;
    let (steps, dt) = spec.grid()?;
    let swapped = xi.kappa()?;
    let half = swapped.coords().len() / 2;
    let mut state: Vec<DualScalar> = (0..half)
        .map(|i| DualScalar::with_derivative(swapped.coords()[i], swapped.coords()[half + i]))
        .collect();
    let fiber = field.fiber_map();
    let rhs = |s: &Vec<DualScalar>| fiber.eval_raw::<DualScalar>(s);
    for k in 0..steps {
        state = rk4_step(&rhs, &state, dt).map_err(|e| Error::PartialTrajectory {
            last_time: spec.time_at(k, steps),
            steps_done: k,
            source: e,
        })?;
    }
    let mut coords = vec![0.0; 2 * half];
    for (i, s) in state.iter().enumerate() {
        coords[i] = s.value();
        coords[half + i] = s.coefficient(1);
    }
    TangentElement::new(xi.order(), xi.base_dim(), coords)?.kappa()
}

/// Largest grid time reached before the state leaves the blow-up bound (or
/// fails to evaluate); `t1` when the whole window is covered. Heuristic —
/// trouble is reported through the return value, never as an error.
pub fn lifetime_probe(field: &VectorField, xi0: &TangentElement, spec: &FlowSpec) -> Result<f64> {
    expect_order(xi0, field.level(), "lifetime probe start")?;
    let (steps, dt) = spec.grid()?;
    let fiber = field.fiber_map();
    let rhs = |s: &Vec<f64>| fiber.eval_raw::<f64>(s);
    let mut state = xi0.coords().to_vec();
    let mut last_good = spec.t0;
    for k in 0..steps {
        state = match rk4_step(&rhs, &state, dt) {
            Ok(next) => next,
            Err(_) => return Ok(last_good),
        };
        if state.iter().any(|v| !v.is_finite()) || max_norm(&state) > spec.blowup_bound {
            return Ok(last_good);
        }
        last_good = spec.time_at(k + 1, steps);
    }
    Ok(spec.t1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifts::VectorField;
    use crate::spray::{Semispray, SprayFlags};

    fn el(order: usize, base_dim: usize, coords: &[f64]) -> TangentElement {
        TangentElement::new(order, base_dim, coords.to_vec()).unwrap()
    }

    #[test]
    fn zero_field_holds_still() {
        let x = VectorField::parse(0, 2, &["0", "0"]).unwrap();
        let spec = FlowSpec::new(0.0, 1.0, 0.1).unwrap();
        let traj = integrate_field(&x, &el(0, 2, &[1.5, -2.5]), &spec).unwrap();
        assert_eq!(traj.len(), 11);
        assert_eq!(traj.final_state().coords(), &[1.5, -2.5]);
        assert_eq!(*traj.times().last().unwrap(), 1.0);
    }

    #[test]
    fn exponential_growth_and_decay_match_closed_forms() {
        let spec = FlowSpec::new(0.0, 1.0, 1e-3).unwrap();
        let grow = VectorField::parse(0, 1, &["x0"]).unwrap();
        let up = integrate_field(&grow, &el(0, 1, &[1.0]), &spec).unwrap();
        assert!((up.final_state().coords()[0] - std::f64::consts::E).abs() < 1e-8);

        let decay = VectorField::parse(0, 1, &["-x0"]).unwrap();
        let down = integrate_field(&decay, &el(0, 1, &[1.0]), &spec).unwrap();
        assert!((down.final_state().coords()[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn flat_geodesics_are_straight_lines() {
        let s = Semispray::parse(1, &["0"], SprayFlags::none()).unwrap();
        let spec = FlowSpec::new(0.0, 1.0, 1e-3).unwrap();
        let traj = integrate_geodesic(&s, &el(0, 1, &[0.0]), &el(0, 1, &[1.0]), &spec).unwrap();
        assert!((traj.final_state().coords()[0] - 1.0).abs() < 1e-12);
        // mid-trajectory states track t as well
        let mid = &traj.states()[500];
        assert!((mid.coords()[0] - traj.times()[500]).abs() < 1e-12);
    }

    #[test]
    fn logarithmic_geodesic_hits_log_two() {
        let s = Semispray::parse(1, &["0.5 * x1^2"], SprayFlags::none()).unwrap();
        let spec = FlowSpec::new(0.0, 1.0, 1e-3).unwrap();
        let traj = integrate_geodesic(&s, &el(0, 1, &[0.0]), &el(0, 1, &[1.0]), &spec).unwrap();
        let x1 = traj.final_state().coords()[0];
        assert!((x1 - std::f64::consts::LN_2).abs() < 1e-8, "{x1}");
    }

    #[test]
    fn halving_the_step_shows_fourth_order_convergence() {
        let s = Semispray::parse(1, &["0.5 * x1^2"], SprayFlags::none()).unwrap();
        let exact = std::f64::consts::LN_2;
        let run = |dt: f64| {
            let spec = FlowSpec::new(0.0, 1.0, dt).unwrap();
            let traj =
                integrate_geodesic(&s, &el(0, 1, &[0.0]), &el(0, 1, &[1.0]), &spec).unwrap();
            (traj.final_state().coords()[0] - exact).abs()
        };
        let ratio = run(0.05) / run(0.025);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn tangent_flow_of_a_linear_field_is_the_exponential_multiplier() {
        let a = 0.5;
        let field = VectorField::parse(0, 1, &["0.5 * x0"]).unwrap();
        let spec = FlowSpec::new(0.0, 1.0, 1e-3).unwrap();
        let out = flow_map_tangent(&field, &el(1, 1, &[1.0, 1.0]), &spec).unwrap();
        let factor = (a * 1.0f64).exp();
        assert!((out.coords()[0] - factor).abs() < 1e-8);
        assert!((out.coords()[1] - factor).abs() < 1e-8);
    }

    #[test]
    fn tangent_flow_agrees_with_integrating_the_complete_lift() {
        let field = VectorField::parse(0, 1, &["sin(x0) + 0.3 * x0"]).unwrap();
        let spec = FlowSpec::new(0.0, 0.5, 1e-3).unwrap();
        let xi = el(1, 1, &[0.7, 1.3]);
        let direct = flow_map_tangent(&field, &xi, &spec).unwrap();
        let lifted = field.complete_lift().unwrap();
        let via_lift = integrate_field(&lifted, &xi, &spec).unwrap();
        for (a, b) in direct.coords().iter().zip(via_lift.final_state().coords()) {
            let scale = a.abs().max(b.abs()).max(1.0);
            assert!((a - b).abs() / scale <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn tangent_flow_agrees_one_level_up_as_well() {
        let field = VectorField::parse(1, 1, &["x1", "-x0 * x1"]).unwrap();
        let spec = FlowSpec::new(0.0, 0.4, 1e-3).unwrap();
        let xi = el(2, 1, &[0.9, 0.2, -0.4, 1.1]);
        let direct = flow_map_tangent(&field, &xi, &spec).unwrap();
        let via_lift = integrate_field(&field.complete_lift().unwrap(), &xi, &spec).unwrap();
        for (a, b) in direct.coords().iter().zip(via_lift.final_state().coords()) {
            let scale = a.abs().max(b.abs()).max(1.0);
            assert!((a - b).abs() / scale <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn lifetime_probe_returns_the_full_window_for_tame_fields() {
        let spec = FlowSpec::new(0.0, 2.0, 1e-2).unwrap();
        let zero = VectorField::parse(0, 1, &["0"]).unwrap();
        assert_eq!(lifetime_probe(&zero, &el(0, 1, &[1.0]), &spec).unwrap(), 2.0);
        let linear = VectorField::parse(0, 1, &["-x0"]).unwrap();
        assert_eq!(lifetime_probe(&linear, &el(0, 1, &[1.0]), &spec).unwrap(), 2.0);
    }

    #[test]
    fn lifetime_probe_flags_the_quadratic_blowup_near_one() {
        let field = VectorField::parse(0, 1, &["x0^2"]).unwrap();
        let spec = FlowSpec::new(0.0, 2.0, 1e-3)
            .unwrap()
            .with_blowup_bound(1e6);
        let t = lifetime_probe(&field, &el(0, 1, &[1.0]), &spec).unwrap();
        assert!((t - 1.0).abs() < 0.01, "lifetime {t}");
    }

    #[test]
    fn mid_run_domain_failure_reports_a_partial_trajectory() {
        // x' = 1 + sqrt(1 - x) pushes past x = 1 at t = 2(1 - log 2)
        let field = VectorField::parse(0, 1, &["1 + sqrt(1 - x0)"]).unwrap();
        let spec = FlowSpec::new(0.0, 2.0, 1e-3).unwrap();
        let err = integrate_field(&field, &el(0, 1, &[0.0]), &spec).unwrap_err();
        match err {
            Error::PartialTrajectory {
                last_time,
                steps_done,
                ..
            } => {
                let crossing = 2.0 * (1.0 - std::f64::consts::LN_2);
                assert!((last_time - crossing).abs() < 0.01, "stopped at {last_time}");
                assert!(steps_done > 0);
            }
            other => panic!("expected partial trajectory, got {other}"),
        }
    }

    #[test]
    fn flow_specs_reject_bad_windows_and_budgets() {
        assert!(FlowSpec::new(0.0, 1.0, 0.0).is_err());
        assert!(FlowSpec::new(0.0, 1.0, -0.1).is_err());
        assert!(FlowSpec::new(1.0, 1.0, 0.1).is_err());
        assert!(FlowSpec::new(0.0, f64::NAN, 0.1).is_err());
        let tight = FlowSpec {
            t0: 0.0,
            t1: 1.0,
            dt: 1e-4,
            max_steps: 100,
            blowup_bound: DEFAULT_BLOWUP_BOUND,
        };
        assert!(tight.validate().is_err());
    }

    #[test]
    fn grids_land_exactly_on_the_endpoint() {
        let spec = FlowSpec::new(0.0, 1.0, 0.3).unwrap();
        let x = VectorField::parse(0, 1, &["0"]).unwrap();
        let traj = integrate_field(&x, &el(0, 1, &[0.0]), &spec).unwrap();
        assert_eq!(traj.len(), 4); // 3 steps of 1/3
        assert_eq!(*traj.times().last().unwrap(), 1.0);
    }
}
