//! The sampled identity suite: every structural relation the library is
//! built on, bundled into one report.
//!
//! Checks come in three flavours. Index shuffles (involution and projection
//! algebra, threading, loop reindexing) must agree to the last bit, so they
//! run against the structural tolerance. Derivative machinery is compared
//! with central differences at the looser finite-difference tolerance. One
//! check is a deliberate counterexample: iterated function lifts do *not*
//! descend through projections, and the suite demands a visible gap rather
//! than agreement — a guard against the suite degenerating into checks that
//! would pass vacuously.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::catalog::test_programs;
use crate::element::{kappa_map, proj_map, TangentElement};
use crate::error::Result;
use crate::flow::{flow_map_tangent, integrate_field, integrate_geodesic, FlowSpec};
use crate::lifts::{
    function_projectivity_gap, vertical_lift_section_by_path, ScalarFunction, VectorField,
};
use crate::loop_space::{
    loop_geodesic, loop_lift_commutes, product_spray, to_product_element, LoopPoint,
};
use crate::metric::{abs_dev, rel_dev};
use crate::report::{CheckResult, VerifyReport};
use crate::smooth::{fd_oracle, SmoothMap};
use crate::spray::{homogeneity_check, is_semispray, semispray_to_field, Semispray};
use crate::tower::{check_projective_field, tower_flow, tower_geodesic, Fill, LiftTower, TowerState};

const FD_STEP: f64 = 1e-5;
/// Iterated lifts of a base function must miss the projection by at least
/// this much somewhere in the sampling window.
const PROJECTIVITY_GAP_FLOOR: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Tower height: levels `0..=depth` are built and cross-checked.
    pub depth: usize,
    /// Random samples per check (heavier checks scale this down).
    pub samples: usize,
    pub seed: u64,
    pub tol_structural: f64,
    pub tol_conjugation: f64,
    pub tol_homogeneity: f64,
    pub tol_fd: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            depth: 3,
            samples: 100,
            seed: 42,
            tol_structural: 1e-12,
            tol_conjugation: 1e-10,
            tol_homogeneity: 1e-10,
            tol_fd: 1e-6,
        }
    }
}

/// What the object-specific half of the suite runs against.
#[derive(Debug, Clone)]
pub enum VerifyObject {
    Spray(Semispray),
    Field(VectorField),
}

impl VerifyObject {
    pub fn base_dim(&self) -> usize {
        match self {
            VerifyObject::Spray(s) => s.base_dim(),
            VerifyObject::Field(f) => f.base_dim(),
        }
    }

    /// The field whose flow the dynamical checks integrate.
    pub fn flow_field(&self) -> VectorField {
        match self {
            VerifyObject::Spray(s) => s.as_field(),
            VerifyObject::Field(f) => f.clone(),
        }
    }
}

fn sample(rng: &mut StdRng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Evaluation window shared with the rest of the suite: positive, away from
/// zero, inside every fixture's domain.
fn window(rng: &mut StdRng, len: usize) -> Vec<f64> {
    sample(rng, len, 0.25, 1.75)
}

fn map_pair_dev(lhs: &SmoothMap, rhs: &SmoothMap, rng: &mut StdRng, samples: usize) -> Result<f64> {
    let mut dev = 0.0f64;
    for _ in 0..samples {
        let x = sample(rng, lhs.in_dim(), -2.0, 2.0);
        dev = dev.max(abs_dev(&lhs.eval(&x)?, &rhs.eval(&x)?));
    }
    Ok(dev)
}

/// Run the whole suite against one object. `name` only labels the report.
pub fn run_verification(
    object: &VerifyObject,
    name: &str,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut checks: Vec<CheckResult> = Vec::new();
    let n = object.base_dim();
    let per_case = (opts.samples / 5).max(2);

    // --- involution / projection algebra, exact by construction ---------

    let mut dev = 0.0f64;
    for order in 2..=6 {
        for _ in 0..per_case {
            let e = TangentElement::new(order, n, sample(&mut rng, (1 << order) * n, -2.0, 2.0))?;
            dev = dev.max(abs_dev(e.kappa()?.kappa()?.coords(), e.coords()));
        }
    }
    checks.push(CheckResult::expect_within("kappa_involution", dev, opts.tol_structural));

    let mut dev = 0.0f64;
    for r in 2..=4 {
        let lhs = kappa_map(r, n).tangent(1).then(&proj_map(r + 1, n));
        let rhs = proj_map(r + 1, n).then(&kappa_map(r, n));
        dev = dev.max(map_pair_dev(&lhs, &rhs, &mut rng, per_case)?);
    }
    checks.push(CheckResult::expect_within("kappa_proj_commute", dev, opts.tol_structural));

    let mut dev = 0.0f64;
    for r in 1..=4 {
        let lhs = proj_map(r, n).tangent(1);
        let rhs = kappa_map(r + 1, n).then(&proj_map(r + 1, n));
        dev = dev.max(map_pair_dev(&lhs, &rhs, &mut rng, per_case)?);
    }
    checks.push(CheckResult::expect_within("tangent_proj_identity", dev, opts.tol_structural));

    let mut dev = 0.0f64;
    for r in 1..=3 {
        let lhs = kappa_map(r + 2, n).then(&proj_map(r, n).tangent(2));
        let rhs = proj_map(r, n).tangent(2).then(&kappa_map(r + 1, n));
        dev = dev.max(map_pair_dev(&lhs, &rhs, &mut rng, per_case)?);
    }
    checks.push(CheckResult::expect_within(
        "double_tangent_proj_kappa",
        dev,
        opts.tol_structural,
    ));

    let mut dev = 0.0f64;
    for r in 1..=3 {
        let lhs = proj_map(r + 2, n).then(&proj_map(r, n).tangent(1));
        let rhs = proj_map(r, n).tangent(2).then(&proj_map(r + 1, n));
        dev = dev.max(map_pair_dev(&lhs, &rhs, &mut rng, per_case)?);
    }
    checks.push(CheckResult::expect_within("proj_double_tangent", dev, opts.tol_structural));

    // --- lift calculus on fixtures ---------------------------------------

    let f0 = ScalarFunction::parse(0, 2, "x0 * sin(x1) + 0.5 * x0^2")?;
    let a0 = VectorField::parse(0, 2, &["x0 * x1", "x0 - x1^2"])?;

    let mut dev = 0.0f64;
    let f1 = f0.complete_lift()?;
    for fun in [&f0, &f1] {
        let lifted = fun.vertical_lift()?;
        let dim = (2 << fun.level()) * 2;
        for _ in 0..opts.samples / 2 {
            let xi = TangentElement::new(fun.level() + 1, 2, window(&mut rng, dim))?;
            let direct = lifted.value_at(&xi)?;
            let through = fun.value_at(&xi.tangent_proj()?)?;
            dev = dev.max((direct - through).abs());
        }
    }
    checks.push(CheckResult::expect_within("function_vertical_lift", dev, opts.tol_structural));

    let mut dev = 0.0f64;
    for _ in 0..opts.samples {
        let x = window(&mut rng, 2);
        let y = window(&mut rng, 2);
        let xi = TangentElement::new(1, 2, [x.clone(), y.clone()].concat())?;
        let lifted = f1.value_at(&xi)?;
        let directional = fd_oracle(f0.map(), &x, &y, FD_STEP)?;
        dev = dev.max(rel_dev(&[lifted], &directional));
    }
    checks.push(CheckResult::expect_within("function_complete_lift", dev, opts.tol_fd));

    let mut dev = 0.0f64;
    let a1 = a0.complete_lift()?;
    for field in [&a0, &a1] {
        let lifted = field.vertical_lift()?;
        let dim = (2 << field.level()) * 2;
        for _ in 0..opts.samples / 2 {
            let xi = TangentElement::new(field.level() + 1, 2, window(&mut rng, dim))?;
            let direct = lifted.section_at(&xi)?;
            let path = vertical_lift_section_by_path(field, &xi)?;
            dev = dev.max(abs_dev(direct.coords(), path.coords()));
        }
    }
    checks.push(CheckResult::expect_within("field_vertical_lift", dev, opts.tol_structural));

    let mut dev = 0.0f64;
    for field in [&a0, &a1] {
        let functorial = field.complete_lift()?;
        let local = field.complete_lift_local()?;
        let dim = (2 << field.level()) * 2;
        for _ in 0..opts.samples / 2 {
            let xi = TangentElement::new(field.level() + 1, 2, window(&mut rng, dim))?;
            dev = dev.max(rel_dev(&functorial.fiber_at(&xi)?, &local.fiber_at(&xi)?));
        }
    }
    checks.push(CheckResult::expect_within("field_complete_lift", dev, opts.tol_structural));

    let mut dev = 0.0f64;
    for i in 0..=2 {
        let field = a0.iterated_complete_lift(i)?;
        let dim = (1 << field.level()) * 2;
        for _ in 0..per_case {
            let xi = TangentElement::new(field.level(), 2, window(&mut rng, dim))?;
            let section = field.section_at(&xi)?;
            dev = dev.max(abs_dev(section.proj()?.coords(), xi.coords()));
        }
    }
    checks.push(CheckResult::expect_within("section_property", dev, opts.tol_structural));

    let mut dev = 0.0f64;
    for (_, program) in test_programs() {
        let tangent = program.tangent(1);
        for _ in 0..per_case {
            let x = window(&mut rng, program.in_dim());
            let v = window(&mut rng, program.in_dim());
            let exact = tangent.eval(&[x.clone(), v.clone()].concat())?;
            let fd = fd_oracle(&program, &x, &v, FD_STEP)?;
            dev = dev.max(rel_dev(&exact[program.out_dim()..], &fd));
        }
    }
    checks.push(CheckResult::expect_within(
        "tangent_vs_finite_difference",
        dev,
        opts.tol_fd,
    ));

    // --- the object under test -------------------------------------------

    let spray = match object {
        VerifyObject::Spray(s) => Some(s),
        VerifyObject::Field(_) => None,
    };

    if let Some(s) = spray {
        let mut dev = 0.0f64;
        for i in 0..=2 {
            let si = s.iterated_complete_lift(i)?;
            let report = is_semispray(
                &si.as_field(),
                opts.samples / 3 + 1,
                opts.tol_structural,
                opts.seed ^ (11 + i as u64),
            )?;
            dev = dev.max(report.max_deviation);
        }
        checks.push(CheckResult::expect_within("semispray_property", dev, opts.tol_structural));

        if s.flags().claimed_homogeneous {
            let lambdas = s.flags().verified_lambdas.clone();
            let mut dev = 0.0f64;
            for i in 0..=2 {
                let si = s.iterated_complete_lift(i)?;
                let report = homogeneity_check(
                    &si,
                    &lambdas,
                    opts.samples / 3 + 1,
                    opts.tol_homogeneity,
                    opts.seed ^ (17 + i as u64),
                )?;
                dev = dev.max(report.max_deviation);
            }
            checks.push(CheckResult::expect_within("spray_homogeneity", dev, opts.tol_homogeneity));
        }

        let via_spray = semispray_to_field(&s.complete_lift()?);
        let via_field = s.as_field().complete_lift()?;
        let dim = (2 << s.level()) * n;
        let mut dev = 0.0f64;
        for _ in 0..opts.samples {
            let xi = TangentElement::new(s.level() + 1, n, window(&mut rng, dim))?;
            dev = dev.max(rel_dev(&via_spray.fiber_at(&xi)?, &via_field.fiber_at(&xi)?));
        }
        checks.push(CheckResult::expect_within(
            "spray_field_lift_consistency",
            dev,
            opts.tol_structural,
        ));
    }

    // --- tower compatibility ----------------------------------------------

    let tower = match object {
        VerifyObject::Spray(s) => LiftTower::from_spray(s, opts.depth)?,
        VerifyObject::Field(f) => LiftTower::from_field(f, opts.depth)?,
    };
    let projective =
        check_projective_field(&tower, opts.samples.min(40), opts.tol_structural, opts.seed ^ 0xBEEF)?;
    let adjacent = projective
        .pairs
        .iter()
        .filter(|p| p.upper - p.lower == 1)
        .fold(0.0f64, |m, p| m.max(p.deviation));
    checks.push(CheckResult::expect_within("projective_adjacent", adjacent, opts.tol_structural));
    let composed = projective
        .pairs
        .iter()
        .filter(|p| p.upper - p.lower >= 2)
        .fold(0.0f64, |m, p| m.max(p.deviation));
    checks.push(CheckResult::expect_within("projective_composed", composed, opts.tol_structural));

    // --- dynamics ----------------------------------------------------------

    let field = object.flow_field();
    let lifted = field.complete_lift()?;
    let spec = FlowSpec::new(0.0, 0.5, 0.01)?;
    let dim = (2 << field.level()) * n;
    let mut dev = 0.0f64;
    for _ in 0..3 {
        let xi = TangentElement::new(field.level() + 1, n, window(&mut rng, dim))?;
        let via_dual = flow_map_tangent(&field, &xi, &spec)?;
        let via_lift = integrate_field(&lifted, &xi, &spec)?;
        dev = dev.max(rel_dev(via_dual.coords(), via_lift.final_state().coords()));
    }
    checks.push(CheckResult::expect_within("flow_conjugation", dev, opts.tol_conjugation));

    let spec = FlowSpec::new(0.0, 0.25, 0.01)?;
    let run = match object {
        VerifyObject::Spray(s) => {
            let base_order = s.level() - 1;
            let dim = (1 << base_order) * n;
            let pos = TangentElement::new(base_order, n, window(&mut rng, dim))?;
            let vel = TangentElement::new(base_order, n, window(&mut rng, dim))?;
            let positions = TowerState::thread(&pos, opts.depth, Fill::Random { seed: opts.seed ^ 0x7712 })?;
            let velocities = TowerState::thread(&vel, opts.depth, Fill::Random { seed: opts.seed ^ 0x3355 })?;
            tower_geodesic(&tower, &positions, &velocities, &spec, opts.tol_structural)?
        }
        VerifyObject::Field(f) => {
            let dim = (1 << f.level()) * n;
            let base = TangentElement::new(f.level(), n, window(&mut rng, dim))?;
            let init = TowerState::thread(&base, opts.depth, Fill::Random { seed: opts.seed ^ 0x7712 })?;
            tower_flow(&tower, &init, &spec, opts.tol_structural)?
        }
    };
    checks.push(CheckResult::expect_within(
        "trajectory_threading",
        run.threading.max_deviation,
        opts.tol_structural,
    ));

    // --- product realization ------------------------------------------------

    if let Some(s) = spray {
        let mut dev = 0.0f64;
        for (k, n_samples) in [3usize, 8, 32].into_iter().enumerate() {
            let c = LoopPoint::random(n_samples, s.level() + 1, n, opts.seed ^ (0x100 + k as u64))?;
            let report = loop_lift_commutes(s, &c, opts.tol_structural)?;
            dev = dev.max(report.max_deviation);
        }
        checks.push(CheckResult::expect_within("loop_lift_commutation", dev, opts.tol_structural));

        let spec = FlowSpec::new(0.0, 0.2, 0.01)?;
        let c0 = LoopPoint::random(5, s.level() - 1, n, opts.seed ^ 0xC0)?;
        let v0 = LoopPoint::random(5, s.level() - 1, n, opts.seed ^ 0xC1)?;
        let looped = loop_geodesic(s, &c0, &v0, &spec)?;
        let product = product_spray(s, 5)?;
        let product_run = integrate_geodesic(
            &product,
            &to_product_element(&c0),
            &to_product_element(&v0),
            &spec,
        )?;
        let dev = abs_dev(
            to_product_element(looped.final_point()).coords(),
            product_run.final_state().coords(),
        );
        checks.push(CheckResult::expect_within("loop_geodesic_pointwise", dev, opts.tol_structural));
    }

    // --- the deliberate counterexample --------------------------------------

    let f = ScalarFunction::parse(0, 1, "x0^2")?;
    let mut gap = 0.0f64;
    for _ in 0..opts.samples {
        let xi = TangentElement::new(2, 1, window(&mut rng, 4))?;
        gap = gap.max(function_projectivity_gap(&f, &xi)?);
    }
    checks.push(CheckResult::expect_at_least(
        "function_lift_projectivity",
        gap,
        PROJECTIVITY_GAP_FLOOR,
    ));

    Ok(VerifyReport::new(
        name.to_string(),
        opts.depth,
        opts.seed,
        opts.samples,
        checks,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{flat_spray, sphere_spray};

    fn quick() -> VerifyOptions {
        VerifyOptions {
            depth: 2,
            samples: 10,
            seed: 42,
            ..VerifyOptions::default()
        }
    }

    #[test]
    fn sphere_spray_passes_the_whole_suite() {
        let report =
            run_verification(&VerifyObject::Spray(sphere_spray()), "sphere", &quick()).unwrap();
        assert!(report.passed, "{}", report.to_json());
        assert_eq!(report.checks.len(), 21);
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"kappa_involution"));
        assert!(names.contains(&"loop_geodesic_pointwise"));
        let gap = report
            .checks
            .iter()
            .find(|c| c.name == "function_lift_projectivity")
            .unwrap();
        assert!(gap.must_fail && gap.passed && gap.deviation >= 0.1);
    }

    #[test]
    fn field_objects_skip_the_spray_checks() {
        let field = VectorField::parse(0, 2, &["-x1", "x0"]).unwrap();
        let report =
            run_verification(&VerifyObject::Field(field), "rotation", &quick()).unwrap();
        assert!(report.passed, "{}", report.to_json());
        assert_eq!(report.checks.len(), 16);
        assert!(!report.checks.iter().any(|c| c.name.starts_with("loop_")));
    }

    #[test]
    fn flat_spray_report_serializes_with_check_names() {
        let report =
            run_verification(&VerifyObject::Spray(flat_spray(2)), "flat", &quick()).unwrap();
        assert!(report.passed);
        let json = report.to_json();
        assert!(json.contains("projective_composed"));
        assert!(json.contains("\"must_fail\": true"));
    }
}
