//! End-to-end acceptance suite: ten numbered criteria, each a separate test
//! that prints one `criterion N pass` line (visible with `--nocapture`).
//! Tolerances are part of the contract and are asserted, not logged.

use std::process::Command;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tangent_tower::catalog::{
    flat_spray, quadratic_spray, sphere_spray, test_programs, HOMOGENEITY_LAMBDAS,
};
use tangent_tower::element::{kappa_map, proj_map, TangentElement};
use tangent_tower::flow::{flow_map_tangent, integrate_field, integrate_geodesic, FlowSpec};
use tangent_tower::lifts::{function_projectivity_gap, ScalarFunction, VectorField};
use tangent_tower::loop_space::{loop_geodesic, loop_lift_commutes, LoopPoint};
use tangent_tower::metric::{abs_dev, rel_dev};
use tangent_tower::smooth::{fd_oracle, SmoothMap};
use tangent_tower::spray::{homogeneity_check, is_semispray, SprayFlags};
use tangent_tower::tower::{
    check_projective_field, tower_flow, tower_geodesic, Fill, LiftTower, TowerState,
};
use tangent_tower::{DualScalar, Semispray};

const SEED: u64 = 42;

fn rng() -> StdRng {
    StdRng::seed_from_u64(SEED)
}

fn sample(rng: &mut StdRng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(lo..hi)).collect()
}

fn window(rng: &mut StdRng, len: usize) -> Vec<f64> {
    sample(rng, len, 0.25, 1.75)
}

fn map_dev(lhs: &SmoothMap, rhs: &SmoothMap, rng: &mut StdRng, samples: usize) -> f64 {
    let mut dev = 0.0f64;
    for _ in 0..samples {
        let x = sample(rng, lhs.in_dim(), -2.0, 2.0);
        dev = dev.max(abs_dev(&lhs.eval(&x).unwrap(), &rhs.eval(&x).unwrap()));
    }
    dev
}

/// Full Jacobian via one single-generator dual evaluation per input
/// coordinate — deliberately a different accumulation order than the packed
/// tangent programs use.
fn jacobian(map: &SmoothMap, x: &[f64]) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; map.in_dim()]; map.out_dim()];
    for i in 0..map.in_dim() {
        let seeded: Vec<DualScalar> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| DualScalar::with_derivative(v, if k == i { 1.0 } else { 0.0 }))
            .collect();
        let out = map.eval(&seeded).unwrap();
        for (j, d) in out.iter().enumerate() {
            rows[j][i] = d.coefficient(1);
        }
    }
    rows
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn criterion_01_structural_identities() {
    let n = 2;
    let mut rng = rng();
    let samples = 100;

    // involution squared is the identity
    let mut dev = 0.0f64;
    for order in 2..=6 {
        for _ in 0..samples {
            let e =
                TangentElement::new(order, n, sample(&mut rng, (1 << order) * n, -2.0, 2.0))
                    .unwrap();
            dev = dev.max(abs_dev(e.kappa().unwrap().kappa().unwrap().coords(), e.coords()));
        }
    }
    assert!(dev <= 1e-14, "involution deviation {dev}");

    // the four compatibility relations between the involution, the
    // projection, and their tangent maps
    for r in 2..=6 {
        let pairs = [
            (
                kappa_map(r, n).tangent(1).then(&proj_map(r + 1, n)),
                proj_map(r + 1, n).then(&kappa_map(r, n)),
            ),
            (
                proj_map(r, n).tangent(1),
                kappa_map(r + 1, n).then(&proj_map(r + 1, n)),
            ),
            (
                kappa_map(r + 2, n).then(&proj_map(r, n).tangent(2)),
                proj_map(r, n).tangent(2).then(&kappa_map(r + 1, n)),
            ),
            (
                proj_map(r + 2, n).then(&proj_map(r, n).tangent(1)),
                proj_map(r, n).tangent(2).then(&proj_map(r + 1, n)),
            ),
        ];
        for (i, (lhs, rhs)) in pairs.iter().enumerate() {
            let dev = map_dev(lhs, rhs, &mut rng, samples);
            assert!(dev <= 1e-14, "relation {i} at order {r}: deviation {dev}");
        }
    }
    println!("criterion 1 pass: structural identities exact for orders 2..=6");
}

#[test]
fn criterion_02_lift_formula_cross_checks() {
    let mut rng = rng();
    let tol = 1e-12;
    let f0 = ScalarFunction::parse(0, 2, "x0 * sin(x1) + 0.5 * x0^2").unwrap();
    let a0 = VectorField::parse(0, 2, &["x0 * x1", "x0 - x1^2"]).unwrap();
    let mut worst = 0.0f64;

    for lift_level in 1..=3usize {
        let f = (1..lift_level).fold(f0.clone(), |f, _| f.complete_lift().unwrap());
        let a = (1..lift_level).fold(a0.clone(), |a, _| a.complete_lift().unwrap());
        let dim = (1 << lift_level) * 2;
        let fc = f.complete_lift().unwrap();
        let av = a.vertical_lift().unwrap();
        let ac = a.complete_lift().unwrap();
        let ac_local = a.complete_lift_local().unwrap();

        for _ in 0..100 {
            let xi = TangentElement::new(lift_level, 2, window(&mut rng, dim)).unwrap();
            let swapped = xi.kappa().unwrap();
            let half = dim / 2;
            let (low, high) = swapped.coords().split_at(half);

            // complete function lift against the derivative-sum formula
            let grad = jacobian(f.map(), low);
            let by_sum = dot(high, &grad[0]);
            worst = worst.max(rel_dev(&[fc.value_at(&xi).unwrap()], &[by_sum]));

            // vertical field lift against the zero-padded block formula
            let through = a.fiber_at(&xi.tangent_proj().unwrap()).unwrap();
            let mut padded = vec![0.0; dim];
            padded[half..].copy_from_slice(&through);
            let assembled = TangentElement::new(lift_level, 2, padded)
                .unwrap()
                .kappa()
                .unwrap();
            worst = worst.max(rel_dev(&av.fiber_at(&xi).unwrap(), assembled.coords()));

            // complete field lift: functorial program, conjugated-derivative
            // program, and the hand-assembled value/derivative blocks
            let value = a.fiber_map().eval(&low.to_vec()).unwrap();
            let rows = jacobian(a.fiber_map(), low);
            let jvp: Vec<f64> = rows.iter().map(|row| dot(high, row)).collect();
            let assembled = TangentElement::new(lift_level, 2, [value, jvp].concat())
                .unwrap()
                .kappa()
                .unwrap();
            let functorial = ac.fiber_at(&xi).unwrap();
            worst = worst.max(rel_dev(&functorial, assembled.coords()));
            worst = worst.max(rel_dev(&functorial, &ac_local.fiber_at(&xi).unwrap()));
        }
    }
    assert!(worst <= tol, "lift formula deviation {worst}");
    println!("criterion 2 pass: lift formulas agree to {worst:.2e} <= 1e-12 (levels 1..=3)");
}

#[test]
fn criterion_03_tangent_vs_finite_difference() {
    let mut rng = rng();
    let mut worst = 0.0f64;
    for (name, program) in test_programs() {
        let tangent = program.tangent(1);
        for _ in 0..100 {
            let x = window(&mut rng, program.in_dim());
            let v = window(&mut rng, program.in_dim());
            let exact = tangent.eval(&[x.clone(), v.clone()].concat()).unwrap();
            let fd = fd_oracle(&program, &x, &v, 1e-5).unwrap();
            let dev = rel_dev(&exact[program.out_dim()..], &fd);
            assert!(dev <= 1e-6, "{name}: deviation {dev}");
            worst = worst.max(dev);
        }
    }
    println!("criterion 3 pass: forward derivatives within {worst:.2e} <= 1e-6 of central differences");
}

#[test]
fn criterion_04_spray_lifts_are_sprays() {
    let gamma = vec![0.3, -0.2, -0.2, 0.0, 0.0, 0.1, 0.1, 0.5];
    let sprays = [
        ("flat", flat_spray(2)),
        ("sphere", sphere_spray()),
        ("quadratic", quadratic_spray(2, &gamma).unwrap()),
    ];
    for (name, spray) in &sprays {
        for i in 1..=3usize {
            let lifted = spray.iterated_complete_lift(i).unwrap();
            let property = is_semispray(&lifted.as_field(), 25, 1e-12, SEED ^ i as u64).unwrap();
            assert_eq!(
                property.max_deviation, 0.0,
                "{name} lift {i}: semispray deviation {}",
                property.max_deviation
            );
            let hom = homogeneity_check(&lifted, &HOMOGENEITY_LAMBDAS, 25, 1e-10, SEED + i as u64)
                .unwrap();
            assert!(
                hom.passed,
                "{name} lift {i}: homogeneity deviation {}",
                hom.max_deviation
            );
        }
    }
    println!("criterion 4 pass: lifted sprays stay sprays (exact) and homogeneous (<= 1e-10), lifts 1..=3");
}

#[test]
fn criterion_05_projective_tower() {
    let field_tower =
        LiftTower::from_field(&VectorField::parse(0, 2, &["x0 * x1", "x0 - x1^2"]).unwrap(), 3)
            .unwrap();
    let spray_tower = LiftTower::from_spray(&sphere_spray(), 3).unwrap();
    for (name, tower) in [("field", field_tower), ("sphere spray", spray_tower)] {
        let report = check_projective_field(&tower, 100, 1e-12, SEED).unwrap();
        assert!(report.passed, "{name}: max deviation {}", report.max_deviation);
        // adjacent and composed level pairs are both present
        assert!(report.pairs.iter().any(|p| p.upper - p.lower == 1));
        assert!(report.pairs.iter().any(|p| p.upper - p.lower >= 2));
        assert!(
            report.max_deviation <= 1e-12,
            "{name}: max deviation {}",
            report.max_deviation
        );
    }
    println!("criterion 5 pass: projective compatibility <= 1e-12 on 100 threaded samples, depth 3");
}

#[test]
fn criterion_06_function_lift_gap_must_fail() {
    // lifting twice then projecting differs from projecting then lifting:
    // for f(x) = x^2 at (1, 1, 1, 1) the two sides are 2 and 4
    let f = ScalarFunction::parse(0, 1, "x0^2").unwrap();
    let probe = TangentElement::new(2, 1, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
    let gap = function_projectivity_gap(&f, &probe).unwrap();
    assert!((gap - 2.0).abs() <= 1e-12, "gap {gap}");
    assert!(gap >= 0.1);
    println!("criterion 6 pass: function lifts visibly fail to project (gap {gap})");
}

#[test]
fn criterion_07_closed_form_geodesics() {
    // flat spray: straight line, exact
    let flat = flat_spray(1);
    let x0 = TangentElement::new(0, 1, vec![0.0]).unwrap();
    let v0 = TangentElement::new(0, 1, vec![1.0]).unwrap();
    let spec = FlowSpec::new(0.0, 1.0, 1e-3).unwrap();
    let traj = integrate_geodesic(&flat, &x0, &v0, &spec).unwrap();
    let end = traj.final_state().coords()[0];
    assert!((end - 1.0).abs() <= 1e-12, "flat endpoint {end}");

    // coefficient y^2 / 2: x'' = -x'^2, so x(t) = log(1 + t)
    let log_spray = Semispray::parse(1, &["0.5 * x1^2"], SprayFlags::none()).unwrap();
    let run = |dt: f64| {
        let spec = FlowSpec::new(0.0, 1.0, dt).unwrap();
        let traj = integrate_geodesic(&log_spray, &x0, &v0, &spec).unwrap();
        (traj.final_state().coords()[0] - 2.0f64.ln()).abs()
    };
    assert!(run(1e-3) <= 1e-8, "log endpoint error {}", run(1e-3));

    // fourth-order convergence: halving dt divides the error by ~16
    let ratio = run(0.05) / run(0.025);
    assert!((12.0..=20.0).contains(&ratio), "convergence ratio {ratio}");

    // sphere spray conserves the conformal chart speed 2|y| / (1 + |x|^2)
    let sphere = sphere_spray();
    let speed = |s: &[f64]| {
        2.0 * (s[2] * s[2] + s[3] * s[3]).sqrt() / (1.0 + s[0] * s[0] + s[1] * s[1])
    };
    let x0 = TangentElement::new(0, 2, vec![0.3, 0.1]).unwrap();
    let v0 = TangentElement::new(0, 2, vec![0.4, -0.2]).unwrap();
    let spec = FlowSpec::new(0.0, std::f64::consts::TAU, 1e-4).unwrap();
    let traj = integrate_geodesic(&sphere, &x0, &v0, &spec).unwrap();
    let reference = speed(traj.states()[0].coords());
    let mut drift = 0.0f64;
    for state in traj.states() {
        drift = drift.max((speed(state.coords()) - reference).abs() / reference);
    }
    assert!(drift <= 1e-6, "speed drift {drift}");
    println!(
        "criterion 7 pass: flat exact, log(1+t) to 1e-8, RK4 ratio {ratio:.1}, speed drift {drift:.2e}"
    );
}

#[test]
fn criterion_08_conjugation_and_threading() {
    let mut rng = rng();
    let spec = FlowSpec::new(0.0, 0.5, 0.01).unwrap();

    // dual-number flow map against integrating the lifted field
    let linear = VectorField::parse(0, 2, &["0.3 * x0 - x1", "x0 + 0.1 * x1"]).unwrap();
    let sphere_field = sphere_spray().as_field();
    let mut worst = 0.0f64;
    for field in [&linear, &sphere_field] {
        let lifted = field.complete_lift().unwrap();
        let dim = (2 << field.level()) * 2;
        for _ in 0..3 {
            let xi = TangentElement::new(field.level() + 1, 2, window(&mut rng, dim)).unwrap();
            let direct = flow_map_tangent(field, &xi, &spec).unwrap();
            let through = integrate_field(&lifted, &xi, &spec).unwrap();
            worst = worst.max(rel_dev(direct.coords(), through.final_state().coords()));
        }
    }
    assert!(worst <= 1e-10, "conjugation deviation {worst}");

    // full-trajectory cross-level threading at depth 3
    let spec = FlowSpec::new(0.0, 0.25, 0.01).unwrap();
    let field_tower = LiftTower::from_field(&linear, 3).unwrap();
    let base = TangentElement::new(0, 2, window(&mut rng, 2)).unwrap();
    let init = TowerState::thread(&base, 3, Fill::Random { seed: SEED }).unwrap();
    let flow_run = tower_flow(&field_tower, &init, &spec, 1e-12).unwrap();
    assert!(
        flow_run.threading.passed && flow_run.threading.max_deviation <= 1e-12,
        "flow threading {}",
        flow_run.threading.max_deviation
    );

    let spray_tower = LiftTower::from_spray(&sphere_spray(), 3).unwrap();
    let pos = TangentElement::new(0, 2, window(&mut rng, 2)).unwrap();
    let vel = TangentElement::new(0, 2, window(&mut rng, 2)).unwrap();
    let positions = TowerState::thread(&pos, 3, Fill::Random { seed: SEED ^ 1 }).unwrap();
    let velocities = TowerState::thread(&vel, 3, Fill::Random { seed: SEED ^ 2 }).unwrap();
    let geo_run = tower_geodesic(&spray_tower, &positions, &velocities, &spec, 1e-12).unwrap();
    assert!(
        geo_run.threading.passed && geo_run.threading.max_deviation <= 1e-12,
        "geodesic threading {}",
        geo_run.threading.max_deviation
    );
    println!(
        "criterion 8 pass: conjugation {worst:.2e} <= 1e-10, threading exact over depth-3 trajectories"
    );
}

#[test]
fn criterion_09_loop_space() {
    let gamma = vec![0.3, -0.2, -0.2, 0.0, 0.0, 0.1, 0.1, 0.5];
    let sprays = [
        ("flat", flat_spray(2)),
        ("sphere", sphere_spray()),
        ("quadratic", quadratic_spray(2, &gamma).unwrap()),
    ];

    // lifting the product spray = taking the product of the lifted spray
    for (name, spray) in &sprays {
        for n_samples in [3usize, 8, 32] {
            let c = LoopPoint::random(n_samples, 2, 2, SEED + n_samples as u64).unwrap();
            let report = loop_lift_commutes(spray, &c, 1e-12).unwrap();
            assert!(
                report.passed,
                "{name} N={n_samples}: deviation {}",
                report.max_deviation
            );
        }
    }

    // loop geodesics are the per-sample geodesics, bit for bit
    let sphere = sphere_spray();
    let spec = FlowSpec::new(0.0, 0.3, 0.01).unwrap();
    let c0 = LoopPoint::random(5, 0, 2, SEED).unwrap();
    let v0 = LoopPoint::random(5, 0, 2, SEED + 1).unwrap();
    let looped = loop_geodesic(&sphere, &c0, &v0, &spec).unwrap();
    for s in 0..5 {
        let solo = integrate_geodesic(&sphere, c0.sample(s), v0.sample(s), &spec).unwrap();
        for (k, state) in solo.states().iter().enumerate() {
            assert_eq!(
                looped.points()[k].sample(s).coords(),
                state.coords(),
                "sample {s} step {k} differs"
            );
        }
    }
    println!("criterion 9 pass: loop lifts commute <= 1e-12 (N in {{3, 8, 32}}), loop geodesics bit-identical");
}

#[test]
fn criterion_10_cli_contract() {
    let bin = env!("CARGO_BIN_EXE_ttower");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let good = dir.path().join("sphere.toml");
    std::fs::write(
        &good,
        format!(
            "[object]\nkind = \"spray\"\nname = \"sphere\"\nbase_dim = 2\ndepth = 2\n\n\
             [run]\nsamples = 20\n\n[output]\ndir = \"{}\"\n",
            out.display()
        ),
    )
    .unwrap();
    let status = Command::new(bin)
        .args(["verify", "--config"])
        .arg(&good)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0), "verify run failed");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    let checks = report["checks"].as_array().unwrap();
    let expected = [
        "kappa_involution",
        "kappa_proj_commute",
        "tangent_proj_identity",
        "double_tangent_proj_kappa",
        "proj_double_tangent",
        "function_vertical_lift",
        "function_complete_lift",
        "field_vertical_lift",
        "field_complete_lift",
        "section_property",
        "tangent_vs_finite_difference",
        "semispray_property",
        "spray_homogeneity",
        "spray_field_lift_consistency",
        "projective_adjacent",
        "projective_composed",
        "flow_conjugation",
        "trajectory_threading",
        "loop_lift_commutation",
        "loop_geodesic_pointwise",
        "function_lift_projectivity",
    ];
    for name in expected {
        let check = checks
            .iter()
            .find(|c| c["name"] == name)
            .unwrap_or_else(|| panic!("report lacks {name}"));
        assert!(check["deviation"].is_number(), "{name} lacks a deviation");
    }

    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "[object]\nkind = \"spray\"\nname = \"flat\"\nbase_dim = 2\n\n\
         [flow]\nt1 = 1.0\ndt = 0.0\n\n\
         [initial]\nposition = [0.0, 0.0]\nvelocity = [1.0, 0.0]\n",
    )
    .unwrap();
    let status = Command::new(bin)
        .args(["geodesic", "--config"])
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2), "dt = 0 must be a config error");

    println!("criterion 10 pass: verify exits 0 naming all identities; dt <= 0 exits 2");
}
