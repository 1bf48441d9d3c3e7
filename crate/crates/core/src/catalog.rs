//! Built-in sprays and test programs.
//!
//! Three sprays cover the interesting regimes: the flat spray is exactly
//! solvable, the round-sphere spray in a stereographic chart has great
//! circles for geodesics, and the constant-coefficient quadratic spray
//! exercises generic user input. Each constructor runs a sampled
//! homogeneity self-check before handing the spray out.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::smooth::SmoothMap;
use crate::spray::{homogeneity_check, Semispray, SprayFlags};

/// Scalings used for homogeneity checks throughout the suite.
pub const HOMOGENEITY_LAMBDAS: [f64; 4] = [2.0, -1.0, 0.5, 0.0];

const SELF_CHECK_SAMPLES: usize = 8;
const SELF_CHECK_TOL: f64 = 1e-10;
const SELF_CHECK_SEED: u64 = 0x5EED;

fn self_checked(spray: Semispray) -> Result<Semispray> {
    let report = homogeneity_check(
        &spray,
        &HOMOGENEITY_LAMBDAS,
        SELF_CHECK_SAMPLES,
        SELF_CHECK_TOL,
        SELF_CHECK_SEED,
    )?;
    if !report.passed {
        return Err(Error::Structural {
            check: "construction-time homogeneity self-check",
            level: spray.level(),
            deviation: report.max_deviation,
        });
    }
    Ok(spray)
}

/// The flat spray on an `n`-dimensional chart: zero coefficient, straight
/// line geodesics.
pub fn flat_spray(base_dim: usize) -> Semispray {
    Semispray::new(
        1,
        base_dim,
        SmoothMap::zeros(2 * base_dim, base_dim),
        SprayFlags::homogeneous(&HOMOGENEITY_LAMBDAS),
    )
    .expect("flat spray dimensions are consistent")
}

/// Geodesic spray of the round unit sphere in a stereographic chart. The
/// chart metric is conformal, `g = 4 (1 + |x|^2)^-2 (dx1^2 + dx2^2)`, which
/// gives `G^k(x, y) = (2 / (1 + |x|^2)) (|y|^2 x^k / 2 - <x, y> y^k)`.
/// Geodesics through the chart are images of great circles.
pub fn sphere_spray() -> Semispray {
    let factor = "(2 / (1 + x0^2 + x1^2))";
    let ip = "(x0 * x2 + x1 * x3)";
    let ysq = "(x2^2 + x3^2)";
    let component = |xk: &str, yk: &str| format!("{factor} * (0.5 * {ysq} * {xk} - {ip} * {yk})");
    let spray = Semispray::parse(
        2,
        &[&component("x0", "x2"), &component("x1", "x3")],
        SprayFlags::homogeneous(&HOMOGENEITY_LAMBDAS),
    )
    .expect("sphere spray expressions are well-formed");
    self_checked(spray).expect("sphere spray coefficient is quadratic in the fiber")
}

/// Spray with constant coefficients `G^k = gamma[k][i][j] y^i y^j / 2`,
/// from a flat row-major table of length `n^3` indexed `k, i, j`.
pub fn quadratic_spray(base_dim: usize, gamma: &[f64]) -> Result<Semispray> {
    let n = base_dim;
    if gamma.len() != n * n * n {
        return Err(Error::Dimension {
            context: "quadratic spray coefficient table",
            expected: n * n * n,
            got: gamma.len(),
        });
    }
    let mut components = Vec::with_capacity(n);
    for k in 0..n {
        let mut sum = Expr::lit(0.0);
        for i in 0..n {
            for j in 0..n {
                let c = gamma[k * n * n + i * n + j];
                if c != 0.0 {
                    sum = sum + Expr::lit(0.5 * c) * Expr::var(n + i) * Expr::var(n + j);
                }
            }
        }
        components.push(sum);
    }
    let coeff = SmoothMap::from_exprs(2 * n, components)?;
    self_checked(Semispray::new(
        1,
        n,
        coeff,
        SprayFlags::homogeneous(&HOMOGENEITY_LAMBDAS),
    )?)
}

/// Look up a spray by catalog name. `flat` works in any dimension; `sphere`
/// is two-dimensional.
pub fn spray_by_name(name: &str, base_dim: usize) -> Result<Semispray> {
    match name {
        "flat" => Ok(flat_spray(base_dim)),
        "sphere" => {
            if base_dim != 2 {
                return Err(Error::Dimension {
                    context: "sphere spray chart",
                    expected: 2,
                    got: base_dim,
                });
            }
            Ok(sphere_spray())
        }
        other => Err(Error::Config(format!(
            "unknown catalog spray `{other}` (available: flat, sphere)"
        ))),
    }
}

/// Named smooth programs mixing the supported primitives, used to exercise
/// forward-mode derivatives against finite differences. All are smooth on
/// the sampling window `[0.25, 1.75]^k`.
pub fn test_programs() -> Vec<(&'static str, SmoothMap)> {
    let parse = |in_dim, srcs: &[&str]| SmoothMap::parse(in_dim, srcs).expect("fixed test program");
    vec![
        ("polynomial_surface", parse(2, &["x0^3 * x1 - 2 * x0 * x1^2 + 0.5"])),
        ("trig_blend", parse(2, &["sin(x0) * cos(x1)", "cos(x0 * x1)"])),
        ("exp_log", parse(2, &["exp(0.3 * x0) * log(1 + x1^2)"])),
        ("power_mix", parse(2, &["(1 + x0^2) ^ 1.5 + sqrt(4 + x1)"])),
        ("rational", parse(2, &["(x0 - x1) / (1 + x0^2 + x1^2)"])),
        (
            "chart_swirl",
            parse(3, &["x0 * sin(x1 * x2)", "sqrt(1 + x0^2) * x2", "exp(x1 - x2)"]),
        ),
    ]
}
