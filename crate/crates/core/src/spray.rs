//! Semisprays and two-homogeneous sprays.
//!
//! A semispray at level `r` is the distinguished vector field on the order-`r`
//! bundle whose fiber reads `(y, -2 G(x, y))` for a coefficient map `G`; its
//! integral curves are exactly the velocity curves of second-order dynamics
//! `x'' + 2 G(x, x') = 0`. The coefficient is the whole datum here, so the
//! complete lift is computed directly on `G` — vertical and complete
//! function lifts, component by component — and cross-checked against the
//! field-level lift elsewhere in the suite.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::element::{kappa_map, proj_map, TangentElement};
use crate::ensure_budget;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lifts::VectorField;
use crate::smooth::SmoothMap;

/// Homogeneity bookkeeping attached to a semispray.
#[derive(Debug, Clone)]
pub struct SprayFlags {
    pub claimed_homogeneous: bool,
    pub verified_lambdas: Vec<f64>,
}

impl SprayFlags {
    /// Flags for a plain semispray with no homogeneity claim.
    pub fn none() -> Self {
        SprayFlags {
            claimed_homogeneous: false,
            verified_lambdas: Vec::new(),
        }
    }

    /// Flags claiming two-homogeneity, verified against the given scalings.
    pub fn homogeneous(lambdas: &[f64]) -> Self {
        SprayFlags {
            claimed_homogeneous: true,
            verified_lambdas: lambdas.to_vec(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.claimed_homogeneous && self.verified_lambdas.is_empty() {
            return Err(Error::Config(
                "spray flags claim homogeneity but list no verified scalings".into(),
            ));
        }
        Ok(())
    }
}

/// Second-order vector field on the order-`level` bundle, stored through its
/// coefficient `G` on the chart one level down.
#[derive(Debug, Clone)]
pub struct Semispray {
    level: usize,
    base_dim: usize,
    coeff: SmoothMap,
    flags: SprayFlags,
}

/// Pass/fail outcome of a sampled structural check.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub passed: bool,
    pub max_deviation: f64,
    pub samples: usize,
    pub tol: f64,
}

/// Homogeneity check outcome, with the worst deviation seen per scaling.
#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityReport {
    pub passed: bool,
    pub max_deviation: f64,
    pub per_lambda: Vec<(f64, f64)>,
    pub samples: usize,
    pub tol: f64,
}

impl Semispray {
    /// A semispray needs `level >= 1`; its coefficient maps the order-`level`
    /// chart onto half of it.
    pub fn new(level: usize, base_dim: usize, coeff: SmoothMap, flags: SprayFlags) -> Result<Self> {
        if level < 1 {
            return Err(Error::OrderTooLow {
                context: "semispray",
                min: 1,
                got: level,
            });
        }
        let in_dim = (1usize << level) * base_dim;
        if coeff.in_dim() != in_dim || coeff.out_dim() != in_dim / 2 {
            return Err(Error::Dimension {
                context: "semispray coefficient",
                expected: in_dim,
                got: coeff.in_dim(),
            });
        }
        flags.validate()?;
        Ok(Semispray {
            level,
            base_dim,
            coeff,
            flags,
        })
    }

    /// Level-1 semispray from coefficient expressions over `x0..x{2n-1}`
    /// (base slots first, fiber slots after).
    pub fn parse(base_dim: usize, sources: &[&str], flags: SprayFlags) -> Result<Self> {
        let coeff = SmoothMap::parse(2 * base_dim, sources)?;
        Semispray::new(1, base_dim, coeff, flags)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn coefficient(&self) -> &SmoothMap {
        &self.coeff
    }

    pub fn flags(&self) -> &SprayFlags {
        &self.flags
    }

    pub fn coefficient_at(&self, xi: &TangentElement) -> Result<Vec<f64>> {
        if xi.order() != self.level {
            return Err(Error::OrderTooLow {
                context: "spray coefficient evaluation",
                min: self.level,
                got: xi.order(),
            });
        }
        Ok(self.coeff.eval(xi.coords())?)
    }

    /// The induced vector field `(x, y) -> (y, -2 G(x, y))`.
    pub fn as_field(&self) -> VectorField {
        semispray_to_field(self)
    }

    /// First-order right-hand side of the geodesic equation on this chart:
    /// `d/dt (x, y) = (y, -2 G(x, y))`.
    pub fn geodesic_rhs(&self) -> SmoothMap {
        semispray_fiber_program(self)
    }

    /// Complete lift: a semispray one level up whose coefficient stacks the
    /// vertical and complete lifts of each coefficient component,
    /// `(x, y, X, Y) -> (G(x, X), dG(x, X) . (y, Y))`. Homogeneity carries
    /// over, so the flags are kept.
    pub fn complete_lift(&self) -> Result<Semispray> {
        ensure_budget(self.level + 2)?;
        let n = self.base_dim;
        let r = self.level;
        let m = self.coeff.out_dim();
        let k = kappa_map(r + 1, n);
        let vertical = k.then(&proj_map(r + 1, n)).then(&self.coeff);
        let derivative_part = SmoothMap::select(2 * m, (m..2 * m).collect());
        let complete = k.then(&self.coeff.tangent(1)).then(&derivative_part);
        Semispray::new(
            r + 1,
            n,
            SmoothMap::stack(&[vertical, complete]),
            self.flags.clone(),
        )
    }

    /// Iterate the complete lift `times` levels up.
    pub fn iterated_complete_lift(&self, times: usize) -> Result<Semispray> {
        let mut spray = self.clone();
        for _ in 0..times {
            spray = spray.complete_lift()?;
        }
        Ok(spray)
    }
}

fn semispray_fiber_program(s: &Semispray) -> SmoothMap {
    let dim = (1usize << s.level) * s.base_dim;
    let half = dim / 2;
    let upper_input = SmoothMap::select(dim, (half..dim).collect());
    let scale = SmoothMap::from_exprs(
        half,
        (0..half).map(|i| Expr::lit(-2.0) * Expr::var(i)).collect(),
    )
    .expect("scaling program is well-formed");
    SmoothMap::stack(&[upper_input, s.coeff.then(&scale)])
}

/// The vector field a semispray *is*: fiber `(y, -2 G(x, y))`.
pub fn semispray_to_field(s: &Semispray) -> VectorField {
    VectorField::new(s.level, s.base_dim, semispray_fiber_program(s))
        .expect("semispray fiber program has matching dimensions")
}

/// Sampled check of the two equivalent second-order characterizations: the
/// section is invariant under the canonical involution, and its tangent
/// projection returns the input point. Both hold exactly for fields built
/// from a coefficient; the tolerance guards hand-written fields.
pub fn is_semispray(v: &VectorField, samples: usize, tol: f64, seed: u64) -> Result<PropertyReport> {
    if v.level() < 1 {
        return Err(Error::OrderTooLow {
            context: "semispray check",
            min: 1,
            got: v.level(),
        });
    }
    let dim = (1usize << v.level()) * v.base_dim();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_deviation: f64 = 0.0;
    for _ in 0..samples {
        // positive window so domain-restricted expressions (log, sqrt) stay valid
        let coords: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.25..1.75)).collect();
        let xi = TangentElement::new(v.level(), v.base_dim(), coords)?;
        let section = v.section_at(&xi)?;
        let swapped = section.kappa()?;
        for (a, b) in swapped.coords().iter().zip(section.coords()) {
            max_deviation = max_deviation.max((a - b).abs());
        }
        let back = section.tangent_proj()?;
        for (a, b) in back.coords().iter().zip(xi.coords()) {
            max_deviation = max_deviation.max((a - b).abs());
        }
    }
    Ok(PropertyReport {
        passed: max_deviation <= tol,
        max_deviation,
        samples,
        tol,
    })
}

/// Sampled two-homogeneity check: `|G(x, lambda y) - lambda^2 G(x, y)|`
/// maximized over samples, reported per scaling.
pub fn homogeneity_check(
    s: &Semispray,
    lambdas: &[f64],
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<HomogeneityReport> {
    if lambdas.is_empty() {
        return Err(Error::Config("homogeneity check needs at least one scaling".into()));
    }
    let dim = (1usize << s.level) * s.base_dim;
    let half = dim / 2;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut per_lambda: Vec<(f64, f64)> = lambdas.iter().map(|&l| (l, 0.0)).collect();
    for _ in 0..samples {
        let coords: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let base_value = s.coeff.eval(&coords)?;
        for (lambda, worst) in per_lambda.iter_mut() {
            let mut scaled = coords.clone();
            for y in scaled[half..].iter_mut() {
                *y *= *lambda;
            }
            let scaled_value = s.coeff.eval(&scaled)?;
            for (sv, bv) in scaled_value.iter().zip(&base_value) {
                let dev = (sv - *lambda * *lambda * bv).abs();
                *worst = worst.max(dev);
            }
        }
    }
    let max_deviation = per_lambda.iter().fold(0.0f64, |m, &(_, d)| m.max(d));
    Ok(HomogeneityReport {
        passed: max_deviation <= tol,
        max_deviation,
        per_lambda,
        samples,
        tol,
    })
}
