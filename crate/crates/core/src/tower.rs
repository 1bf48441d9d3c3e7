//! Finite towers of iterated complete lifts.
//!
//! The infinite tower is only ever touched through truncations: a ladder of
//! lifts up to a chosen depth, threaded families of points compatible with
//! the connecting projections, and cross-level consistency checks on flows
//! and geodesics. The connecting map between consecutive levels is the
//! *tangent* projection — the only projection the lifted dynamics commute
//! with in general — and threaded states are built so that both it and the
//! plain bundle projection recover the level below exactly.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::element::TangentElement;
use crate::ensure_budget;
use crate::error::{Error, Result};
use crate::flow::{integrate_field, integrate_geodesic, FlowSpec, Trajectory};
use crate::lifts::VectorField;
use crate::spray::{is_semispray, Semispray};

/// Default tolerance for cross-level consistency; anything above it is a
/// bug, not numerics, because the compared blocks run the same arithmetic.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-12;

const STRUCTURAL_SAMPLES: usize = 4;
const STRUCTURAL_SEED: u64 = 0xA11CE;

/// What a tower is made of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TowerKind {
    Field,
    Spray,
}

/// Ladder of iterated complete lifts: `levels[i]` is the i-fold lift of the
/// base object. Spray towers also keep the induced vector field per level,
/// which is what flows and projective checks run on.
#[derive(Debug, Clone)]
pub struct LiftTower {
    kind: TowerKind,
    depth: usize,
    base_dim: usize,
    base_level: usize,
    fields: Vec<VectorField>,
    sprays: Vec<Semispray>,
}

/// Family of points threaded through the tower: `states[i]` has order
/// `base_order + i`, and each level projects onto the one below under both
/// the plain and the tangent projection.
#[derive(Debug, Clone)]
pub struct TowerState {
    base_dim: usize,
    states: Vec<TangentElement>,
}

/// How to fill the coordinates a threading step cannot determine.
#[derive(Debug, Clone, Copy)]
pub enum Fill {
    Zeros,
    Random { seed: u64 },
}

/// Worst deviation seen between one pair of adjacent (or composed) levels.
#[derive(Debug, Clone, Serialize)]
pub struct PairDeviation {
    pub lower: usize,
    pub upper: usize,
    pub deviation: f64,
}

/// Outcome of the projective-compatibility check over a whole tower.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectiveReport {
    pub passed: bool,
    pub max_deviation: f64,
    pub pairs: Vec<PairDeviation>,
    pub samples: usize,
    pub tol: f64,
}

/// Pointwise cross-level agreement of a family of trajectories.
#[derive(Debug, Clone, Serialize)]
pub struct ThreadingReport {
    pub passed: bool,
    pub max_deviation: f64,
    pub pairs: Vec<PairDeviation>,
    pub tol: f64,
}

/// Trajectories at every level plus their consistency report.
#[derive(Debug, Clone)]
pub struct TowerRun {
    pub trajectories: Vec<Trajectory>,
    pub threading: ThreadingReport,
}

fn structural_window(rng: &mut StdRng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(0.25..1.75)).collect()
}

impl LiftTower {
    /// Ladder of complete lifts of a vector field, validated structurally at
    /// every level.
    pub fn from_field(base: &VectorField, depth: usize) -> Result<Self> {
        let mut fields = vec![base.clone()];
        for i in 0..depth {
            fields.push(fields[i].complete_lift()?);
        }
        let tower = LiftTower {
            kind: TowerKind::Field,
            depth,
            base_dim: base.base_dim(),
            base_level: base.level(),
            fields,
            sprays: Vec::new(),
        };
        tower.validate_structure()?;
        Ok(tower)
    }

    /// Ladder of complete lifts of a semispray; keeps both the sprays and
    /// their induced fields.
    pub fn from_spray(base: &Semispray, depth: usize) -> Result<Self> {
        let mut sprays = vec![base.clone()];
        for i in 0..depth {
            sprays.push(sprays[i].complete_lift()?);
        }
        let fields = sprays.iter().map(|s| s.as_field()).collect();
        let tower = LiftTower {
            kind: TowerKind::Spray,
            depth,
            base_dim: base.base_dim(),
            base_level: base.level(),
            fields,
            sprays,
        };
        tower.validate_structure()?;
        Ok(tower)
    }

    fn validate_structure(&self) -> Result<()> {
        let mut rng = StdRng::seed_from_u64(STRUCTURAL_SEED);
        for (i, field) in self.fields.iter().enumerate() {
            let dim = (1usize << field.level()) * self.base_dim;
            for _ in 0..STRUCTURAL_SAMPLES {
                let xi =
                    TangentElement::new(field.level(), self.base_dim, structural_window(&mut rng, dim))?;
                let section = field.section_at(&xi)?;
                if section.proj()? != xi {
                    return Err(Error::Structural {
                        check: "section property",
                        level: i,
                        deviation: f64::INFINITY,
                    });
                }
            }
            if self.kind == TowerKind::Spray {
                let report = is_semispray(field, STRUCTURAL_SAMPLES, 1e-12, STRUCTURAL_SEED)?;
                if !report.passed {
                    return Err(Error::Structural {
                        check: "second-order section property",
                        level: i,
                        deviation: report.max_deviation,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> TowerKind {
        self.kind
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// Level of the bundle `fields[0]` lives on.
    pub fn base_level(&self) -> usize {
        self.base_level
    }

    pub fn field_levels(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn field_level(&self, i: usize) -> &VectorField {
        &self.fields[i]
    }

    pub fn spray_levels(&self) -> &[Semispray] {
        &self.sprays
    }

    pub fn spray_level(&self, i: usize) -> &Semispray {
        &self.sprays[i]
    }

    /// Swap one field level for an unrelated one — breaks the ladder on
    /// purpose, for negative testing of the projective checks.
    pub fn with_field_level(mut self, i: usize, field: VectorField) -> Result<Self> {
        if i > self.depth {
            return Err(Error::Dimension {
                context: "tower level index",
                expected: self.depth,
                got: i,
            });
        }
        if field.level() != self.fields[i].level() || field.base_dim() != self.base_dim {
            return Err(Error::Dimension {
                context: "replacement field level",
                expected: self.fields[i].level(),
                got: field.level(),
            });
        }
        self.fields[i] = field;
        self.sprays.clear();
        self.kind = TowerKind::Field;
        Ok(self)
    }
}

impl TowerState {
    /// Thread a base point up through `depth` levels. Each step copies the
    /// blocks both projections look at and fills the rest from `fill`, so
    /// the whole family is compatible by construction.
    pub fn thread(base: &TangentElement, depth: usize, fill: Fill) -> Result<Self> {
        ensure_budget(base.order() + depth)?;
        let mut rng = match fill {
            Fill::Zeros => None,
            Fill::Random { seed } => Some(StdRng::seed_from_u64(seed)),
        };
        let mut states = vec![base.clone()];
        let n = base.base_dim();
        for step in 0..depth {
            let prev = &states[step];
            let q = prev.order();
            let block = n;
            let mut coords = vec![0.0; (1usize << (q + 1)) * n];
            for mask in 0..(1usize << (q + 1)) {
                let dst = &mut coords[mask * block..(mask + 1) * block];
                if mask & (1 << q) == 0 {
                    dst.copy_from_slice(prev.block(mask));
                } else if q >= 1 && mask & (1 << (q - 1)) == 0 {
                    let src = (1 << (q - 1)) | (mask & ((1 << (q - 1)) - 1));
                    dst.copy_from_slice(prev.block(src));
                } else {
                    match rng.as_mut() {
                        Some(r) => dst.fill_with(|| r.gen_range(0.25..1.75)),
                        None => dst.fill(0.0),
                    }
                }
            }
            states.push(TangentElement::new(q + 1, n, coords)?);
        }
        Ok(TowerState {
            base_dim: n,
            states,
        })
    }

    /// Wrap an existing family, verifying the threading conditions.
    pub fn from_states(states: Vec<TangentElement>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Dimension {
                context: "tower state levels",
                expected: 1,
                got: 0,
            });
        }
        let state = TowerState {
            base_dim: states[0].base_dim(),
            states,
        };
        state.validate()?;
        Ok(state)
    }

    /// Check that consecutive levels are exactly compatible under both the
    /// plain and the tangent projection.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.states.len() - 1 {
            let upper = &self.states[i + 1];
            let lower = &self.states[i];
            if upper.order() != lower.order() + 1 || upper.base_dim() != self.base_dim {
                return Err(Error::Dimension {
                    context: "tower state orders",
                    expected: lower.order() + 1,
                    got: upper.order(),
                });
            }
            for (name, projected) in [("plain", upper.proj()?), ("tangent", upper.tangent_proj()?)]
            {
                let dev = projected
                    .coords()
                    .iter()
                    .zip(lower.coords())
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if dev > 1e-12 {
                    return Err(Error::Structural {
                        check: match name {
                            "plain" => "plain projection threading",
                            _ => "tangent projection threading",
                        },
                        level: i,
                        deviation: dev,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.states.len() - 1
    }

    pub fn base_order(&self) -> usize {
        self.states[0].order()
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn states(&self) -> &[TangentElement] {
        &self.states
    }

    pub fn level(&self, i: usize) -> &TangentElement {
        &self.states[i]
    }
}

/// Thread a base point into a tower-compatible family (see
/// [`TowerState::thread`]).
pub fn lift_state(base: &TangentElement, depth: usize, fill: Fill) -> Result<TowerState> {
    TowerState::thread(base, depth, fill)
}

/// Evaluate both sides of the commuting square between every pair of
/// levels on randomly threaded states: the lower fiber at the projected
/// point against the projected upper fiber. Adjacent pairs realize the
/// one-step relation; wider pairs compose it.
pub fn check_projective_field(
    tower: &LiftTower,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<ProjectiveReport> {
    let depth = tower.depth();
    let mut pairs: Vec<PairDeviation> = Vec::new();
    for lower in 0..depth {
        for upper in lower + 1..=depth {
            pairs.push(PairDeviation {
                lower,
                upper,
                deviation: 0.0,
            });
        }
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let base_level = tower.base_level();
    let base_dim = tower.base_dim();
    for sample in 0..samples {
        let dim = (1usize << base_level) * base_dim;
        let base = TangentElement::new(base_level, base_dim, structural_window(&mut rng, dim))?;
        let threaded = TowerState::thread(
            &base,
            depth,
            Fill::Random {
                seed: seed ^ (sample as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            },
        )?;
        for pair in pairs.iter_mut() {
            let mut point = threaded.level(pair.upper).clone();
            let mut fiber = TangentElement::new(
                point.order(),
                base_dim,
                tower.field_level(pair.upper).fiber_at(&point)?,
            )?;
            for _ in 0..pair.upper - pair.lower {
                point = point.tangent_proj()?;
                fiber = fiber.tangent_proj()?;
            }
            let lhs = tower.field_level(pair.lower).fiber_at(&point)?;
            for (a, b) in lhs.iter().zip(fiber.coords()) {
                pair.deviation = pair.deviation.max((a - b).abs());
            }
        }
    }
    let max_deviation = pairs.iter().fold(0.0f64, |m, p| m.max(p.deviation));
    Ok(ProjectiveReport {
        passed: max_deviation <= tol,
        max_deviation,
        pairs,
        samples,
        tol,
    })
}

fn threading_report(trajectories: &[Trajectory], tol: f64) -> Result<ThreadingReport> {
    let mut pairs = Vec::new();
    let mut max_deviation = 0.0f64;
    for i in 0..trajectories.len().saturating_sub(1) {
        let lower = &trajectories[i];
        let upper = &trajectories[i + 1];
        let mut dev = 0.0f64;
        for (up, low) in upper.states().iter().zip(lower.states()) {
            let projected = up.tangent_proj()?;
            for (a, b) in projected.coords().iter().zip(low.coords()) {
                dev = dev.max((a - b).abs());
            }
        }
        max_deviation = max_deviation.max(dev);
        pairs.push(PairDeviation {
            lower: i,
            upper: i + 1,
            deviation: dev,
        });
    }
    Ok(ThreadingReport {
        passed: max_deviation <= tol,
        max_deviation,
        pairs,
        tol,
    })
}

fn expect_tower_state(
    init: &TowerState,
    depth: usize,
    base_order: usize,
    context: &'static str,
) -> Result<()> {
    if init.depth() != depth || init.base_order() != base_order {
        return Err(Error::OrderTooLow {
            context,
            min: base_order,
            got: init.base_order(),
        });
    }
    init.validate()
}

/// Integrate every level of a field tower from a threaded family and check
/// that each trajectory projects pointwise onto the one below.
pub fn tower_flow(
    tower: &LiftTower,
    init: &TowerState,
    spec: &FlowSpec,
    tol: f64,
) -> Result<TowerRun> {
    expect_tower_state(init, tower.depth(), tower.base_level(), "tower flow start")?;
    let mut trajectories = Vec::with_capacity(tower.depth() + 1);
    for i in 0..=tower.depth() {
        trajectories.push(integrate_field(tower.field_level(i), init.level(i), spec)?);
    }
    let threading = threading_report(&trajectories, tol)?;
    Ok(TowerRun {
        trajectories,
        threading,
    })
}

/// Integrate the geodesics of a spray tower from threaded positions and
/// velocities. The combined `(x, y)` states inherit compatibility from the
/// two families, so the same pointwise check applies.
pub fn tower_geodesic(
    tower: &LiftTower,
    positions: &TowerState,
    velocities: &TowerState,
    spec: &FlowSpec,
    tol: f64,
) -> Result<TowerRun> {
    if tower.kind() != TowerKind::Spray {
        return Err(Error::Config("tower geodesics need a spray tower".into()));
    }
    let base_order = tower.spray_level(0).level() - 1;
    expect_tower_state(positions, tower.depth(), base_order, "tower geodesic positions")?;
    expect_tower_state(velocities, tower.depth(), base_order, "tower geodesic velocities")?;
    let mut trajectories = Vec::with_capacity(tower.depth() + 1);
    for i in 0..=tower.depth() {
        trajectories.push(integrate_geodesic(
            tower.spray_level(i),
            positions.level(i),
            velocities.level(i),
            spec,
        )?);
    }
    let threading = threading_report(&trajectories, tol)?;
    Ok(TowerRun {
        trajectories,
        threading,
    })
}
