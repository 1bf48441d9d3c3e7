//! Numerics for iterated tangent bundles in a single chart.
//!
//! An order-`r` element of the iterated bundle over an `n`-dimensional chart
//! is a vector of `2^r` blocks of `n` coordinates; applying the tangent
//! functor doubles the block count. On this representation the crate builds:
//!
//! - the canonical involution, bundle projections and their tangent maps as
//!   exact index shuffles ([`element`]);
//! - forward-mode derivatives of expression programs to any mixed order,
//!   via truncated multi-dual arithmetic ([`dual`], [`smooth`]);
//! - vertical and complete lifts of functions, vector fields and semisprays,
//!   kept as composable programs so they can be lifted again ([`lifts`],
//!   [`spray`]);
//! - fixed-step flow and geodesic integration, with the dual-number flow map
//!   conjugation cross-check ([`flow`]);
//! - finite towers of iterated lifts with projective-compatibility and
//!   trajectory-threading reports ([`tower`]);
//! - the product-chart realization of loops of points, where lifts and
//!   geodesics act sample by sample ([`loop_space`]);
//! - a sampled identity suite, JSON/CSV reporting, TOML run configs and the
//!   `ttower` binary on top ([`verify`], [`report`], [`config`], [`cli`]).
//!
//! Everything is chart-local and eager; the block count `2^r` is the only
//! resource that grows. A global block budget (env var
//! `TTOWER_BLOCK_BUDGET`, default 128 blocks, i.e. order 7) turns runaway
//! lift orders into errors instead of memory exhaustion.

pub mod catalog;
pub mod cli;
pub mod config;
pub mod dual;
pub mod element;
pub mod error;
pub mod expr;
pub mod flow;
pub mod lifts;
pub mod loop_space;
pub mod metric;
pub mod report;
pub mod smooth;
pub mod spray;
pub mod tower;
pub mod verify;

pub use dual::{DualScalar, Scalar};
pub use element::TangentElement;
pub use error::{Error, EvalError, Result};
pub use flow::{integrate_field, integrate_geodesic, FlowSpec, Trajectory};
pub use lifts::{ScalarFunction, VectorField};
pub use loop_space::LoopPoint;
pub use smooth::SmoothMap;
pub use spray::Semispray;
pub use tower::{LiftTower, TowerState};
pub use verify::{run_verification, VerifyObject, VerifyOptions};

use std::sync::OnceLock;

const DEFAULT_BLOCK_BUDGET: usize = 128;

/// Largest number of coordinate blocks (`2^order`) any constructed object may
/// use. Read once from `TTOWER_BLOCK_BUDGET`; unset or unparsable values fall
/// back to the default of 128.
pub fn block_budget() -> usize {
    static BUDGET: OnceLock<usize> = OnceLock::new();
    *BUDGET.get_or_init(|| {
        std::env::var("TTOWER_BLOCK_BUDGET")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&v| v >= 1)
            .unwrap_or(DEFAULT_BLOCK_BUDGET)
    })
}

pub(crate) fn ensure_budget(order: usize) -> Result<()> {
    let budget = block_budget();
    // avoid the shift overflowing for absurd orders
    if order >= usize::BITS as usize || (1usize << order) > budget {
        return Err(Error::BudgetExceeded {
            order,
            blocks: 1usize.checked_shl(order as u32).unwrap_or(usize::MAX),
            budget,
        });
    }
    Ok(())
}
