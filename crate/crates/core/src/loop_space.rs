//! Loops as finite products of points.
//!
//! A closed curve is discretized as `N` samples, and the space of such
//! curves is treated as the product manifold `M^N` in one big chart of
//! `N * n` coordinates. Every operator of interest — maps, fields, sprays,
//! and their lifts — acts pointwise, so extending it to loops means running
//! it per sample; the product-chart construction exists alongside to verify
//! that lifting in the big chart and lifting pointwise agree. Sample blocks
//! interleave block-major, matching the layout of iterated tangent
//! coordinates.

use serde::Serialize;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::element::TangentElement;
use crate::error::{Error, Result};
use crate::flow::{integrate_geodesic, FlowSpec};
use crate::lifts::VectorField;
use crate::smooth::SmoothMap;
use crate::spray::Semispray;

/// A discretized loop: `N >= 3` samples of common order and base dimension,
/// indexed cyclically.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopPoint {
    samples: Vec<TangentElement>,
}

/// An operator applied to loops sample by sample.
#[derive(Debug, Clone)]
pub enum LoopOperator {
    /// Chart map evaluated on each sample's coordinates.
    Map(SmoothMap),
    /// Vector field whose fiber is read at each sample.
    Field(VectorField),
}

/// Outcome of the product-chart vs pointwise lift comparison.
#[derive(Debug, Clone, Serialize)]
pub struct LoopCommutationReport {
    pub passed: bool,
    pub max_deviation: f64,
    pub n_samples: usize,
    pub tol: f64,
}

/// A loop trajectory: one LoopPoint per time step.
#[derive(Debug, Clone)]
pub struct LoopTrajectory {
    times: Vec<f64>,
    points: Vec<LoopPoint>,
    dt: f64,
}

impl LoopPoint {
    pub fn new(samples: Vec<TangentElement>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::Dimension {
                context: "loop sample count",
                expected: 3,
                got: samples.len(),
            });
        }
        let order = samples[0].order();
        let base_dim = samples[0].base_dim();
        for s in &samples {
            if s.order() != order || s.base_dim() != base_dim {
                return Err(Error::Dimension {
                    context: "loop sample shape",
                    expected: (1usize << order) * base_dim,
                    got: s.coords().len(),
                });
            }
        }
        Ok(LoopPoint { samples })
    }

    /// Random loop in the standard sampling window, for tests and demos.
    pub fn random(n_samples: usize, order: usize, base_dim: usize, seed: u64) -> Result<Self> {
        let mut rng = StdRng::seed_from_u64(seed);
        let dim = (1usize << order) * base_dim;
        let samples = (0..n_samples)
            .map(|_| {
                TangentElement::new(
                    order,
                    base_dim,
                    (0..dim).map(|_| rng.gen_range(0.25..1.75)).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        LoopPoint::new(samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least three samples
    }

    pub fn order(&self) -> usize {
        self.samples[0].order()
    }

    pub fn base_dim(&self) -> usize {
        self.samples[0].base_dim()
    }

    pub fn samples(&self) -> &[TangentElement] {
        &self.samples
    }

    /// Cyclic access: the loop is periodic, so any integer index lands.
    pub fn sample(&self, i: usize) -> &TangentElement {
        &self.samples[i % self.samples.len()]
    }
}

fn tag_sample(err: Error, sample: usize) -> Error {
    match err {
        Error::Eval(e) => Error::Eval(e.at_sample(sample)),
        Error::PartialTrajectory {
            last_time,
            steps_done,
            source,
        } => Error::PartialTrajectory {
            last_time,
            steps_done,
            source: source.at_sample(sample),
        },
        other => other,
    }
}

/// Apply an operator to each sample independently; evaluation failures are
/// tagged with the sample index.
pub fn pointwise_apply(op: &LoopOperator, c: &LoopPoint) -> Result<LoopPoint> {
    let n = c.base_dim();
    let mut out = Vec::with_capacity(c.len());
    for (i, sample) in c.samples().iter().enumerate() {
        let element = match op {
            LoopOperator::Map(map) => {
                let coords = map.eval(sample.coords()).map_err(|e| tag_sample(e, i))?;
                let blocks = coords.len() / n;
                if blocks * n != coords.len() || !blocks.is_power_of_two() {
                    return Err(Error::Dimension {
                        context: "pointwise map output shape",
                        expected: n,
                        got: coords.len(),
                    });
                }
                TangentElement::new(blocks.trailing_zeros() as usize, n, coords)?
            }
            LoopOperator::Field(field) => {
                let fiber = field.fiber_at(sample).map_err(|e| tag_sample(e, i))?;
                TangentElement::new(sample.order(), n, fiber)?
            }
        };
        out.push(element);
    }
    LoopPoint::new(out)
}

/// Embed a loop into the product chart: block `m` of the result holds block
/// `m` of every sample in order.
pub fn to_product_element(c: &LoopPoint) -> TangentElement {
    let n = c.base_dim();
    let count = c.len();
    let blocks = 1usize << c.order();
    let mut coords = vec![0.0; blocks * count * n];
    for (s, sample) in c.samples().iter().enumerate() {
        for m in 0..blocks {
            coords[m * count * n + s * n..m * count * n + (s + 1) * n]
                .copy_from_slice(sample.block(m));
        }
    }
    TangentElement::new(c.order(), count * n, coords)
        .expect("product coordinates are sized to match")
}

/// Split a product-chart element back into its samples.
pub fn from_product_element(
    element: &TangentElement,
    n_samples: usize,
    base_dim: usize,
) -> Result<LoopPoint> {
    if element.base_dim() != n_samples * base_dim {
        return Err(Error::Dimension {
            context: "product element width",
            expected: n_samples * base_dim,
            got: element.base_dim(),
        });
    }
    let blocks = 1usize << element.order();
    let mut samples = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        let mut coords = Vec::with_capacity(blocks * base_dim);
        for m in 0..blocks {
            let row = element.block(m);
            coords.extend_from_slice(&row[s * base_dim..(s + 1) * base_dim]);
        }
        samples.push(TangentElement::new(element.order(), base_dim, coords)?);
    }
    LoopPoint::new(samples)
}

/// Rewire a chart map to act per sample inside the product chart.
fn productize(map: &SmoothMap, base_dim: usize, n_samples: usize) -> SmoothMap {
    let n = base_dim;
    let blocks_in = map.in_dim() / n;
    let blocks_out = map.out_dim() / n;
    let prod_in = map.in_dim() * n_samples;
    let mut parts = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        let mut idx = Vec::with_capacity(map.in_dim());
        for m in 0..blocks_in {
            for j in 0..n {
                idx.push(m * n_samples * n + s * n + j);
            }
        }
        parts.push(SmoothMap::select(prod_in, idx).then(map));
    }
    let stacked = SmoothMap::stack(&parts);
    let mut interleave = vec![0usize; map.out_dim() * n_samples];
    for s in 0..n_samples {
        for m in 0..blocks_out {
            for j in 0..n {
                interleave[m * n_samples * n + s * n + j] = s * map.out_dim() + m * n + j;
            }
        }
    }
    let out_dim = stacked.out_dim();
    stacked.then(&SmoothMap::select(out_dim, interleave))
}

/// The field on the product chart acting as `field` on every sample.
pub fn product_field(field: &VectorField, n_samples: usize) -> Result<VectorField> {
    VectorField::new(
        field.level(),
        field.base_dim() * n_samples,
        productize(field.fiber_map(), field.base_dim(), n_samples),
    )
}

/// The semispray on the product chart acting as `spray` on every sample.
pub fn product_spray(spray: &Semispray, n_samples: usize) -> Result<Semispray> {
    Semispray::new(
        spray.level(),
        spray.base_dim() * n_samples,
        productize(spray.coefficient(), spray.base_dim(), n_samples),
        spray.flags().clone(),
    )
}

/// Compare the two routes to a lifted loop spray on concrete loop data:
/// lift the product-chart extension, or extend the lifted spray pointwise.
/// The product-chart derivative is block-diagonal across samples, so the
/// two coefficients run the same arithmetic and should agree to rounding.
pub fn loop_lift_commutes(
    spray: &Semispray,
    c: &LoopPoint,
    tol: f64,
) -> Result<LoopCommutationReport> {
    if c.order() != spray.level() + 1 || c.base_dim() != spray.base_dim() {
        return Err(Error::OrderTooLow {
            context: "loop lift comparison point",
            min: spray.level() + 1,
            got: c.order(),
        });
    }
    let lift_of_product = product_spray(spray, c.len())?.complete_lift()?;
    let product_of_lift = product_spray(&spray.complete_lift()?, c.len())?;
    let point = to_product_element(c);
    let a = lift_of_product.coefficient_at(&point)?;
    let b = product_of_lift.coefficient_at(&point)?;
    let max_deviation = a
        .iter()
        .zip(&b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(LoopCommutationReport {
        passed: max_deviation <= tol,
        max_deviation,
        n_samples: c.len(),
        tol,
    })
}

/// Integrate the geodesic of every sample independently; equivalent to one
/// geodesic of the product spray, sample for sample and bit for bit.
pub fn loop_geodesic(
    spray: &Semispray,
    c0: &LoopPoint,
    v0: &LoopPoint,
    spec: &FlowSpec,
) -> Result<LoopTrajectory> {
    if c0.len() != v0.len() {
        return Err(Error::Dimension {
            context: "loop geodesic initial data count",
            expected: c0.len(),
            got: v0.len(),
        });
    }
    let mut per_sample = Vec::with_capacity(c0.len());
    for s in 0..c0.len() {
        let traj = integrate_geodesic(spray, c0.sample(s), v0.sample(s), spec)
            .map_err(|e| tag_sample(e, s))?;
        per_sample.push(traj);
    }
    let times = per_sample[0].times().to_vec();
    let dt = per_sample[0].dt();
    let mut points = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let samples = per_sample.iter().map(|t| t.states()[k].clone()).collect();
        points.push(LoopPoint::new(samples)?);
    }
    Ok(LoopTrajectory { times, points, dt })
}

impl LoopTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[LoopPoint] {
        &self.points
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_point(&self) -> &LoopPoint {
        self.points.last().expect("trajectory holds the initial point")
    }
}
