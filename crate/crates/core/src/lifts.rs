//! Vertical and complete lifts of functions and vector fields.
//!
//! A function or field living on the order-`r` bundle lifts to order `r + 1`
//! in two ways. The vertical lift forgets the new velocity data; the complete
//! lift differentiates along it. Complete lifts of fields are built
//! functorially — conjugate the section with the canonical involution, push
//! it through the tangent functor, and straighten the layers back out — so
//! the result is again a program and can be lifted further. Closed local
//! forms are kept alongside as independent reference paths; the two must
//! agree, and the test suite holds them to that.

use crate::element::{kappa_map, proj_map, TangentElement};
use crate::ensure_budget;
use crate::error::{Error, Result};
use crate::smooth::SmoothMap;

/// Real-valued function on the order-`level` bundle over an
/// `base_dim`-dimensional chart.
#[derive(Debug, Clone)]
pub struct ScalarFunction {
    level: usize,
    base_dim: usize,
    map: SmoothMap,
}

/// Vector field on the order-`level` bundle: the fiber part of a section of
/// the next bundle, as a map on chart coordinates.
#[derive(Debug, Clone)]
pub struct VectorField {
    level: usize,
    base_dim: usize,
    fiber: SmoothMap,
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

impl ScalarFunction {
    pub fn new(level: usize, base_dim: usize, map: SmoothMap) -> Result<Self> {
        let expected = (1usize << level) * base_dim;
        if map.in_dim() != expected || map.out_dim() != 1 {
            return Err(Error::Dimension {
                context: "scalar function",
                expected,
                got: map.in_dim(),
            });
        }
        Ok(ScalarFunction {
            level,
            base_dim,
            map,
        })
    }

    pub fn parse(level: usize, base_dim: usize, src: &str) -> Result<Self> {
        let map = SmoothMap::parse((1usize << level) * base_dim, &[src])?;
        Self::new(level, base_dim, map)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn map(&self) -> &SmoothMap {
        &self.map
    }

    pub fn value_at(&self, xi: &TangentElement) -> Result<f64> {
        expect_order(xi, self.level, "function evaluation")?;
        Ok(self.map.eval(xi.coords())?[0])
    }

    /// Vertical lift: precompose with involution and projection, so the new
    /// velocity layer is ignored. Locally `(x, y, X, Y) -> f(x, X)`.
    pub fn vertical_lift(&self) -> Result<ScalarFunction> {
        ensure_budget(self.level + 1)?;
        let k = kappa_map(self.level + 1, self.base_dim);
        let p = proj_map(self.level + 1, self.base_dim);
        ScalarFunction::new(self.level + 1, self.base_dim, k.then(&p).then(&self.map))
    }

    /// Complete lift: the differential read through the involution. Locally
    /// `(x, y, X, Y) -> d1 f(x, X) y + d2 f(x, X) Y`.
    pub fn complete_lift(&self) -> Result<ScalarFunction> {
        ensure_budget(self.level + 1)?;
        let k = kappa_map(self.level + 1, self.base_dim);
        let df = self.map.tangent(1);
        let derivative_part = SmoothMap::select(2, vec![1]);
        ScalarFunction::new(
            self.level + 1,
            self.base_dim,
            k.then(&df).then(&derivative_part),
        )
    }
}

impl VectorField {
    pub fn new(level: usize, base_dim: usize, fiber: SmoothMap) -> Result<Self> {
        let expected = (1usize << level) * base_dim;
        if fiber.in_dim() != expected || fiber.out_dim() != expected {
            return Err(Error::Dimension {
                context: "vector field",
                expected,
                got: fiber.in_dim().max(fiber.out_dim()),
            });
        }
        Ok(VectorField {
            level,
            base_dim,
            fiber,
        })
    }

    pub fn parse(level: usize, base_dim: usize, sources: &[&str]) -> Result<Self> {
        let dim = (1usize << level) * base_dim;
        Self::new(level, base_dim, SmoothMap::parse(dim, sources)?)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_map(&self) -> &SmoothMap {
        &self.fiber
    }

    /// The full section `xi -> (xi, fiber(xi))` as one program.
    pub fn section_map(&self) -> SmoothMap {
        let dim = (1usize << self.level) * self.base_dim;
        SmoothMap::stack(&[SmoothMap::identity(dim), self.fiber.clone()])
    }

    pub fn fiber_at(&self, xi: &TangentElement) -> Result<Vec<f64>> {
        expect_order(xi, self.level, "field evaluation")?;
        self.fiber.eval(xi.coords())
    }

    pub fn section_at(&self, xi: &TangentElement) -> Result<TangentElement> {
        let fiber = self.fiber_at(xi)?;
        xi.with_fiber(&fiber)
    }

    /// Vertical lift via the closed local form: the lifted fiber vanishes on
    /// the base slots and repeats the original fiber, read at the involuted
    /// base point. Locally `(x, y, X, Y) -> (0, A(x, X), 0, B(x, X))`.
    pub fn vertical_lift(&self) -> Result<VectorField> {
        ensure_budget(self.level + 2)?;
        let n = self.base_dim;
        let k = kappa_map(self.level + 1, n);
        let half = (1usize << self.level) * n;
        let parts = SmoothMap::stack(&[
            SmoothMap::zeros(2 * half, half),
            proj_map(self.level + 1, n).then(&self.fiber),
        ]);
        VectorField::new(self.level + 1, n, k.then(&parts).then(&k))
    }

    /// Complete lift, built functorially: conjugate the section with the
    /// involution, apply the tangent functor, and restore the layer order
    /// with one more involution inside and outside.
    pub fn complete_lift(&self) -> Result<VectorField> {
        ensure_budget(self.level + 2)?;
        let n = self.base_dim;
        let r = self.level;
        let k_in = kappa_map(r + 1, n);
        let d_section = self.section_map().tangent(1); // 2^{r+1} n -> 2^{r+2} n
        let k_top = kappa_map(r + 2, n);
        let dk_out = kappa_map(r + 1, n).tangent(1);
        let full = k_in.then(&d_section).then(&k_top).then(&dk_out);
        let out_dim = full.out_dim();
        let upper = SmoothMap::select(out_dim, (out_dim / 2..out_dim).collect());
        VectorField::new(r + 1, n, full.then(&upper))
    }

    /// Complete lift via the closed local form, kept as an independent
    /// reference: `(x,y,X,Y) -> (A(x,X), dA(x,X)(y,Y), B(x,X), dB(x,X)(y,Y))`
    /// — the differential of the fiber conjugated by the involution.
    pub fn complete_lift_local(&self) -> Result<VectorField> {
        ensure_budget(self.level + 2)?;
        let n = self.base_dim;
        let k = kappa_map(self.level + 1, n);
        VectorField::new(self.level + 1, n, k.then(&self.fiber.tangent(1)).then(&k))
    }

    /// Iterate the complete lift; each step raises the level by one and is
    /// checked against the block budget.
    pub fn iterated_complete_lift(&self, times: usize) -> Result<VectorField> {
        let mut field = self.clone();
        for _ in 0..times {
            field = field.complete_lift()?;
        }
        Ok(field)
    }
}

/// Definitional construction of the vertical lift's section value: translate
/// the involuted point along its own fiber, take the path derivative at 0,
/// and push it through the tangent map of the involution. Reference path for
/// tests; must agree with [`VectorField::vertical_lift`].
pub fn vertical_lift_section_by_path(
    field: &VectorField,
    xi: &TangentElement,
) -> Result<TangentElement> {
    expect_order(xi, field.level + 1, "vertical lift path construction")?;
    let n = field.base_dim;
    let k = xi.kappa()?;
    let fiber_val = field.fiber_at(&k.proj()?)?;
    // derivative of s -> k + s * (0, fiber): zero on the base half
    let mut direction = vec![0.0; k.coords().len()];
    direction[k.coords().len() / 2..].copy_from_slice(&fiber_val);
    let path_derivative = k.with_fiber(&direction)?;
    let dk = kappa_map(field.level + 1, n).tangent(1);
    TangentElement::new(
        field.level + 2,
        n,
        dk.eval(path_derivative.coords())?,
    )
}

/// How far the iterated complete lifts of a function are from commuting with
/// the projection: `|f_lift(proj xi) - f_lift_once_more(xi)|` with the lift
/// iterated `xi.order() - 1` times. Unlike the field version this does *not*
/// vanish — the gap is the point of the check.
pub fn function_projectivity_gap(f: &ScalarFunction, xi: &TangentElement) -> Result<f64> {
    if f.level != 0 {
        return Err(Error::OrderTooLow {
            context: "function projectivity gap (needs a base-level function)",
            min: 0,
            got: f.level,
        });
    }
    if xi.order() < 2 {
        return Err(Error::OrderTooLow {
            context: "function projectivity gap",
            min: 2,
            got: xi.order(),
        });
    }
    let mut lifted = f.clone();
    for _ in 0..xi.order() - 1 {
        lifted = lifted.complete_lift()?;
    }
    let low = lifted.value_at(&xi.proj()?)?;
    let high = lifted.complete_lift()?.value_at(xi)?;
    Ok((low - high).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(order: usize, base_dim: usize, coords: &[f64]) -> TangentElement {
        TangentElement::new(order, base_dim, coords.to_vec()).unwrap()
    }

    #[test]
    fn vertical_function_lift_reads_base_and_outer_fiber() {
        // level 0, f = x^2: f_v(x, y) = f(x)
        let f = ScalarFunction::parse(0, 1, "x0^2").unwrap();
        let fv = f.vertical_lift().unwrap();
        assert_eq!(fv.value_at(&el(1, 1, &[3.0, 2.0])).unwrap(), 9.0);

        // level 1, f = x*y: f_v(x,y,X,Y) = f(x, X) = 3 * 5
        let g = ScalarFunction::parse(1, 1, "x0 * x1").unwrap();
        let gv = g.vertical_lift().unwrap();
        assert_eq!(gv.value_at(&el(2, 1, &[3.0, 2.0, 5.0, 7.0])).unwrap(), 15.0);
    }

    #[test]
    fn complete_function_lift_is_the_differential() {
        // f = x^2: f_c(x, y) = 2 x y
        let f = ScalarFunction::parse(0, 1, "x0^2").unwrap();
        let fc = f.complete_lift().unwrap();
        assert_eq!(fc.value_at(&el(1, 1, &[3.0, 2.0])).unwrap(), 12.0);

        // f = x*y: f_c(3,2,5,7) = d1 f(3,5) * 2 + d2 f(3,5) * 7 = 10 + 21
        let g = ScalarFunction::parse(1, 1, "x0 * x1").unwrap();
        let gc = g.complete_lift().unwrap();
        assert_eq!(gc.value_at(&el(2, 1, &[3.0, 2.0, 5.0, 7.0])).unwrap(), 31.0);
    }

    #[test]
    fn vertical_field_lift_fiber_components() {
        // A(x, y) = (y, -x) on the first bundle
        let a = VectorField::parse(1, 1, &["x1", "-x0"]).unwrap();
        let av = a.vertical_lift().unwrap();
        let fiber = av.fiber_at(&el(2, 1, &[3.0, 2.0, 5.0, 7.0])).unwrap();
        assert_eq!(fiber, vec![0.0, 5.0, 0.0, -3.0]);
    }

    #[test]
    fn complete_field_lift_fiber_components() {
        let a = VectorField::parse(1, 1, &["x1", "-x0"]).unwrap();
        let ac = a.complete_lift().unwrap();
        let fiber = ac.fiber_at(&el(2, 1, &[3.0, 2.0, 5.0, 7.0])).unwrap();
        assert_eq!(fiber, vec![5.0, 7.0, -3.0, -2.0]);
    }

    #[test]
    fn functorial_and_local_complete_lifts_agree() {
        let a = VectorField::parse(1, 1, &["sin(x0) * x1", "x0 * x1 - x1^2"]).unwrap();
        let functorial = a.complete_lift().unwrap();
        let local = a.complete_lift_local().unwrap();
        let xi = el(2, 1, &[0.7, -1.1, 0.4, 2.3]);
        let f1 = functorial.fiber_at(&xi).unwrap();
        let f2 = local.fiber_at(&xi).unwrap();
        for (x, y) in f1.iter().zip(&f2) {
            assert!((x - y).abs() < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn path_construction_matches_the_closed_vertical_form() {
        let a = VectorField::parse(1, 1, &["x1", "-x0"]).unwrap();
        let xi = el(2, 1, &[3.0, 2.0, 5.0, 7.0]);
        let by_path = vertical_lift_section_by_path(&a, &xi).unwrap();
        let closed = a.vertical_lift().unwrap().section_at(&xi).unwrap();
        assert_eq!(by_path, closed);
    }

    #[test]
    fn lifted_sections_still_project_onto_their_input() {
        let a = VectorField::parse(1, 1, &["x0 * x1", "cos(x0)"]).unwrap();
        let ac = a.complete_lift().unwrap();
        let xi = el(2, 1, &[0.3, 1.4, -0.8, 0.2]);
        let section = ac.section_at(&xi).unwrap();
        assert_eq!(section.proj().unwrap(), xi);
    }

    #[test]
    fn function_lifts_do_not_commute_with_projection() {
        let f = ScalarFunction::parse(0, 1, "x0^2").unwrap();
        let gap = function_projectivity_gap(&f, &el(2, 1, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert!((gap - 2.0).abs() < 1e-12, "gap {gap}"); // 2 vs 4
        assert!(gap >= 0.1);
    }

    #[test]
    fn iterated_lift_respects_the_block_budget() {
        let a = VectorField::parse(1, 1, &["x1", "-x0"]).unwrap();
        assert!(a.iterated_complete_lift(3).is_ok());
        let err = a.iterated_complete_lift(20).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }), "{err}");
    }
}
