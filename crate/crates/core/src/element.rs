//! Chart elements of iterated tangent bundles.
//!
//! An order-`r` element over an `n`-dimensional chart is `2^r` blocks of `n`
//! coordinates, stored block-major. Block masks encode which of the `r`
//! bundle layers a slot is a fiber direction of, innermost layer = bit 0.
//! For order 2 the four blocks are the familiar quadruple
//!
//! ```text
//!   mask 00 -> x (base point)       mask 10 -> X (outer fiber over x)
//!   mask 01 -> y (inner fiber)      mask 11 -> Y (outer fiber over y)
//! ```
//!
//! The canonical involution swaps the two outermost layers, i.e. transposes
//! the top two mask bits — as a block permutation it exchanges the middle two
//! quarters. The bundle projection keeps the half with the top bit clear.
//! Both are index shuffles, so the structural identities relating them hold
//! to the last bit.

use crate::error::{Error, Result};
use crate::smooth::SmoothMap;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentElement {
    order: usize,
    base_dim: usize,
    /// `2^order * base_dim` coordinates, block-major.
    coords: Vec<f64>,
}

impl TangentElement {
    pub fn new(order: usize, base_dim: usize, coords: Vec<f64>) -> Result<Self> {
        let expected = (1usize << order) * base_dim;
        if coords.len() != expected {
            return Err(Error::Dimension {
                context: "element construction",
                expected,
                got: coords.len(),
            });
        }
        Ok(TangentElement {
            order,
            base_dim,
            coords,
        })
    }

    pub fn zero(order: usize, base_dim: usize) -> Self {
        TangentElement {
            order,
            base_dim,
            coords: vec![0.0; (1usize << order) * base_dim],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn block(&self, mask: usize) -> &[f64] {
        let n = self.base_dim;
        &self.coords[mask * n..(mask + 1) * n]
    }

    /// Glue an element of one order higher out of `self` (lower half) and
    /// explicit fiber coordinates (upper half).
    pub fn with_fiber(&self, fiber: &[f64]) -> Result<Self> {
        if fiber.len() != self.coords.len() {
            return Err(Error::Dimension {
                context: "fiber attachment",
                expected: self.coords.len(),
                got: fiber.len(),
            });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(fiber);
        Ok(TangentElement {
            order: self.order + 1,
            base_dim: self.base_dim,
            coords,
        })
    }

    /// Canonical involution: swap the two outermost bundle layers. Defined
    /// for order >= 1; at order 1 it is the identity.
    pub fn kappa(&self) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::OrderTooLow {
                context: "canonical involution",
                min: 1,
                got: 0,
            });
        }
        if self.order == 1 {
            return Ok(self.clone());
        }
        let n = self.base_dim;
        let mut coords = vec![0.0; self.coords.len()];
        for mask in 0..1usize << self.order {
            let src = swap_top_bits(mask, self.order);
            coords[mask * n..(mask + 1) * n].copy_from_slice(self.block(src));
        }
        Ok(TangentElement {
            order: self.order,
            base_dim: n,
            coords,
        })
    }

    /// Bundle projection: forget the outermost layer (keep the lower half).
    pub fn proj(&self) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::OrderTooLow {
                context: "bundle projection",
                min: 1,
                got: 0,
            });
        }
        Ok(TangentElement {
            order: self.order - 1,
            base_dim: self.base_dim,
            coords: self.coords[..self.coords.len() / 2].to_vec(),
        })
    }

    /// Tangent map of the projection one layer down: keep the half with the
    /// *second*-outermost bit clear. Equals `proj . kappa`; this is the
    /// connecting map threading flows and geodesics across levels.
    pub fn tangent_proj(&self) -> Result<Self> {
        self.kappa()?.proj()
    }

    /// Composite projection down to `target_order` (keep the first
    /// `2^target_order` blocks).
    pub fn proj_to(&self, target_order: usize) -> Result<Self> {
        if target_order > self.order {
            return Err(Error::OrderTooLow {
                context: "composite projection",
                min: target_order,
                got: self.order,
            });
        }
        Ok(TangentElement {
            order: target_order,
            base_dim: self.base_dim,
            coords: self.coords[..(1usize << target_order) * self.base_dim].to_vec(),
        })
    }
}

fn swap_top_bits(mask: usize, order: usize) -> usize {
    let hi = order - 1;
    let lo = order - 2;
    let a = (mask >> hi) & 1;
    let b = (mask >> lo) & 1;
    if a == b {
        mask
    } else {
        mask ^ ((1 << hi) | (1 << lo))
    }
}

/// The canonical involution at a fixed order as a coordinate map, so it can
/// be fed through the tangent functor.
pub fn kappa_map(order: usize, base_dim: usize) -> SmoothMap {
    assert!(order >= 1, "involution needs order >= 1");
    let dim = (1usize << order) * base_dim;
    if order == 1 {
        return SmoothMap::identity(dim);
    }
    let mut indices = Vec::with_capacity(dim);
    for mask in 0..1usize << order {
        let src = swap_top_bits(mask, order);
        for j in 0..base_dim {
            indices.push(src * base_dim + j);
        }
    }
    SmoothMap::select(dim, indices)
}

/// The projection from order `order` to `order - 1` as a coordinate map.
pub fn proj_map(order: usize, base_dim: usize) -> SmoothMap {
    assert!(order >= 1, "projection needs order >= 1");
    let dim = (1usize << order) * base_dim;
    SmoothMap::select(dim, (0..dim / 2).collect())
}

/// Composite projection from `from_order` down to `to_order`.
pub fn proj_between_map(from_order: usize, to_order: usize, base_dim: usize) -> SmoothMap {
    assert!(to_order <= from_order, "projection cannot raise the order");
    let dim = (1usize << from_order) * base_dim;
    let keep = (1usize << to_order) * base_dim;
    SmoothMap::select(dim, (0..keep).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(order: usize, coords: &[f64]) -> TangentElement {
        TangentElement::new(order, coords.len() >> order, coords.to_vec()).unwrap()
    }

    #[test]
    fn construction_checks_the_length() {
        assert!(TangentElement::new(2, 1, vec![3.0, 2.0, 5.0, 7.0]).is_ok());
        assert!(matches!(
            TangentElement::new(2, 1, vec![3.0, 2.0, 5.0]),
            Err(Error::Dimension { expected: 4, got: 3, .. })
        ));
    }

    #[test]
    fn block_layout_is_mask_major() {
        let e = el(2, &[3.0, 2.0, 5.0, 7.0]);
        assert_eq!(e.block(0), &[3.0]); // x
        assert_eq!(e.block(1), &[2.0]); // y
        assert_eq!(e.block(2), &[5.0]); // X
        assert_eq!(e.block(3), &[7.0]); // Y
    }

    #[test]
    fn involution_swaps_the_middle_blocks() {
        let e = el(2, &[3.0, 2.0, 5.0, 7.0]);
        assert_eq!(e.kappa().unwrap().coords(), &[3.0, 5.0, 2.0, 7.0]);
    }

    #[test]
    fn involution_is_identity_at_order_one_and_fails_at_zero() {
        let e = el(1, &[1.0, 2.0]);
        assert_eq!(e.kappa().unwrap(), e);
        let p = el(0, &[4.0]);
        assert!(matches!(p.kappa(), Err(Error::OrderTooLow { .. })));
    }

    #[test]
    fn involution_is_involutive_at_higher_orders() {
        for order in 2..=6 {
            let n = 2;
            let coords: Vec<f64> = (0..(1usize << order) * n).map(|i| i as f64 * 0.37 - 5.0).collect();
            let e = TangentElement::new(order, n, coords).unwrap();
            assert_eq!(e.kappa().unwrap().kappa().unwrap(), e, "order {order}");
        }
    }

    #[test]
    fn projection_keeps_the_lower_half() {
        let e = el(2, &[3.0, 2.0, 5.0, 7.0]);
        assert_eq!(e.proj().unwrap().coords(), &[3.0, 2.0]);
        assert_eq!(e.proj_to(0).unwrap().coords(), &[3.0]);
    }

    #[test]
    fn tangent_projection_keeps_base_and_outer_fiber() {
        let e = el(2, &[3.0, 2.0, 5.0, 7.0]);
        assert_eq!(e.tangent_proj().unwrap().coords(), &[3.0, 5.0]);
    }

    #[test]
    fn kappa_map_agrees_with_the_element_operation() {
        let e = el(3, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let m = kappa_map(3, 1);
        assert_eq!(m.eval(e.coords()).unwrap(), e.kappa().unwrap().coords());
    }
}
