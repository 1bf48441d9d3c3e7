//! The involution and projection algebra on raw chart elements.
//!
//! An order-r element over an n-dimensional chart is 2^r blocks of n
//! coordinates. The canonical involution swaps the two outermost bundle
//! layers, the projection drops the outermost one, and their tangent maps
//! are again block shuffles — so the compatibility relations between them
//! hold exactly, not just to rounding.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tangent_tower::element::{kappa_map, proj_map, TangentElement};
use tangent_tower::metric::abs_dev;
use tangent_tower::Result;

fn main() -> Result<()> {
    // Order 2 over a 1-dimensional chart: the familiar quadruple (x, y, X, Y).
    let e = TangentElement::new(2, 1, vec![3.0, 2.0, 5.0, 7.0])?;
    println!("element       {:?}", e.coords());
    println!("kappa         {:?}  (swap the middle blocks)", e.kappa()?.coords());
    println!("proj          {:?}  (keep the lower half)", e.proj()?.coords());
    println!("tangent proj  {:?}  (base and outer fiber)", e.tangent_proj()?.coords());
    println!();

    // The compatibility relations as coordinate programs, checked on random
    // elements. Left and right columns must agree to the last bit.
    let n = 2;
    let mut rng = StdRng::seed_from_u64(9);
    println!("relation                                      max deviation");
    for r in 2..=5 {
        let relations = [
            ("kappa . kappa = id", kappa_map(r, n).then(&kappa_map(r, n)), identity(r, n)),
            (
                "proj . D(kappa) = kappa . proj",
                kappa_map(r, n).tangent(1).then(&proj_map(r + 1, n)),
                proj_map(r + 1, n).then(&kappa_map(r, n)),
            ),
            (
                "D(proj) = proj . kappa",
                proj_map(r, n).tangent(1),
                kappa_map(r + 1, n).then(&proj_map(r + 1, n)),
            ),
            (
                "D2(proj) . kappa = kappa . D2(proj)",
                kappa_map(r + 2, n).then(&proj_map(r, n).tangent(2)),
                proj_map(r, n).tangent(2).then(&kappa_map(r + 1, n)),
            ),
            (
                "D(proj) . proj = proj . D2(proj)",
                proj_map(r + 2, n).then(&proj_map(r, n).tangent(1)),
                proj_map(r, n).tangent(2).then(&proj_map(r + 1, n)),
            ),
        ];
        for (label, lhs, rhs) in relations {
            let mut dev = 0.0f64;
            for _ in 0..50 {
                let x: Vec<f64> = (0..lhs.in_dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                dev = dev.max(abs_dev(&lhs.eval(&x)?, &rhs.eval(&x)?));
            }
            println!("order {r}: {label:<38} {dev:e}");
        }
    }
    Ok(())
}

fn identity(order: usize, n: usize) -> tangent_tower::SmoothMap {
    tangent_tower::SmoothMap::identity((1 << order) * n)
}
