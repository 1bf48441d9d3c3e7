//! Smooth maps as composable programs.
//!
//! A [`SmoothMap`] is a program from `in_dim` reals to `out_dim` reals that
//! can be evaluated on any [`Scalar`]. Besides expression trees there are
//! structural nodes — selection, stacking, chaining and the tangent functor —
//! so lifted objects stay programs and can be differentiated again. A tangent
//! node evaluates its base map on packed duals, which makes
//! `tangent(f.then(g)) = tangent(f).then(tangent(g))` hold by construction:
//! both sides perform the same arithmetic.

use std::sync::Arc;

use crate::dual::{DualScalar, Scalar};
use crate::error::{Error, EvalError, Result};
use crate::expr::{parse_expr, Expr};

#[derive(Debug, Clone)]
pub struct SmoothMap {
    in_dim: usize,
    out_dim: usize,
    program: Program,
}

#[derive(Debug, Clone)]
enum Program {
    /// One expression tree per output coordinate.
    Exprs(Arc<[Expr]>),
    /// `out[i] = in[indices[i]]` — permutations, projections, embeddings.
    Select(Arc<[usize]>),
    /// Constant zero output, any input.
    Zeros,
    /// Apply `.0`, then `.1`.
    Chain(Arc<SmoothMap>, Arc<SmoothMap>),
    /// All parts read the same input; outputs are concatenated.
    Stack(Arc<[SmoothMap]>),
    /// The k-fold tangent map of the inner program.
    Tangent(Arc<SmoothMap>, usize),
}

impl SmoothMap {
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn from_exprs(in_dim: usize, exprs: Vec<Expr>) -> Result<Self> {
        for (i, e) in exprs.iter().enumerate() {
            if let Some(max) = e.max_var() {
                if max >= in_dim {
                    return Err(Error::Parse(format!(
                        "output {i} uses x{max} but the map has {in_dim} inputs"
                    )));
                }
            }
        }
        Ok(SmoothMap {
            in_dim,
            out_dim: exprs.len(),
            program: Program::Exprs(exprs.into()),
        })
    }

    /// Parse one expression string per output coordinate.
    pub fn parse(in_dim: usize, sources: &[&str]) -> Result<Self> {
        let exprs = sources
            .iter()
            .map(|s| parse_expr(s, in_dim))
            .collect::<Result<Vec<_>>>()?;
        Self::from_exprs(in_dim, exprs)
    }

    pub fn identity(dim: usize) -> Self {
        SmoothMap {
            in_dim: dim,
            out_dim: dim,
            program: Program::Select((0..dim).collect()),
        }
    }

    pub fn select(in_dim: usize, indices: Vec<usize>) -> Self {
        assert!(
            indices.iter().all(|&i| i < in_dim),
            "selection index out of range"
        );
        SmoothMap {
            in_dim,
            out_dim: indices.len(),
            program: Program::Select(indices.into()),
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        SmoothMap {
            in_dim,
            out_dim,
            program: Program::Zeros,
        }
    }

    /// `next` after `self`; output dimensions must line up.
    pub fn then(&self, next: &SmoothMap) -> Self {
        assert_eq!(
            self.out_dim, next.in_dim,
            "chained maps disagree: {} outputs into {} inputs",
            self.out_dim, next.in_dim
        );
        SmoothMap {
            in_dim: self.in_dim,
            out_dim: next.out_dim,
            program: Program::Chain(Arc::new(self.clone()), Arc::new(next.clone())),
        }
    }

    /// Composition `outer . inner`.
    pub fn compose(outer: &SmoothMap, inner: &SmoothMap) -> Self {
        inner.then(outer)
    }

    /// Concatenate outputs of several maps over one shared input.
    pub fn stack(parts: &[SmoothMap]) -> Self {
        assert!(!parts.is_empty(), "stack of zero maps");
        let in_dim = parts[0].in_dim;
        assert!(
            parts.iter().all(|p| p.in_dim == in_dim),
            "stacked maps must share the input dimension"
        );
        let out_dim = parts.iter().map(|p| p.out_dim).sum();
        SmoothMap {
            in_dim,
            out_dim,
            program: Program::Stack(parts.to_vec().into()),
        }
    }

    /// The `order`-fold tangent map. Input and output pick up a factor of
    /// `2^order`: block `s` of the input is the seed along the direction set
    /// `s`, block `s` of the output the corresponding mixed derivative.
    pub fn tangent(&self, order: usize) -> Self {
        if order == 0 {
            return self.clone();
        }
        SmoothMap {
            in_dim: self.in_dim << order,
            out_dim: self.out_dim << order,
            program: Program::Tangent(Arc::new(self.clone()), order),
        }
    }

    pub fn eval<T: Scalar>(&self, input: &[T]) -> Result<Vec<T>> {
        if input.len() != self.in_dim {
            return Err(Error::Dimension {
                context: "map evaluation",
                expected: self.in_dim,
                got: input.len(),
            });
        }
        self.eval_raw(input).map_err(Error::Eval)
    }

    pub(crate) fn eval_raw<T: Scalar>(&self, input: &[T]) -> std::result::Result<Vec<T>, EvalError> {
        match &self.program {
            Program::Exprs(exprs) => exprs
                .iter()
                .enumerate()
                .map(|(i, e)| e.eval(input).map_err(|err| err.at_coord(i)))
                .collect(),
            Program::Select(indices) => Ok(indices.iter().map(|&i| input[i].clone()).collect()),
            Program::Zeros => Ok(vec![T::constant(0.0); self.out_dim]),
            Program::Chain(first, second) => second.eval_raw(&first.eval_raw(input)?),
            Program::Stack(parts) => {
                let mut out = Vec::with_capacity(self.out_dim);
                for p in parts.iter() {
                    out.extend(p.eval_raw(input)?);
                }
                Ok(out)
            }
            Program::Tangent(base, order) => {
                let blocks = 1usize << order;
                let base_in = base.in_dim;
                let packed: Vec<DualScalar> = (0..base_in)
                    .map(|j| {
                        let slots: Vec<T> =
                            (0..blocks).map(|s| input[s * base_in + j].clone()).collect();
                        T::pack(&slots, *order)
                    })
                    .collect();
                let out_duals = base.eval_raw::<DualScalar>(&packed)?;
                let base_out = base.out_dim;
                let mut out = vec![T::constant(0.0); base_out << order];
                for (j, d) in out_duals.iter().enumerate() {
                    for (s, v) in T::unpack(d, *order).into_iter().enumerate() {
                        out[s * base_out + j] = v;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Central-difference directional derivative, the reference oracle the
/// dual-number machinery is tested against:
/// `(f(x + h v) - f(x - h v)) / (2 h)`.
pub fn fd_oracle(f: &SmoothMap, x: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>> {
    if x.len() != f.in_dim() || v.len() != f.in_dim() {
        return Err(Error::Dimension {
            context: "finite-difference oracle",
            expected: f.in_dim(),
            got: x.len().max(v.len()),
        });
    }
    let plus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
    let fp = f.eval(&plus)?;
    let fm = f.eval(&minus)?;
    Ok(fp
        .iter()
        .zip(&fm)
        .map(|(p, m)| (p - m) / (2.0 * h))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangent_of_square_carries_the_derivative() {
        // f(x) = x^2, seed (3; 2): value 9, derivative 2*3*2 = 12
        let f = SmoothMap::parse(1, &["x0^2"]).unwrap();
        let df = f.tangent(1);
        assert_eq!(df.eval(&[3.0, 2.0]).unwrap(), vec![9.0, 12.0]);
    }

    #[test]
    fn second_tangent_of_sine_at_zero() {
        let f = SmoothMap::parse(1, &["sin(x0)"]).unwrap();
        let d2f = f.tangent(2);
        let out = d2f.eval(&[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(out, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn iterated_tangents_flatten() {
        let f = SmoothMap::parse(2, &["x0 * sin(x1)", "x1 / (1 + x0^2)"]).unwrap();
        let nested = f.tangent(1).tangent(1);
        let flat = f.tangent(2);
        let input: Vec<f64> = (0..8).map(|i| 0.3 + 0.17 * i as f64).collect();
        let a = nested.eval(&input).unwrap();
        let b = flat.eval(&input).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14, "{x} vs {y}");
        }
    }

    #[test]
    fn tangent_distributes_over_chaining() {
        let g = SmoothMap::parse(1, &["x0^2", "sin(x0)"]).unwrap();
        let f = SmoothMap::parse(2, &["x0 * x1", "exp(x0 - x1)"]).unwrap();
        let lhs = g.then(&f).tangent(1);
        let rhs = g.tangent(1).then(&f.tangent(1));
        let input = [0.8, -0.4];
        assert_eq!(lhs.eval(&input).unwrap(), rhs.eval(&input).unwrap());
    }

    #[test]
    fn fd_oracle_is_exact_on_linear_maps() {
        // A = [[2, -1], [0.5, 3]]
        let f = SmoothMap::parse(2, &["2*x0 - x1", "0.5*x0 + 3*x1"]).unwrap();
        let out = fd_oracle(&f, &[10.0, -4.0], &[1.0, 2.0], 1e-3).unwrap();
        assert!((out[0] - 0.0).abs() < 1e-12);
        assert!((out[1] - 6.5).abs() < 1e-11);
    }

    #[test]
    fn fd_oracle_square_freezes() {
        let f = SmoothMap::parse(1, &["x0^2"]).unwrap();
        let out = fd_oracle(&f, &[3.0], &[1.0], 1e-5).unwrap();
        assert!((out[0] - 6.0).abs() < 1e-9, "got {}", out[0]);
    }

    #[test]
    fn tangent_against_fd_on_a_mixed_program() {
        let f = SmoothMap::parse(2, &["sqrt(1 + x0^2) * cos(x1)", "log(2 + sin(x0 * x1))"]).unwrap();
        let x = [0.7, -1.2];
        let v = [0.3, 0.9];
        let fd = fd_oracle(&f, &x, &v, 1e-5).unwrap();
        let exact = f.tangent(1).eval(&[x[0], x[1], v[0], v[1]]).unwrap();
        for (i, (a, b)) in fd.iter().zip(&exact[2..]).enumerate() {
            let rel = (a - b).abs() / b.abs().max(1.0);
            assert!(rel < 1e-6, "coord {i}: fd {a} vs exact {b}");
        }
    }

    #[test]
    fn eval_error_names_the_output_coordinate() {
        let f = SmoothMap::parse(1, &["x0", "log(x0)"]).unwrap();
        let err = f.eval(&[-1.0f64]).unwrap_err();
        assert!(err.to_string().contains("output coordinate 1"), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = SmoothMap::parse(2, &["x0 + x1"]).unwrap();
        assert!(matches!(
            f.eval(&[1.0f64]),
            Err(Error::Dimension { expected: 2, got: 1, .. })
        ));
    }
}
