//! Truncated multi-directional dual numbers.
//!
//! A [`DualScalar`] of depth `k` carries `2^k` coefficients over `k`
//! nilpotent generators `e_1 .. e_k` with `e_j^2 = 0`; coefficient `m` (a
//! bitmask) multiplies the product of the generators named by `m`. Running a
//! program on such values produces every mixed first derivative along the `k`
//! directions in one pass, exactly — no truncation error beyond f64 rounding.
//! Depth 0 is plain arithmetic.
//!
//! Packing the `2^k` blocks of a chart element into depth-`k` duals and
//! evaluating a map computes the k-fold tangent map of that map; this is how
//! the whole crate differentiates. Elementary functions go through a Taylor
//! expansion in the nilpotent part: for `a = a0 + n` with `n` nilpotent,
//! `f(a) = sum_m f^(m)(a0)/m! * n^m`, which terminates at `m = depth`.

use crate::error::EvalError;

#[derive(Debug, Clone, PartialEq)]
pub struct DualScalar {
    depth: usize,
    /// `2^depth` coefficients, index = generator bitmask.
    coeff: Vec<f64>,
}

impl DualScalar {
    /// Build from explicit coefficients; `coeff.len()` must be `2^depth`.
    pub fn new(depth: usize, coeff: Vec<f64>) -> Self {
        assert_eq!(
            coeff.len(),
            1usize << depth,
            "dual of depth {depth} needs {} coefficients",
            1usize << depth
        );
        DualScalar { depth, coeff }
    }

    /// A constant: value in slot 0, every derivative zero.
    pub fn constant_at(depth: usize, value: f64) -> Self {
        let mut coeff = vec![0.0; 1usize << depth];
        coeff[0] = value;
        DualScalar { depth, coeff }
    }

    /// Depth-1 value with a single first derivative attached.
    pub fn with_derivative(value: f64, derivative: f64) -> Self {
        DualScalar {
            depth: 1,
            coeff: vec![value, derivative],
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// The underlying value (coefficient of the empty generator set).
    pub fn value(&self) -> f64 {
        self.coeff[0]
    }

    pub fn coefficient(&self, mask: usize) -> f64 {
        self.coeff[mask]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeff
    }

    /// True when every derivative coefficient vanishes.
    pub fn is_constant(&self) -> bool {
        self.coeff[1..].iter().all(|&c| c == 0.0)
    }

    /// Align operand depths. Only constants (depth 0) broadcast; any other
    /// mismatch is a bug in the caller, not recoverable input.
    fn aligned(&self, rhs: &Self) -> (Self, Self) {
        if self.depth == rhs.depth {
            (self.clone(), rhs.clone())
        } else if self.depth == 0 {
            (Self::constant_at(rhs.depth, self.coeff[0]), rhs.clone())
        } else if rhs.depth == 0 {
            (self.clone(), Self::constant_at(self.depth, rhs.coeff[0]))
        } else {
            panic!(
                "dual depth mismatch: {} vs {} (only constants broadcast)",
                self.depth, rhs.depth
            );
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let (mut a, b) = self.aligned(rhs);
        for (x, y) in a.coeff.iter_mut().zip(&b.coeff) {
            *x += *y;
        }
        a
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let (mut a, b) = self.aligned(rhs);
        for (x, y) in a.coeff.iter_mut().zip(&b.coeff) {
            *x -= *y;
        }
        a
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeff {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeff {
            *c *= factor;
        }
        out
    }

    /// Product rule over every direction pair: subset convolution
    /// `out[s] = sum over t subset of s of a[t] * b[s \ t]`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let (a, b) = self.aligned(rhs);
        let size = a.coeff.len();
        let mut out = vec![0.0; size];
        for s in 0..size {
            // enumerate submasks of s, descending
            let mut t = s;
            loop {
                out[s] += a.coeff[t] * b.coeff[s ^ t];
                if t == 0 {
                    break;
                }
                t = (t - 1) & s;
            }
        }
        DualScalar {
            depth: a.depth,
            coeff: out,
        }
    }

    /// Split into (top generator absent, top generator present).
    fn halves(&self) -> (Self, Self) {
        debug_assert!(self.depth > 0);
        let half = self.coeff.len() / 2;
        (
            DualScalar {
                depth: self.depth - 1,
                coeff: self.coeff[..half].to_vec(),
            },
            DualScalar {
                depth: self.depth - 1,
                coeff: self.coeff[half..].to_vec(),
            },
        )
    }

    fn join(lo: Self, hi: Self) -> Self {
        debug_assert_eq!(lo.depth, hi.depth);
        let depth = lo.depth + 1;
        let mut coeff = lo.coeff;
        coeff.extend(hi.coeff);
        DualScalar { depth, coeff }
    }

    /// Division; fails when the denominator's value is zero (derivatives of
    /// 1/x need x != 0, independent of the nilpotent part).
    pub fn div(&self, rhs: &Self) -> Result<Self, EvalError> {
        let (a, b) = self.aligned(rhs);
        if b.coeff[0] == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        Ok(Self::div_unchecked(&a, &b))
    }

    /// Quotient via the split recursion: with a = a0 + e*a1, b = b0 + e*b1,
    /// q0 = a0/b0 and q1 = (a1 - q0*b1)/b0.
    fn div_unchecked(a: &Self, b: &Self) -> Self {
        if a.depth == 0 {
            return DualScalar {
                depth: 0,
                coeff: vec![a.coeff[0] / b.coeff[0]],
            };
        }
        let (a0, a1) = a.halves();
        let (b0, b1) = b.halves();
        let q0 = Self::div_unchecked(&a0, &b0);
        let q1 = Self::div_unchecked(&a1.sub(&q0.mul(&b1)), &b0);
        Self::join(q0, q1)
    }

    /// Compose with an analytic function given its scaled derivatives at the
    /// value: `scaled[m] = f^(m)(value) / m!`. Horner evaluation in the
    /// nilpotent part; exact because the nilpotent part has index <= depth.
    fn apply_analytic(&self, scaled: &[f64]) -> Self {
        debug_assert_eq!(scaled.len(), self.depth + 1);
        let mut nil = self.clone();
        nil.coeff[0] = 0.0;
        let mut out = Self::constant_at(self.depth, scaled[self.depth]);
        for m in (0..self.depth).rev() {
            out = out.mul(&nil);
            out.coeff[0] += scaled[m];
        }
        out
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        self.apply_analytic(&scaled_derivs(self.depth, |m| cycle[m % 4]))
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        self.apply_analytic(&scaled_derivs(self.depth, |m| cycle[m % 4]))
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.apply_analytic(&scaled_derivs(self.depth, |_| e))
    }

    /// Natural logarithm; the value must be strictly positive.
    pub fn log(&self) -> Result<Self, EvalError> {
        let v = self.value();
        if v <= 0.0 {
            return Err(EvalError::Domain {
                func: "log",
                value: v,
            });
        }
        // f^(m)/m! = (-1)^(m-1) / (m * v^m) for m >= 1
        let mut scaled = Vec::with_capacity(self.depth + 1);
        scaled.push(v.ln());
        let mut vm = 1.0;
        for m in 1..=self.depth {
            vm *= v;
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            scaled.push(sign / (m as f64 * vm));
        }
        Ok(self.apply_analytic(&scaled))
    }

    /// Square root. Constants accept zero; anything carrying derivatives
    /// needs a strictly positive value.
    pub fn sqrt(&self) -> Result<Self, EvalError> {
        let v = self.value();
        if self.is_constant() {
            if v < 0.0 {
                return Err(EvalError::Domain {
                    func: "sqrt",
                    value: v,
                });
            }
            return Ok(Self::constant_at(self.depth, v.sqrt()));
        }
        if v <= 0.0 {
            return Err(EvalError::Domain {
                func: "sqrt",
                value: v,
            });
        }
        // c_m = c_{m-1} * (1/2 - (m-1)) / (m * v)
        let mut scaled = Vec::with_capacity(self.depth + 1);
        scaled.push(v.sqrt());
        for m in 1..=self.depth {
            let prev = scaled[m - 1];
            scaled.push(prev * (0.5 - (m as f64 - 1.0)) / (m as f64 * v));
        }
        Ok(self.apply_analytic(&scaled))
    }

    /// Integer power by repeated squaring; exact for any base. Negative
    /// exponents invert first and therefore need a nonzero value.
    pub fn powi(&self, n: i32) -> Result<Self, EvalError> {
        if n < 0 {
            let pos = self.powi(-n)?;
            return Self::constant_at(self.depth, 1.0).div(&pos);
        }
        let mut out = Self::constant_at(self.depth, 1.0);
        let mut base = self.clone();
        let mut n = n as u32;
        while n > 0 {
            if n & 1 == 1 {
                out = out.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        Ok(out)
    }

    /// Real power. Integral exponents route through `powi` (valid for
    /// negative bases); fractional exponents need a positive value.
    pub fn powf(&self, p: f64) -> Result<Self, EvalError> {
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            return self.powi(p as i32);
        }
        let v = self.value();
        if self.is_constant() {
            if v < 0.0 {
                return Err(EvalError::Domain {
                    func: "pow",
                    value: v,
                });
            }
            return Ok(Self::constant_at(self.depth, v.powf(p)));
        }
        if v <= 0.0 {
            return Err(EvalError::Domain {
                func: "pow",
                value: v,
            });
        }
        // c_m = c_{m-1} * (p - (m-1)) / (m * v)
        let mut scaled = Vec::with_capacity(self.depth + 1);
        scaled.push(v.powf(p));
        for m in 1..=self.depth {
            let prev = scaled[m - 1];
            scaled.push(prev * (p - (m as f64 - 1.0)) / (m as f64 * v));
        }
        Ok(self.apply_analytic(&scaled))
    }

    /// General power with a varying exponent: `exp(rhs * log(self))` unless
    /// the exponent is constant, in which case `powf` applies.
    pub fn pow(&self, rhs: &Self) -> Result<Self, EvalError> {
        if rhs.is_constant() {
            return self.powf(rhs.value());
        }
        Ok(rhs.mul(&self.log()?).exp())
    }
}

fn scaled_derivs(depth: usize, deriv: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(depth + 1);
    let mut fact = 1.0;
    for m in 0..=depth {
        if m > 0 {
            fact *= m as f64;
        }
        out.push(deriv(m) / fact);
    }
    out
}

/// The scalar types a program can run on. `f64` is the plain path;
/// [`DualScalar`] carries derivatives. The `pack`/`unpack` pair is what lets
/// a tangent-map node deepen whatever scalar it is already running on, so
/// tangent maps nest to any order.
pub trait Scalar: Clone + std::fmt::Debug {
    fn constant(value: f64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self, EvalError>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn log(&self) -> Result<Self, EvalError>;
    fn sqrt(&self) -> Result<Self, EvalError>;
    fn powi(&self, n: i32) -> Result<Self, EvalError>;
    fn powf(&self, p: f64) -> Result<Self, EvalError>;
    fn pow(&self, rhs: &Self) -> Result<Self, EvalError>;

    /// Pack `2^directions` block values into one dual that treats the block
    /// index as `directions` fresh generators (the low mask bits).
    fn pack(blocks: &[Self], directions: usize) -> DualScalar;

    /// Inverse of `pack`: split a dual back into `2^directions` blocks.
    fn unpack(packed: &DualScalar, directions: usize) -> Vec<Self>;
}

impl Scalar for f64 {
    fn constant(value: f64) -> Self {
        value
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, rhs: &Self) -> Result<Self, EvalError> {
        if *rhs == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        Ok(self / rhs)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn log(&self) -> Result<Self, EvalError> {
        if *self <= 0.0 {
            return Err(EvalError::Domain {
                func: "log",
                value: *self,
            });
        }
        Ok(self.ln())
    }
    fn sqrt(&self) -> Result<Self, EvalError> {
        if *self < 0.0 {
            return Err(EvalError::Domain {
                func: "sqrt",
                value: *self,
            });
        }
        Ok(f64::sqrt(*self))
    }
    fn powi(&self, n: i32) -> Result<Self, EvalError> {
        if n < 0 && *self == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        Ok(f64::powi(*self, n))
    }
    fn powf(&self, p: f64) -> Result<Self, EvalError> {
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            return Scalar::powi(self, p as i32);
        }
        if *self < 0.0 {
            return Err(EvalError::Domain {
                func: "pow",
                value: *self,
            });
        }
        Ok(f64::powf(*self, p))
    }
    fn pow(&self, rhs: &Self) -> Result<Self, EvalError> {
        Scalar::powf(self, *rhs)
    }
    fn pack(blocks: &[Self], directions: usize) -> DualScalar {
        DualScalar::new(directions, blocks.to_vec())
    }
    fn unpack(packed: &DualScalar, directions: usize) -> Vec<Self> {
        if packed.depth == 0 {
            // constants broadcast, mirroring `aligned`
            let mut out = vec![0.0; 1 << directions];
            out[0] = packed.coeff[0];
            return out;
        }
        assert_eq!(packed.depth, directions, "unpacking wrong dual depth");
        packed.coeff.clone()
    }
}

impl Scalar for DualScalar {
    fn constant(value: f64) -> Self {
        DualScalar::constant_at(0, value)
    }
    fn add(&self, rhs: &Self) -> Self {
        DualScalar::add(self, rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        DualScalar::sub(self, rhs)
    }
    fn mul(&self, rhs: &Self) -> Self {
        DualScalar::mul(self, rhs)
    }
    fn neg(&self) -> Self {
        DualScalar::neg(self)
    }
    fn div(&self, rhs: &Self) -> Result<Self, EvalError> {
        DualScalar::div(self, rhs)
    }
    fn sin(&self) -> Self {
        DualScalar::sin(self)
    }
    fn cos(&self) -> Self {
        DualScalar::cos(self)
    }
    fn exp(&self) -> Self {
        DualScalar::exp(self)
    }
    fn log(&self) -> Result<Self, EvalError> {
        DualScalar::log(self)
    }
    fn sqrt(&self) -> Result<Self, EvalError> {
        DualScalar::sqrt(self)
    }
    fn powi(&self, n: i32) -> Result<Self, EvalError> {
        DualScalar::powi(self, n)
    }
    fn powf(&self, p: f64) -> Result<Self, EvalError> {
        DualScalar::powf(self, p)
    }
    fn pow(&self, rhs: &Self) -> Result<Self, EvalError> {
        DualScalar::pow(self, rhs)
    }

    /// New generators take the low mask bits; the bits this dual already
    /// carries shift up. Block `s` with inner mask `t` lands at
    /// `(t << directions) | s`.
    fn pack(blocks: &[Self], directions: usize) -> DualScalar {
        let inner = blocks.iter().map(|b| b.depth).max().expect("pack of no blocks");
        let mut coeff = vec![0.0; 1usize << (inner + directions)];
        for (s, b) in blocks.iter().enumerate() {
            assert!(
                b.depth == inner || b.depth == 0,
                "dual depth mismatch in pack: {} vs {} (only constants broadcast)",
                b.depth,
                inner
            );
            // a depth-0 block writes only slot `s`, its zero-padded embedding
            for (t, &c) in b.coeff.iter().enumerate() {
                coeff[(t << directions) | s] = c;
            }
        }
        DualScalar {
            depth: inner + directions,
            coeff,
        }
    }

    fn unpack(packed: &DualScalar, directions: usize) -> Vec<Self> {
        if packed.depth == 0 {
            let mut out = vec![DualScalar::constant_at(0, 0.0); 1 << directions];
            out[0] = packed.clone();
            return out;
        }
        assert!(packed.depth >= directions, "unpacking wrong dual depth");
        let inner = packed.depth - directions;
        (0..1usize << directions)
            .map(|s| DualScalar {
                depth: inner,
                coeff: (0..1usize << inner)
                    .map(|t| packed.coeff[(t << directions) | s])
                    .collect(),
            })
            .collect()
    }
}
