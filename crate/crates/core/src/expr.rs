//! Expression trees over an abstract scalar, plus the text grammar.
//!
//! Variables are written `x0 .. x{n-1}`. The grammar supports `+ - * / ^`,
//! parentheses and the functions `sin cos exp log sqrt`; `^` binds tightest
//! and associates to the right, unary minus sits between `^` and `* /`.
//! Evaluation is generic over [`Scalar`], so the same tree runs on plain
//! floats or on duals of any depth.

use crate::dual::Scalar;
use crate::error::{Error, EvalError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sqrt(Box<Expr>),
    /// Integer exponent, kept exact via repeated multiplication.
    PowInt(Box<Expr>, i32),
    Pow(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    pub fn lit(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn log(self) -> Expr {
        Expr::Log(Box::new(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::PowInt(Box::new(self), n)
    }

    pub fn eval<T: Scalar>(&self, vars: &[T]) -> std::result::Result<T, EvalError> {
        Ok(match self {
            Expr::Const(c) => T::constant(*c),
            Expr::Var(i) => vars[*i].clone(),
            Expr::Add(a, b) => a.eval(vars)?.add(&b.eval(vars)?),
            Expr::Sub(a, b) => a.eval(vars)?.sub(&b.eval(vars)?),
            Expr::Mul(a, b) => a.eval(vars)?.mul(&b.eval(vars)?),
            Expr::Div(a, b) => a.eval(vars)?.div(&b.eval(vars)?)?,
            Expr::Neg(a) => a.eval(vars)?.neg(),
            Expr::Sin(a) => a.eval(vars)?.sin(),
            Expr::Cos(a) => a.eval(vars)?.cos(),
            Expr::Exp(a) => a.eval(vars)?.exp(),
            Expr::Log(a) => a.eval(vars)?.log()?,
            Expr::Sqrt(a) => a.eval(vars)?.sqrt()?,
            Expr::PowInt(a, n) => a.eval(vars)?.powi(*n)?,
            Expr::Pow(a, b) => a.eval(vars)?.pow(&b.eval(vars)?)?,
        })
    }

    /// Highest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            Expr::Neg(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Exp(a)
            | Expr::Log(a)
            | Expr::Sqrt(a)
            | Expr::PowInt(a, _) => a.max_var(),
        }
    }
}

macro_rules! expr_binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}

expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

/// Parse one expression over `in_dim` variables `x0 .. x{in_dim-1}`.
pub fn parse_expr(src: &str, in_dim: usize) -> Result<Expr> {
    let mut parser = Parser {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        in_dim,
    };
    let expr = parser.expression()?;
    parser.skip_ws();
    if parser.pos != parser.bytes.len() {
        return Err(parser.fail("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    in_dim: usize,
}

impl<'a> Parser<'a> {
    fn fail(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at byte {} in '{}'", self.pos, self.src))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    // expression := term (('+' | '-') term)*
    fn expression(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = lhs + self.term()?;
            } else if self.eat(b'-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    // term := factor (('*' | '/') factor)*
    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = lhs * self.factor()?;
            } else if self.eat(b'/') {
                lhs = lhs / self.factor()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    // factor := '-' factor | power
    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            let inner = self.factor()?;
            // fold a negated literal so "x ^ -2" sees a constant exponent
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                other => -other,
            });
        }
        self.power()
    }

    // power := atom ('^' factor)?   (right-associative)
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let exponent = self.factor()?;
        Ok(match exponent {
            Expr::Const(c) if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 => {
                base.powi(c as i32)
            }
            other => Expr::Pow(Box::new(base), Box::new(other)),
        })
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expression()?;
                if !self.eat(b')') {
                    return Err(self.fail("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(self.fail("expected a number, variable, function or '('")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // exponent suffix: e / E with optional sign
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = mark; // not an exponent after all
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| Error::Parse(format!("bad number literal '{text}' at byte {start}")))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        match name {
            "sin" | "cos" | "exp" | "log" | "sqrt" => {
                if !self.eat(b'(') {
                    return Err(self.fail(&format!("{name} needs a parenthesized argument")));
                }
                let arg = self.expression()?;
                if !self.eat(b')') {
                    return Err(self.fail("expected ')'"));
                }
                Ok(match name {
                    "sin" => arg.sin(),
                    "cos" => arg.cos(),
                    "exp" => arg.exp(),
                    "log" => arg.log(),
                    _ => arg.sqrt(),
                })
            }
            _ => {
                if let Some(rest) = name.strip_prefix('x') {
                    if let Ok(index) = rest.parse::<usize>() {
                        if index >= self.in_dim {
                            return Err(Error::Parse(format!(
                                "variable {name} out of range: map has {} inputs",
                                self.in_dim
                            )));
                        }
                        return Ok(Expr::Var(index));
                    }
                }
                Err(Error::Parse(format!(
                    "unknown identifier '{name}' at byte {start}"
                )))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval1(src: &str, vars: &[f64]) -> f64 {
        parse_expr(src, vars.len()).unwrap().eval(vars).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval1("2 + 3 * 4 ^ 2", &[]), 50.0);
        assert_eq!(eval1("2 ^ 3 ^ 2", &[]), 512.0); // right-assoc
        assert_eq!(eval1("-x0^2", &[3.0]), -9.0); // minus below power
        assert_eq!(eval1("(2 + 3) * 4", &[]), 20.0);
        assert_eq!(eval1("x0 ^ -2", &[2.0]), 0.25);
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(eval1("1e-3 + 2.5E2", &[]), 250.001);
        assert_eq!(eval1("1.5e0 * x0", &[2.0]), 3.0);
    }

    #[test]
    fn functions_parse_and_evaluate() {
        let v = eval1("sin(x0) ^ 2 + cos(x0) ^ 2", &[0.7]);
        assert!((v - 1.0).abs() < 1e-15);
        assert!((eval1("log(exp(x0))", &[1.3]) - 1.3).abs() < 1e-15);
        assert_eq!(eval1("sqrt(x0 * x0)", &[3.0]), 3.0);
    }

    #[test]
    fn out_of_range_variable_is_rejected() {
        let err = parse_expr("x2 + 1", 2).unwrap_err();
        assert!(err.to_string().contains("x2"), "{err}");
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        assert!(parse_expr("1 + 2 )", 0).is_err());
        assert!(parse_expr("sin x0", 1).is_err());
        assert!(parse_expr("foo(x0)", 1).is_err());
    }

    #[test]
    fn division_by_zero_surfaces_eagerly() {
        let expr = parse_expr("1 / x0", 1).unwrap();
        assert_eq!(expr.eval(&[0.0f64]), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn integer_exponent_is_folded() {
        match parse_expr("x0 ^ 3", 1).unwrap() {
            Expr::PowInt(_, 3) => {}
            other => panic!("expected folded integer power, got {other:?}"),
        }
        // fractional exponents keep the general form
        match parse_expr("x0 ^ 0.5", 1).unwrap() {
            Expr::Pow(..) => {}
            other => panic!("expected general power, got {other:?}"),
        }
    }
}
