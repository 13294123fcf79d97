//! Minimal symbolic expression engine.
//!
//! Expressions are immutable trees over named real variables with exact
//! differentiation, numeric evaluation and sampling-based equality (see
//! [`equal_sampled`]). Shared subtrees use [`Arc`], so expressions are
//! cheap to clone and safe to send across threads.

mod parse;
mod sample;

pub use parse::{parse, ParseError, Scope};
pub use sample::{equal_sampled, is_zero_sampled, EqualityCheck, SampleDomain, SampleError};

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Unary functions supported by the expression grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// A symbolic scalar expression.
///
/// Power nodes carry a real constant exponent; a non-constant exponent is
/// rejected at parse time so differentiation stays total.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Arc<str>),
    Add(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, f64),
    Neg(Arc<Expr>),
    Call(Func, Arc<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("non-finite result")]
    NonFinite,
}

/// Variable bindings as parallel name/value slices.
pub struct Env<'a> {
    names: &'a [Arc<str>],
    values: &'a [f64],
}

impl<'a> Env<'a> {
    pub fn new(names: &'a [Arc<str>], values: &'a [f64]) -> Self {
        debug_assert_eq!(names.len(), values.len());
        Env { names, values }
    }

    fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n.as_ref() == name)
            .map(|i| self.values[i])
    }
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expr {
    pub const ZERO: Expr = Expr::Const(0.0);
    pub const ONE: Expr = Expr::Const(1.0);

    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(name: impl Into<Arc<str>>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn is_const(&self, v: f64) -> bool {
        matches!(self, Expr::Const(c) if *c == v)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Numeric evaluation. Returns a finite real or an error; NaN and
    /// infinities are mapped to errors, never returned.
    pub fn eval(&self, env: &Env) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(name) => env
                .get(name)
                .ok_or_else(|| EvalError::Unbound(name.to_string())),
            Expr::Add(a, b) => finite(a.eval(env)? + b.eval(env)?),
            Expr::Mul(a, b) => finite(a.eval(env)? * b.eval(env)?),
            Expr::Div(a, b) => {
                let d = b.eval(env)?;
                if d == 0.0 {
                    return Err(EvalError::Domain("division by zero"));
                }
                finite(a.eval(env)? / d)
            }
            Expr::Pow(base, k) => {
                let b = base.eval(env)?;
                if b == 0.0 && *k < 0.0 {
                    return Err(EvalError::Domain("zero raised to negative power"));
                }
                if b < 0.0 && k.fract() != 0.0 {
                    return Err(EvalError::Domain("fractional power of negative value"));
                }
                finite(b.powf(*k))
            }
            Expr::Neg(a) => Ok(-a.eval(env)?),
            Expr::Call(f, a) => {
                let v = a.eval(env)?;
                match f {
                    Func::Sin => finite(v.sin()),
                    Func::Cos => finite(v.cos()),
                    Func::Tan => finite(v.tan()),
                    Func::Exp => finite(v.exp()),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(EvalError::Domain("log of non-positive value"));
                        }
                        finite(v.ln())
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(EvalError::Domain("sqrt of negative value"));
                        }
                        finite(v.sqrt())
                    }
                }
            }
        }
    }

    /// Convenience evaluation from name/value pairs.
    pub fn eval_at(&self, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        let names: Vec<Arc<str>> = bindings.iter().map(|(n, _)| Arc::from(*n)).collect();
        let values: Vec<f64> = bindings.iter().map(|(_, v)| *v).collect();
        self.eval(&Env::new(&names, &values))
    }

    /// Exact partial derivative with respect to `var`, constant-folded.
    ///
    /// Structurally zero whenever `var` is not free in `self`.
    pub fn diff(&self, var: &str) -> Expr {
        match self {
            Expr::Const(_) => Expr::ZERO,
            Expr::Var(name) => {
                if name.as_ref() == var {
                    Expr::ONE
                } else {
                    Expr::ZERO
                }
            }
            Expr::Add(a, b) => add(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => add(
                mul(a.diff(var), (**b).clone()),
                mul((**a).clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => {
                if !b.depends_on(var) {
                    return div(a.diff(var), (**b).clone());
                }
                let num = sub(
                    mul(a.diff(var), (**b).clone()),
                    mul((**a).clone(), b.diff(var)),
                );
                div(num, pow((**b).clone(), 2.0))
            }
            Expr::Pow(base, k) => {
                let outer = mul(Expr::constant(*k), pow((**base).clone(), k - 1.0));
                mul(outer, base.diff(var))
            }
            Expr::Neg(a) => neg(a.diff(var)),
            Expr::Call(f, a) => {
                let inner = a.diff(var);
                let arg = (**a).clone();
                let outer = match f {
                    Func::Sin => cos(arg),
                    Func::Cos => neg(sin(arg)),
                    Func::Tan => add(Expr::ONE, pow(tan(arg), 2.0)),
                    Func::Exp => exp(arg),
                    Func::Log => div(Expr::ONE, arg),
                    Func::Sqrt => div(Expr::ONE, mul(Expr::constant(2.0), sqrt(arg))),
                };
                mul(outer, inner)
            }
        }
    }

    /// Rebuilds the tree through the folding constructors. Idempotent.
    pub fn fold(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Add(a, b) => add(a.fold(), b.fold()),
            Expr::Mul(a, b) => mul(a.fold(), b.fold()),
            Expr::Div(a, b) => div(a.fold(), b.fold()),
            Expr::Pow(a, k) => pow(a.fold(), *k),
            Expr::Neg(a) => neg(a.fold()),
            Expr::Call(f, a) => call(*f, a.fold()),
        }
    }

    /// Replaces every occurrence of `var` by `replacement`, folding as it goes.
    pub fn subst(&self, var: &str, replacement: &Expr) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(name) => {
                if name.as_ref() == var {
                    replacement.clone()
                } else {
                    self.clone()
                }
            }
            Expr::Add(a, b) => add(a.subst(var, replacement), b.subst(var, replacement)),
            Expr::Mul(a, b) => mul(a.subst(var, replacement), b.subst(var, replacement)),
            Expr::Div(a, b) => div(a.subst(var, replacement), b.subst(var, replacement)),
            Expr::Pow(a, k) => pow(a.subst(var, replacement), *k),
            Expr::Neg(a) => neg(a.subst(var, replacement)),
            Expr::Call(f, a) => call(*f, a.subst(var, replacement)),
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(name) => name.as_ref() == var,
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(var),
        }
    }

    /// Free variables in deterministic (sorted) order.
    pub fn free_vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
        }
    }

    /// Sum of an iterator of expressions, folding; empty sum is 0.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms.into_iter().fold(Expr::ZERO, add)
    }

    pub fn powi(self, k: i32) -> Expr {
        pow(self, k as f64)
    }

    pub fn powf(self, k: f64) -> Expr {
        pow(self, k)
    }

    pub fn sin(self) -> Expr {
        sin(self)
    }

    pub fn cos(self) -> Expr {
        cos(self)
    }

    pub fn sqrt(self) -> Expr {
        sqrt(self)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if *c < 0.0 => 3,
            _ => 5,
        }
    }

    fn fmt_child(&self, child: &Expr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if child.precedence() < min_prec {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

// Folding constructors. Each returns a tree that is already fully folded
// provided its inputs are, which is what makes `fold` idempotent.

pub fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => {
            let v = x + y;
            if v.is_finite() {
                return Expr::Const(v);
            }
        }
        (Expr::Const(x), _) if *x == 0.0 => return b,
        (_, Expr::Const(y)) if *y == 0.0 => return a,
        _ => {}
    }
    Expr::Add(Arc::new(a), Arc::new(b))
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    add(a, neg(b))
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => (*inner).clone(),
        other => Expr::Neg(Arc::new(other)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => {
            let v = x * y;
            if v.is_finite() {
                return Expr::Const(v);
            }
        }
        (Expr::Const(x), _) if *x == 0.0 => return Expr::ZERO,
        (_, Expr::Const(y)) if *y == 0.0 => return Expr::ZERO,
        (Expr::Const(x), _) if *x == 1.0 => return b,
        (_, Expr::Const(y)) if *y == 1.0 => return a,
        (Expr::Const(x), Expr::Mul(u, v)) => {
            if let Expr::Const(y) = &**u {
                let c = x * y;
                if c.is_finite() {
                    return mul(Expr::Const(c), (**v).clone());
                }
            }
        }
        (Expr::Mul(u, v), Expr::Const(y)) => {
            if let Expr::Const(x) = &**u {
                let c = x * y;
                if c.is_finite() {
                    return mul(Expr::Const(c), (**v).clone());
                }
            }
        }
        _ => {}
    }
    Expr::Mul(Arc::new(a), Arc::new(b))
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => {
            let v = x / y;
            if v.is_finite() {
                return Expr::Const(v);
            }
        }
        (Expr::Const(x), Expr::Const(_)) if *x == 0.0 => {}
        (Expr::Const(x), _) if *x == 0.0 => return Expr::ZERO,
        (_, Expr::Const(y)) if *y == 1.0 => return a,
        (Expr::Mul(u, v), Expr::Const(y)) if *y != 0.0 => {
            if let Expr::Const(x) = &**u {
                let c = x / y;
                if c.is_finite() {
                    return mul(Expr::Const(c), (**v).clone());
                }
            }
        }
        _ => {}
    }
    Expr::Div(Arc::new(a), Arc::new(b))
}

pub fn pow(base: Expr, k: f64) -> Expr {
    if k == 0.0 {
        return Expr::ONE;
    }
    if k == 1.0 {
        return base;
    }
    if let Expr::Const(c) = base {
        let v = c.powf(k);
        if v.is_finite() {
            return Expr::Const(v);
        }
    }
    Expr::Pow(Arc::new(base), k)
}

pub fn call(f: Func, a: Expr) -> Expr {
    if let Expr::Const(c) = a {
        let v = match f {
            Func::Sin => c.sin(),
            Func::Cos => c.cos(),
            Func::Tan => c.tan(),
            Func::Exp => c.exp(),
            Func::Log => c.ln(),
            Func::Sqrt => c.sqrt(),
        };
        if v.is_finite() {
            return Expr::Const(v);
        }
        return Expr::Call(f, Arc::new(Expr::Const(c)));
    }
    Expr::Call(f, Arc::new(a))
}

pub fn sin(a: Expr) -> Expr {
    call(Func::Sin, a)
}

pub fn cos(a: Expr) -> Expr {
    call(Func::Cos, a)
}

pub fn tan(a: Expr) -> Expr {
    call(Func::Tan, a)
}

pub fn exp(a: Expr) -> Expr {
    call(Func::Exp, a)
}

pub fn log(a: Expr) -> Expr {
    call(Func::Log, a)
}

pub fn sqrt(a: Expr) -> Expr {
    call(Func::Sqrt, a)
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        mul(self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl fmt::Display for Expr {
    /// Prints in the same grammar the parser accepts, so text round-trips.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Add(a, b) => {
                self.fmt_child(a, 1, f)?;
                if let Expr::Neg(inner) = &**b {
                    write!(f, " - ")?;
                    self.fmt_child(inner, 2, f)
                } else if matches!(&**b, Expr::Const(c) if *c < 0.0) {
                    let c = b.as_const().unwrap();
                    write!(f, " - {}", -c)
                } else {
                    write!(f, " + ")?;
                    self.fmt_child(b, 1, f)
                }
            }
            Expr::Mul(a, b) => {
                self.fmt_child(a, 2, f)?;
                write!(f, "*")?;
                self.fmt_child(b, 3, f)
            }
            Expr::Div(a, b) => {
                self.fmt_child(a, 2, f)?;
                write!(f, "/")?;
                self.fmt_child(b, 3, f)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                self.fmt_child(a, 3, f)
            }
            Expr::Pow(a, k) => {
                self.fmt_child(a, 5, f)?;
                if *k < 0.0 {
                    write!(f, "^({k})")
                } else {
                    write!(f, "^{k}")
                }
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
