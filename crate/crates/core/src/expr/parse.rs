//! Recursive-descent parser for the expression grammar.
//!
//! Grammar (loosest binding first): `+ -`, `* /`, unary `-`, `^`
//! (right-associative, constant exponent only), function application
//! `f(e)`, parentheses, decimal literals, declared identifiers.

use std::sync::Arc;

use thiserror::Error;

use super::{add, call, div, mul, neg, pow, sub, Expr, Func};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("undeclared identifier `{name}` at offset {offset}")]
    Undeclared { offset: usize, name: String },
    #[error("non-constant exponent at offset {offset}")]
    NonConstantExponent { offset: usize },
}

/// Declared names visible to the parser: variables become [`Expr::Var`]
/// nodes, parameters are substituted as constants before any node is built.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    variables: Vec<Arc<str>>,
    parameters: Vec<(String, f64)>,
}

impl Scope {
    pub fn new<I, S>(variables: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Arc<str>>,
    {
        Scope {
            variables: variables.into_iter().map(Into::into).collect(),
            parameters: Vec::new(),
        }
    }

    pub fn with_parameters<I, S>(mut self, params: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        self.parameters
            .extend(params.into_iter().map(|(n, v)| (n.into(), v)));
        self
    }

    pub fn variables(&self) -> &[Arc<str>] {
        &self.variables
    }

    fn variable(&self, name: &str) -> Option<Arc<str>> {
        self.variables.iter().find(|v| v.as_ref() == name).cloned()
    }

    fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

pub fn parse(text: &str, scope: &Scope) -> Result<Expr, ParseError> {
    let mut p = Parser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        scope,
    };
    p.skip_ws();
    let e = p.parse_add()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    scope: &'a Scope,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_add(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_mul()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.parse_mul()?;
                    lhs = add(lhs, rhs);
                }
                Some(b'-') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.parse_mul()?;
                    lhs = sub(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_mul(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.parse_unary()?;
                    lhs = mul(lhs, rhs);
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.parse_unary()?;
                    lhs = div(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.eat(b'-') {
            self.skip_ws();
            let inner = self.parse_unary()?;
            return Ok(neg(inner));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_primary()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            let caret = self.pos;
            self.pos += 1;
            self.skip_ws();
            let exponent = self.parse_unary()?;
            let k = exponent
                .fold()
                .as_const()
                .ok_or(ParseError::NonConstantExponent { offset: caret })?;
            return Ok(pow(base, k));
        }
        Ok(base)
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_add()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.parse_ident(),
            Some(_) => Err(self.err("expected a number, identifier or `(`")),
        }
    }

    fn parse_number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        // exponent part: `e`/`E` followed by optional sign and digits
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // not an exponent, e.g. `2*exp(x)` after splitting: back off
                self.pos = mark;
            }
        }
        let lit = &self.text[start..self.pos];
        let value: f64 = lit.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("invalid number literal `{lit}`"),
        })?;
        if !value.is_finite() {
            return Err(ParseError::Syntax {
                offset: start,
                message: format!("number literal `{lit}` overflows"),
            });
        }
        Ok(Expr::Const(value))
    }

    fn parse_ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        self.skip_ws();
        if self.peek() == Some(b'(') {
            let func = Func::from_name(name).ok_or_else(|| ParseError::Undeclared {
                offset: start,
                name: name.to_string(),
            })?;
            self.pos += 1;
            let arg = self.parse_add()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(self.err("expected `)` to close function argument"));
            }
            return Ok(call(func, arg));
        }
        if let Some(var) = self.scope.variable(name) {
            return Ok(Expr::Var(var));
        }
        if let Some(value) = self.scope.parameter(name) {
            return Ok(Expr::Const(value));
        }
        Err(ParseError::Undeclared {
            offset: start,
            name: name.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scope() -> Scope {
        Scope::new(["x1", "x2", "y1", "y2"]).with_parameters([("I1", 3.0)])
    }

    #[test]
    fn parses_fiber_quadratic() {
        let e = parse("y1^2/2", &scope()).unwrap();
        assert_eq!(e.eval_at(&[("y1", 3.0)]).unwrap(), 4.5);
    }

    #[test]
    fn parses_trig_identity() {
        let e = parse("sin(x1)^2 + cos(x1)^2", &scope()).unwrap();
        let v = e.eval_at(&[("x1", 0.7)]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn syntax_error_carries_offset() {
        match parse("x1*", &scope()) {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn undeclared_identifier_rejected() {
        match parse("x1 + q7", &scope()) {
            Err(ParseError::Undeclared { name, offset }) => {
                assert_eq!(name, "q7");
                assert_eq!(offset, 5);
            }
            other => panic!("expected undeclared error, got {other:?}"),
        }
    }

    #[test]
    fn parameters_become_constants_before_parsing() {
        let e = parse("I1*y1", &scope()).unwrap();
        assert_eq!(e, super::super::mul(Expr::constant(3.0), Expr::var("y1")));
    }

    #[test]
    fn non_constant_exponent_rejected() {
        assert!(matches!(
            parse("x1^y1", &scope()),
            Err(ParseError::NonConstantExponent { .. })
        ));
        // constant subexpression exponents are fine
        let e = parse("x1^(3/2)", &scope()).unwrap();
        assert!(matches!(e, Expr::Pow(_, k) if k == 1.5));
    }

    #[test]
    fn unary_minus_and_precedence() {
        let e = parse("-x1^2", &scope()).unwrap();
        assert_eq!(e.eval_at(&[("x1", 3.0)]).unwrap(), -9.0);
        let e = parse("2^-2", &scope()).unwrap();
        assert_eq!(e.as_const(), Some(0.25));
        let e = parse("1 - -x1", &scope()).unwrap();
        assert_eq!(e.eval_at(&[("x1", 2.0)]).unwrap(), 3.0);
    }

    #[test]
    fn scientific_literals() {
        let e = parse("1e-3 + x1*1.5E2", &scope()).unwrap();
        let v = e.eval_at(&[("x1", 1.0)]).unwrap();
        assert!((v - 150.001).abs() < 1e-12);
    }

    #[test]
    fn function_names_need_arguments() {
        assert!(matches!(
            parse("sin + 1", &scope()),
            Err(ParseError::Undeclared { .. })
        ));
    }
}
