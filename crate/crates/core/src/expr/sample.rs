//! Sampling-based expression equality.
//!
//! All "expression is identically zero" decisions in this crate reduce to
//! seeded random sampling at a fixed tolerance; no canonical simplification
//! is attempted. Verdicts are reproducible for a fixed domain.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Env, Expr};

pub const DEFAULT_INTERVAL: (f64, f64) = (-2.0, 2.0);
pub const DEFAULT_SAMPLES: usize = 32;
pub const DEFAULT_ATOL: f64 = 1e-9;
pub const DEFAULT_RTOL: f64 = 1e-9;

/// Per-point retry budget when a sample hits a domain error.
const MAX_RESAMPLES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("undecidable on domain: sample point failed {attempts} times ({last})")]
    Undecidable { attempts: usize, last: String },
}

/// Sampling configuration: variable intervals, sample count, seed and
/// tolerances.
#[derive(Debug, Clone)]
pub struct SampleDomain {
    vars: Vec<(Arc<str>, f64, f64)>,
    samples: usize,
    seed: u64,
    atol: f64,
    rtol: f64,
}

impl SampleDomain {
    pub fn new<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Arc<str>>,
    {
        let vars = vars
            .into_iter()
            .map(|v| (v.into(), DEFAULT_INTERVAL.0, DEFAULT_INTERVAL.1))
            .collect();
        SampleDomain {
            vars,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            atol: DEFAULT_ATOL,
            rtol: DEFAULT_RTOL,
        }
    }

    pub fn with_interval(mut self, var: &str, lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "degenerate interval for `{var}`");
        for entry in &mut self.vars {
            if entry.0.as_ref() == var {
                entry.1 = lo;
                entry.2 = hi;
            }
        }
        self
    }

    pub fn with_all_intervals(mut self, lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "degenerate interval");
        for entry in &mut self.vars {
            entry.1 = lo;
            entry.2 = hi;
        }
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        assert!(n >= 8, "sample count must be at least 8");
        self.samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tolerances(mut self, atol: f64, rtol: f64) -> Self {
        self.atol = atol;
        self.rtol = rtol;
        self
    }

    pub fn var_names(&self) -> Vec<Arc<str>> {
        self.vars.iter().map(|(n, _, _)| n.clone()).collect()
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn atol(&self) -> f64 {
        self.atol
    }

    pub fn rtol(&self) -> f64 {
        self.rtol
    }

    /// Midpoint of every variable interval, in declaration order.
    pub fn midpoint(&self) -> Vec<f64> {
        self.vars
            .iter()
            .map(|(_, lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Draws one value per variable, in declaration order.
    pub fn draw(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.vars
            .iter()
            .map(|(_, lo, hi)| rng.gen_range(*lo..*hi))
            .collect()
    }
}

/// Outcome of a sampled comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualityCheck {
    pub equal: bool,
    pub max_residual: f64,
}

/// Compares two expressions at `domain.samples()` random points.
///
/// Equal iff `|a - b| <= atol + rtol * max(|a|, |b|)` at every point; the
/// maximum absolute residual observed is returned either way. A point where
/// evaluation hits a domain error is redrawn up to three times before the
/// comparison fails as undecidable.
pub fn equal_sampled(
    a: &Expr,
    b: &Expr,
    domain: &SampleDomain,
) -> Result<EqualityCheck, SampleError> {
    let names = domain.var_names();
    let mut rng = domain.rng();
    let mut equal = true;
    let mut max_residual: f64 = 0.0;

    for _ in 0..domain.samples() {
        let mut attempts = 0;
        let (va, vb) = loop {
            let values = domain.draw(&mut rng);
            let env = Env::new(&names, &values);
            match (a.eval(&env), b.eval(&env)) {
                (Ok(va), Ok(vb)) => break (va, vb),
                (ra, rb) => {
                    attempts += 1;
                    if attempts > MAX_RESAMPLES {
                        let last = ra.err().or(rb.err()).map(|e| e.to_string());
                        return Err(SampleError::Undecidable {
                            attempts,
                            last: last.unwrap_or_default(),
                        });
                    }
                }
            }
        };
        let residual = (va - vb).abs();
        max_residual = max_residual.max(residual);
        if residual > domain.atol() + domain.rtol() * va.abs().max(vb.abs()) {
            equal = false;
        }
    }

    Ok(EqualityCheck {
        equal,
        max_residual,
    })
}

/// Shorthand for comparison against zero.
pub fn is_zero_sampled(e: &Expr, domain: &SampleDomain) -> Result<EqualityCheck, SampleError> {
    equal_sampled(e, &Expr::ZERO, domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{add, cos, div, log, mul, pow, sin, sub};

    fn domain() -> SampleDomain {
        SampleDomain::new(["x1", "y1"])
    }

    #[test]
    fn trig_identity_is_equal() {
        let a = add(
            pow(sin(Expr::var("x1")), 2.0),
            pow(cos(Expr::var("x1")), 2.0),
        );
        let check = equal_sampled(&a, &Expr::ONE, &domain()).unwrap();
        assert!(check.equal);
        assert!(check.max_residual <= 1e-12);
    }

    #[test]
    fn constant_offset_is_not_equal() {
        let a = Expr::var("y1");
        let b = add(Expr::var("y1"), Expr::constant(1e-6));
        let check = equal_sampled(&a, &b, &domain()).unwrap();
        assert!(!check.equal);
        assert!((check.max_residual - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn commutative_difference_has_zero_residual() {
        let a = sub(
            mul(Expr::var("x1"), Expr::var("y1")),
            mul(Expr::var("y1"), Expr::var("x1")),
        );
        let check = is_zero_sampled(&a, &domain()).unwrap();
        assert!(check.equal);
        assert_eq!(check.max_residual, 0.0);
    }

    #[test]
    fn persistent_domain_error_is_undecidable() {
        // log is undefined on roughly half of [-2, 2]; with resampling the
        // comparison still succeeds, but log over an all-negative interval
        // must fail as undecidable.
        let strictly_negative = SampleDomain::new(["x1"]).with_interval("x1", -2.0, -1.0);
        let e = log(Expr::var("x1"));
        assert!(matches!(
            equal_sampled(&e, &e, &strictly_negative),
            Err(SampleError::Undecidable { .. })
        ));
    }

    #[test]
    fn resampling_recovers_from_sporadic_domain_errors() {
        // 1/x1 fails only exactly at 0, which random draws never hit; the
        // division-heavy comparison should succeed.
        let e = div(Expr::ONE, Expr::var("x1"));
        let check = equal_sampled(&e, &e, &domain()).unwrap();
        assert!(check.equal);
    }

    #[test]
    fn verdicts_are_reproducible() {
        let a = mul(Expr::var("x1"), Expr::var("y1"));
        let b = add(a.clone(), Expr::constant(1e-7));
        let c1 = equal_sampled(&a, &b, &domain()).unwrap();
        let c2 = equal_sampled(&a, &b, &domain()).unwrap();
        assert_eq!(c1, c2);
    }
}
