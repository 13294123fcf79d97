//! Equivalence of Lagrangians and the conserved quantities attached to it.
//!
//! Three nested notions are implemented: gauge equivalence (the Lagrangians
//! differ by a closed fiber-linear term plus a closed basic function),
//! geometric equivalence (equal Poincaré 2-forms) and dynamical equivalence
//! (equal Euler-Lagrange fields). Gauge pairs certify both weaker notions;
//! null Lagrangians decompose back into their gauge data.
//!
//! Symmetry sections with `X^c L = (d h)^` yield Nöther first integrals;
//! dynamically equivalent pairs yield non-Nöther ones through the
//! characteristic polynomial of the Hessian quotient, computed by traces
//! and Newton's identities.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::algebroid::{AlgebroidError, OneFormOnM, Section};
use crate::dynamics::{DynamicsError, LagrangianSystem, State};
use crate::expr::{is_zero_sampled, Expr, SampleDomain, SampleError};
use crate::integrate::{flow_on_e, IntegrateError, Monitor};
use crate::linalg;

/// Agreement threshold for Euler-Lagrange fields at sampled states.
pub const DYNAMICAL_TOLERANCE: f64 = 1e-8;
/// Tolerance of the finite-difference checks in [`gauge_family`].
pub const FAMILY_TOLERANCE: f64 = 1e-4;
/// Step of the fiber-direction central differences in [`gauge_family`].
pub const FAMILY_FIBER_STEP: f64 = 1e-5;
/// Step of the nested base-direction differences in [`gauge_family`];
/// wider than the fiber step to keep the noise amplification of second
/// differences below the check tolerance.
pub const FAMILY_BASE_STEP: f64 = 1e-3;
/// Agreement threshold between the Newton-identity coefficients and the
/// direct determinant expansion.
pub const CHARPOLY_CROSS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConservedError {
    #[error("the two systems live on different algebroids")]
    AlgebroidMismatch,
    #[error("not a null Lagrangian: omega residual {residual:.3e}")]
    NotNullLagrangian { residual: f64 },
    #[error("decomposition failed: fiber-dependence residual {residual:.3e}")]
    DecompositionFailed { residual: f64 },
    #[error("supplied K is not closed: residual {residual:.3e}")]
    InvalidK { residual: f64 },
    #[error("hypothesis violated: X^c L is not a closed gauge term (residual {residual:.3e})")]
    HypothesisViolated { residual: f64 },
    #[error("could not draw a regular sample state after {attempts} attempts")]
    NoRegularStates { attempts: usize },
    #[error("matrix is singular (condition estimate {condition:.3e})")]
    Singular { condition: f64 },
    #[error("characteristic polynomial cross-check failed at degree {degree}: {newton:.17e} vs {direct:.17e}")]
    CrossCheckFailed {
        degree: usize,
        newton: f64,
        direct: f64,
    },
    #[error("matrices must be square and of equal size")]
    BadMatrixShape,
    #[error("lagrangians are not dynamically equivalent (residual {residual:.3e})")]
    NotDynamicallyEquivalent { residual: f64 },
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Eval(#[from] crate::expr::EvalError),
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// Boolean verdict with the residual that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub residual: f64,
}

/// Gauge data `(alpha, V)` relating two Lagrangians by `L' = L + alpha^ + V`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeData {
    pub alpha: OneFormOnM,
    pub v: Expr,
}

/// Residuals of the three conditions a certified gauge pair must satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeCheck {
    pub lagrangian_residual: f64,
    pub alpha_closed_residual: f64,
    pub v_closed_residual: f64,
    pub pass: bool,
}

fn require_same_algebroid(
    a: &LagrangianSystem,
    b: &LagrangianSystem,
) -> Result<(), ConservedError> {
    if a.algebroid().as_ref() != b.algebroid().as_ref() {
        return Err(ConservedError::AlgebroidMismatch);
    }
    Ok(())
}

/// Geometric equivalence: all Poincaré 2-form coefficients agree (sampled).
pub fn geometric_equiv(
    a: &LagrangianSystem,
    b: &LagrangianSystem,
    domain: &SampleDomain,
) -> Result<Verdict, ConservedError> {
    require_same_algebroid(a, b)?;
    let p = a.algebroid().rank();
    let mut pass = true;
    let mut residual: f64 = 0.0;
    for i in 0..p {
        for j in 0..p {
            for (lhs, rhs) in [
                (&a.omega().b[i][j], &b.omega().b[i][j]),
                (&a.omega().d[i][j], &b.omega().d[i][j]),
            ] {
                let check = crate::expr::equal_sampled(lhs, rhs, domain)?;
                pass &= check.equal;
                residual = residual.max(check.max_residual);
            }
        }
    }
    Ok(Verdict { pass, residual })
}

/// Draws a state from the sample domain, in base-then-fiber order.
fn draw_state(domain: &SampleDomain, rng: &mut impl rand::Rng, base_dim: usize) -> State {
    let values = domain.draw(rng);
    State::from_flat(base_dim, &values)
}

/// Dynamical equivalence: Euler-Lagrange fields agree at sampled regular
/// states within [`DYNAMICAL_TOLERANCE`]. Singular draws are retried up to
/// three times each.
pub fn dynamical_equiv(
    a: &LagrangianSystem,
    b: &LagrangianSystem,
    domain: &SampleDomain,
) -> Result<Verdict, ConservedError> {
    require_same_algebroid(a, b)?;
    let m = a.algebroid().base_dim();
    let mut rng = domain.rng();
    let mut pass = true;
    let mut residual: f64 = 0.0;
    for _ in 0..domain.samples() {
        let mut attempts = 0;
        let (fa, fb) = loop {
            let state = draw_state(domain, &mut rng, m);
            match (a.el_field(&state), b.el_field(&state)) {
                (Ok(fa), Ok(fb)) => break (fa, fb),
                _ => {
                    attempts += 1;
                    if attempts > 3 {
                        return Err(ConservedError::NoRegularStates { attempts });
                    }
                }
            }
        };
        for (u, v) in fa.0.iter().zip(&fb.0).chain(fa.1.iter().zip(&fb.1)) {
            let r = (u - v).abs();
            residual = residual.max(r);
            pass &= r <= DYNAMICAL_TOLERANCE;
        }
    }
    Ok(Verdict { pass, residual })
}

/// Certifies gauge data for a pair: `L' - L - alpha^ - V = 0`, `d alpha = 0`
/// and `d V = 0`, all sampled.
pub fn is_gauge_pair(
    a: &LagrangianSystem,
    b: &LagrangianSystem,
    gauge: &GaugeData,
    domain: &SampleDomain,
) -> Result<GaugeCheck, ConservedError> {
    require_same_algebroid(a, b)?;
    let algebroid = a.algebroid();

    let difference = b.lagrangian().clone()
        - a.lagrangian().clone()
        - algebroid.hat(&gauge.alpha)
        - gauge.v.clone();
    let lagrangian = is_zero_sampled(&difference, domain)?;

    let d_alpha = algebroid.d_on_oneform(&gauge.alpha);
    let mut alpha_pass = true;
    let mut alpha_residual: f64 = 0.0;
    for row in &d_alpha {
        for e in row {
            let check = is_zero_sampled(e, domain)?;
            alpha_pass &= check.equal;
            alpha_residual = alpha_residual.max(check.max_residual);
        }
    }

    let dv = algebroid.d_on_function(&gauge.v)?;
    let mut v_pass = true;
    let mut v_residual: f64 = 0.0;
    for e in dv.components() {
        let check = is_zero_sampled(e, domain)?;
        v_pass &= check.equal;
        v_residual = v_residual.max(check.max_residual);
    }

    Ok(GaugeCheck {
        lagrangian_residual: lagrangian.max_residual,
        alpha_closed_residual: alpha_residual,
        v_closed_residual: v_residual,
        pass: lagrangian.equal && alpha_pass && v_pass,
    })
}

/// Substitutes all fiber coordinates by zero, leaving a base-only expression.
fn restrict_to_base(sys: &LagrangianSystem, e: &Expr) -> Expr {
    let mut out = e.clone();
    for y in sys.algebroid().y_names() {
        out = out.subst(y, &Expr::ZERO);
    }
    out
}

/// Splits a null Lagrangian into `(alpha, V)` with `L0 = alpha^ + V` and
/// `alpha` closed. Fails when the 2-form does not vanish or when the
/// recovered pieces still depend on fiber coordinates.
pub fn trivial_decompose(
    sys: &LagrangianSystem,
    domain: &SampleDomain,
) -> Result<GaugeData, ConservedError> {
    let p = sys.algebroid().rank();

    let mut omega_residual: f64 = 0.0;
    let mut omega_zero = true;
    for i in 0..p {
        for j in 0..p {
            for e in [&sys.omega().b[i][j], &sys.omega().d[i][j]] {
                let check = is_zero_sampled(e, domain)?;
                omega_zero &= check.equal;
                omega_residual = omega_residual.max(check.max_residual);
            }
        }
    }
    if !omega_zero {
        return Err(ConservedError::NotNullLagrangian {
            residual: omega_residual,
        });
    }

    // alpha_a = dL0/dy^a restricted to the base; the restriction is faithful
    // only if the momenta are fiber-independent, which is re-verified here.
    let mut fiber_residual: f64 = 0.0;
    let mut faithful = true;
    let mut alpha_components = Vec::with_capacity(p);
    for theta in sys.poincare_one_form() {
        let restricted = restrict_to_base(sys, theta);
        let check = crate::expr::equal_sampled(theta, &restricted, domain)?;
        faithful &= check.equal;
        fiber_residual = fiber_residual.max(check.max_residual);
        alpha_components.push(restricted);
    }

    let v_full = sys.lagrangian().clone()
        - Expr::sum(
            sys.algebroid()
                .y_names()
                .iter()
                .zip(sys.poincare_one_form())
                .map(|(y, theta)| Expr::Var(y.clone()) * theta.clone()),
        );
    let v = restrict_to_base(sys, &v_full);
    let v_check = crate::expr::equal_sampled(&v_full, &v, domain)?;
    faithful &= v_check.equal;
    fiber_residual = fiber_residual.max(v_check.max_residual);

    if !faithful {
        return Err(ConservedError::DecompositionFailed {
            residual: fiber_residual,
        });
    }

    let alpha = OneFormOnM::new(sys.algebroid(), alpha_components)?;
    for row in &sys.algebroid().d_on_oneform(&alpha) {
        for e in row {
            let check = is_zero_sampled(e, domain)?;
            if !check.equal {
                return Err(ConservedError::DecompositionFailed {
                    residual: check.max_residual,
                });
            }
        }
    }

    Ok(GaugeData { alpha, v })
}

/// A successful symmetry test: the section, the gauge function, the sampled
/// residual, and the conserved quantity `f = X^a dL/dy^a - h (+ K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoetherCertificate {
    pub section: Section,
    pub h: Expr,
    pub residual: f64,
    pub conserved: Expr,
}

/// Outcome of [`noether_test`]; failure is a result, not an error.
#[derive(Debug, Clone, PartialEq)]
pub enum NoetherOutcome {
    Conserved(NoetherCertificate),
    NotSymmetric { residual: f64 },
}

/// Tests `X^c L = (d h)^` by sampling. On success the certificate carries
/// the first integral `X^a dL/dy^a - h`, plus any user-supplied closed `K`.
pub fn noether_test(
    sys: &LagrangianSystem,
    section: &Section,
    h: &Expr,
    k: Option<&Expr>,
    domain: &SampleDomain,
) -> Result<NoetherOutcome, ConservedError> {
    let algebroid = sys.algebroid();

    if let Some(k) = k {
        // K must be closed on the prolongation: its derivatives along both
        // families of lifted basis sections vanish.
        let mut residual: f64 = 0.0;
        let mut closed = true;
        for a in 0..algebroid.rank() {
            let base = Expr::sum((0..algebroid.base_dim()).map(|i| {
                algebroid.anchor_component(a, i).clone() * k.diff(&algebroid.x_names()[i])
            }));
            let fiber = k.diff(&algebroid.y_names()[a]);
            for e in [base, fiber] {
                let check = is_zero_sampled(&e, domain)?;
                closed &= check.equal;
                residual = residual.max(check.max_residual);
            }
        }
        if !closed {
            return Err(ConservedError::InvalidK { residual });
        }
    }

    let lift = algebroid.complete_lift(section);
    let dh = algebroid.d_on_function(h)?;
    let defect = algebroid.anchored_apply(&lift, sys.lagrangian()) - algebroid.hat(&dh);
    let check = is_zero_sampled(&defect, domain)?;
    if !check.equal {
        return Ok(NoetherOutcome::NotSymmetric {
            residual: check.max_residual,
        });
    }

    let mut conserved = Expr::sum(
        section
            .components()
            .iter()
            .zip(sys.poincare_one_form())
            .map(|(xc, theta)| xc.clone() * theta.clone()),
    ) - h.clone();
    if let Some(k) = k {
        conserved = conserved + k.clone();
    }

    Ok(NoetherOutcome::Conserved(NoetherCertificate {
        section: section.clone(),
        h: h.clone(),
        residual: check.max_residual,
        conserved,
    }))
}

/// Finite-difference verdict for one member of a gauge family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyCheck {
    pub t: f64,
    /// Largest spread of the fiber gradient of `L_t - L` across fiber draws.
    pub fiber_independence: f64,
    /// Largest component of the exterior derivative of the recovered 1-form.
    pub form_closedness: f64,
    /// Largest anchor derivative of the recovered basic remainder.
    pub remainder_closedness: f64,
    pub pass: bool,
}

/// Report of [`gauge_family`]: the symbolic hypothesis data and the per-`t`
/// numeric checks.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub beta: OneFormOnM,
    pub w: Expr,
    pub checks: Vec<FamilyCheck>,
}

impl FamilyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Number of base points sampled per family member.
const FAMILY_BASE_SAMPLES: usize = 6;
/// Number of fiber draws per base point in the independence check.
const FAMILY_FIBER_DRAWS: usize = 3;

/// Checks that flowing `L` along the complete lift of `section` produces
/// gauge-equivalent Lagrangians.
///
/// The hypothesis - `X^c L` splits into a closed fiber-linear term plus a
/// closed basic function - is verified symbolically first. Each `L_t` is
/// then only reachable by composing `L` with the numeric flow, so its gauge
/// decomposition is verified with central differences at sampled points,
/// against [`FAMILY_TOLERANCE`].
#[allow(clippy::needless_range_loop)] // index loops mirror the tensor formulas
pub fn gauge_family(
    sys: &LagrangianSystem,
    section: &Section,
    ts: &[f64],
    h_flow: f64,
    domain: &SampleDomain,
) -> Result<FamilyReport, ConservedError> {
    let algebroid = sys.algebroid();
    let (m, p) = (algebroid.base_dim(), algebroid.rank());
    let y_names = algebroid.y_names().to_vec();

    // hypothesis: g = X^c L must be beta_a(x) y^a + W(x) with both closed
    let lift = algebroid.complete_lift(section);
    let g = algebroid.anchored_apply(&lift, sys.lagrangian());

    let mut hypothesis_residual: f64 = 0.0;
    let mut hypothesis_ok = true;
    let b_components: Vec<Expr> = y_names.iter().map(|y| g.diff(y)).collect();
    for b in &b_components {
        for y in &y_names {
            let check = is_zero_sampled(&b.diff(y), domain)?;
            hypothesis_ok &= check.equal;
            hypothesis_residual = hypothesis_residual.max(check.max_residual);
        }
    }
    let w_full = g.clone()
        - Expr::sum(
            y_names
                .iter()
                .zip(&b_components)
                .map(|(y, b)| Expr::Var(y.clone()) * b.clone()),
        );
    for y in &y_names {
        let check = is_zero_sampled(&w_full.diff(y), domain)?;
        hypothesis_ok &= check.equal;
        hypothesis_residual = hypothesis_residual.max(check.max_residual);
    }
    if !hypothesis_ok {
        return Err(ConservedError::HypothesisViolated {
            residual: hypothesis_residual,
        });
    }

    let beta = OneFormOnM::new(
        algebroid,
        b_components
            .iter()
            .map(|b| restrict_to_base(sys, b))
            .collect(),
    )?;
    let w = restrict_to_base(sys, &w_full);
    for row in &algebroid.d_on_oneform(&beta) {
        for e in row {
            let check = is_zero_sampled(e, domain)?;
            if !check.equal {
                return Err(ConservedError::HypothesisViolated {
                    residual: check.max_residual,
                });
            }
        }
    }
    for e in algebroid.d_on_function(&w)?.components() {
        let check = is_zero_sampled(e, domain)?;
        if !check.equal {
            return Err(ConservedError::HypothesisViolated {
                residual: check.max_residual,
            });
        }
    }

    // numeric per-t verification of the conclusion
    let coord_names = algebroid.coord_names();
    let eval_l = |state: &State| -> Result<f64, ConservedError> {
        let values = state.flat();
        Ok(sys
            .lagrangian()
            .eval(&crate::expr::Env::new(&coord_names, &values))?)
    };
    let eval_expr_at = |e: &Expr, xs: &[f64]| -> Result<f64, ConservedError> {
        let values = [xs, vec![0.0; p].as_slice()].concat();
        Ok(e.eval(&crate::expr::Env::new(&coord_names, &values))?)
    };

    let mut rng = domain.rng();
    let mut checks = Vec::with_capacity(ts.len());
    for &t in ts {
        // L_t(z) = L(flow_t(z)); the flow is the only way to reach L_t
        let g_t = |state: &State| -> Result<f64, ConservedError> {
            let moved = flow_on_e(algebroid, &lift, state, t, h_flow)?;
            Ok(eval_l(&moved)? - eval_l(state)?)
        };
        // fiber gradient of L_t - L by central differences
        let grad_y = |state: &State| -> Result<Vec<f64>, ConservedError> {
            (0..p)
                .map(|a| {
                    let mut up = state.clone();
                    up.y[a] += FAMILY_FIBER_STEP;
                    let mut down = state.clone();
                    down.y[a] -= FAMILY_FIBER_STEP;
                    Ok((g_t(&up)? - g_t(&down)?) / (2.0 * FAMILY_FIBER_STEP))
                })
                .collect()
        };

        let mut fiber_independence: f64 = 0.0;
        let mut form_closedness: f64 = 0.0;
        let mut remainder_closedness: f64 = 0.0;

        for _ in 0..FAMILY_BASE_SAMPLES {
            let probe = draw_state(domain, &mut rng, m);
            let x0 = probe.x.clone();

            // the fiber gradient must not depend on the fiber point
            let mut gradients = Vec::with_capacity(FAMILY_FIBER_DRAWS);
            for _ in 0..FAMILY_FIBER_DRAWS {
                let draw = draw_state(domain, &mut rng, m);
                let state = State::from_flat(m, &[x0.as_slice(), &draw.y].concat());
                gradients.push(grad_y(&state)?);
            }
            for i in 0..gradients.len() {
                for j in i + 1..gradients.len() {
                    for a in 0..p {
                        fiber_independence =
                            fiber_independence.max((gradients[i][a] - gradients[j][a]).abs());
                    }
                }
            }

            // recovered 1-form at the fiber origin
            let beta_bar = |xs: &[f64]| -> Result<Vec<f64>, ConservedError> {
                grad_y(&State::from_flat(
                    m,
                    &[xs, vec![0.0; p].as_slice()].concat(),
                ))
            };
            let beta_at = beta_bar(&x0)?;
            // exterior derivative of beta_bar with nested central differences
            let mut beta_dx = vec![vec![0.0; m]; p];
            for i in 0..m {
                let mut up = x0.clone();
                up[i] += FAMILY_BASE_STEP;
                let mut down = x0.clone();
                down[i] -= FAMILY_BASE_STEP;
                let bu = beta_bar(&up)?;
                let bd = beta_bar(&down)?;
                for a in 0..p {
                    beta_dx[a][i] = (bu[a] - bd[a]) / (2.0 * FAMILY_BASE_STEP);
                }
            }
            for a in 0..p {
                for b in (a + 1)..p {
                    let mut value = 0.0;
                    for i in 0..m {
                        let ra = eval_expr_at(algebroid.anchor_component(a, i), &x0)?;
                        let rb = eval_expr_at(algebroid.anchor_component(b, i), &x0)?;
                        value += ra * beta_dx[b][i] - rb * beta_dx[a][i];
                    }
                    for (g, beta_g) in beta_at.iter().enumerate() {
                        value -= eval_expr_at(algebroid.structure_function(a, b, g), &x0)? * beta_g;
                    }
                    form_closedness = form_closedness.max(value.abs());
                }
            }

            // basic remainder W_bar(x) = (L_t - L)(x, 0); its derivative
            // along the anchor must vanish
            let w_bar = |xs: &[f64]| -> Result<f64, ConservedError> {
                g_t(&State::from_flat(
                    m,
                    &[xs, vec![0.0; p].as_slice()].concat(),
                ))
            };
            for a in 0..p {
                let mut value = 0.0;
                for i in 0..m {
                    let mut up = x0.clone();
                    up[i] += FAMILY_BASE_STEP;
                    let mut down = x0.clone();
                    down[i] -= FAMILY_BASE_STEP;
                    let dw = (w_bar(&up)? - w_bar(&down)?) / (2.0 * FAMILY_BASE_STEP);
                    value += eval_expr_at(algebroid.anchor_component(a, i), &x0)? * dw;
                }
                remainder_closedness = remainder_closedness.max(value.abs());
            }
        }

        checks.push(FamilyCheck {
            t,
            fiber_independence,
            form_closedness,
            remainder_closedness,
            pass: fiber_independence <= FAMILY_TOLERANCE
                && form_closedness <= FAMILY_TOLERANCE
                && remainder_closedness <= FAMILY_TOLERANCE,
        });
    }

    Ok(FamilyReport { beta, w, checks })
}

/// Characteristic polynomial data of `A' A^{-1}` at a state: coefficients
/// of `det(A' A^{-1} - lambda I)` ordered from the leading power of lambda
/// down to the constant term, and the traces of the increasing powers.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPolyResult {
    pub coefficients: Vec<f64>,
    pub traces: Vec<f64>,
}

/// Coefficients of `det(m - lambda I)` by direct expansion, for sizes up
/// to 3. Used as a runtime cross-check of the Newton-identity route.
fn direct_charpoly(m: &DMatrix<f64>) -> Option<Vec<f64>> {
    match m.nrows() {
        1 => Some(vec![-1.0, m[(0, 0)]]),
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            Some(vec![1.0, -tr, det])
        }
        3 => {
            let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
            let minors = m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)] + m[(0, 0)] * m[(2, 2)]
                - m[(0, 2)] * m[(2, 0)]
                + m[(0, 0)] * m[(1, 1)]
                - m[(0, 1)] * m[(1, 0)];
            let det = m.determinant();
            Some(vec![-1.0, tr, -minors, det])
        }
        _ => None,
    }
}

/// Characteristic polynomial of `A' A^{-1}` via traces of increasing powers
/// and Newton's identities. For sizes up to 3 the coefficients are
/// cross-checked against the direct determinant expansion.
pub fn char_poly(
    a: &DMatrix<f64>,
    a_prime: &DMatrix<f64>,
) -> Result<CharPolyResult, ConservedError> {
    let p = a.nrows();
    if a.ncols() != p || a_prime.nrows() != p || a_prime.ncols() != p || p == 0 {
        return Err(ConservedError::BadMatrixShape);
    }
    let m = linalg::right_divide(a_prime, a)
        .map_err(|condition| ConservedError::Singular { condition })?;

    let mut traces = Vec::with_capacity(p);
    let mut power = m.clone();
    for _ in 0..p {
        traces.push(power.trace());
        power = &power * &m;
    }

    // monic coefficients of det(lambda I - M) from Newton's identities
    let mut monic = vec![1.0];
    for k in 1..=p {
        let mut acc = traces[k - 1];
        for j in 1..k {
            acc += monic[j] * traces[k - j - 1];
        }
        monic.push(-acc / k as f64);
    }
    // det(M - lambda I) = (-1)^p det(lambda I - M)
    let sign = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    let coefficients: Vec<f64> = monic.iter().map(|c| sign * c).collect();

    if let Some(direct) = direct_charpoly(&m) {
        for (degree, (n, d)) in coefficients.iter().zip(&direct).enumerate() {
            if (n - d).abs() > CHARPOLY_CROSS_TOLERANCE * d.abs().max(1.0) {
                return Err(ConservedError::CrossCheckFailed {
                    degree,
                    newton: *n,
                    direct: *d,
                });
            }
        }
    }

    Ok(CharPolyResult {
        coefficients,
        traces,
    })
}

/// Characteristic-polynomial data of an arbitrary 2-form against the
/// Poincaré form of `sys`, evaluated at a state. Only the mixed block of
/// the 2-form survives in the top wedge power, so the computation reduces
/// to the Hessian pencil.
pub fn char_poly_of_forms(
    sys: &LagrangianSystem,
    omega_prime: &crate::dynamics::OmegaCoefficients,
    state: &State,
) -> Result<CharPolyResult, ConservedError> {
    let names = sys.algebroid().coord_names();
    let values = state.flat();
    let a = sys.hessian_at(state)?;
    let a_prime = crate::dynamics::eval_expr_matrix(&omega_prime.b, &names, &values)
        .map_err(DynamicsError::Eval)?;
    char_poly(&a, &a_prime)
}

/// Builds drift monitors `c_0..c_p` and `t_1..t_p` from the characteristic
/// polynomial of the Hessian quotient of a dynamically equivalent pair.
///
/// The equivalence precondition is enforced unless `force` is set.
pub fn nonnoether_monitors(
    a: &LagrangianSystem,
    b: &LagrangianSystem,
    domain: &SampleDomain,
    force: bool,
) -> Result<Vec<Monitor>, ConservedError> {
    require_same_algebroid(a, b)?;
    if !force {
        let verdict = dynamical_equiv(a, b, domain)?;
        if !verdict.pass {
            return Err(ConservedError::NotDynamicallyEquivalent {
                residual: verdict.residual,
            });
        }
    }
    let p = a.algebroid().rank();
    let mut monitors = Vec::with_capacity(2 * p + 1);
    for k in 0..=p {
        let lhs = a.clone();
        let rhs = b.clone();
        monitors.push(Monitor::from_fn(format!("c{k}"), move |state: &State| {
            let ha = lhs.hessian_at(state).map_err(|e| e.to_string())?;
            let hb = rhs.hessian_at(state).map_err(|e| e.to_string())?;
            let result = char_poly(&ha, &hb).map_err(|e| e.to_string())?;
            Ok(result.coefficients[k])
        }));
    }
    for k in 1..=p {
        let lhs = a.clone();
        let rhs = b.clone();
        monitors.push(Monitor::from_fn(format!("t{k}"), move |state: &State| {
            let ha = lhs.hessian_at(state).map_err(|e| e.to_string())?;
            let hb = rhs.hessian_at(state).map_err(|e| e.to_string())?;
            let result = char_poly(&ha, &hb).map_err(|e| e.to_string())?;
            Ok(result.traces[k - 1])
        }));
    }
    Ok(monitors)
}
