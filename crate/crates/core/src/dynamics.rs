//! Lagrangian machinery over a Lie algebroid: Poincaré 1- and 2-form
//! coefficients, energy, Hessian regularity and the Euler-Lagrange field.
//!
//! Everything symbolic is computed once at construction; the dynamics is
//! then evaluated state by state with a numeric partial-pivot solve of the
//! momentum equation (symbolic matrix inversion is avoided on purpose:
//! it blows up already at rank 3).

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::algebroid::LieAlgebroid;
use crate::expr::{Env, EvalError, Expr};
use crate::linalg;

pub use crate::linalg::CONDITION_LIMIT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("lagrangian depends on `{0}`, which is not a coordinate of the algebroid")]
    UnknownVariable(String),
    #[error("state has {got} base / {got_fiber} fiber entries, expected {want} / {want_fiber}")]
    StateShape {
        got: usize,
        got_fiber: usize,
        want: usize,
        want_fiber: usize,
    },
    #[error("state contains non-finite entries")]
    NonFiniteState,
    #[error("singular Hessian (condition estimate {condition:.3e})")]
    SingularHessian { condition: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A point of the algebroid bundle: base coordinates plus fiber coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl State {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, DynamicsError> {
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteState);
        }
        Ok(State { x, y })
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        out.extend_from_slice(&self.y);
        out
    }

    pub fn from_flat(base_dim: usize, values: &[f64]) -> Self {
        State {
            x: values[..base_dim].to_vec(),
            y: values[base_dim..].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }
}

/// Coefficients of the Poincaré 2-form in the lifted dual basis.
///
/// `b[alpha][beta]` multiplies the horizontal/vertical mixed block and is
/// the fiber Hessian of the Lagrangian. `d[alpha][beta]` is the
/// antisymmetrized horizontal/horizontal coefficient
/// `1/2 (dL/dy^g) C^g_{ab} - 1/2 (rho^i_a L_{x^i y^b} - rho^i_b L_{x^i y^a})`;
/// the value of the form on a pair of horizontal basis sections is `2 d`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaCoefficients {
    pub b: Vec<Vec<Expr>>,
    pub d: Vec<Vec<Expr>>,
}

/// A Lagrangian on a Lie algebroid with all derived symbolic data cached.
#[derive(Debug, Clone)]
pub struct LagrangianSystem {
    algebroid: Arc<LieAlgebroid>,
    lagrangian: Expr,
    names: Vec<Arc<str>>,
    theta: Vec<Expr>,
    hessian: Vec<Vec<Expr>>,
    omega: OmegaCoefficients,
    energy: Expr,
    /// Right-hand side of the momentum equation `A ydot = rhs`.
    el_rhs: Vec<Expr>,
    /// Base velocity `xdot^i = rho^i_a y^a`.
    base_velocity: Vec<Expr>,
}

/// Pointwise regularity verdict: Hessian condition estimate against
/// [`CONDITION_LIMIT`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityCheck {
    pub condition: f64,
    pub regular: bool,
}

impl LagrangianSystem {
    pub fn new(algebroid: Arc<LieAlgebroid>, lagrangian: Expr) -> Result<Self, DynamicsError> {
        let names = algebroid.coord_names();
        for v in lagrangian.free_vars() {
            if !names.iter().any(|n| n == &v) {
                return Err(DynamicsError::UnknownVariable(v.to_string()));
            }
        }
        let m = algebroid.base_dim();
        let p = algebroid.rank();
        let x = algebroid.x_names().to_vec();
        let y = algebroid.y_names().to_vec();

        let theta: Vec<Expr> = (0..p).map(|a| lagrangian.diff(&y[a])).collect();
        let hessian: Vec<Vec<Expr>> = (0..p)
            .map(|a| (0..p).map(|b| theta[a].diff(&y[b])).collect())
            .collect();

        // mixed second derivatives d^2 L / dx^i dy^a
        let theta_dx: Vec<Vec<Expr>> = (0..p)
            .map(|a| (0..m).map(|i| theta[a].diff(&x[i])).collect())
            .collect();

        let half = Expr::constant(0.5);
        let d: Vec<Vec<Expr>> = (0..p)
            .map(|a| {
                (0..p)
                    .map(|b| {
                        let structure = Expr::sum((0..p).map(|g| {
                            theta[g].clone() * algebroid.structure_function(a, b, g).clone()
                        }));
                        let mixed = Expr::sum((0..m).map(|i| {
                            algebroid.anchor_component(a, i).clone() * theta_dx[b][i].clone()
                                - algebroid.anchor_component(b, i).clone() * theta_dx[a][i].clone()
                        }));
                        half.clone() * (structure - mixed)
                    })
                    .collect()
            })
            .collect();

        let energy = Expr::sum((0..p).map(|a| Expr::Var(y[a].clone()) * theta[a].clone()))
            - lagrangian.clone();

        let base_velocity: Vec<Expr> =
            (0..m)
                .map(|i| {
                    Expr::sum((0..p).map(|a| {
                        algebroid.anchor_component(a, i).clone() * Expr::Var(y[a].clone())
                    }))
                })
                .collect();

        // rhs_a = rho^i_a dL/dx^i - C^g_{ab} y^b theta_g - L_{x^i y^a} rho^i_b y^b
        let el_rhs: Vec<Expr> = (0..p)
            .map(|a| {
                let push =
                    Expr::sum((0..m).map(|i| {
                        algebroid.anchor_component(a, i).clone() * lagrangian.diff(&x[i])
                    }));
                let structure = Expr::sum(
                    (0..p)
                        .flat_map(|g| (0..p).map(move |b| (g, b)).collect::<Vec<_>>())
                        .map(|(g, b)| {
                            algebroid.structure_function(a, b, g).clone()
                                * Expr::Var(y[b].clone())
                                * theta[g].clone()
                        }),
                );
                let transport =
                    Expr::sum((0..m).map(|i| theta_dx[a][i].clone() * base_velocity[i].clone()));
                push - structure - transport
            })
            .collect();

        let omega = OmegaCoefficients {
            b: hessian.clone(),
            d,
        };
        Ok(LagrangianSystem {
            algebroid,
            lagrangian,
            names,
            theta,
            hessian,
            omega,
            energy,
            el_rhs,
            base_velocity,
        })
    }

    pub fn algebroid(&self) -> &Arc<LieAlgebroid> {
        &self.algebroid
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    /// Components of the Poincaré 1-form on the horizontal dual basis:
    /// `theta_a = dL/dy^a`. The vertical components vanish identically.
    pub fn poincare_one_form(&self) -> &[Expr] {
        &self.theta
    }

    pub fn hessian(&self) -> &[Vec<Expr>] {
        &self.hessian
    }

    pub fn omega(&self) -> &OmegaCoefficients {
        &self.omega
    }

    /// Energy `E_L = y^a dL/dy^a - L`.
    pub fn energy(&self) -> &Expr {
        &self.energy
    }

    /// Right-hand side of the momentum equation `A_{ab} ydot^b = rhs_a`.
    pub fn el_rhs(&self) -> &[Expr] {
        &self.el_rhs
    }

    /// Symbolic base velocity `xdot^i = rho^i_a y^a`.
    pub fn base_velocity(&self) -> &[Expr] {
        &self.base_velocity
    }

    fn check_state(&self, state: &State) -> Result<(), DynamicsError> {
        let (m, p) = (self.algebroid.base_dim(), self.algebroid.rank());
        if state.x.len() != m || state.y.len() != p {
            return Err(DynamicsError::StateShape {
                got: state.x.len(),
                got_fiber: state.y.len(),
                want: m,
                want_fiber: p,
            });
        }
        if !state.is_finite() {
            return Err(DynamicsError::NonFiniteState);
        }
        Ok(())
    }

    fn eval_expr(&self, e: &Expr, values: &[f64]) -> Result<f64, DynamicsError> {
        Ok(e.eval(&Env::new(&self.names, values))?)
    }

    /// Evaluates the fiber Hessian at a state.
    pub fn hessian_at(&self, state: &State) -> Result<DMatrix<f64>, DynamicsError> {
        self.check_state(state)?;
        let values = state.flat();
        let p = self.algebroid.rank();
        let mut out = DMatrix::zeros(p, p);
        for a in 0..p {
            for b in 0..p {
                out[(a, b)] = self.eval_expr(&self.hessian[a][b], &values)?;
            }
        }
        Ok(out)
    }

    /// Pointwise regularity: condition estimate of the fiber Hessian.
    pub fn regularity(&self, state: &State) -> Result<RegularityCheck, DynamicsError> {
        let a = self.hessian_at(state)?;
        let condition = linalg::condition_estimate(&a);
        Ok(RegularityCheck {
            condition,
            regular: condition.is_finite() && condition < CONDITION_LIMIT,
        })
    }

    /// Euler-Lagrange field at a state: `xdot^i = rho^i_a y^a` and the
    /// solution of `A_{ab} ydot^b = rhs_a`, all evaluated numerically.
    pub fn el_field(&self, state: &State) -> Result<(Vec<f64>, Vec<f64>), DynamicsError> {
        self.check_state(state)?;
        let values = state.flat();
        let xdot = self
            .base_velocity
            .iter()
            .map(|e| self.eval_expr(e, &values))
            .collect::<Result<Vec<_>, _>>()?;
        let rhs = self
            .el_rhs
            .iter()
            .map(|e| self.eval_expr(e, &values))
            .collect::<Result<Vec<_>, _>>()?;
        let a = self.hessian_at(state)?;
        let solved = linalg::solve(&a, &rhs)
            .map_err(|condition| DynamicsError::SingularHessian { condition })?;
        Ok((xdot, solved))
    }
}

/// Evaluates a matrix of expressions at a state given the coordinate names.
pub fn eval_expr_matrix(
    exprs: &[Vec<Expr>],
    names: &[Arc<str>],
    values: &[f64],
) -> Result<DMatrix<f64>, EvalError> {
    let r = exprs.len();
    let c = exprs.first().map_or(0, Vec::len);
    let mut out = DMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            out[(i, j)] = exprs[i][j].eval(&Env::new(names, values))?;
        }
    }
    Ok(out)
}
