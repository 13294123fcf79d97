//! Lie algebroid data model and calculus in a single trivializing chart.
//!
//! A rank-`p` algebroid over an `m`-dimensional base is stored through its
//! structure functions `C^gamma_{alpha beta}(x)` and anchor components
//! `rho^i_alpha(x)`. Sections of the prolongation bundle are kept as
//! component pairs with respect to the standard lifted basis, so complete
//! and vertical lifts, the Euler section and the Euler-Lagrange dynamics
//! all live in one fixed chart.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{self, equal_sampled, is_zero_sampled, Expr, SampleDomain, SampleError, Scope};

/// Residual threshold below which a validation identity counts as satisfied.
pub const VALIDATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebroidError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("component {index} of `{what}` depends on fiber coordinates")]
    NotBaseOnly { what: String, index: usize },
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// A Lie algebroid in local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebroid {
    x_names: Vec<Arc<str>>,
    y_names: Vec<Arc<str>>,
    /// `c[alpha][beta][gamma]` is `C^gamma_{alpha beta}(x)`.
    c: Vec<Vec<Vec<Expr>>>,
    /// `rho[alpha][i]` is `rho^i_alpha(x)`.
    rho: Vec<Vec<Expr>>,
}

impl LieAlgebroid {
    pub fn new(
        x_names: Vec<Arc<str>>,
        y_names: Vec<Arc<str>>,
        c: Vec<Vec<Vec<Expr>>>,
        rho: Vec<Vec<Expr>>,
    ) -> Result<Self, AlgebroidError> {
        let (m, p) = (x_names.len(), y_names.len());
        if c.len() != p
            || c.iter()
                .any(|b| b.len() != p || b.iter().any(|g| g.len() != p))
        {
            return Err(AlgebroidError::Shape(format!(
                "structure functions must be {p}x{p}x{p}"
            )));
        }
        if rho.len() != p || rho.iter().any(|row| row.len() != m) {
            return Err(AlgebroidError::Shape(format!("anchor must be {p}x{m}")));
        }
        let out = LieAlgebroid {
            x_names,
            y_names,
            c,
            rho,
        };
        for (alpha, block) in out.c.iter().enumerate() {
            for (beta, row) in block.iter().enumerate() {
                for (gamma, e) in row.iter().enumerate() {
                    out.require_base_only(e, &format!("C[{alpha}][{beta}][{gamma}]"), gamma)?;
                }
            }
        }
        for (alpha, row) in out.rho.iter().enumerate() {
            for (i, e) in row.iter().enumerate() {
                out.require_base_only(e, &format!("rho[{alpha}][{i}]"), i)?;
            }
        }
        Ok(out)
    }

    fn require_base_only(&self, e: &Expr, what: &str, index: usize) -> Result<(), AlgebroidError> {
        if self.y_names.iter().any(|y| e.depends_on(y)) {
            return Err(AlgebroidError::NotBaseOnly {
                what: what.to_string(),
                index,
            });
        }
        Ok(())
    }

    pub fn base_dim(&self) -> usize {
        self.x_names.len()
    }

    pub fn rank(&self) -> usize {
        self.y_names.len()
    }

    pub fn x_names(&self) -> &[Arc<str>] {
        &self.x_names
    }

    pub fn y_names(&self) -> &[Arc<str>] {
        &self.y_names
    }

    /// Base then fiber coordinate names, the order used for flat state vectors.
    pub fn coord_names(&self) -> Vec<Arc<str>> {
        let mut names = self.x_names.clone();
        names.extend(self.y_names.iter().cloned());
        names
    }

    pub fn structure_function(&self, alpha: usize, beta: usize, gamma: usize) -> &Expr {
        &self.c[alpha][beta][gamma]
    }

    pub fn anchor_component(&self, alpha: usize, i: usize) -> &Expr {
        &self.rho[alpha][i]
    }

    /// Parser scope declaring all coordinates of this algebroid.
    pub fn scope(&self) -> Scope {
        Scope::new(self.coord_names())
    }

    /// Default sampling domain over all coordinates.
    pub fn sample_domain(&self) -> SampleDomain {
        SampleDomain::new(self.coord_names())
    }

    /// Checks antisymmetry of the structure functions, the anchor-bracket
    /// compatibility and the Jacobi identity by sampling.
    pub fn validate(&self, domain: &SampleDomain) -> Result<ValidationReport, AlgebroidError> {
        self.validate_with_tolerance(domain, VALIDATION_TOLERANCE)
    }

    pub fn validate_with_tolerance(
        &self,
        domain: &SampleDomain,
        tolerance: f64,
    ) -> Result<ValidationReport, AlgebroidError> {
        let p = self.rank();
        let m = self.base_dim();

        let mut antisymmetry: f64 = 0.0;
        for alpha in 0..p {
            for beta in 0..p {
                for gamma in 0..p {
                    let e = self.c[alpha][beta][gamma].clone() + self.c[beta][alpha][gamma].clone();
                    antisymmetry = antisymmetry.max(is_zero_sampled(&e, domain)?.max_residual);
                }
            }
        }

        // rho^j_a d_j rho^i_b - rho^j_b d_j rho^i_a - rho^i_g C^g_{ab} = 0
        let mut anchor: f64 = 0.0;
        for i in 0..m {
            for alpha in 0..p {
                for beta in 0..p {
                    let lead = Expr::sum((0..m).map(|j| {
                        self.rho[alpha][j].clone() * self.rho[beta][i].diff(&self.x_names[j])
                            - self.rho[beta][j].clone() * self.rho[alpha][i].diff(&self.x_names[j])
                    }));
                    let tail = Expr::sum((0..p).map(|gamma| {
                        self.rho[gamma][i].clone() * self.c[alpha][beta][gamma].clone()
                    }));
                    let e = lead - tail;
                    anchor = anchor.max(is_zero_sampled(&e, domain)?.max_residual);
                }
            }
        }

        // cyclic sum of rho^i_a d_i C^n_{bg} + C^m_{bg} C^n_{am} over (a,b,g)
        let mut jacobi: f64 = 0.0;
        for nu in 0..p {
            for a in 0..p {
                for b in 0..p {
                    for g in 0..p {
                        let e = Expr::sum([(a, b, g), (b, g, a), (g, a, b)].into_iter().map(
                            |(alpha, beta, gamma)| {
                                let drift = Expr::sum((0..m).map(|i| {
                                    self.rho[alpha][i].clone()
                                        * self.c[beta][gamma][nu].diff(&self.x_names[i])
                                }));
                                let quad = Expr::sum((0..p).map(|mu| {
                                    self.c[beta][gamma][mu].clone() * self.c[alpha][mu][nu].clone()
                                }));
                                drift + quad
                            },
                        ));
                        jacobi = jacobi.max(is_zero_sampled(&e, domain)?.max_residual);
                    }
                }
            }
        }

        Ok(ValidationReport {
            antisymmetry: IdentityCheck::new(antisymmetry, tolerance),
            anchor: IdentityCheck::new(anchor, tolerance),
            jacobi: IdentityCheck::new(jacobi, tolerance),
            tolerance,
        })
    }

    /// `rho^E(X)` applied to a function of the base coordinates.
    pub fn anchor_apply(&self, section: &Section, f: &Expr) -> Expr {
        Expr::sum((0..self.base_dim()).map(|i| {
            Expr::sum(
                (0..self.rank())
                    .map(|alpha| self.rho[alpha][i].clone() * section.components[alpha].clone()),
            ) * f.diff(&self.x_names[i])
        }))
    }

    /// Exterior derivative of a base function: `(d f)_alpha = rho^i_alpha d_i f`.
    pub fn d_on_function(&self, f: &Expr) -> Result<OneFormOnM, AlgebroidError> {
        self.require_base_only(f, "function", 0)?;
        let components = (0..self.rank())
            .map(|alpha| {
                Expr::sum(
                    (0..self.base_dim())
                        .map(|i| self.rho[alpha][i].clone() * f.diff(&self.x_names[i])),
                )
            })
            .collect();
        OneFormOnM::new(self, components)
    }

    /// Exterior derivative of a 1-form, as the antisymmetric matrix
    /// `(d alpha)_{ab} = rho^i_a d_i alpha_b - rho^i_b d_i alpha_a - C^g_{ab} alpha_g`.
    pub fn d_on_oneform(&self, one_form: &OneFormOnM) -> Vec<Vec<Expr>> {
        let p = self.rank();
        let m = self.base_dim();
        (0..p)
            .map(|a| {
                (0..p)
                    .map(|b| {
                        let drift = Expr::sum((0..m).map(|i| {
                            self.rho[a][i].clone() * one_form.components[b].diff(&self.x_names[i])
                                - self.rho[b][i].clone()
                                    * one_form.components[a].diff(&self.x_names[i])
                        }));
                        let tail = Expr::sum(
                            (0..p)
                                .map(|g| self.c[a][b][g].clone() * one_form.components[g].clone()),
                        );
                        drift - tail
                    })
                    .collect()
            })
            .collect()
    }

    /// The fiber-linear function of a 1-form: `alpha_hat = alpha_a(x) y^a`.
    pub fn hat(&self, one_form: &OneFormOnM) -> Expr {
        Expr::sum(
            (0..self.rank())
                .map(|a| one_form.components[a].clone() * Expr::Var(self.y_names[a].clone())),
        )
    }

    /// Bracket of two sections:
    /// `[X,Y]^g = C^g_{ab} X^a Y^b + rho^i_a X^a d_i Y^g - rho^i_b Y^b d_i X^g`.
    pub fn bracket(&self, x: &Section, y: &Section) -> Result<Section, AlgebroidError> {
        let p = self.rank();
        let m = self.base_dim();
        let components = (0..p)
            .map(|g| {
                let quad = Expr::sum(
                    (0..p)
                        .flat_map(|a| (0..p).map(move |b| (a, b)).collect::<Vec<_>>())
                        .map(|(a, b)| {
                            self.c[a][b][g].clone()
                                * x.components[a].clone()
                                * y.components[b].clone()
                        }),
                );
                let push = Expr::sum(
                    (0..m)
                        .flat_map(|i| (0..p).map(move |a| (i, a)).collect::<Vec<_>>())
                        .map(|(i, a)| {
                            self.rho[a][i].clone()
                                * x.components[a].clone()
                                * y.components[g].diff(&self.x_names[i])
                                - self.rho[a][i].clone()
                                    * y.components[a].clone()
                                    * x.components[g].diff(&self.x_names[i])
                        }),
                );
                quad + push
            })
            .collect();
        Section::new(self, components)
    }

    /// Complete lift: base components `X^a`, fiber components
    /// `(rho^i_b d_i X^a - C^a_{gb} X^g) y^b`.
    pub fn complete_lift(&self, x: &Section) -> ProlongedSection {
        let p = self.rank();
        let m = self.base_dim();
        let base = x.components.clone();
        let fiber = (0..p)
            .map(|a| {
                Expr::sum((0..p).map(|b| {
                    let lin =
                        Expr::sum((0..m).map(|i| {
                            self.rho[b][i].clone() * x.components[a].diff(&self.x_names[i])
                        })) - Expr::sum(
                            (0..p).map(|g| self.c[g][b][a].clone() * x.components[g].clone()),
                        );
                    lin * Expr::Var(self.y_names[b].clone())
                }))
            })
            .collect();
        ProlongedSection { base, fiber }
    }

    /// Vertical lift: zero base components, fiber components `X^a(x)`.
    pub fn vertical_lift(&self, x: &Section) -> ProlongedSection {
        ProlongedSection {
            base: vec![Expr::ZERO; self.rank()],
            fiber: x.components.clone(),
        }
    }

    /// The Euler (Liouville) section: zero base part, fiber part `y^a`.
    pub fn euler_section(&self) -> ProlongedSection {
        ProlongedSection {
            base: vec![Expr::ZERO; self.rank()],
            fiber: self.y_names.iter().map(|y| Expr::Var(y.clone())).collect(),
        }
    }

    /// The vector field on E anchored to a prolonged section, applied to a
    /// function of all coordinates:
    /// `(rho^i_a xi^a) d_i f + V^a d f / d y^a`.
    pub fn anchored_apply(&self, section: &ProlongedSection, f: &Expr) -> Expr {
        let base_part = Expr::sum((0..self.base_dim()).map(|i| {
            Expr::sum((0..self.rank()).map(|a| self.rho[a][i].clone() * section.base[a].clone()))
                * f.diff(&self.x_names[i])
        }));
        let fiber_part = Expr::sum(
            (0..self.rank()).map(|a| section.fiber[a].clone() * f.diff(&self.y_names[a])),
        );
        base_part + fiber_part
    }

    /// Bracket on sections of the prolongation, in lifted-basis components.
    ///
    /// Base part: `C^g_{ab} xi_P^a xi_Q^b + P(xi_Q^g) - Q(xi_P^g)`;
    /// fiber part: the fiber components of the commutator of the two
    /// anchored vector fields.
    pub fn prolonged_bracket(
        &self,
        lhs: &ProlongedSection,
        rhs: &ProlongedSection,
    ) -> ProlongedSection {
        let p = self.rank();
        let base = (0..p)
            .map(|g| {
                let quad = Expr::sum(
                    (0..p)
                        .flat_map(|a| (0..p).map(move |b| (a, b)).collect::<Vec<_>>())
                        .map(|(a, b)| {
                            self.c[a][b][g].clone() * lhs.base[a].clone() * rhs.base[b].clone()
                        }),
                );
                quad + self.anchored_apply(lhs, &rhs.base[g])
                    - self.anchored_apply(rhs, &lhs.base[g])
            })
            .collect();
        let fiber = (0..p)
            .map(|a| {
                self.anchored_apply(lhs, &rhs.fiber[a]) - self.anchored_apply(rhs, &lhs.fiber[a])
            })
            .collect();
        ProlongedSection { base, fiber }
    }
}

/// Vertical endomorphism on lifted-basis components: `(xi, V) -> (0, xi)`.
pub fn vertical_endomorphism(section: &ProlongedSection) -> ProlongedSection {
    ProlongedSection {
        base: vec![Expr::ZERO; section.base.len()],
        fiber: section.base.clone(),
    }
}

/// A section of the algebroid: `p` components depending on base coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    components: Vec<Expr>,
}

impl Section {
    pub fn new(algebroid: &LieAlgebroid, components: Vec<Expr>) -> Result<Self, AlgebroidError> {
        if components.len() != algebroid.rank() {
            return Err(AlgebroidError::Shape(format!(
                "section needs {} components, got {}",
                algebroid.rank(),
                components.len()
            )));
        }
        for (idx, e) in components.iter().enumerate() {
            algebroid.require_base_only(e, "section", idx)?;
        }
        Ok(Section { components })
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }
}

/// A 1-form on the base: `p` components depending on base coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormOnM {
    components: Vec<Expr>,
}

impl OneFormOnM {
    pub fn new(algebroid: &LieAlgebroid, components: Vec<Expr>) -> Result<Self, AlgebroidError> {
        if components.len() != algebroid.rank() {
            return Err(AlgebroidError::Shape(format!(
                "1-form needs {} components, got {}",
                algebroid.rank(),
                components.len()
            )));
        }
        for (idx, e) in components.iter().enumerate() {
            algebroid.require_base_only(e, "1-form", idx)?;
        }
        Ok(OneFormOnM { components })
    }

    pub fn zero(algebroid: &LieAlgebroid) -> Self {
        OneFormOnM {
            components: vec![Expr::ZERO; algebroid.rank()],
        }
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }
}

/// Section of the prolongation bundle in lifted-basis components: `base`
/// holds the coefficients of the horizontal basis sections, `fiber` those
/// of the vertical ones. Both may depend on all coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlongedSection {
    pub base: Vec<Expr>,
    pub fiber: Vec<Expr>,
}

impl ProlongedSection {
    pub fn new(
        algebroid: &LieAlgebroid,
        base: Vec<Expr>,
        fiber: Vec<Expr>,
    ) -> Result<Self, AlgebroidError> {
        let p = algebroid.rank();
        if base.len() != p || fiber.len() != p {
            return Err(AlgebroidError::Shape(format!(
                "prolonged section needs {p} base and {p} fiber components"
            )));
        }
        Ok(ProlongedSection { base, fiber })
    }

    /// Maximum sampled residual between the components of two prolonged
    /// sections.
    pub fn residual_to(
        &self,
        other: &ProlongedSection,
        domain: &SampleDomain,
    ) -> Result<f64, SampleError> {
        let mut residual: f64 = 0.0;
        for (a, b) in self.base.iter().zip(&other.base) {
            residual = residual.max(equal_sampled(a, b, domain)?.max_residual);
        }
        for (a, b) in self.fiber.iter().zip(&other.fiber) {
            residual = residual.max(equal_sampled(a, b, domain)?.max_residual);
        }
        Ok(residual)
    }
}

/// Maximum sampled residual between two lists of expressions.
pub fn components_residual(
    lhs: &[Expr],
    rhs: &[Expr],
    domain: &SampleDomain,
) -> Result<f64, SampleError> {
    debug_assert_eq!(lhs.len(), rhs.len());
    let mut residual: f64 = 0.0;
    for (a, b) in lhs.iter().zip(rhs) {
        residual = residual.max(expr::equal_sampled(a, b, domain)?.max_residual);
    }
    Ok(residual)
}

/// One validated identity: the largest sampled residual and the verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub max_residual: f64,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(max_residual: f64, tolerance: f64) -> Self {
        IdentityCheck {
            max_residual,
            pass: max_residual <= tolerance,
        }
    }
}

/// Residuals of the three structure identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub antisymmetry: IdentityCheck,
    pub anchor: IdentityCheck,
    pub jacobi: IdentityCheck,
    pub tolerance: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.antisymmetry.pass && self.anchor.pass && self.jacobi.pass
    }
}
