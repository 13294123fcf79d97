//! Model files and the built-in catalog.
//!
//! A model is a single TOML document naming the coordinates, structure
//! functions (sparse, auto-antisymmetrized), anchor matrix and any number
//! of named Lagrangians, sections, 1-forms and base functions. Expression
//! strings use the grammar of [`crate::expr::parse`]; parameters are
//! substituted as constants before parsing.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebroid::{LieAlgebroid, OneFormOnM, Section, ValidationReport};
use crate::dynamics::LagrangianSystem;
use crate::expr::{equal_sampled, parse, Expr, Func, SampleDomain, Scope};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to parse model file: {0}")]
    Toml(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("model `{name}` failed validation (max residual {residual:.3e})")]
    Validation {
        name: String,
        report: ValidationReport,
        residual: f64,
    },
    #[error("unknown model `{0}`: not a catalog name and not a readable file")]
    UnknownModel(String),
    #[error("model `{model}` has no {kind} named `{name}`")]
    MissingObject {
        model: String,
        kind: &'static str,
        name: String,
    },
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

fn schema_err(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// One sparse structure-function entry `C^gamma_{alpha beta} = expr`, with
/// 1-based indices. The mirrored entry is filled in automatically.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StructureEntry {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub expr: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BaseSpec {
    pub dim: usize,
    #[serde(default)]
    pub coords: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FiberSpec {
    pub rank: usize,
    pub coords: Vec<String>,
}

/// The on-disk schema of a model.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelFile {
    pub name: String,
    /// Dense anchor matrix: one row per fiber index, one column per base
    /// coordinate. May be empty when the base is zero-dimensional.
    #[serde(default)]
    pub anchor: Vec<Vec<String>>,
    pub base: BaseSpec,
    pub fiber: FiberSpec,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub structure_functions: Vec<StructureEntry>,
    #[serde(default)]
    pub lagrangians: BTreeMap<String, String>,
    #[serde(default)]
    pub sections: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub one_forms: BTreeMap<String, Vec<String>>,
    #[serde(default, rename = "functions_on_M")]
    pub functions_on_m: BTreeMap<String, String>,
}

/// A loaded model: the constructed algebroid, all named objects parsed,
/// and the validation report of the structure identities.
#[derive(Debug, Clone)]
pub struct Model {
    pub file: ModelFile,
    pub algebroid: Arc<LieAlgebroid>,
    pub lagrangians: BTreeMap<String, Expr>,
    pub sections: BTreeMap<String, Section>,
    pub one_forms: BTreeMap<String, OneFormOnM>,
    pub functions_on_m: BTreeMap<String, Expr>,
    pub validation: ValidationReport,
}

impl Model {
    /// True when all structure identities passed validation.
    pub fn validated(&self) -> bool {
        self.validation.passed()
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn sample_domain(&self) -> SampleDomain {
        self.algebroid.sample_domain()
    }

    pub fn scope(&self) -> Scope {
        self.algebroid
            .scope()
            .with_parameters(self.file.parameters.clone())
    }

    pub fn lagrangian(&self, name: &str) -> Result<&Expr, ModelError> {
        self.lagrangians
            .get(name)
            .ok_or_else(|| self.missing("lagrangian", name))
    }

    pub fn section(&self, name: &str) -> Result<&Section, ModelError> {
        self.sections
            .get(name)
            .ok_or_else(|| self.missing("section", name))
    }

    pub fn one_form(&self, name: &str) -> Result<&OneFormOnM, ModelError> {
        self.one_forms
            .get(name)
            .ok_or_else(|| self.missing("one_form", name))
    }

    pub fn function_on_m(&self, name: &str) -> Result<&Expr, ModelError> {
        self.functions_on_m
            .get(name)
            .ok_or_else(|| self.missing("function_on_M", name))
    }

    /// Builds the Lagrangian system for a named Lagrangian.
    pub fn system(&self, name: &str) -> Result<LagrangianSystem, ModelError> {
        let l = self.lagrangian(name)?.clone();
        Ok(LagrangianSystem::new(self.algebroid.clone(), l)?)
    }

    fn missing(&self, kind: &'static str, name: &str) -> ModelError {
        ModelError::MissingObject {
            model: self.file.name.clone(),
            kind,
            name: name.to_string(),
        }
    }

    /// Serializes the schema document back to TOML. Loading the printed
    /// text reproduces the model (same residuals, same objects).
    pub fn print(&self) -> String {
        toml::to_string_pretty(&self.file).expect("schema serializes")
    }
}

/// Names resolvable by [`load`] without touching the filesystem.
pub const CATALOG: &[&str] = &[
    "rigid-body",
    "tangent-r1",
    "tangent-r2",
    "harmonic-pair",
    "rigid-body-broken",
];

const RIGID_BODY_TOML: &str = include_str!("models/rigid_body.toml");
const TANGENT_R1_TOML: &str = include_str!("models/tangent_r1.toml");
const TANGENT_R2_TOML: &str = include_str!("models/tangent_r2.toml");
const HARMONIC_PAIR_TOML: &str = include_str!("models/harmonic_pair.toml");

/// Loads a model by catalog name or file path, applying parameter
/// overrides before expressions are parsed. With `force` unset, a model
/// that fails the structure-identity validation is rejected.
pub fn load(source: &str, overrides: &[(String, f64)], force: bool) -> Result<Model, ModelError> {
    let model = match source {
        "rigid-body" => from_str(RIGID_BODY_TOML, overrides)?,
        "tangent-r1" => from_str(TANGENT_R1_TOML, overrides)?,
        "tangent-r2" => from_str(TANGENT_R2_TOML, overrides)?,
        "harmonic-pair" => from_str(HARMONIC_PAIR_TOML, overrides)?,
        "rigid-body-broken" => broken_rigid_body(overrides)?,
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|_| ModelError::UnknownModel(path.to_string()))?;
            from_str(&text, overrides)?
        }
    };
    if !model.validated() && !force {
        let residual = model
            .validation
            .antisymmetry
            .max_residual
            .max(model.validation.anchor.max_residual)
            .max(model.validation.jacobi.max_residual);
        return Err(ModelError::Validation {
            name: model.file.name.clone(),
            report: model.validation,
            residual,
        });
    }
    Ok(model)
}

/// Parses and constructs a model from TOML text.
pub fn from_str(text: &str, overrides: &[(String, f64)]) -> Result<Model, ModelError> {
    let mut file: ModelFile = toml::from_str(text).map_err(|e| ModelError::Toml(e.to_string()))?;
    for (key, value) in overrides {
        file.parameters.insert(key.clone(), *value);
    }
    build(file)
}

/// The rigid-body model with one structure constant bumped off the
/// antisymmetric lattice; its file form intentionally round-trips to the
/// inconsistent-entries load error.
fn broken_rigid_body(overrides: &[(String, f64)]) -> Result<Model, ModelError> {
    let intact = from_str(RIGID_BODY_TOML, overrides)?;
    let p = intact.algebroid.rank();
    let mut c: Vec<Vec<Vec<Expr>>> = (0..p)
        .map(|a| {
            (0..p)
                .map(|b| {
                    (0..p)
                        .map(|g| intact.algebroid.structure_function(a, b, g).clone())
                        .collect()
                })
                .collect()
        })
        .collect();
    c[0][1][2] = Expr::constant(1.1);
    let algebroid = Arc::new(
        LieAlgebroid::new(
            intact.algebroid.x_names().to_vec(),
            intact.algebroid.y_names().to_vec(),
            c,
            (0..p)
                .map(|a| {
                    (0..intact.algebroid.base_dim())
                        .map(|i| intact.algebroid.anchor_component(a, i).clone())
                        .collect()
                })
                .collect(),
        )
        .map_err(|e| schema_err("structure_functions", e.to_string()))?,
    );
    let validation = algebroid
        .validate(&algebroid.sample_domain())
        .map_err(|e| schema_err("structure_functions", e.to_string()))?;

    let mut file = intact.file.clone();
    file.name = "rigid-body-broken".to_string();
    file.structure_functions = vec![
        StructureEntry {
            alpha: 1,
            beta: 2,
            gamma: 3,
            expr: "1.1".to_string(),
        },
        StructureEntry {
            alpha: 2,
            beta: 1,
            gamma: 3,
            expr: "-1".to_string(),
        },
        StructureEntry {
            alpha: 2,
            beta: 3,
            gamma: 1,
            expr: "1".to_string(),
        },
        StructureEntry {
            alpha: 3,
            beta: 1,
            gamma: 2,
            expr: "1".to_string(),
        },
    ];

    Ok(Model {
        file,
        algebroid,
        lagrangians: intact.lagrangians,
        sections: intact.sections,
        one_forms: intact.one_forms,
        functions_on_m: intact.functions_on_m,
        validation,
    })
}

fn valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && Func::from_name(name).is_none()
}

fn build(file: ModelFile) -> Result<Model, ModelError> {
    let m = file.base.dim;
    let p = file.fiber.rank;
    if p == 0 {
        return Err(schema_err("fiber.rank", "rank must be at least 1"));
    }
    if file.base.coords.len() != m {
        return Err(schema_err(
            "base.coords",
            format!("expected {m} names, got {}", file.base.coords.len()),
        ));
    }
    if file.fiber.coords.len() != p {
        return Err(schema_err(
            "fiber.coords",
            format!("expected {p} names, got {}", file.fiber.coords.len()),
        ));
    }

    let mut seen = std::collections::BTreeSet::new();
    for (path, name) in file
        .base
        .coords
        .iter()
        .map(|n| ("base.coords", n))
        .chain(file.fiber.coords.iter().map(|n| ("fiber.coords", n)))
    {
        if !valid_identifier(name) {
            return Err(schema_err(
                path,
                format!("`{name}` is not a valid identifier"),
            ));
        }
        if !seen.insert(name.clone()) {
            return Err(schema_err(path, format!("duplicate coordinate `{name}`")));
        }
        if file.parameters.contains_key(name) {
            return Err(schema_err(
                path,
                format!("`{name}` is declared both as coordinate and parameter"),
            ));
        }
    }

    let x_names: Vec<Arc<str>> = file
        .base
        .coords
        .iter()
        .map(|s| Arc::from(s.as_str()))
        .collect();
    let y_names: Vec<Arc<str>> = file
        .fiber
        .coords
        .iter()
        .map(|s| Arc::from(s.as_str()))
        .collect();
    let scope = Scope::new(x_names.iter().cloned())
        .with_parameters(file.parameters.iter().map(|(k, v)| (k.clone(), *v)));
    let full_scope = Scope::new(x_names.iter().cloned().chain(y_names.iter().cloned()))
        .with_parameters(file.parameters.iter().map(|(k, v)| (k.clone(), *v)));

    let parse_at = |path: String, text: &str, scope: &Scope| -> Result<Expr, ModelError> {
        parse(text, scope).map_err(|e| schema_err(path, e.to_string()))
    };

    // domain over base coordinates only, for the antisymmetry consistency check
    let base_domain = SampleDomain::new(x_names.iter().cloned());

    // assemble the structure functions from the sparse entries
    let mut c = vec![vec![vec![Expr::ZERO; p]; p]; p];
    let mut given: BTreeMap<(usize, usize, usize), Expr> = BTreeMap::new();
    for (idx, entry) in file.structure_functions.iter().enumerate() {
        let path = format!("structure_functions[{idx}]");
        for (field, value) in [
            ("alpha", entry.alpha),
            ("beta", entry.beta),
            ("gamma", entry.gamma),
        ] {
            if value == 0 || value > p {
                return Err(schema_err(
                    format!("{path}.{field}"),
                    format!("index {value} out of range 1..={p}"),
                ));
            }
        }
        if entry.alpha == entry.beta {
            return Err(schema_err(
                path,
                "diagonal entries vanish by antisymmetry; remove this entry",
            ));
        }
        let key = (entry.alpha - 1, entry.beta - 1, entry.gamma - 1);
        let expr = parse_at(format!("{path}.expr"), &entry.expr, &scope)?;
        if given.contains_key(&key) {
            return Err(schema_err(path, "duplicate structure-function entry"));
        }
        given.insert(key, expr);
    }
    for (&(a, b, g), expr) in &given {
        if let Some(mirror) = given.get(&(b, a, g)) {
            let sum = expr.clone() + mirror.clone();
            let consistent = equal_sampled(&sum, &Expr::ZERO, &base_domain)
                .map(|check| check.equal)
                .unwrap_or(false);
            if !consistent {
                return Err(schema_err(
                    "structure_functions",
                    format!(
                        "entries ({},{},{}) and ({},{},{}) violate antisymmetry",
                        a + 1,
                        b + 1,
                        g + 1,
                        b + 1,
                        a + 1,
                        g + 1
                    ),
                ));
            }
        }
        c[a][b][g] = expr.clone();
        if !given.contains_key(&(b, a, g)) {
            c[b][a][g] = crate::expr::neg(expr.clone());
        }
    }

    // anchor matrix
    let anchor_rows: Vec<Vec<String>> = if m == 0 {
        vec![Vec::new(); p]
    } else {
        file.anchor.clone()
    };
    if anchor_rows.len() != p {
        return Err(schema_err(
            "anchor",
            format!("expected {p} rows, got {}", anchor_rows.len()),
        ));
    }
    let mut rho = Vec::with_capacity(p);
    for (a, row) in anchor_rows.iter().enumerate() {
        if row.len() != m {
            return Err(schema_err(
                format!("anchor[{a}]"),
                format!("expected {m} entries, got {}", row.len()),
            ));
        }
        let mut out = Vec::with_capacity(m);
        for (i, text) in row.iter().enumerate() {
            out.push(parse_at(format!("anchor[{a}][{i}]"), text, &scope)?);
        }
        rho.push(out);
    }

    let algebroid = Arc::new(
        LieAlgebroid::new(x_names, y_names, c, rho)
            .map_err(|e| schema_err("algebroid", e.to_string()))?,
    );

    let mut lagrangians = BTreeMap::new();
    for (name, text) in &file.lagrangians {
        lagrangians.insert(
            name.clone(),
            parse_at(format!("lagrangians.{name}"), text, &full_scope)?,
        );
    }
    let mut sections = BTreeMap::new();
    for (name, comps) in &file.sections {
        let mut exprs = Vec::with_capacity(comps.len());
        for (i, text) in comps.iter().enumerate() {
            exprs.push(parse_at(format!("sections.{name}[{i}]"), text, &scope)?);
        }
        sections.insert(
            name.clone(),
            Section::new(&algebroid, exprs)
                .map_err(|e| schema_err(format!("sections.{name}"), e.to_string()))?,
        );
    }
    let mut one_forms = BTreeMap::new();
    for (name, comps) in &file.one_forms {
        let mut exprs = Vec::with_capacity(comps.len());
        for (i, text) in comps.iter().enumerate() {
            exprs.push(parse_at(format!("one_forms.{name}[{i}]"), text, &scope)?);
        }
        one_forms.insert(
            name.clone(),
            OneFormOnM::new(&algebroid, exprs)
                .map_err(|e| schema_err(format!("one_forms.{name}"), e.to_string()))?,
        );
    }
    let mut functions_on_m = BTreeMap::new();
    for (name, text) in &file.functions_on_m {
        functions_on_m.insert(
            name.clone(),
            parse_at(format!("functions_on_M.{name}"), text, &scope)?,
        );
    }

    let validation = algebroid
        .validate(&algebroid.sample_domain())
        .map_err(|e| schema_err("algebroid", e.to_string()))?;

    Ok(Model {
        file,
        algebroid,
        lagrangians,
        sections,
        one_forms,
        functions_on_m,
        validation,
    })
}
