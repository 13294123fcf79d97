//! Property tests for the symbolic engine and the algebroid calculus.

use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use algmech::algebroid::{LieAlgebroid, Section};
use algmech::expr::{self, equal_sampled, is_zero_sampled, parse, Expr, SampleDomain, Scope};

const VARS: [&str; 6] = ["x1", "x2", "x3", "y1", "y2", "y3"];

/// Raw expression trees, bypassing the folding constructors so that `fold`
/// has actual work to do.
fn raw_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-4.0..4.0f64).prop_map(Expr::constant),
        (0usize..VARS.len()).prop_map(|i| Expr::var(VARS[i])),
        Just(Expr::ZERO),
        Just(Expr::ONE),
    ];
    leaf.prop_recursive(4, 64, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Arc::new(a), Arc::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Arc::new(a), Arc::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Arc::new(a), Arc::new(b))),
            (
                inner.clone(),
                prop_oneof![Just(-2.0), Just(0.0), Just(1.0), Just(2.0), Just(3.0)]
            )
                .prop_map(|(a, k)| Expr::Pow(Arc::new(a), k)),
            inner.clone().prop_map(|a| Expr::Neg(Arc::new(a))),
            inner.clone().prop_map(expr::sin),
            inner.prop_map(expr::cos),
        ]
    })
}

/// Sparse polynomials over all six variables, degree at most 4.
#[derive(Debug, Clone)]
struct Poly {
    monomials: Vec<(f64, [u8; 6])>,
}

impl Poly {
    fn to_expr(&self) -> Expr {
        Expr::sum(self.monomials.iter().map(|(c, powers)| {
            let mut term = Expr::constant(*c);
            for (v, p) in VARS.iter().zip(powers) {
                if *p > 0 {
                    term = term * expr::pow(Expr::var(*v), *p as f64);
                }
            }
            term
        }))
    }
}

fn poly() -> impl Strategy<Value = Poly> {
    let monomial = ((-1.0..1.0f64), proptest::array::uniform6(0u8..3))
        .prop_filter("total degree at most 4", |(_, powers)| {
            powers.iter().map(|p| *p as u32).sum::<u32>() <= 4
        });
    proptest::collection::vec(monomial, 1..6).prop_map(|monomials| Poly { monomials })
}

fn domain() -> SampleDomain {
    SampleDomain::new(VARS)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fold_is_idempotent(e in raw_expr()) {
        let once = e.fold();
        prop_assert_eq!(once.fold(), once);
    }

    #[test]
    fn fold_preserves_value(e in raw_expr()) {
        let folded = e.fold();
        let names: Vec<std::sync::Arc<str>> = VARS.iter().map(|v| std::sync::Arc::from(*v)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..8 {
            let values: Vec<f64> = (0..VARS.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let env = expr::Env::new(&names, &values);
            match (e.eval(&env), folded.eval(&env)) {
                (Ok(a), Ok(b)) => prop_assert!(
                    (a - b).abs() <= 1e-9 + 1e-9 * a.abs().max(b.abs()),
                    "{a} vs {b}"
                ),
                // folding may simplify a domain error away (0 * log(-1));
                // it must never introduce one
                (Err(_), _) => {}
                (Ok(a), Err(e)) => prop_assert!(false, "fold introduced failure {e} for value {a}"),
            }
        }
    }

    #[test]
    fn print_parse_round_trip(e in raw_expr()) {
        let scope = Scope::new(VARS);
        let printed = e.to_string();
        let back = parse(&printed, &scope);
        prop_assert!(back.is_ok(), "`{printed}` failed to re-parse: {:?}", back.err());
        let back = back.unwrap();
        let check = equal_sampled(&e, &back, &domain());
        if let Ok(check) = check {
            prop_assert!(check.equal, "round trip drifted by {}", check.max_residual);
        }
    }

    #[test]
    fn diff_matches_central_differences(p in poly(), v in 0usize..6) {
        let e = p.to_expr();
        let var = VARS[v];
        let exact = e.diff(var);
        let names: Vec<std::sync::Arc<str>> = VARS.iter().map(|n| std::sync::Arc::from(*n)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..32 {
            let values: Vec<f64> = (0..VARS.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let env = expr::Env::new(&names, &values);
            let d = exact.eval(&env).unwrap();
            let mut up = values.clone();
            up[v] += h;
            let mut down = values.clone();
            down[v] -= h;
            let fu = e.eval(&expr::Env::new(&names, &up)).unwrap();
            let fd = e.eval(&expr::Env::new(&names, &down)).unwrap();
            let numeric = (fu - fd) / (2.0 * h);
            prop_assert!(
                (numeric - d).abs() <= 1e-6 * d.abs().max(1.0),
                "fd {numeric} vs exact {d}"
            );
        }
    }

    #[test]
    fn diff_of_absent_variable_is_structurally_zero(p in poly()) {
        let e = p.to_expr();
        prop_assert_eq!(e.diff("q_unused"), Expr::ZERO);
    }

    #[test]
    fn equal_sampled_is_reflexive_and_symmetric(a in raw_expr(), b in raw_expr()) {
        let d = domain();
        if let Ok(check) = equal_sampled(&a, &a, &d) {
            prop_assert!(check.equal);
        }
        if let (Ok(ab), Ok(ba)) = (equal_sampled(&a, &b, &d), equal_sampled(&b, &a, &d)) {
            prop_assert_eq!(ab.equal, ba.equal);
            prop_assert!((ab.max_residual - ba.max_residual).abs() <= 1e-12);
        }
    }
}

fn tangent(m: usize) -> Arc<LieAlgebroid> {
    let x: Vec<Arc<str>> = (1..=m)
        .map(|i| Arc::from(format!("x{i}").as_str()))
        .collect();
    let y: Vec<Arc<str>> = (1..=m)
        .map(|i| Arc::from(format!("y{i}").as_str()))
        .collect();
    let c = vec![vec![vec![Expr::ZERO; m]; m]; m];
    let rho = (0..m)
        .map(|a| {
            (0..m)
                .map(|i| if i == a { Expr::ONE } else { Expr::ZERO })
                .collect()
        })
        .collect();
    Arc::new(LieAlgebroid::new(x, y, c, rho).unwrap())
}

/// Random polynomial in the base coordinates, degree at most 2.
fn random_base_poly(rng: &mut ChaCha8Rng, algebroid: &LieAlgebroid) -> Expr {
    let mut e = Expr::constant(rng.gen_range(-1.0..1.0));
    for x in algebroid.x_names() {
        e = e + Expr::constant(rng.gen_range(-1.0..1.0)) * Expr::var(x.clone());
        for x2 in algebroid.x_names() {
            if rng.gen_bool(0.5) {
                e = e + Expr::constant(rng.gen_range(-0.5..0.5))
                    * Expr::var(x.clone())
                    * Expr::var(x2.clone());
            }
        }
    }
    e
}

fn random_section(rng: &mut ChaCha8Rng, algebroid: &Arc<LieAlgebroid>) -> Section {
    let components = (0..algebroid.rank())
        .map(|_| random_base_poly(rng, algebroid))
        .collect();
    Section::new(algebroid, components).unwrap()
}

#[test]
fn section_bracket_satisfies_jacobi_identity() {
    let algebroid = tangent(2);
    let d = algebroid.sample_domain();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10 {
        let x = random_section(&mut rng, &algebroid);
        let y = random_section(&mut rng, &algebroid);
        let z = random_section(&mut rng, &algebroid);
        let xy_z = algebroid
            .bracket(&algebroid.bracket(&x, &y).unwrap(), &z)
            .unwrap();
        let yz_x = algebroid
            .bracket(&algebroid.bracket(&y, &z).unwrap(), &x)
            .unwrap();
        let zx_y = algebroid
            .bracket(&algebroid.bracket(&z, &x).unwrap(), &y)
            .unwrap();
        for g in 0..algebroid.rank() {
            let total = xy_z.components()[g].clone()
                + yz_x.components()[g].clone()
                + zx_y.components()[g].clone();
            let check = is_zero_sampled(&total, &d).unwrap();
            assert!(
                check.max_residual <= 1e-8,
                "jacobi residual {}",
                check.max_residual
            );
        }
    }
}

#[test]
fn complete_lift_intertwines_brackets_on_random_sections() {
    let algebroid = tangent(2);
    let d = algebroid.sample_domain();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..10 {
        let x = random_section(&mut rng, &algebroid);
        let y = random_section(&mut rng, &algebroid);
        let lhs =
            algebroid.prolonged_bracket(&algebroid.complete_lift(&x), &algebroid.complete_lift(&y));
        let rhs = algebroid.complete_lift(&algebroid.bracket(&x, &y).unwrap());
        assert!(lhs.residual_to(&rhs, &d).unwrap() <= 1e-8);
    }
}
