use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use freshml::generate::ExprGen;
use freshml::machine::Machine;
use freshml::nominal::{
    alpha_eq, alpha_eq_with, gen_aeq, gen_arity, gen_value_rng, lambda_signature,
};
use freshml::parse::{parse_expr, parse_type};
use freshml::print::expr_to_string;
use freshml::rng::trial_rng;
use freshml::suites::{random_permutation, rich_signature};
use freshml::surface::{desugar, from_expr, from_value, Surface};
use freshml::syntax::{name, Configuration, Expr, FrameStack, Value};
use freshml::types::{check_expr, type_of, TypingEnv};
use freshml::{Atom, Permutation, Signature, State, Type, World};

fn world(n: u32) -> World {
    (0..n).map(Atom).collect()
}

fn rng(seed: u64) -> ChaCha8Rng {
    trial_rng(seed, 0)
}

/// An open expression `x : τ ⊢ e : τ′` and a closed value `v : τ`.
fn open_instance(sig: &Signature, seed: u64) -> (Type, Expr, Type, Value) {
    let mut r = rng(seed);
    let mut g = ExprGen::new(sig, &world(4));
    let t = g.gen_type(&mut r, 2);
    let t2 = g.gen_type(&mut r, 2);
    let e = desugar(&g.expr(&mut r, &mut vec![("x".to_string(), t.clone())], &t2, 4));
    let v = desugar(&g.value(&mut r, &t, 3));
    let v = v.as_value().cloned().expect("closed value");
    (t, e, t2, v)
}

fn closed_expr(sig: &Signature, seed: u64) -> (Expr, Type) {
    let mut r = rng(seed);
    let mut g = ExprGen::new(sig, &world(4));
    let t = g.gen_type(&mut r, 2);
    (desugar(&g.expr(&mut r, &mut Vec::new(), &t, 5)), t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn permutation_commutes_with_substitution(seed in any::<u64>()) {
        let sig = rich_signature();
        let (_, e, _, v) = open_instance(&sig, seed);
        let pi = random_permutation(&mut rng(seed ^ 1));
        let x = name("x");
        let lhs = e.substitute(&[(x.clone(), v.clone())]).permute(&pi);
        let rhs = e.permute(&pi).substitute(&[(x, v.permute(&pi))]);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn substitution_adds_only_the_values_atoms(seed in any::<u64>()) {
        let sig = rich_signature();
        let (_, e, _, v) = open_instance(&sig, seed);
        let out = e.substitute(&[(name("x"), v.clone())]).atoms();
        let mut allowed = e.atoms();
        v.collect_atoms(&mut allowed);
        prop_assert!(out.is_subset(&allowed));
        prop_assert!(e.substitute(&[(name("x"), v)]).free_vars().is_empty());
    }

    #[test]
    fn renaming_to_an_absent_atom_is_a_swap(seed in any::<u64>()) {
        let sig = rich_signature();
        let (e, _) = closed_expr(&sig, seed);
        let a = Atom(seed as u32 % 4);
        let b = Atom(20);
        prop_assert_eq!(e.rename_atom(a, b), e.permute(&Permutation::swap(a, b)));
    }

    #[test]
    fn permutation_action_laws(seed in any::<u64>()) {
        let sig = rich_signature();
        let (e, _) = closed_expr(&sig, seed);
        let mut r = rng(seed ^ 2);
        let (pi, sigma) = (random_permutation(&mut r), random_permutation(&mut r));
        prop_assert_eq!(e.permute(&pi.compose(&sigma)), e.permute(&sigma).permute(&pi));
        prop_assert_eq!(e.permute(&pi).permute(&pi.inverse()), e.clone());
        prop_assert_eq!(e.permute(&Permutation::identity()), e);
    }

    #[test]
    fn printed_expressions_reparse(seed in any::<u64>()) {
        let sig = rich_signature();
        let (e, _) = closed_expr(&sig, seed);
        let text = expr_to_string(&e);
        let back = desugar(&parse_expr(&text).map_err(|err| TestCaseError::fail(format!("{err}: {text}")))?);
        prop_assert_eq!(back, e);
    }

    #[test]
    fn printed_types_reparse(seed in any::<u64>()) {
        let sig = rich_signature();
        let g = ExprGen::new(&sig, &world(1));
        let t = g.gen_type(&mut rng(seed), 4);
        prop_assert_eq!(parse_type(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn typing_weakening(seed in any::<u64>()) {
        let sig = rich_signature();
        let (t, e, t2, _) = open_instance(&sig, seed);
        let mut env = TypingEnv::from_pairs(vec![(name("x"), t), (name("unused"), Type::Atm)]);
        prop_assert_eq!(check_expr(&sig, &mut env, &e), Ok(t2));
    }

    #[test]
    fn typing_substitution(seed in any::<u64>()) {
        let sig = rich_signature();
        let (t, e, t2, v) = open_instance(&sig, seed);
        let mut env = TypingEnv::from_pairs(vec![(name("x"), t)]);
        prop_assert_eq!(check_expr(&sig, &mut env, &e), Ok(t2.clone()));
        prop_assert_eq!(type_of(&sig, &e.substitute(&[(name("x"), v)])), Ok(t2));
    }

    #[test]
    fn typing_equivariance(seed in any::<u64>()) {
        let sig = rich_signature();
        let (e, t) = closed_expr(&sig, seed);
        let pi = random_permutation(&mut rng(seed ^ 3));
        prop_assert_eq!(type_of(&sig, &e.permute(&pi)), Ok(t));
    }
}

/// Three values at a random nominal arity, the third often an α-variant of
/// the second.
fn nominal_triple(sig: &Signature, seed: u64) -> (Type, Value, Value, Value) {
    let mut r = rng(seed);
    let ty = gen_arity(sig, &mut r, 3);
    let pool = world(3);
    let v1 = gen_value_rng(sig, &ty, &pool, 4, &mut r).unwrap();
    let v2 = if r.gen_bool(0.5) {
        freshml::harness::alpha_variant(&mut r, &v1, &[Atom(3), Atom(4)])
    } else {
        gen_value_rng(sig, &ty, &pool, 4, &mut r).unwrap()
    };
    let v3 = if r.gen_bool(0.5) {
        freshml::harness::alpha_variant(&mut r, &v2, &[Atom(5), Atom(6)])
    } else {
        gen_value_rng(sig, &ty, &pool, 4, &mut r).unwrap()
    };
    (ty, v1, v2, v3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn alpha_eq_is_an_equivalence(seed in any::<u64>()) {
        let sig = lambda_signature();
        let w = world(7);
        let (ty, a, b, c) = nominal_triple(&sig, seed);
        let eq = |x: &Value, y: &Value| alpha_eq(&sig, &w, x, y, &ty).unwrap();
        prop_assert!(eq(&a, &a));
        prop_assert_eq!(eq(&a, &b), eq(&b, &a));
        if eq(&a, &b) && eq(&b, &c) {
            prop_assert!(eq(&a, &c));
        }
    }

    #[test]
    fn alpha_eq_is_equivariant(seed in any::<u64>()) {
        let sig = lambda_signature();
        let w = world(7);
        let (ty, a, b, _) = nominal_triple(&sig, seed);
        let pi = random_permutation(&mut rng(seed ^ 4));
        let before = alpha_eq(&sig, &w, &a, &b, &ty).unwrap();
        let after = alpha_eq(&sig, &pi.apply_world(&w), &a.permute(&pi), &b.permute(&pi), &ty).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn alpha_eq_weakens(seed in any::<u64>()) {
        let sig = lambda_signature();
        let (ty, a, b, _) = nominal_triple(&sig, seed);
        if alpha_eq(&sig, &world(7), &a, &b, &ty).unwrap() {
            prop_assert!(alpha_eq(&sig, &world(12), &a, &b, &ty).unwrap());
        }
    }

    #[test]
    fn alpha_eq_ignores_the_fresh_choice(seed in any::<u64>()) {
        let sig = lambda_signature();
        let w = world(7);
        let (ty, a, b, _) = nominal_triple(&sig, seed);
        let expected = alpha_eq(&sig, &w, &a, &b, &ty).unwrap();
        let choosers: [&dyn Fn(&World) -> Atom; 3] = [
            &|w: &World| Atom(w.iter().next_back().map_or(0, |a| a.index() + 1)),
            &|w: &World| Atom(w.iter().next_back().map_or(0, |a| a.index() + 1) + 17),
            &|w: &World| (100..).map(Atom).find(|a| !w.contains(a) && a.index() % 3 == 2).unwrap(),
        ];
        for choose in choosers {
            prop_assert_eq!(alpha_eq_with(&sig, &w, &a, &b, &ty, choose).unwrap(), expected);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    /// The generated `aeq` program computes `alpha_eq`, from any state
    /// containing the world, in any order.
    #[test]
    fn aeq_program_agrees_with_alpha_eq(seed in any::<u64>()) {
        let sig = lambda_signature();
        let w = world(7);
        let (ty, a, b, _) = nominal_triple(&sig, seed);
        let expected = alpha_eq(&sig, &w, &a, &b, &ty).unwrap();
        let f = from_expr(&gen_aeq(&sig, &ty).unwrap());
        let e = desugar(&Surface::apps(f, vec![from_value(&a), from_value(&b)]));
        let mut atoms: Vec<Atom> = w.iter().copied().chain([Atom(9)]).collect();
        atoms.shuffle(&mut rng(seed ^ 5));
        let cfg = Configuration::new(State::new(atoms).unwrap(), FrameStack::id(), e).unwrap();
        let out = Machine::new(&sig).run(cfg, 1_000_000);
        prop_assert_eq!(out.value().and_then(Value::as_numeral), Some(u64::from(!expected)));
    }
}
