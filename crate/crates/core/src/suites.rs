//! Sampled property suites over random configurations and values.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::atom::{Atom, Permutation, State, World};
use crate::generate::{gen_config, ConfigSpec};
use crate::machine::{stack_apply, FreshPolicy, Machine, Termination};
use crate::nominal::{alpha_eq, gen_arity, gen_swap, gen_value_rng, lambda_signature};
use crate::observations::Observation;
use crate::print::{config_to_string, value_to_string};
use crate::rng::trial_rng;
use crate::surface::{desugar, from_expr, from_value, Surface};
use crate::syntax::{Configuration, Expr, FrameStack};
use crate::types::{check_config, Signature, Type};

/// Failures kept verbatim in a report; the rest are only counted.
const KEPT_FAILURES: usize = 10;

#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub name: String,
    pub samples: usize,
    pub passed: usize,
    /// Index of the first failing sample.
    pub first_failure: Option<usize>,
    pub failures: Vec<String>,
    pub stats: BTreeMap<String, u64>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.passed == self.samples
    }

    fn collect(name: &str, results: Vec<(Result<(), String>, Vec<String>)>) -> Self {
        let mut r = SuiteReport {
            schema: 1,
            name: name.to_string(),
            samples: results.len(),
            ..SuiteReport::default()
        };
        for (i, (res, tags)) in results.into_iter().enumerate() {
            for t in tags {
                *r.stats.entry(t).or_default() += 1;
            }
            match res {
                Ok(()) => r.passed += 1,
                Err(msg) => {
                    r.first_failure.get_or_insert(i);
                    if r.failures.len() < KEPT_FAILURES {
                        r.failures.push(format!("sample {i}: {msg}"));
                    }
                }
            }
        }
        r
    }
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}/{}", self.name, self.passed, self.samples)
    }
}

/// The λ-term signature with every equivariant built-in registered.
pub fn rich_signature() -> Signature {
    lambda_signature().with_observations([
        Observation::lt(),
        Observation::ord(),
        Observation::card(),
    ])
}

fn tag(t: Termination) -> String {
    match t {
        Termination::Terminated(_) => "terminated".into(),
        Termination::FuelExhausted(_) => "fuel".into(),
        Termination::Stuck(_) => "stuck".into(),
    }
}

fn run_samples<F>(samples: usize, f: F) -> Vec<(Result<(), String>, Vec<String>)>
where
    F: Fn(usize) -> (Result<(), String>, Vec<String>) + Sync + Send,
{
    (0..samples).into_par_iter().map(f).collect()
}

/// A permutation of the first 16 atoms, uniformly at random.
pub fn random_permutation(rng: &mut impl Rng) -> Permutation {
    let domain: Vec<Atom> = (0..16).map(Atom).collect();
    let mut image = domain.clone();
    image.shuffle(rng);
    Permutation::from_mapping(&domain, &image)
}

/// `run(cfg)` and `run(π·cfg)` agree on verdict and step count.
pub fn equivariance_suite(sig: &Signature, samples: usize, fuel: u64, seed: u64) -> SuiteReport {
    let m = Machine::new(sig);
    let results = run_samples(samples, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let (cfg, _) = gen_config(sig, &mut rng, &ConfigSpec::default());
        let pi = random_permutation(&mut rng);
        let moved = cfg.permute(&pi);
        let (a, b) = (
            m.run(cfg.clone(), fuel).termination(),
            m.run(moved, fuel).termination(),
        );
        let res = if a == b {
            Ok(())
        } else {
            Err(format!(
                "{a} vs {b} under {:?} for {}",
                pi.swaps(),
                config_to_string(&cfg)
            ))
        };
        (res, vec![tag(a)])
    });
    SuiteReport::collect("equivariance", results)
}

/// Preservation and progress along `steps` transitions: every intermediate
/// configuration type-checks at the initial type, its world contains the
/// previous one, atoms of the stack and expression stay in the state, and no
/// run gets stuck.
pub fn safety_suite(sig: &Signature, samples: usize, steps: u64, seed: u64) -> SuiteReport {
    let m = Machine::new(sig);
    let results = run_samples(samples, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let (cfg, ty) = gen_config(sig, &mut rng, &ConfigSpec::default());
        let (trace, out) = m.trace(cfg, steps);
        let t = out.termination();
        let check = || -> Result<(), String> {
            if let Termination::Stuck(n) = t {
                return Err(format!("stuck after {n}: {out}"));
            }
            let mut prev: Option<World> = None;
            for (n, c) in trace.iter().enumerate() {
                if !c.is_well_formed() {
                    return Err(format!(
                        "step {n}: containment fails in {}",
                        config_to_string(c)
                    ));
                }
                let (w, t2) = check_config(sig, c)
                    .map_err(|e| format!("step {n}: {e} in {}", config_to_string(c)))?;
                if t2 != ty {
                    return Err(format!("step {n}: type changed from {ty} to {t2}"));
                }
                if let Some(p) = &prev {
                    if !p.is_subset(&w) {
                        return Err(format!("step {n}: world shrank"));
                    }
                }
                prev = Some(w);
            }
            Ok(())
        };
        (check(), vec![tag(t)])
    });
    SuiteReport::collect("preservation+progress", results)
}

/// Prepending a fresh atom to the state changes neither verdict nor step
/// count. Meant for signatures with only affine observations; with others
/// the first failure is the interesting output.
pub fn affine_suite(sig: &Signature, samples: usize, fuel: u64, seed: u64) -> SuiteReport {
    let m = Machine::new(sig);
    let results = run_samples(samples, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let (cfg, _) = gen_config(sig, &mut rng, &ConfigSpec::default());
        let used = cfg.state.world();
        let spare: Vec<Atom> = (0..16).map(Atom).filter(|a| !used.contains(a)).collect();
        let a = *spare.choose(&mut rng).expect("state shorter than 16");
        let prepended = Configuration::new_unchecked(
            cfg.state.push_left(a).expect("fresh atom"),
            cfg.stack.clone(),
            cfg.expr.clone(),
        );
        let (l, r) = (
            m.run(cfg.clone(), fuel).termination(),
            m.run(prepended, fuel).termination(),
        );
        let res = if l == r {
            Ok(())
        } else {
            Err(format!(
                "{l} vs {r} after prepending {a} to {}",
                config_to_string(&cfg)
            ))
        };
        (res, vec![tag(l)])
    });
    SuiteReport::collect("affine-prepend", results)
}

/// Verdicts and step counts do not depend on which fresh atom is chosen.
pub fn fresh_policy_suite(sig: &Signature, samples: usize, fuel: u64, seed: u64) -> SuiteReport {
    let least = Machine::with_policy(sig, FreshPolicy::LeastUnused);
    let greatest = Machine::with_policy(sig, FreshPolicy::GreatestPlusOne);
    let results = run_samples(samples, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let (cfg, _) = gen_config(sig, &mut rng, &ConfigSpec::default());
        let (l, r) = (
            least.run(cfg.clone(), fuel).termination(),
            greatest.run(cfg.clone(), fuel).termination(),
        );
        let res = if l == r {
            Ok(())
        } else {
            Err(format!("{l} vs {r} for {}", config_to_string(&cfg)))
        };
        (res, vec![tag(l)])
    });
    SuiteReport::collect("fresh-policy", results)
}

/// `⟨s,F,e⟩` against `⟨s,Id,F[e]⟩`. Verdicts must agree; the second run
/// gets `depth(F)` extra fuel for the administrative `let` steps, and the
/// step difference is tallied under `diff=k`.
pub fn stack_correspondence_suite(
    sig: &Signature,
    samples: usize,
    fuel: u64,
    seed: u64,
) -> SuiteReport {
    let m = Machine::new(sig);
    let results = run_samples(samples, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let (cfg, _) = gen_config(sig, &mut rng, &ConfigSpec::default());
        let depth = cfg.stack.depth() as u64;
        let flat = Configuration::new_unchecked(
            cfg.state.clone(),
            FrameStack::id(),
            stack_apply(&cfg.stack, &cfg.expr),
        );
        let (l, r) = (
            m.run(cfg.clone(), fuel).termination(),
            m.run(flat, fuel + depth).termination(),
        );
        let mut tags = vec![tag(l)];
        let res = if l.terminated() != r.terminated() {
            Err(format!("{l} vs {r} for {}", config_to_string(&cfg)))
        } else {
            if l.terminated() {
                tags.push(format!("diff={}", r.steps() as i64 - l.steps() as i64));
                tags.push(
                    if r.steps() == l.steps() + depth {
                        "diff=depth"
                    } else {
                        "diff!=depth"
                    }
                    .into(),
                );
            }
            Ok(())
        };
        (res, tags)
    });
    SuiteReport::collect("stack-correspondence", results)
}

/// `swap_τ a b (swap_τ a b v)` is α-equivalent to `v`, and a single swap is
/// α-equivalent to `(a b)·v`.
pub fn swap_involution_suite(sig: &Signature, samples: usize, seed: u64) -> SuiteReport {
    let m = Machine::new(sig);
    let w: World = (0..4).map(Atom).collect();
    let atoms: Vec<Atom> = w.iter().copied().collect();
    let results = run_samples(samples, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let ty = gen_arity(sig, &mut rng, 3);
        let v = match gen_value_rng(sig, &ty, &w, 5, &mut rng) {
            Ok(v) => v,
            Err(e) => return (Err(e.to_string()), vec![]),
        };
        let a = *atoms.choose(&mut rng).expect("non-empty");
        let b = *atoms.choose(&mut rng).expect("non-empty");
        let sw = from_expr(&gen_swap(sig, &ty));
        let once =
            |x: Surface| Surface::apps(sw.clone(), vec![Surface::Atom(a), Surface::Atom(b), x]);
        let eval = |s: Surface| {
            let state = State::new(atoms.clone()).expect("distinct");
            m.run(
                Configuration::new_unchecked(state, FrameStack::id(), desugar(&s)),
                1_000_000,
            )
        };
        let check = || -> Result<(), String> {
            let single = eval(once(from_value(&v)));
            let double = eval(once(once(from_value(&v))));
            let (Some(v1), Some(v2)) = (single.value(), double.value()) else {
                return Err(format!("did not terminate: {single} / {double}"));
            };
            let mut wa = w.clone();
            v1.collect_atoms(&mut wa);
            v2.collect_atoms(&mut wa);
            let same = |x, y| alpha_eq(sig, &wa, x, y, &ty).map_err(|e| e.to_string());
            if !same(v2, &v)? {
                return Err(format!(
                    "swap twice gave {} for {} at {ty}",
                    value_to_string(v2),
                    value_to_string(&v)
                ));
            }
            if !same(v1, &v.permute(&Permutation::swap(a, b)))? {
                return Err(format!(
                    "swap gave {} for {} at {ty}",
                    value_to_string(v1),
                    value_to_string(&v)
                ));
            }
            Ok(())
        };
        (
            check(),
            vec![if a == b { "a=b" } else { "a!=b" }.to_string()],
        )
    });
    SuiteReport::collect("swap-involution", results)
}

/// The context `let <x1> x2 = [-] #a0 in @eq x1 x2`, filled with
/// `fun(f x = <a> x)`, run from `[#a0,#a1]`.
pub fn binder_context_expr(bound: Atom) -> Expr {
    let f = Surface::Fun {
        name: crate::syntax::name("f"),
        param: crate::syntax::name("x"),
        param_ty: Type::Atm,
        ret_ty: None,
        body: Box::new(Surface::bind(Surface::Atom(bound), Surface::var("x"))),
    };
    desugar(&Surface::let_bind(
        "x1",
        "x2",
        Surface::app(f, Surface::Atom(Atom(0))),
        Surface::obs("eq", vec![Surface::var("x1"), Surface::var("x2")]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_small_budgets() {
        let sig = rich_signature();
        assert!(equivariance_suite(&sig, 50, 2000, 1).ok());
        assert!(safety_suite(&sig, 50, 200, 2).ok());
        assert!(fresh_policy_suite(&sig, 50, 2000, 3).ok());
        assert!(stack_correspondence_suite(&sig, 50, 2000, 4).ok());
        assert!(swap_involution_suite(&lambda_signature(), 30, 5).ok());
        let affine = lambda_signature().with_observations([Observation::lt()]);
        assert!(affine_suite(&affine, 50, 2000, 6).ok());
    }

    #[test]
    fn binder_context_values() {
        let sig = Signature::basic();
        let m = Machine::new(&sig);
        let s = State::new(vec![Atom(0), Atom(1)]).unwrap();
        let run = |a| {
            m.run(
                Configuration::new(s.clone(), FrameStack::id(), binder_context_expr(a)).unwrap(),
                100,
            )
        };
        assert_eq!(run(Atom(0)).value().and_then(|v| v.as_numeral()), Some(0));
        assert_eq!(run(Atom(1)).value().and_then(|v| v.as_numeral()), Some(1));
    }
}
