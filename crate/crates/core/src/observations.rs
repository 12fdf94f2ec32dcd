//! State-dependent observations on atoms and sampled checks of their
//! equivariance and affineness.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::atom::{Atom, Permutation, State};
use crate::rng::trial_rng;
use crate::syntax::{name, Name};

/// Small interpreted language for user observations. It can only inspect
/// positions, the state length and atom equality, so every term is
/// equivariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObsTerm {
    /// Length of the state.
    Len,
    /// Zero-based position of argument `i` in the state.
    Pos(usize),
    Const(u64),
    Add(Box<ObsTerm>, Box<ObsTerm>),
    /// Truncated subtraction.
    Sub(Box<ObsTerm>, Box<ObsTerm>),
    /// `if $i = $j then t else u`.
    IfEq(usize, usize, Box<ObsTerm>, Box<ObsTerm>),
    /// `if $i < $j then t else u`, comparing positions in the state.
    IfLt(usize, usize, Box<ObsTerm>, Box<ObsTerm>),
}

impl ObsTerm {
    pub fn eval(&self, s: &State, args: &[Atom]) -> u64 {
        let pos = |i: usize| s.position(args[i]).expect("argument in state") as u64;
        match self {
            ObsTerm::Len => s.len() as u64,
            ObsTerm::Pos(i) => pos(*i),
            ObsTerm::Const(n) => *n,
            ObsTerm::Add(a, b) => a.eval(s, args).saturating_add(b.eval(s, args)),
            ObsTerm::Sub(a, b) => a.eval(s, args).saturating_sub(b.eval(s, args)),
            ObsTerm::IfEq(i, j, t, u) => {
                if args[*i] == args[*j] {
                    t.eval(s, args)
                } else {
                    u.eval(s, args)
                }
            }
            ObsTerm::IfLt(i, j, t, u) => {
                if pos(*i) < pos(*j) {
                    t.eval(s, args)
                } else {
                    u.eval(s, args)
                }
            }
        }
    }

    /// Largest argument index mentioned, if any.
    pub fn max_arg(&self) -> Option<usize> {
        match self {
            ObsTerm::Len | ObsTerm::Const(_) => None,
            ObsTerm::Pos(i) => Some(*i),
            ObsTerm::Add(a, b) | ObsTerm::Sub(a, b) => a.max_arg().max(b.max_arg()),
            ObsTerm::IfEq(i, j, t, u) | ObsTerm::IfLt(i, j, t, u) => {
                Some(*i.max(j)).max(t.max_arg()).max(u.max_arg())
            }
        }
    }

    /// Whether the value can depend on the state beyond the relative order of
    /// the arguments (positions are absolute, so any `len` or `pos` breaks the
    /// prepend law in general).
    pub fn reads_absolute_positions(&self) -> bool {
        match self {
            ObsTerm::Len | ObsTerm::Pos(_) => true,
            ObsTerm::Const(_) => false,
            ObsTerm::Add(a, b) | ObsTerm::Sub(a, b) => {
                a.reads_absolute_positions() || b.reads_absolute_positions()
            }
            ObsTerm::IfEq(_, _, t, u) | ObsTerm::IfLt(_, _, t, u) => {
                t.reads_absolute_positions() || u.reads_absolute_positions()
            }
        }
    }
}

impl fmt::Display for ObsTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsTerm::Len => write!(f, "len"),
            ObsTerm::Pos(i) => write!(f, "pos ${i}"),
            ObsTerm::Const(n) => write!(f, "{n}"),
            ObsTerm::Add(a, b) => write!(f, "({a} + {b})"),
            ObsTerm::Sub(a, b) => write!(f, "({a} - {b})"),
            ObsTerm::IfEq(i, j, t, u) => write!(f, "(if ${i} = ${j} then {t} else {u})"),
            ObsTerm::IfLt(i, j, t, u) => write!(f, "(if ${i} < ${j} then {t} else {u})"),
        }
    }
}

pub type HostFn = Arc<dyn Fn(&State, &[Atom]) -> u64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Eq,
    Lt,
    Ord,
    Card,
    RawIndex,
}

#[derive(Clone)]
pub enum ObsFn {
    Builtin(Builtin),
    Term(ObsTerm),
    Host(HostFn),
}

impl fmt::Debug for ObsFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsFn::Builtin(b) => write!(f, "Builtin({b:?})"),
            ObsFn::Term(t) => write!(f, "Term({t})"),
            ObsFn::Host(_) => write!(f, "Host(..)"),
        }
    }
}

/// `⟦o⟧_s`, with its arity and declared properties.
#[derive(Clone, Debug)]
pub struct Observation {
    pub name: Name,
    pub arity: usize,
    pub eval: ObsFn,
    pub equivariant: bool,
    pub affine: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObsError {
    #[error("E_ARITY: observation {obs} expects {expected} argument(s), got {found}")]
    Arity {
        obs: Name,
        expected: usize,
        found: usize,
    },
    #[error("E_ATOM_ESCAPE: observation argument {0} is not in the state")]
    AtomEscape(Atom),
}

#[derive(Debug, Clone, Error)]
pub enum RegistrationError {
    #[error("observation {0} is already registered")]
    Duplicate(Name),
    #[error("observation {name} is declared {property} but sampling refuted it: {counterexample}")]
    Refuted {
        name: Name,
        property: &'static str,
        counterexample: Box<Counterexample>,
    },
    #[error("observation {name} mentions argument ${index} but has arity {arity}")]
    BadArgument {
        name: Name,
        index: usize,
        arity: usize,
    },
}

impl Observation {
    fn builtin(n: &str, arity: usize, b: Builtin, equivariant: bool, affine: bool) -> Self {
        Observation {
            name: name(n),
            arity,
            eval: ObsFn::Builtin(b),
            equivariant,
            affine,
        }
    }

    /// 0 if the atoms are equal, 1 otherwise.
    pub fn eq() -> Self {
        Observation::builtin("eq", 2, Builtin::Eq, true, true)
    }

    /// 0 if the first atom occurs strictly to the left of the second.
    pub fn lt() -> Self {
        Observation::builtin("lt", 2, Builtin::Lt, true, true)
    }

    /// Zero-based position of the atom in the state.
    pub fn ord() -> Self {
        Observation::builtin("ord", 1, Builtin::Ord, true, false)
    }

    /// Length of the state.
    pub fn card() -> Self {
        Observation::builtin("card", 0, Builtin::Card, true, false)
    }

    /// The atom's enumeration index. Not equivariant; for negative tests only.
    pub fn raw_index() -> Self {
        Observation::builtin("raw_index", 1, Builtin::RawIndex, false, false)
    }

    pub fn from_term(n: &str, arity: usize, term: ObsTerm) -> Self {
        let affine = !term.reads_absolute_positions();
        Observation {
            name: name(n),
            arity,
            eval: ObsFn::Term(term),
            equivariant: true,
            affine,
        }
    }

    pub fn from_host(n: &str, arity: usize, f: HostFn, equivariant: bool, affine: bool) -> Self {
        Observation {
            name: name(n),
            arity,
            eval: ObsFn::Host(f),
            equivariant,
            affine,
        }
    }

    /// Looks up a built-in by name.
    pub fn by_name(n: &str) -> Option<Self> {
        builtin_registry().into_iter().find(|o| &*o.name == n)
    }

    /// Evaluation without argument checks; callers guarantee arity and
    /// membership.
    pub fn eval_unchecked(&self, s: &State, args: &[Atom]) -> u64 {
        match &self.eval {
            ObsFn::Builtin(Builtin::Eq) => u64::from(args[0] != args[1]),
            ObsFn::Builtin(Builtin::Lt) => {
                let (i, j) = (s.position(args[0]), s.position(args[1]));
                u64::from(!(i < j))
            }
            ObsFn::Builtin(Builtin::Ord) => s.position(args[0]).expect("argument in state") as u64,
            ObsFn::Builtin(Builtin::Card) => s.len() as u64,
            ObsFn::Builtin(Builtin::RawIndex) => u64::from(args[0].index()),
            ObsFn::Term(t) => t.eval(s, args),
            ObsFn::Host(f) => f(s, args),
        }
    }

    /// Runs the sampled checkers against every flag declared true.
    pub fn confirm_flags(&self, trials: usize, seed: u64) -> Result<(), RegistrationError> {
        if let ObsFn::Term(t) = &self.eval {
            if let Some(i) = t.max_arg().filter(|&i| i >= self.arity) {
                return Err(RegistrationError::BadArgument {
                    name: self.name.clone(),
                    index: i,
                    arity: self.arity,
                });
            }
        }
        if self.equivariant {
            if let Verdict::Counterexample(c) = check_equivariance(self, trials, seed) {
                return Err(RegistrationError::Refuted {
                    name: self.name.clone(),
                    property: "equivariant",
                    counterexample: Box::new(c),
                });
            }
        }
        if self.affine {
            if let Verdict::Counterexample(c) = check_affine(self, trials, seed) {
                return Err(RegistrationError::Refuted {
                    name: self.name.clone(),
                    property: "affine",
                    counterexample: Box::new(c),
                });
            }
        }
        Ok(())
    }
}

/// `⟦o⟧_s(a1, ..., ak)`.
pub fn eval_obs(o: &Observation, s: &State, args: &[Atom]) -> Result<u64, ObsError> {
    if args.len() != o.arity {
        return Err(ObsError::Arity {
            obs: o.name.clone(),
            expected: o.arity,
            found: args.len(),
        });
    }
    if let Some(&a) = args.iter().find(|&&a| !s.contains(a)) {
        return Err(ObsError::AtomEscape(a));
    }
    Ok(o.eval_unchecked(s, args))
}

/// eq, lt, ord, card and the non-equivariant raw_index.
pub fn builtin_registry() -> Vec<Observation> {
    vec![
        Observation::eq(),
        Observation::lt(),
        Observation::ord(),
        Observation::card(),
        Observation::raw_index(),
    ]
}

/// A refuting instance of a checked law. For equivariance `perm` is set; for
/// the prepend law `prepended` is.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub state: Vec<Atom>,
    pub perm: Option<Vec<(Atom, Atom)>>,
    pub prepended: Option<Atom>,
    pub args: Vec<Atom>,
    pub left: u64,
    pub right: u64,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let state = State::new(self.state.clone())
            .map(|s| s.to_string())
            .unwrap_or_default();
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "state={state} | args=({})", args.join(","))?;
        if let Some(p) = &self.perm {
            let swaps: Vec<String> = p.iter().map(|(a, b)| format!("({a} {b})")).collect();
            write!(f, " | perm={}", swaps.join(""))?;
        }
        if let Some(a) = self.prepended {
            write!(f, " | prepended={a}")?;
        }
        write!(f, " | {} vs {}", self.left, self.right)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass { trials: usize },
    Counterexample(Counterexample),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }
}

const CHECK_POOL: u32 = 16;
const CHECK_MAX_LEN: usize = 8;

fn sample_state(rng: &mut ChaCha8Rng, min_len: usize) -> State {
    let mut pool: Vec<Atom> = (0..CHECK_POOL).map(Atom).collect();
    pool.shuffle(rng);
    let len = rng.gen_range(min_len..=CHECK_MAX_LEN);
    State::new(pool[..len].to_vec()).expect("distinct")
}

fn sample_args(rng: &mut ChaCha8Rng, s: &State, arity: usize) -> Vec<Atom> {
    (0..arity)
        .map(|_| *s.atoms().choose(rng).expect("non-empty"))
        .collect()
}

/// Samples `⟦o⟧_s(ā) = ⟦o⟧_{π·s}(π·ā)` with states of length at most 8 and
/// permutations supported in the first 16 atoms.
pub fn check_equivariance(o: &Observation, trials: usize, seed: u64) -> Verdict {
    let min_len = usize::from(o.arity > 0);
    let found = (0..trials).into_par_iter().find_map_first(|t| {
        let mut rng = trial_rng(seed, t as u64);
        let s = sample_state(&mut rng, min_len);
        let args = sample_args(&mut rng, &s, o.arity);
        let swaps: Vec<(Atom, Atom)> = (0..rng.gen_range(1..=4))
            .map(|_| {
                (
                    Atom(rng.gen_range(0..CHECK_POOL)),
                    Atom(rng.gen_range(0..CHECK_POOL)),
                )
            })
            .collect();
        let pi = Permutation::from_swaps(swaps.clone());
        let left = o.eval_unchecked(&s, &args);
        let pargs: Vec<Atom> = args.iter().map(|&a| pi.apply(a)).collect();
        let right = o.eval_unchecked(&s.permute(&pi), &pargs);
        (left != right).then(|| Counterexample {
            state: s.atoms().to_vec(),
            perm: Some(swaps),
            prepended: None,
            args,
            left,
            right,
        })
    });
    match found {
        Some(c) => Verdict::Counterexample(c),
        None => Verdict::Pass { trials },
    }
}

/// Samples the prepend law `⟦o⟧_{a′◁s}(ā) = ⟦o⟧_s(ā)` for fresh `a′`.
pub fn check_affine(o: &Observation, trials: usize, seed: u64) -> Verdict {
    let min_len = usize::from(o.arity > 0);
    let found = (0..trials).into_par_iter().find_map_first(|t| {
        let mut rng = trial_rng(seed, t as u64);
        let s = sample_state(&mut rng, min_len);
        let args = sample_args(&mut rng, &s, o.arity);
        let outside: Vec<Atom> = (0..CHECK_POOL)
            .map(Atom)
            .filter(|&a| !s.contains(a))
            .collect();
        let fresh = *outside.choose(&mut rng).expect("pool larger than state");
        let left = o.eval_unchecked(&s.push_left(fresh).expect("fresh"), &args);
        let right = o.eval_unchecked(&s, &args);
        (left != right).then(|| Counterexample {
            state: s.atoms().to_vec(),
            perm: None,
            prepended: Some(fresh),
            args,
            left,
            right,
        })
    });
    match found {
        Some(c) => Verdict::Counterexample(c),
        None => Verdict::Pass { trials },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(ix: &[u32]) -> State {
        State::new(ix.iter().map(|&i| Atom(i)).collect()).unwrap()
    }

    #[test]
    fn builtin_values() {
        let s = st(&[0, 1]);
        assert_eq!(eval_obs(&Observation::eq(), &s, &[Atom(0), Atom(0)]), Ok(0));
        assert_eq!(eval_obs(&Observation::eq(), &s, &[Atom(0), Atom(1)]), Ok(1));
        assert_eq!(eval_obs(&Observation::lt(), &s, &[Atom(1), Atom(0)]), Ok(1));
        assert_eq!(eval_obs(&Observation::lt(), &s, &[Atom(0), Atom(1)]), Ok(0));
        assert_eq!(eval_obs(&Observation::lt(), &s, &[Atom(0), Atom(0)]), Ok(1));
        assert_eq!(eval_obs(&Observation::card(), &s, &[]), Ok(2));
        let s = st(&[5, 2]);
        assert_eq!(eval_obs(&Observation::ord(), &s, &[Atom(2)]), Ok(1));
        assert_eq!(eval_obs(&Observation::ord(), &s, &[Atom(5)]), Ok(0));
        assert_eq!(
            eval_obs(&Observation::raw_index(), &st(&[7]), &[Atom(7)]),
            Ok(7)
        );
    }

    #[test]
    fn eval_checks_arguments() {
        let s = st(&[0]);
        assert!(matches!(
            eval_obs(&Observation::eq(), &s, &[Atom(0)]),
            Err(ObsError::Arity {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert_eq!(
            eval_obs(&Observation::ord(), &s, &[Atom(3)]),
            Err(ObsError::AtomEscape(Atom(3)))
        );
    }

    #[test]
    fn checker_verdicts() {
        for o in [
            Observation::eq(),
            Observation::lt(),
            Observation::ord(),
            Observation::card(),
        ] {
            assert!(check_equivariance(&o, 300, 1).passed(), "{}", o.name);
        }
        assert!(!check_equivariance(&Observation::raw_index(), 300, 1).passed());
        assert!(check_affine(&Observation::eq(), 300, 1).passed());
        assert!(check_affine(&Observation::lt(), 300, 1).passed());
        assert!(!check_affine(&Observation::ord(), 100, 1).passed());
        assert!(!check_affine(&Observation::card(), 1, 1).passed());
    }

    #[test]
    fn checkers_are_deterministic_in_seed() {
        let a = check_equivariance(&Observation::raw_index(), 100, 9);
        let b = check_equivariance(&Observation::raw_index(), 100, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn term_observations() {
        // Distance between two atoms in the state.
        let dist = ObsTerm::IfLt(
            0,
            1,
            Box::new(ObsTerm::Sub(
                Box::new(ObsTerm::Pos(1)),
                Box::new(ObsTerm::Pos(0)),
            )),
            Box::new(ObsTerm::Sub(
                Box::new(ObsTerm::Pos(0)),
                Box::new(ObsTerm::Pos(1)),
            )),
        );
        let o = Observation::from_term("dist", 2, dist);
        assert!(!o.affine);
        assert_eq!(eval_obs(&o, &st(&[3, 1, 4]), &[Atom(4), Atom(3)]), Ok(2));
        assert!(check_equivariance(&o, 200, 0).passed());
        // Differences of positions are translation invariant even though the
        // syntactic approximation cannot see it.
        assert!(check_affine(&o, 200, 0).passed());
        let same = Observation::from_term(
            "same",
            2,
            ObsTerm::IfEq(
                0,
                1,
                Box::new(ObsTerm::Const(7)),
                Box::new(ObsTerm::Const(3)),
            ),
        );
        assert!(same.affine);
        assert!(same.confirm_flags(200, 0).is_ok());
    }

    #[test]
    fn registration_rejects_refuted_flags() {
        let mut lying = Observation::raw_index();
        lying.equivariant = true;
        assert!(matches!(
            lying.confirm_flags(500, 0),
            Err(RegistrationError::Refuted {
                property: "equivariant",
                ..
            })
        ));
        let mut lying = Observation::card();
        lying.affine = true;
        assert!(matches!(
            lying.confirm_flags(50, 0),
            Err(RegistrationError::Refuted {
                property: "affine",
                ..
            })
        ));
        let bad = Observation::from_term("p", 1, ObsTerm::Pos(2));
        assert!(matches!(
            bad.confirm_flags(10, 0),
            Err(RegistrationError::BadArgument { .. })
        ));
    }
}
