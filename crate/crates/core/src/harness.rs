//! Budgeted CIU testing: two closed expressions are run under sampled
//! states and frame stacks and compared on termination.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::atom::{Atom, State, World};
use crate::generate::{ExprGen, StackGen};
use crate::machine::{FreshPolicy, Machine, Termination};
use crate::nominal::{alpha_eq, gen_aeq, gen_value_rng, least_outside, NominalError};
use crate::print::{stack_to_string, value_to_string};
use crate::rng::trial_rng;
use crate::surface::{desugar, from_expr, from_value, Surface, SurfaceArm};
use crate::syntax::{name, Configuration, Expr, Frame, FrameStack, Name, Value};
use crate::types::{check_expr, is_nominal_arity, type_of, Signature, Type, TypeError, TypingEnv};

pub const DEFAULT_FUEL: u64 = 10_000;
pub const DEFAULT_TRIALS: usize = 500;

/// Trials are evaluated in chunks of this size so a distinction found early
/// stops the run while the reported trial stays deterministic.
const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Nominal(#[from] NominalError),
    #[error("E_TYPE: expected {expected}, found {found}")]
    Expected { expected: Type, found: Type },
    #[error("E_OPEN_EXPR: free variable {0}")]
    Open(Name),
    #[error("E_ATOM_ESCAPE: atom {0} is not in the world")]
    AtomOutsideWorld(Atom),
}

impl HarnessError {
    pub fn code(&self) -> &'static str {
        match self {
            HarnessError::Type(e) => e.code(),
            HarnessError::Nominal(e) => e.code(),
            HarnessError::Expected { .. } => "E_TYPE",
            HarnessError::Open(_) => "E_OPEN_EXPR",
            HarnessError::AtomOutsideWorld(_) => "E_ATOM_ESCAPE",
        }
    }
}

/// Sampling budget and knobs for [`ciu_test_with`].
#[derive(Clone, Debug)]
pub struct CiuSpec {
    pub trials: usize,
    pub fuel: u64,
    pub seed: u64,
    pub max_stack_depth: usize,
    /// Values the sampled stacks may compare against with `aeq`.
    pub probes: Vec<Value>,
    pub policy: FreshPolicy,
    /// When one side terminates and the other runs out of fuel, the
    /// exhausted side is rerun with `fuel * confirm_factor` before the trial
    /// counts as a distinction. 1 disables the rerun.
    pub confirm_factor: u64,
}

impl CiuSpec {
    pub fn new(trials: usize, fuel: u64, seed: u64) -> Self {
        CiuSpec {
            trials,
            fuel,
            seed,
            max_stack_depth: 5,
            probes: Vec::new(),
            policy: FreshPolicy::LeastUnused,
            confirm_factor: 10,
        }
    }

    pub fn with_probes(mut self, probes: Vec<Value>) -> Self {
        // Sorted so that swapping the two sides samples the same stacks.
        let mut probes = probes;
        probes.sort_by_cached_key(value_to_string);
        probes.dedup();
        self.probes = probes;
        self
    }
}

/// A sampled state and stack under which exactly one side terminated.
#[derive(Clone, Debug, Serialize)]
pub struct Distinction {
    pub trial: u64,
    pub seed: u64,
    pub state: State,
    #[serde(skip)]
    pub stack: FrameStack,
    #[serde(rename = "stack")]
    pub stack_text: String,
    pub left: Termination,
    pub right: Termination,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict")]
pub enum CiuVerdict {
    NoCounterexampleFound {
        trials: usize,
        inconclusive: usize,
        /// Trials where one side needed the confirmation rerun to terminate.
        confirmed_slow: usize,
    },
    Distinguished {
        trials: usize,
        inconclusive: usize,
        counterexample: Box<Distinction>,
    },
    /// More than half of the trials exhausted fuel on both sides.
    Inconclusive { trials: usize, inconclusive: usize },
}

impl CiuVerdict {
    pub fn is_distinguished(&self) -> bool {
        matches!(self, CiuVerdict::Distinguished { .. })
    }

    pub fn is_no_counterexample(&self) -> bool {
        matches!(self, CiuVerdict::NoCounterexampleFound { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            CiuVerdict::NoCounterexampleFound { .. } => "NoCounterexampleFound",
            CiuVerdict::Distinguished { .. } => "Distinguished",
            CiuVerdict::Inconclusive { .. } => "Inconclusive",
        }
    }

    pub fn trials(&self) -> usize {
        match self {
            CiuVerdict::NoCounterexampleFound { trials, .. }
            | CiuVerdict::Distinguished { trials, .. }
            | CiuVerdict::Inconclusive { trials, .. } => *trials,
        }
    }

    pub fn inconclusive(&self) -> usize {
        match self {
            CiuVerdict::NoCounterexampleFound { inconclusive, .. }
            | CiuVerdict::Distinguished { inconclusive, .. }
            | CiuVerdict::Inconclusive { inconclusive, .. } => *inconclusive,
        }
    }

    fn from_counts(
        trials: usize,
        inconclusive: usize,
        slow: usize,
        found: Option<Distinction>,
    ) -> Self {
        match found {
            Some(d) => CiuVerdict::Distinguished {
                trials,
                inconclusive,
                counterexample: Box::new(d),
            },
            None if inconclusive * 2 > trials => CiuVerdict::Inconclusive {
                trials,
                inconclusive,
            },
            None => CiuVerdict::NoCounterexampleFound {
                trials,
                inconclusive,
                confirmed_slow: slow,
            },
        }
    }
}

impl std::fmt::Display for CiuVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CiuVerdict::NoCounterexampleFound {
                trials,
                inconclusive,
                ..
            } => {
                write!(
                    f,
                    "NoCounterexampleFound trials={trials} inconclusive={inconclusive}"
                )
            }
            CiuVerdict::Inconclusive {
                trials,
                inconclusive,
            } => {
                write!(
                    f,
                    "Inconclusive trials={trials} inconclusive={inconclusive}"
                )
            }
            CiuVerdict::Distinguished {
                counterexample: d, ..
            } => write!(
                f,
                "Distinguished trial={} state={} stack={} left={} right={}",
                d.trial, d.state, d.stack_text, d.left, d.right
            ),
        }
    }
}

/// `atom(s) ⊇ w`, with up to four extra atoms, in random order.
pub fn sample_state(rng: &mut impl Rng, w: &World) -> State {
    let top = w.iter().next_back().map_or(0, |a| a.index() + 1) + 8;
    let mut spare: Vec<Atom> = (0..top).map(Atom).filter(|a| !w.contains(a)).collect();
    spare.shuffle(rng);
    spare.truncate(rng.gen_range(0..=4));
    spare.extend(w.iter().copied());
    spare.shuffle(rng);
    State::new(spare).expect("distinct atoms")
}

fn check_closed(sig: &Signature, w: &World, e: &Expr, ty: &Type) -> Result<(), HarnessError> {
    if let Some(x) = e.free_vars().into_iter().next() {
        return Err(HarnessError::Open(x));
    }
    let t = type_of(sig, e)?;
    if &t != ty {
        return Err(HarnessError::Expected {
            expected: ty.clone(),
            found: t,
        });
    }
    if let Some(a) = e.atoms().into_iter().find(|a| !w.contains(a)) {
        return Err(HarnessError::AtomOutsideWorld(a));
    }
    Ok(())
}

enum Trial {
    Agree,
    Slow,
    BothFuel,
    Distinct(Distinction),
}

/// `⊢w e ≅ e′ : τ`, tested with the default stack depth and no probes.
#[allow(clippy::too_many_arguments)]
pub fn ciu_test(
    sig: &Signature,
    w: &World,
    e: &Expr,
    e2: &Expr,
    ty: &Type,
    trials: usize,
    fuel: u64,
    seed: u64,
) -> Result<CiuVerdict, HarnessError> {
    ciu_test_with(sig, w, e, e2, ty, &CiuSpec::new(trials, fuel, seed))
}

pub fn ciu_test_with(
    sig: &Signature,
    w: &World,
    e: &Expr,
    e2: &Expr,
    ty: &Type,
    spec: &CiuSpec,
) -> Result<CiuVerdict, HarnessError> {
    check_closed(sig, w, e, ty)?;
    check_closed(sig, w, e2, ty)?;
    let machine = Machine::with_policy(sig, spec.policy);
    let run_trial = |i: u64| -> Trial {
        let mut rng = trial_rng(spec.seed, i);
        let state = sample_state(&mut rng, w);
        let (stack, _) =
            StackGen::new(sig, w, &spec.probes).gen(&mut rng, ty, spec.max_stack_depth);
        let run = |e: &Expr, fuel| {
            machine
                .run(
                    Configuration::new_unchecked(state.clone(), stack.clone(), e.clone()),
                    fuel,
                )
                .termination()
        };
        let (l, r) = (run(e, spec.fuel), run(e2, spec.fuel));
        match (l.terminated(), r.terminated()) {
            (true, true) => Trial::Agree,
            (false, false) => {
                if matches!(l, Termination::FuelExhausted(_))
                    && matches!(r, Termination::FuelExhausted(_))
                {
                    Trial::BothFuel
                } else {
                    Trial::Agree
                }
            }
            (lt, _) => {
                let slow = if spec.confirm_factor > 1 {
                    let big = spec.fuel.saturating_mul(spec.confirm_factor);
                    if lt {
                        run(e2, big)
                    } else {
                        run(e, big)
                    }
                } else {
                    if lt {
                        r
                    } else {
                        l
                    }
                };
                if slow.terminated() {
                    Trial::Slow
                } else {
                    Trial::Distinct(Distinction {
                        trial: i,
                        seed: spec.seed,
                        state: state.clone(),
                        stack_text: stack_to_string(&stack),
                        stack,
                        left: l,
                        right: r,
                    })
                }
            }
        }
    };

    let (mut inconclusive, mut slow) = (0, 0);
    let mut start = 0;
    while start < spec.trials {
        let end = (start + CHUNK).min(spec.trials);
        let results: Vec<Trial> = (start..end)
            .into_par_iter()
            .map(|i| run_trial(i as u64))
            .collect();
        for (k, t) in results.into_iter().enumerate() {
            match t {
                Trial::Agree => {}
                Trial::Slow => slow += 1,
                Trial::BothFuel => inconclusive += 1,
                Trial::Distinct(d) => {
                    return Ok(CiuVerdict::from_counts(
                        start + k + 1,
                        inconclusive,
                        slow,
                        Some(d),
                    ));
                }
            }
        }
        start = end;
    }
    Ok(CiuVerdict::from_counts(
        spec.trials,
        inconclusive,
        slow,
        None,
    ))
}

/// Reruns a recorded distinction.
pub fn replay(
    sig: &Signature,
    d: &Distinction,
    e: &Expr,
    e2: &Expr,
    fuel: u64,
    policy: FreshPolicy,
) -> (Termination, Termination) {
    let m = Machine::with_policy(sig, policy);
    let run = |e: &Expr| {
        m.run(
            Configuration::new_unchecked(d.state.clone(), d.stack.clone(), e.clone()),
            fuel,
        )
        .termination()
    };
    (run(e), run(e2))
}

/// A closed value of type `ty`: sampled at nominal arities, otherwise drawn
/// from constant, diverging and random function values. `None` at types
/// with no closed values.
fn instantiate(sig: &Signature, rng: &mut impl Rng, ty: &Type, w: &World) -> Option<Value> {
    if is_nominal_arity(sig, ty) {
        if let Ok(v) = gen_value_rng(sig, ty, w, 4, rng) {
            return Some(v);
        }
    }
    let mut g = ExprGen::new(sig, w);
    let s = match (ty, rng.gen_range(0..3)) {
        (Type::Fun(a, b), 0) => {
            let d = g.diverge(b);
            Surface::lam("%arg", (**a).clone(), d)
        }
        (Type::Fun(..), 1) => g.minimal(rng, ty),
        _ => g.value(rng, ty, 3),
    };
    desugar(&s).as_value().cloned()
}

/// `Γ ⊢ e ≅° e′ : τ`: closes both sides with sampled values for `Γ` over
/// worlds `w′ ⊇ w` and runs [`ciu_test_with`] on each instantiation.
pub fn open_ciu_test(
    sig: &Signature,
    gamma: &[(Name, Type)],
    w: &World,
    e: &Expr,
    e2: &Expr,
    ty: &Type,
    spec: &CiuSpec,
) -> Result<CiuVerdict, HarnessError> {
    for x in [e, e2] {
        let t = check_expr(sig, &mut TypingEnv::from_pairs(gamma.to_vec()), x)?;
        if &t != ty {
            return Err(HarnessError::Expected {
                expected: ty.clone(),
                found: t,
            });
        }
    }
    let instantiations = (spec.trials / 25).clamp(1, 40);
    let per = (spec.trials / instantiations).max(1);
    let (mut trials, mut inconclusive, mut slow) = (0, 0, 0);
    for k in 0..instantiations {
        let mut rng = trial_rng(spec.seed ^ 0x6f70_656e, k as u64);
        let mut w2 = w.clone();
        let top = w.iter().next_back().map_or(0, |a| a.index() + 1);
        for j in 0..rng.gen_range(1..=2) {
            w2.insert(Atom(top + j));
        }
        let bindings: Vec<(Name, Value)> = gamma
            .iter()
            .map(|(x, t)| {
                instantiate(sig, &mut rng, t, &w2)
                    .map(|v| (x.clone(), v))
                    .ok_or_else(|| NominalError::Uninhabited(t.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut wk = w2.clone();
        for (_, v) in &bindings {
            v.collect_atoms(&mut wk);
        }
        let (ei, ei2) = (e.substitute(&bindings), e2.substitute(&bindings));
        let sub = CiuSpec {
            trials: per,
            seed: spec.seed.wrapping_add(k as u64),
            ..spec.clone()
        };
        match ciu_test_with(sig, &wk, &ei, &ei2, ty, &sub)? {
            CiuVerdict::Distinguished {
                trials: t,
                inconclusive: i,
                counterexample,
            } => {
                return Ok(CiuVerdict::Distinguished {
                    trials: trials + t,
                    inconclusive: inconclusive + i,
                    counterexample,
                })
            }
            v => {
                trials += v.trials();
                inconclusive += v.inconclusive();
                if let CiuVerdict::NoCounterexampleFound { confirmed_slow, .. } = v {
                    slow += confirmed_slow;
                }
            }
        }
    }
    Ok(CiuVerdict::from_counts(trials, inconclusive, slow, None))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Holds,
    Violated,
    /// The premise did not hold within budget, or the converse was not
    /// applicable because a non-affine observation is registered.
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionalityReport {
    pub schema: u32,
    pub fresh: Atom,
    /// Renamed bodies at `w ∪ {a″}`.
    pub bodies: CiuVerdict,
    /// `⟨a⟩v` against `⟨a′⟩v′` at `w`.
    pub bindings: CiuVerdict,
    /// Bodies indistinguishable ⇒ bindings indistinguishable.
    pub direction_a: Direction,
    /// Bindings indistinguishable ⇒ bodies indistinguishable, affine only.
    pub direction_b: Direction,
}

/// Both directions of extensionality for atom-binding values.
#[allow(clippy::too_many_arguments)]
pub fn test_extensionality_bind(
    sig: &Signature,
    w: &World,
    a: Atom,
    v: &Value,
    a2: Atom,
    v2: &Value,
    ty: &Type,
    spec: &CiuSpec,
) -> Result<ExtensionalityReport, HarnessError> {
    let mut w = w.clone();
    w.insert(a);
    w.insert(a2);
    v.collect_atoms(&mut w);
    v2.collect_atoms(&mut w);
    let fresh = least_outside(&w);
    let (b1, b2) = (v.rename_atom(a, fresh), v2.rename_atom(a2, fresh));
    let mut wf = w.clone();
    wf.insert(fresh);
    let bodies = ciu_test_with(
        sig,
        &wf,
        &Expr::Val(b1.clone()),
        &Expr::Val(b2.clone()),
        ty,
        &spec.clone().with_probes(vec![b1, b2]),
    )?;
    let (l, r) = (
        Value::bind(Value::Atom(a), v.clone()),
        Value::bind(Value::Atom(a2), v2.clone()),
    );
    let bindings = ciu_test_with(
        sig,
        &w,
        &Expr::Val(l.clone()),
        &Expr::Val(r.clone()),
        &Type::bnd(ty.clone()),
        &spec.clone().with_probes(vec![l, r]),
    )?;
    let implies = |p: &CiuVerdict, q: &CiuVerdict| {
        if !p.is_no_counterexample() {
            Direction::NotApplicable
        } else if q.is_distinguished() {
            Direction::Violated
        } else {
            Direction::Holds
        }
    };
    let direction_a = implies(&bodies, &bindings);
    let direction_b = if sig.only_affine() {
        implies(&bindings, &bodies)
    } else {
        Direction::NotApplicable
    };
    Ok(ExtensionalityReport {
        schema: 1,
        fresh,
        bodies,
        bindings,
        direction_a,
        direction_b,
    })
}

/// `v ≜ fun(f x = f x)` and `v′ ≜ fun(f x = match o a with (Zero → () |
/// Succ y → v ()))` with `a = #a0`, both at `unit → unit`. Fails with
/// `E_ARITY` unless `o` is unary.
pub fn conjecture_values(sig: &Signature, obs: &str) -> Result<(Value, Value), TypeError> {
    let v = Value::fun(
        "f",
        "x",
        Type::Unit,
        Some(Type::Unit),
        Expr::App(Value::var("f"), Value::var("x")),
    );
    let body = Surface::match_(
        Surface::obs(obs, vec![Surface::Atom(Atom(0))]),
        vec![
            SurfaceArm {
                con: name("Zero"),
                var: Some(name("y")),
                body: Surface::Unit,
            },
            SurfaceArm {
                con: name("Succ"),
                var: Some(name("y")),
                body: Surface::app(from_value(&v), Surface::Unit),
            },
        ],
    );
    let v2 = desugar(&Surface::fun("f", "x", Type::Unit, Type::Unit, body))
        .as_value()
        .cloned()
        .expect("function literal");
    let expected = Type::fun(Type::Unit, Type::Unit);
    for x in [&v, &v2] {
        let t = type_of(sig, &Expr::Val(x.clone()))?;
        if t != expected {
            return Err(TypeError::Mismatch {
                rule: "conjecture",
                detail: format!("expected {expected}, found {t}"),
                subterm: value_to_string(x),
            });
        }
    }
    Ok((v, v2))
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessRun {
    pub state: State,
    pub stack: String,
    /// `v′{a:=a′}`
    pub left: Termination,
    /// `v{a:=a′}`
    pub right: Termination,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjectureReport {
    pub schema: u32,
    pub inequivalence: WitnessRun,
    pub label: &'static str,
    /// `⟨a⟩v` against `⟨a⟩v′` at `{a}`.
    pub conjecture: CiuVerdict,
}

/// The non-affine example: the exact inequivalence witness at state
/// `[#a1,#a0]`, and a sampled test of the accompanying conjecture.
pub fn test_example_conjecture(
    sig: &Signature,
    spec: &CiuSpec,
) -> Result<ConjectureReport, HarnessError> {
    let (v, v2) = conjecture_values(sig, "ord")?;
    let (a, a2) = (Atom(0), Atom(1));
    let state = State::new(vec![a2, a]).expect("distinct");
    let stack = FrameStack::id().with(Frame::new("x", Expr::App(Value::var("x"), Value::Unit)));
    let m = Machine::new(sig);
    let run = |x: &Value| {
        m.run(
            Configuration::new(
                state.clone(),
                stack.clone(),
                Expr::Val(x.rename_atom(a, a2)),
            )
            .expect("closed"),
            spec.fuel,
        )
        .termination()
    };
    let (left, right) = (run(&v2), run(&v));
    let inequivalence = WitnessRun {
        state: state.clone(),
        stack: stack_to_string(&stack),
        left,
        right,
        holds: left.terminated() && right == Termination::FuelExhausted(spec.fuel),
    };
    let w: World = [a].into_iter().collect();
    let (l, r) = (
        Value::bind(Value::Atom(a), v),
        Value::bind(Value::Atom(a), v2),
    );
    let conjecture = ciu_test_with(
        sig,
        &w,
        &Expr::Val(l),
        &Expr::Val(r),
        &Type::bnd(Type::fun(Type::Unit, Type::Unit)),
        spec,
    )?;
    Ok(ConjectureReport {
        schema: 1,
        inequivalence,
        label: "CONJECTURE",
        conjecture,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RepresentationViolation {
    pub index: usize,
    pub left: String,
    pub right: String,
    pub alpha: bool,
    pub kind: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RepresentationReport {
    pub schema: u32,
    pub pairs: usize,
    pub alpha_pairs: usize,
    pub non_alpha_pairs: usize,
    /// α-equivalent pairs whose CIU run was inconclusive.
    pub inconclusive_pairs: usize,
    pub violations: Vec<RepresentationViolation>,
}

/// Rebinds some binders of `v` to atoms from `spare` that do not occur in
/// `v`, giving an α-variant.
pub fn alpha_variant(rng: &mut impl Rng, v: &Value, spare: &[Atom]) -> Value {
    let used = v.atoms();
    let mut spare: Vec<Atom> = spare
        .iter()
        .copied()
        .filter(|a| !used.contains(a))
        .collect();
    spare.shuffle(rng);
    fn go(rng: &mut impl Rng, v: &Value, spare: &mut Vec<Atom>) -> Value {
        match v {
            Value::Pair(a, b) => Value::pair(go(rng, a, spare), go(rng, b, spare)),
            Value::Con(c, x) => Value::Con(c.clone(), std::sync::Arc::new(go(rng, x, spare))),
            Value::Bind(a, body) => {
                let body = go(rng, body, spare);
                match (&**a, rng.gen_bool(0.7)) {
                    (Value::Atom(a), true) if !spare.is_empty() => {
                        let c = spare.pop().expect("non-empty");
                        Value::bind(Value::Atom(c), body.rename_atom(*a, c))
                    }
                    _ => Value::bind((**a).clone(), body),
                }
            }
            _ => v.clone(),
        }
    }
    go(rng, v, &mut spare)
}

/// Runs `aeq_ar v v′` from the state listing `w` in order.
pub fn run_aeq(
    sig: &Signature,
    ar: &Type,
    w: &World,
    v: &Value,
    v2: &Value,
    fuel: u64,
) -> Result<Option<u64>, HarnessError> {
    let f = gen_aeq(sig, ar)?;
    let e = desugar(&Surface::apps(
        from_expr(&f),
        vec![from_value(v), from_value(v2)],
    ));
    let state = State::new(w.iter().copied().collect()).expect("distinct");
    let out = Machine::new(sig).run(
        Configuration::new_unchecked(state, FrameStack::id(), e),
        fuel,
    );
    Ok(out.value().and_then(Value::as_numeral))
}

/// Sampled pairs of closed values at `ar`: α-equivalent pairs must be CIU
/// indistinguishable, and the rest must be distinguished both by sampled
/// stacks and by the single `aeq_ar` context.
pub fn test_correctness_of_representation(
    sig: &Signature,
    ar: &Type,
    pairs: usize,
    spec: &CiuSpec,
) -> Result<RepresentationReport, HarnessError> {
    if !is_nominal_arity(sig, ar) {
        return Err(NominalError::NotNominal(ar.clone()).into());
    }
    let pool: World = (0..4).map(Atom).collect();
    let spare: Vec<Atom> = (4..6).map(Atom).collect();
    let w: World = pool.iter().copied().chain(spare.iter().copied()).collect();
    let sampled: Vec<(Value, Value)> = (0..pairs)
        .map(|i| {
            let mut rng = trial_rng(spec.seed ^ 0x7265_7072, i as u64);
            let v = gen_value_rng(sig, ar, &pool, 5, &mut rng)?;
            let v2 = match rng.gen_range(0..5) {
                0 => v.clone(),
                1 | 2 => alpha_variant(&mut rng, &v, &spare),
                _ => gen_value_rng(sig, ar, &pool, 5, &mut rng)?,
            };
            Ok((v, v2))
        })
        .collect::<Result<_, NominalError>>()?;

    let mut report = RepresentationReport {
        schema: 1,
        pairs,
        alpha_pairs: 0,
        non_alpha_pairs: 0,
        inconclusive_pairs: 0,
        violations: Vec::new(),
    };
    for (i, (v, v2)) in sampled.iter().enumerate() {
        let alpha = alpha_eq(sig, &w, v, v2, ar)?;
        let mut violation = |kind, detail: String| {
            report.violations.push(RepresentationViolation {
                index: i,
                left: value_to_string(v),
                right: value_to_string(v2),
                alpha,
                kind,
                detail,
            })
        };
        let aeq = run_aeq(sig, ar, &w, v, v2, spec.fuel)?;
        if aeq != Some(u64::from(!alpha)) {
            violation("aeq", format!("aeq evaluated to {aeq:?}"));
        }
        let sub = CiuSpec {
            seed: spec.seed.wrapping_add(i as u64),
            ..spec.clone()
        }
        .with_probes(vec![v.clone(), v2.clone()]);
        let verdict = ciu_test_with(
            sig,
            &w,
            &Expr::Val(v.clone()),
            &Expr::Val(v2.clone()),
            ar,
            &sub,
        )?;
        if alpha {
            report.alpha_pairs += 1;
            if verdict.is_distinguished() {
                violation("ciu", verdict.to_string());
            } else if !verdict.is_no_counterexample() {
                report.inconclusive_pairs += 1;
            }
        } else {
            report.non_alpha_pairs += 1;
            if !verdict.is_distinguished() {
                violation("ciu", verdict.to_string());
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct WorldReport {
    pub schema: u32,
    pub smaller: CiuVerdict,
    pub larger: CiuVerdict,
    pub differ: bool,
}

/// CIU verdicts for the same pair at `w ⊆ w′`. Reported, not asserted:
/// non-affine observations such as `card` can make them differ.
pub fn test_world_sensitivity(
    sig: &Signature,
    e: &Expr,
    e2: &Expr,
    ty: &Type,
    w: &World,
    w2: &World,
    spec: &CiuSpec,
) -> Result<WorldReport, HarnessError> {
    let smaller = ciu_test_with(sig, w, e, e2, ty, spec)?;
    let larger = ciu_test_with(sig, w2, e, e2, ty, spec)?;
    Ok(WorldReport {
        schema: 1,
        differ: smaller.label() != larger.label(),
        smaller,
        larger,
    })
}

/// An expression of type `unit` that diverges exactly when `@card` is `k`.
pub fn card_probe(k: u64) -> Expr {
    fn go(n: &str, k: u64, depth: u64) -> Surface {
        let diverge = Surface::app(
            Surface::fun(
                "loop",
                "u",
                Type::Unit,
                Type::Unit,
                Surface::app(Surface::var("loop"), Surface::var("u")),
            ),
            Surface::Unit,
        );
        let m = format!("{n}'");
        let (zero, succ) = if depth == k {
            (diverge, Surface::Unit)
        } else {
            (Surface::Unit, go(&m, k, depth + 1))
        };
        Surface::match_(
            Surface::var(n),
            vec![
                SurfaceArm {
                    con: name("Zero"),
                    var: None,
                    body: zero,
                },
                SurfaceArm {
                    con: name("Succ"),
                    var: Some(name(&m)),
                    body: succ,
                },
            ],
        )
    }
    desugar(&Surface::let_(
        "n",
        Surface::obs("card", vec![]),
        go("n", k, 0),
    ))
}

/// Searches `card` probes against `()` for a pair whose verdicts differ
/// between `w` and `w′`.
pub fn search_world_sensitivity(
    sig: &Signature,
    w: &World,
    w2: &World,
    spec: &CiuSpec,
) -> Result<Option<(Expr, WorldReport)>, HarnessError> {
    let unit = Expr::Val(Value::Unit);
    for k in 0..=(w2.len() as u64 + 4) {
        let e = card_probe(k);
        let r = test_world_sensitivity(sig, &e, &unit, &Type::Unit, w, w2, spec)?;
        if r.differ {
            return Ok(Some((e, r)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nominal::{lambda_signature, rep, LambdaTerm};
    use crate::observations::Observation;

    fn world(ix: &[u32]) -> World {
        ix.iter().map(|&i| Atom(i)).collect()
    }

    fn atom(i: u32) -> Value {
        Value::Atom(Atom(i))
    }

    #[test]
    fn reflexivity() {
        let sig = Signature::basic();
        let e = Expr::Val(Value::bind(atom(0), atom(0)));
        let v = ciu_test(
            &sig,
            &world(&[0]),
            &e,
            &e,
            &Type::bnd(Type::Atm),
            200,
            1000,
            1,
        )
        .unwrap();
        assert!(v.is_no_counterexample(), "{v}");
    }

    #[test]
    fn distinct_atoms_are_distinguished() {
        let sig = Signature::basic();
        let v = ciu_test(
            &sig,
            &world(&[0, 1]),
            &Expr::Val(atom(0)),
            &Expr::Val(atom(1)),
            &Type::Atm,
            500,
            1000,
            2,
        )
        .unwrap();
        let CiuVerdict::Distinguished { counterexample, .. } = &v else {
            panic!("{v}")
        };
        assert!(counterexample.left.terminated() != counterexample.right.terminated());
        let (l, r) = replay(
            &sig,
            counterexample,
            &Expr::Val(atom(0)),
            &Expr::Val(atom(1)),
            1000,
            FreshPolicy::LeastUnused,
        );
        assert_eq!((l, r), (counterexample.left, counterexample.right));
    }

    #[test]
    fn binder_pair_is_distinguished() {
        let sig = Signature::basic();
        let f = |i| {
            Expr::Val(Value::fun(
                "f",
                "x",
                Type::Atm,
                None,
                Expr::Val(Value::bind(atom(i), Value::var("x"))),
            ))
        };
        let ty = Type::fun(Type::Atm, Type::bnd(Type::Atm));
        let v = ciu_test(&sig, &world(&[0, 1]), &f(0), &f(1), &ty, 2000, 1000, 3).unwrap();
        assert!(v.is_distinguished(), "{v}");
    }

    #[test]
    fn alpha_equivalent_bindings_agree() {
        let sig = Signature::basic();
        let l = Expr::Val(Value::bind(atom(0), atom(0)));
        let r = Expr::Val(Value::bind(atom(1), atom(1)));
        let v = ciu_test(
            &sig,
            &world(&[0, 1]),
            &l,
            &r,
            &Type::bnd(Type::Atm),
            2000,
            10_000,
            4,
        )
        .unwrap();
        assert!(v.is_no_counterexample(), "{v}");
    }

    #[test]
    fn symmetric_verdict_class() {
        let sig = Signature::basic().with_observations([Observation::lt()]);
        let (l, r) = (Expr::Val(atom(0)), Expr::Val(atom(1)));
        let w = world(&[0, 1]);
        for seed in 0..5 {
            let a = ciu_test(&sig, &w, &l, &r, &Type::Atm, 100, 500, seed).unwrap();
            let b = ciu_test(&sig, &w, &r, &l, &Type::Atm, 100, 500, seed).unwrap();
            assert_eq!(a.label(), b.label());
        }
    }

    #[test]
    fn rejects_ill_typed_inputs() {
        let sig = Signature::basic();
        let err = ciu_test(
            &sig,
            &world(&[0]),
            &Expr::Val(atom(0)),
            &Expr::Val(Value::Unit),
            &Type::Atm,
            1,
            1,
            0,
        );
        assert_eq!(err.unwrap_err().code(), "E_TYPE");
        let err = ciu_test(
            &sig,
            &World::new(),
            &Expr::Val(atom(0)),
            &Expr::Val(atom(0)),
            &Type::Atm,
            1,
            1,
            0,
        );
        assert_eq!(err.unwrap_err().code(), "E_ATOM_ESCAPE");
    }

    #[test]
    fn open_examples() {
        let sig = Signature::basic();
        let spec = CiuSpec::new(200, 1000, 5);
        let x = || Expr::Val(Value::var("x"));
        let gamma = vec![(name("x"), Type::Atm)];
        let v = open_ciu_test(&sig, &gamma, &World::new(), &x(), &x(), &Type::Atm, &spec).unwrap();
        assert!(v.is_no_counterexample(), "{v}");

        // let y = v in (y, x)  vs  (v, x)
        let val = Value::bind(atom(0), Value::var("x"));
        let body = Expr::Val(Value::pair(Value::var("y"), Value::var("x")));
        let l = Expr::let_("y", Expr::Val(val.clone()), body.clone());
        let r = body.substitute(&[(name("y"), val)]);
        let ty = Type::prod(Type::bnd(Type::Atm), Type::Atm);
        let v = open_ciu_test(&sig, &gamma, &world(&[0]), &l, &r, &ty, &spec).unwrap();
        assert!(v.is_no_counterexample(), "{v}");

        let pair = Value::pair(Value::var("x"), Value::Unit);
        let v = open_ciu_test(
            &sig,
            &gamma,
            &World::new(),
            &Expr::Fst(pair),
            &x(),
            &Type::Atm,
            &spec,
        )
        .unwrap();
        assert!(v.is_no_counterexample(), "{v}");
    }

    #[test]
    fn extensionality_examples() {
        let sig = Signature::basic().with_observations([Observation::lt()]);
        let spec = CiuSpec::new(300, 2000, 6);
        let body = Value::pair(atom(0), atom(2));
        let r = test_extensionality_bind(
            &sig,
            &world(&[0, 1, 2]),
            Atom(0),
            &body,
            Atom(1),
            &body.rename_atom(Atom(0), Atom(1)),
            &Type::prod(Type::Atm, Type::Atm),
            &spec,
        )
        .unwrap();
        assert_eq!(r.direction_a, Direction::Holds);
        assert_eq!(r.direction_b, Direction::Holds);

        let r = test_extensionality_bind(
            &sig,
            &world(&[0, 1]),
            Atom(0),
            &atom(0),
            Atom(1),
            &atom(0),
            &Type::Atm,
            &spec,
        )
        .unwrap();
        assert!(r.bindings.is_distinguished(), "{}", r.bindings);
        assert!(r.bodies.is_distinguished());
        assert_eq!(r.direction_a, Direction::NotApplicable);
    }

    #[test]
    fn conjecture_witness() {
        let sig = Signature::basic().with_observations([Observation::ord()]);
        let r = test_example_conjecture(&sig, &CiuSpec::new(200, DEFAULT_FUEL, 7)).unwrap();
        assert!(r.inequivalence.holds, "{:?}", r.inequivalence);
        assert_eq!(r.label, "CONJECTURE");
        let lt = Signature::basic().with_observations([Observation::lt()]);
        assert_eq!(conjecture_values(&lt, "lt").unwrap_err().code(), "E_ARITY");
    }

    #[test]
    fn small_representation_run() {
        let sig = lambda_signature();
        let r = test_correctness_of_representation(
            &sig,
            &Type::data("term"),
            10,
            &CiuSpec::new(100, 2000, 8),
        )
        .unwrap();
        assert!(r.violations.is_empty(), "{:?}", r.violations);
        assert_eq!(r.alpha_pairs + r.non_alpha_pairs, 10);
    }

    #[test]
    fn aeq_on_distinct_variables() {
        let sig = lambda_signature();
        let (a, b) = (
            rep(&LambdaTerm::Var(Atom(0))),
            rep(&LambdaTerm::Var(Atom(1))),
        );
        let out = run_aeq(&sig, &Type::data("term"), &world(&[0, 1]), &a, &b, 10_000).unwrap();
        assert_eq!(out, Some(1));
    }

    #[test]
    fn card_breaks_strengthening() {
        let sig = Signature::basic().with_observations([Observation::card()]);
        let spec = CiuSpec::new(200, 1000, 9);
        let found =
            search_world_sensitivity(&sig, &world(&[0]), &world(&[0, 1, 2]), &spec).unwrap();
        let (_, r) = found.expect("a card probe separates the worlds");
        assert!(r.differ);
        let eq_only = Signature::basic();
        let unit = Expr::Val(Value::Unit);
        let e = Expr::Val(Value::Unit);
        let r = test_world_sensitivity(
            &eq_only,
            &e,
            &unit,
            &Type::Unit,
            &world(&[0]),
            &world(&[0, 1]),
            &spec,
        )
        .unwrap();
        assert!(!r.differ);
    }
}
