//! The frame-stack abstract machine with generative unbinding.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::atom::{Atom, State};
use crate::print;
use crate::syntax::{Configuration, Expr, Frame, FrameStack, Name, Subst, Value};
use crate::types::{check_config, Signature};

/// Which atom `fresh()` and `unbind` allocate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum FreshPolicy {
    /// Least index not in the state.
    #[default]
    LeastUnused,
    /// One more than the greatest index in the state.
    GreatestPlusOne,
}

/// Least-index atom not in `s`.
pub fn fresh_atom(s: &State) -> Atom {
    Allocator::new(s, FreshPolicy::LeastUnused).next()
}

/// Incremental fresh-atom supply for one run. States only grow during a run,
/// so the least unused index never decreases.
struct Allocator {
    used: HashSet<u32>,
    policy: FreshPolicy,
    cursor: u32,
}

impl Allocator {
    fn new(s: &State, policy: FreshPolicy) -> Self {
        let used: HashSet<u32> = s.atoms().iter().map(|a| a.index()).collect();
        let cursor = match policy {
            FreshPolicy::LeastUnused => 0,
            FreshPolicy::GreatestPlusOne => used.iter().max().map_or(0, |m| m + 1),
        };
        Allocator {
            used,
            policy,
            cursor,
        }
    }

    fn next(&mut self) -> Atom {
        while self.used.contains(&self.cursor) {
            self.cursor += 1;
        }
        Atom(self.cursor)
    }

    fn take(&mut self, state: &mut State) -> Atom {
        let a = self.next();
        self.used.insert(a.index());
        state.push_fresh(a);
        if self.policy == FreshPolicy::GreatestPlusOne {
            self.cursor = a.index() + 1;
        }
        a
    }

    fn contains(&self, a: Atom) -> bool {
        self.used.contains(&a.index())
    }
}

/// Why no transition applies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum StuckReason {
    NotAConstructor(String),
    NoArm(String),
    NotAPair(String),
    NotAFunction(String),
    NotABinding(String),
    NotAnAtom(String),
    AtomEscape(Atom),
    UnknownObservation(String),
    Arity {
        obs: String,
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for StuckReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StuckReason::NotAConstructor(v) => write!(f, "E_STUCK: match on non-constructor {v}"),
            StuckReason::NoArm(c) => write!(f, "E_STUCK: no arm for constructor {c}"),
            StuckReason::NotAPair(v) => write!(f, "E_STUCK: projection from non-pair {v}"),
            StuckReason::NotAFunction(v) => write!(f, "E_STUCK: application of non-function {v}"),
            StuckReason::NotABinding(v) => write!(f, "E_STUCK: unbind of non-binding {v}"),
            StuckReason::NotAnAtom(v) => {
                write!(f, "E_STUCK: observation argument {v} is not an atom")
            }
            StuckReason::AtomEscape(a) => write!(
                f,
                "E_ATOM_ESCAPE: observation argument {a} is not in the state"
            ),
            StuckReason::UnknownObservation(o) => write!(f, "E_STUCK: unknown observation {o}"),
            StuckReason::Arity {
                obs,
                expected,
                found,
            } => {
                write!(
                    f,
                    "E_ARITY: observation {obs} expects {expected} argument(s), got {found}"
                )
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum StepResult {
    Next(Configuration),
    Terminal(Value),
    Stuck(StuckReason),
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Terminated {
        steps: u64,
        state: State,
        value: Value,
    },
    FuelExhausted {
        steps: u64,
    },
    Stuck {
        steps: u64,
        reason: StuckReason,
        config: Box<Configuration>,
    },
}

/// The observable part of an [`Outcome`]: verdict and step count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "verdict", content = "steps", rename_all = "snake_case")]
pub enum Termination {
    Terminated(u64),
    FuelExhausted(u64),
    Stuck(u64),
}

impl Termination {
    pub fn terminated(self) -> bool {
        matches!(self, Termination::Terminated(_))
    }

    pub fn steps(self) -> u64 {
        match self {
            Termination::Terminated(n) | Termination::FuelExhausted(n) | Termination::Stuck(n) => n,
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Terminated(n) => write!(f, "terminated in {n}"),
            Termination::FuelExhausted(n) => write!(f, "fuel exhausted after {n}"),
            Termination::Stuck(n) => write!(f, "stuck after {n}"),
        }
    }
}

impl Outcome {
    pub fn termination(&self) -> Termination {
        match self {
            Outcome::Terminated { steps, .. } => Termination::Terminated(*steps),
            Outcome::FuelExhausted { steps } => Termination::FuelExhausted(*steps),
            Outcome::Stuck { steps, .. } => Termination::Stuck(*steps),
        }
    }

    pub fn terminated(&self) -> bool {
        matches!(self, Outcome::Terminated { .. })
    }

    pub fn value(&self) -> Option<&Value> {
        match self {
            Outcome::Terminated { value, .. } => Some(value),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Terminated { steps, value, .. } => {
                write!(f, "TERMINATED {steps} {}", print::value_to_string(value))
            }
            Outcome::FuelExhausted { steps } => write!(f, "FUEL {steps}"),
            Outcome::Stuck { reason, .. } => write!(f, "STUCK {reason}"),
        }
    }
}

enum Progress {
    Stepped,
    /// Rule 6 reproduced the same application; the run is a self-loop.
    Loop,
    Terminal,
}

#[derive(Clone, Copy)]
pub struct Machine<'a> {
    sig: &'a Signature,
    policy: FreshPolicy,
}

impl<'a> Machine<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        Machine {
            sig,
            policy: FreshPolicy::LeastUnused,
        }
    }

    pub fn with_policy(sig: &'a Signature, policy: FreshPolicy) -> Self {
        Machine { sig, policy }
    }

    pub fn signature(&self) -> &'a Signature {
        self.sig
    }

    /// One transition.
    pub fn step(&self, cfg: &Configuration) -> StepResult {
        debug_assert!(
            check_config(self.sig, cfg).is_ok(),
            "step on ill-typed configuration"
        );
        let mut next = cfg.clone();
        let mut alloc = Allocator::new(&next.state, self.policy);
        match self.step_mut(&mut next, &mut alloc) {
            Ok(Progress::Terminal) => match next.expr {
                Expr::Val(v) => StepResult::Terminal(v),
                _ => unreachable!("terminal configurations hold values"),
            },
            Ok(_) => StepResult::Next(next),
            Err(r) => StepResult::Stuck(r),
        }
    }

    /// Iterates [`Machine::step`] for at most `fuel` transitions.
    pub fn run(&self, cfg: Configuration, fuel: u64) -> Outcome {
        debug_assert!(
            check_config(self.sig, &cfg).is_ok(),
            "run on ill-typed configuration"
        );
        let mut cfg = cfg;
        let mut alloc = Allocator::new(&cfg.state, self.policy);
        let mut steps = 0;
        loop {
            if steps == fuel {
                if let (true, Expr::Val(_)) = (cfg.stack.is_id(), &cfg.expr) {
                    break;
                }
                return Outcome::FuelExhausted { steps };
            }
            match self.step_mut(&mut cfg, &mut alloc) {
                Ok(Progress::Stepped) => steps += 1,
                Ok(Progress::Loop) => return Outcome::FuelExhausted { steps: fuel },
                Ok(Progress::Terminal) => break,
                Err(reason) => {
                    return Outcome::Stuck {
                        steps,
                        reason,
                        config: Box::new(cfg),
                    }
                }
            }
        }
        let Configuration { state, expr, .. } = cfg;
        match expr {
            Expr::Val(value) => Outcome::Terminated {
                steps,
                state,
                value,
            },
            _ => unreachable!("terminal configurations hold values"),
        }
    }

    /// The configurations visited, starting with `cfg`, and the outcome.
    /// At most `fuel + 1` configurations are returned.
    pub fn trace(&self, cfg: Configuration, fuel: u64) -> (Vec<Configuration>, Outcome) {
        let mut out = vec![cfg.clone()];
        let mut cur = cfg;
        let mut alloc = Allocator::new(&cur.state, self.policy);
        let mut steps = 0;
        loop {
            if cur.stack.is_id() && cur.expr.is_value() {
                let Expr::Val(value) = cur.expr.clone() else {
                    unreachable!()
                };
                return (
                    out,
                    Outcome::Terminated {
                        steps,
                        state: cur.state,
                        value,
                    },
                );
            }
            if steps == fuel {
                return (out, Outcome::FuelExhausted { steps });
            }
            match self.step_mut(&mut cur, &mut alloc) {
                Ok(_) => {
                    steps += 1;
                    out.push(cur.clone());
                }
                Err(reason) => {
                    return (
                        out,
                        Outcome::Stuck {
                            steps,
                            reason,
                            config: Box::new(cur),
                        },
                    )
                }
            }
        }
    }

    fn step_mut(
        &self,
        cfg: &mut Configuration,
        alloc: &mut Allocator,
    ) -> Result<Progress, StuckReason> {
        let show = print::value_to_string;
        let (next, progress) = match &cfg.expr {
            Expr::Val(v) => {
                if cfg.stack.is_id() {
                    return Ok(Progress::Terminal);
                }
                let Frame { var, body } = cfg.stack.pop().expect("non-empty stack");
                (
                    body.apply_subst(&Subst::single(var, v.clone())),
                    Progress::Stepped,
                )
            }
            Expr::Let(x, e1, e2) => {
                let e1 = (**e1).clone();
                cfg.stack.push(Frame {
                    var: x.clone(),
                    body: e2.clone(),
                });
                (e1, Progress::Stepped)
            }
            Expr::Match(v, arms) => {
                let Value::Con(c, arg) = v else {
                    return Err(StuckReason::NotAConstructor(show(v)));
                };
                let Some(arm) = arms.iter().find(|a| a.con == *c) else {
                    return Err(StuckReason::NoArm(c.to_string()));
                };
                let body = arm
                    .body
                    .apply_subst(&Subst::single(arm.var.clone(), (**arg).clone()));
                (body, Progress::Stepped)
            }
            Expr::Fst(v) | Expr::Snd(v) => {
                let Value::Pair(a, b) = v else {
                    return Err(StuckReason::NotAPair(show(v)));
                };
                let out = if matches!(cfg.expr, Expr::Fst(_)) {
                    a
                } else {
                    b
                };
                (Expr::Val((**out).clone()), Progress::Stepped)
            }
            Expr::App(f, arg) => {
                let Value::Fun(fun) = f else {
                    return Err(StuckReason::NotAFunction(show(f)));
                };
                let bindings = Subst::new(vec![
                    (fun.name.clone(), f.clone()),
                    (fun.param.clone(), arg.clone()),
                ]);
                let body = fun.body.apply_subst(&bindings);
                let looping = matches!(&body, Expr::App(g, b) if g == f && b == arg);
                (
                    body,
                    if looping {
                        Progress::Loop
                    } else {
                        Progress::Stepped
                    },
                )
            }
            Expr::Fresh => {
                let a = alloc.take(&mut cfg.state);
                (Expr::Val(Value::Atom(a)), Progress::Stepped)
            }
            Expr::Unbind(v) => {
                let Value::Bind(a, body) = v else {
                    return Err(StuckReason::NotABinding(show(v)));
                };
                let Value::Atom(a) = **a else {
                    return Err(StuckReason::NotABinding(show(v)));
                };
                let body = body.clone();
                let fresh = alloc.take(&mut cfg.state);
                let renamed = body.rename_atom(a, fresh);
                (
                    Expr::Val(Value::pair(Value::Atom(fresh), renamed)),
                    Progress::Stepped,
                )
            }
            Expr::Obs(o, args) => {
                let m = self.observe(o, args, &cfg.state, alloc)?;
                (Expr::Val(Value::numeral(m)), Progress::Stepped)
            }
        };
        cfg.expr = next;
        Ok(progress)
    }

    fn observe(
        &self,
        o: &Name,
        args: &[Value],
        state: &State,
        alloc: &Allocator,
    ) -> Result<u64, StuckReason> {
        let obs = self
            .sig
            .observation(o)
            .ok_or_else(|| StuckReason::UnknownObservation(o.to_string()))?;
        if obs.arity != args.len() {
            return Err(StuckReason::Arity {
                obs: o.to_string(),
                expected: obs.arity,
                found: args.len(),
            });
        }
        let mut atoms = Vec::with_capacity(args.len());
        for v in args {
            let a = v
                .as_atom()
                .ok_or_else(|| StuckReason::NotAnAtom(print::value_to_string(v)))?;
            if !alloc.contains(a) {
                return Err(StuckReason::AtomEscape(a));
            }
            atoms.push(a);
        }
        Ok(obs.eval_unchecked(state, &atoms))
    }
}

/// `F[e]`: `Id[e] = e` and `(F ∘ (x.e′))[e] = F[let x = e in e′]`.
pub fn stack_apply(stack: &FrameStack, e: &Expr) -> Expr {
    stack.frames().iter().rev().fold(e.clone(), |acc, fr| {
        Expr::Let(fr.var.clone(), Arc::new(acc), fr.body.clone())
    })
}

/// `n | state=[...] | stack_depth=k | expr=...`
pub fn trace_line(n: usize, cfg: &Configuration) -> String {
    format!(
        "{n} | state={} | stack_depth={} | expr={}",
        cfg.state,
        cfg.stack.depth(),
        print::expr_to_string(&cfg.expr)
    )
}
