//! Types, signatures and the typing relation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::atom::{Atom, World};
use crate::observations::{Observation, RegistrationError};
use crate::print;
use crate::syntax::{name, Configuration, Expr, FrameStack, Name, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Unit,
    Prod(Box<Type>, Box<Type>),
    Fun(Box<Type>, Box<Type>),
    Data(Name),
    Atm,
    Bnd(Box<Type>),
}

impl Type {
    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }

    pub fn fun(a: Type, b: Type) -> Type {
        Type::Fun(Box::new(a), Box::new(b))
    }

    pub fn bnd(a: Type) -> Type {
        Type::Bnd(Box::new(a))
    }

    pub fn data(d: &str) -> Type {
        Type::Data(name(d))
    }

    pub fn nat() -> Type {
        Type::data("nat")
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Type::Unit => write!(f, "unit"),
            Type::Atm => write!(f, "atm"),
            Type::Data(d) => write!(f, "{d}"),
            Type::Bnd(t) => {
                t.fmt_prec(f, 2)?;
                write!(f, " bnd")
            }
            Type::Prod(a, b) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " * ")?;
                b.fmt_prec(f, 2)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Type::Fun(a, b) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " -> ")?;
                b.fmt_prec(f, 0)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("E_TYPE [{rule}]: {detail} in `{subterm}`")]
    Mismatch {
        rule: &'static str,
        detail: String,
        subterm: String,
    },
    #[error("E_NONEXHAUSTIVE_MATCH: missing {} in `{subterm}`", missing.join(", "))]
    NonExhaustive {
        missing: Vec<String>,
        subterm: String,
    },
    #[error("E_ARITY: observation {obs} expects {expected} argument(s), got {found}")]
    Arity {
        obs: Name,
        expected: usize,
        found: usize,
    },
    #[error("E_UNBOUND_VAR: {0}")]
    UnboundVar(Name),
    #[error("E_ATOM_ESCAPE: atom {0} occurs in the stack or expression but not in the state")]
    AtomEscape(Atom),
    #[error("E_UNDECLARED_TYPE: {0}")]
    UndeclaredType(Name),
    #[error("E_DUPLICATE_CON: constructor {0} declared twice")]
    DuplicateCon(Name),
    #[error("E_DUPLICATE_TYPE: data type {0} declared twice")]
    DuplicateType(Name),
    #[error("E_UNKNOWN_CON: {0}")]
    UnknownCon(Name),
    #[error("E_UNKNOWN_OBS: {0}")]
    UnknownObs(Name),
    #[error("E_INVALID_SIGNATURE: {0}")]
    InvalidSignature(String),
}

impl TypeError {
    pub fn code(&self) -> &'static str {
        match self {
            TypeError::Mismatch { .. } => "E_TYPE",
            TypeError::NonExhaustive { .. } => "E_NONEXHAUSTIVE_MATCH",
            TypeError::Arity { .. } => "E_ARITY",
            TypeError::UnboundVar(_) => "E_UNBOUND_VAR",
            TypeError::AtomEscape(_) => "E_ATOM_ESCAPE",
            TypeError::UndeclaredType(_) => "E_UNDECLARED_TYPE",
            TypeError::DuplicateCon(_) => "E_DUPLICATE_CON",
            TypeError::DuplicateType(_) => "E_DUPLICATE_TYPE",
            TypeError::UnknownCon(_) => "E_UNKNOWN_CON",
            TypeError::UnknownObs(_) => "E_UNKNOWN_OBS",
            TypeError::InvalidSignature(_) => "E_INVALID_SIGNATURE",
        }
    }
}

fn mismatch_v(rule: &'static str, detail: String, v: &Value) -> TypeError {
    TypeError::Mismatch {
        rule,
        detail,
        subterm: print::value_to_string(v),
    }
}

fn mismatch_e(rule: &'static str, detail: String, e: &Expr) -> TypeError {
    TypeError::Mismatch {
        rule,
        detail,
        subterm: print::expr_to_string(e),
    }
}

/// `type δ = C1 of τ1 | ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataType {
    pub name: Name,
    pub constructors: Vec<(Name, Type)>,
}

impl DataType {
    pub fn new(name_: &str, constructors: Vec<(&str, Type)>) -> Self {
        DataType {
            name: name(name_),
            constructors: constructors
                .into_iter()
                .map(|(c, t)| (name(c), t))
                .collect(),
        }
    }

    fn nat() -> Self {
        DataType::new("nat", vec![("Zero", Type::Unit), ("Succ", Type::nat())])
    }
}

/// Declared data types plus the observation registry.
#[derive(Clone, Debug)]
pub struct Signature {
    datatypes: Vec<DataType>,
    /// constructor name -> (data type index, constructor index)
    con_index: BTreeMap<Name, (usize, usize)>,
    observations: BTreeMap<Name, Observation>,
    is_nominal: bool,
}

impl Signature {
    /// The signature with only `nat` and the `eq` observation.
    pub fn basic() -> Signature {
        Signature::validate(Vec::new()).expect("nat alone is valid")
    }

    /// Checks a declaration and adds `nat` (and `eq`) if absent. A declared
    /// `nat` must coincide with the built-in one.
    pub fn validate(decls: Vec<DataType>) -> Result<Signature, TypeError> {
        let mut datatypes = Vec::with_capacity(decls.len() + 1);
        let nat = DataType::nat();
        match decls.iter().find(|d| &*d.name == "nat") {
            Some(d) if *d != nat => {
                return Err(TypeError::InvalidSignature(
                    "nat must be declared as Zero of unit | Succ of nat".into(),
                ))
            }
            Some(_) => {}
            None => datatypes.push(nat),
        }
        let mut names = BTreeSet::new();
        for d in decls {
            if !names.insert(d.name.clone()) {
                return Err(TypeError::DuplicateType(d.name));
            }
            datatypes.push(d);
        }
        let mut con_index = BTreeMap::new();
        for (i, d) in datatypes.iter().enumerate() {
            for (j, (c, _)) in d.constructors.iter().enumerate() {
                if con_index.insert(c.clone(), (i, j)).is_some() {
                    return Err(TypeError::DuplicateCon(c.clone()));
                }
            }
        }
        let mut sig = Signature {
            datatypes,
            con_index,
            observations: BTreeMap::new(),
            is_nominal: false,
        };
        for d in &sig.datatypes {
            for (_, t) in &d.constructors {
                sig.check_type(t)?;
            }
        }
        sig.is_nominal = sig
            .datatypes
            .iter()
            .all(|d| d.constructors.iter().all(|(_, t)| !contains_fun(t)));
        sig.register_trusted(Observation::eq());
        Ok(sig)
    }

    pub fn is_nominal(&self) -> bool {
        self.is_nominal
    }

    pub fn datatypes(&self) -> &[DataType] {
        &self.datatypes
    }

    pub fn datatype(&self, d: &str) -> Option<&DataType> {
        self.datatypes.iter().find(|dt| &*dt.name == d)
    }

    /// `(δ, argument type)` of a constructor.
    pub fn constructor(&self, c: &str) -> Option<(&Name, &Type)> {
        self.con_index.get(c).map(|&(i, j)| {
            let d = &self.datatypes[i];
            (&d.name, &d.constructors[j].1)
        })
    }

    pub fn observation(&self, o: &str) -> Option<&Observation> {
        self.observations.get(o)
    }

    pub fn observations(&self) -> impl Iterator<Item = &Observation> {
        self.observations.values()
    }

    /// Registers an observation without running the sampled checkers. Used for
    /// the built-ins, whose flags are justified analytically.
    pub fn register_trusted(&mut self, o: Observation) {
        self.observations.insert(o.name.clone(), o);
    }

    /// Registers an observation after confirming its declared flags by
    /// sampling; a flag refuted by a counterexample aborts registration.
    pub fn register(
        &mut self,
        o: Observation,
        trials: usize,
        seed: u64,
    ) -> Result<(), RegistrationError> {
        if self.observations.contains_key(&o.name) {
            return Err(RegistrationError::Duplicate(o.name.clone()));
        }
        o.confirm_flags(trials, seed)?;
        self.register_trusted(o);
        Ok(())
    }

    /// Same signature with exactly the given observations (eq is always kept).
    pub fn with_observations(&self, obs: impl IntoIterator<Item = Observation>) -> Signature {
        let mut sig = self.clone();
        sig.observations.clear();
        sig.register_trusted(Observation::eq());
        for o in obs {
            sig.register_trusted(o);
        }
        sig
    }

    /// Whether every observation registered is declared affine.
    pub fn only_affine(&self) -> bool {
        self.observations.values().all(|o| o.affine)
    }

    /// Type well-formedness: every data type name is declared.
    pub fn check_type(&self, t: &Type) -> Result<(), TypeError> {
        match t {
            Type::Unit | Type::Atm => Ok(()),
            Type::Data(d) => {
                if self.datatype(d).is_some() {
                    Ok(())
                } else {
                    Err(TypeError::UndeclaredType(d.clone()))
                }
            }
            Type::Prod(a, b) | Type::Fun(a, b) => {
                self.check_type(a)?;
                self.check_type(b)
            }
            Type::Bnd(a) => self.check_type(a),
        }
    }

    /// Data types reachable from `t` through constructor argument types.
    pub fn reachable_datatypes(&self, t: &Type) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut todo = vec![t.clone()];
        while let Some(t) = todo.pop() {
            match t {
                Type::Unit | Type::Atm => {}
                Type::Prod(a, b) | Type::Fun(a, b) => {
                    todo.push(*a);
                    todo.push(*b);
                }
                Type::Bnd(a) => todo.push(*a),
                Type::Data(d) => {
                    if out.insert(d.clone()) {
                        if let Some(dt) = self.datatype(&d) {
                            todo.extend(dt.constructors.iter().map(|(_, t)| t.clone()));
                        }
                    }
                }
            }
        }
        out
    }
}

fn contains_fun(t: &Type) -> bool {
    match t {
        Type::Unit | Type::Atm | Type::Data(_) => false,
        Type::Fun(..) => true,
        Type::Prod(a, b) => contains_fun(a) || contains_fun(b),
        Type::Bnd(a) => contains_fun(a),
    }
}

/// Whether `t` is a nominal arity: built from unit, products, data types,
/// atm and bnd, with every reachable data type also free of function types.
/// For a nominal signature this is exactly the arity grammar.
pub fn is_nominal_arity(sig: &Signature, t: &Type) -> bool {
    !contains_fun(t)
        && sig.reachable_datatypes(t).iter().all(|d| {
            sig.datatype(d)
                .is_some_and(|dt| dt.constructors.iter().all(|(_, t)| !contains_fun(t)))
        })
}

/// A typing environment. Later entries shadow earlier ones, which is the
/// freshness convention on binders up to renaming.
#[derive(Clone, Debug, Default)]
pub struct TypingEnv {
    entries: Vec<(Name, Type)>,
}

impl TypingEnv {
    pub fn new() -> Self {
        TypingEnv::default()
    }

    pub fn from_pairs(pairs: Vec<(Name, Type)>) -> Self {
        TypingEnv { entries: pairs }
    }

    pub fn lookup(&self, x: &str) -> Option<&Type> {
        self.entries
            .iter()
            .rev()
            .find(|(y, _)| &**y == x)
            .map(|(_, t)| t)
    }

    pub fn extend(&mut self, x: Name, t: Type) {
        self.entries.push((x, t));
    }

    fn pop(&mut self) {
        self.entries.pop();
    }

    pub fn entries(&self) -> &[(Name, Type)] {
        &self.entries
    }

    pub fn contains(&self, x: &str) -> bool {
        self.lookup(x).is_some()
    }
}

pub fn check_value(sig: &Signature, env: &mut TypingEnv, v: &Value) -> Result<Type, TypeError> {
    match v {
        Value::Var(x) => env
            .lookup(x)
            .cloned()
            .ok_or_else(|| TypeError::UnboundVar(x.clone())),
        Value::Unit => Ok(Type::Unit),
        Value::Atom(_) => Ok(Type::Atm),
        Value::Pair(a, b) => {
            let ta = check_value(sig, env, a)?;
            let tb = check_value(sig, env, b)?;
            Ok(Type::prod(ta, tb))
        }
        Value::Con(c, arg) => {
            let (d, want) = sig
                .constructor(c)
                .ok_or_else(|| TypeError::UnknownCon(c.clone()))?;
            let got = check_value(sig, env, arg)?;
            if &got != want {
                return Err(mismatch_v(
                    "con",
                    format!("{c} expects {want}, got {got}"),
                    v,
                ));
            }
            Ok(Type::Data(d.clone()))
        }
        Value::Bind(a, body) => {
            let ta = check_value(sig, env, a)?;
            if ta != Type::Atm {
                return Err(mismatch_v(
                    "bind",
                    format!("bound position has type {ta}, expected atm"),
                    v,
                ));
            }
            Ok(Type::bnd(check_value(sig, env, body)?))
        }
        Value::Fun(fun) => {
            sig.check_type(&fun.param_ty)?;
            match &fun.ret_ty {
                Some(rt) => {
                    sig.check_type(rt)?;
                    let fty = Type::fun(fun.param_ty.clone(), rt.clone());
                    env.extend(fun.name.clone(), fty.clone());
                    env.extend(fun.param.clone(), fun.param_ty.clone());
                    let body = check_expr(sig, env, &fun.body);
                    env.pop();
                    env.pop();
                    let body = body?;
                    if &body != rt {
                        return Err(mismatch_v(
                            "fun",
                            format!("body has type {body}, annotation says {rt}"),
                            v,
                        ));
                    }
                    Ok(fty)
                }
                None => {
                    if fun.name != fun.param && fun.body.free_vars().contains(&fun.name) {
                        return Err(mismatch_v(
                            "fun",
                            format!(
                                "recursive use of {} needs a result type annotation",
                                fun.name
                            ),
                            v,
                        ));
                    }
                    env.extend(fun.param.clone(), fun.param_ty.clone());
                    let body = check_expr(sig, env, &fun.body);
                    env.pop();
                    Ok(Type::fun(fun.param_ty.clone(), body?))
                }
            }
        }
    }
}

pub fn check_expr(sig: &Signature, env: &mut TypingEnv, e: &Expr) -> Result<Type, TypeError> {
    match e {
        Expr::Val(v) => check_value(sig, env, v),
        Expr::Let(x, e1, e2) => {
            let t1 = check_expr(sig, env, e1)?;
            env.extend(x.clone(), t1);
            let r = check_expr(sig, env, e2);
            env.pop();
            r
        }
        Expr::Fst(v) | Expr::Snd(v) => match check_value(sig, env, v)? {
            Type::Prod(a, b) => Ok(if matches!(e, Expr::Fst(_)) { *a } else { *b }),
            t => Err(mismatch_e(
                "proj",
                format!("expected a product, got {t}"),
                e,
            )),
        },
        Expr::App(f, a) => match check_value(sig, env, f)? {
            Type::Fun(dom, cod) => {
                let ta = check_value(sig, env, a)?;
                if ta != *dom {
                    return Err(mismatch_e(
                        "app",
                        format!("argument has type {ta}, expected {dom}"),
                        e,
                    ));
                }
                Ok(*cod)
            }
            t => Err(mismatch_e(
                "app",
                format!("expected a function, got {t}"),
                e,
            )),
        },
        Expr::Match(v, arms) => {
            let d = match check_value(sig, env, v)? {
                Type::Data(d) => d,
                t => {
                    return Err(mismatch_e(
                        "match",
                        format!("scrutinee has type {t}, expected a data type"),
                        e,
                    ))
                }
            };
            let dt = sig
                .datatype(&d)
                .ok_or_else(|| TypeError::UndeclaredType(d.clone()))?;
            let mut seen = BTreeSet::new();
            let mut result: Option<Type> = None;
            for arm in arms.iter() {
                let Some((_, arg_ty)) = dt.constructors.iter().find(|(c, _)| *c == arm.con) else {
                    return Err(mismatch_e(
                        "match",
                        format!("{} is not a constructor of {d}", arm.con),
                        e,
                    ));
                };
                if !seen.insert(arm.con.clone()) {
                    return Err(mismatch_e(
                        "match",
                        format!("duplicate arm for {}", arm.con),
                        e,
                    ));
                }
                env.extend(arm.var.clone(), arg_ty.clone());
                let t = check_expr(sig, env, &arm.body);
                env.pop();
                let t = t?;
                match &result {
                    None => result = Some(t),
                    Some(r) if *r != t => {
                        return Err(mismatch_e(
                            "match",
                            format!("arm {} has type {t}, expected {r}", arm.con),
                            e,
                        ))
                    }
                    Some(_) => {}
                }
            }
            let missing: Vec<String> = dt
                .constructors
                .iter()
                .filter(|(c, _)| !seen.contains(c))
                .map(|(c, _)| c.to_string())
                .collect();
            if !missing.is_empty() {
                return Err(TypeError::NonExhaustive {
                    missing,
                    subterm: print::expr_to_string(e),
                });
            }
            result.ok_or_else(|| mismatch_e("match", format!("{d} has no constructors"), e))
        }
        Expr::Fresh => Ok(Type::Atm),
        Expr::Unbind(v) => match check_value(sig, env, v)? {
            Type::Bnd(t) => Ok(Type::prod(Type::Atm, *t)),
            t => Err(mismatch_e(
                "unbind",
                format!("expected an atom binding, got {t}"),
                e,
            )),
        },
        Expr::Obs(o, args) => {
            let obs = sig
                .observation(o)
                .ok_or_else(|| TypeError::UnknownObs(o.clone()))?;
            if obs.arity != args.len() {
                return Err(TypeError::Arity {
                    obs: o.clone(),
                    expected: obs.arity,
                    found: args.len(),
                });
            }
            for a in args.iter() {
                let t = check_value(sig, env, a)?;
                if t != Type::Atm {
                    return Err(mismatch_e(
                        "obs",
                        format!("argument has type {t}, expected atm"),
                        e,
                    ));
                }
            }
            Ok(Type::nat())
        }
    }
}

/// `Γ ⊢ F : arg → τ′`, returning τ′.
pub fn check_stack(
    sig: &Signature,
    env: &mut TypingEnv,
    stack: &FrameStack,
    arg: &Type,
) -> Result<Type, TypeError> {
    let mut ty = arg.clone();
    for frame in stack.frames().iter().rev() {
        env.extend(frame.var.clone(), ty);
        let r = check_expr(sig, env, &frame.body);
        env.pop();
        ty = r?;
    }
    Ok(ty)
}

/// `⊢w <s, F, e> : τ` with `w = atom(s)`.
pub fn check_config(sig: &Signature, cfg: &Configuration) -> Result<(World, Type), TypeError> {
    let w = cfg.state.world();
    let mut used = cfg.stack.atoms();
    cfg.expr.collect_atoms(&mut used);
    if let Some(&a) = used.difference(&w).next() {
        return Err(TypeError::AtomEscape(a));
    }
    let mut env = TypingEnv::new();
    let t = check_expr(sig, &mut env, &cfg.expr)?;
    let t = check_stack(sig, &mut env, &cfg.stack, &t)?;
    Ok((w, t))
}

/// Closed type of an expression, `∅ ⊢ e : τ`.
pub fn type_of(sig: &Signature, e: &Expr) -> Result<Type, TypeError> {
    check_expr(sig, &mut TypingEnv::new(), e)
}
