//! α-equivalence of closed values over nominal signatures, the λ-term
//! representation, random values at nominal arities, and the in-language
//! `swap` and `aeq` programs.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::atom::{Atom, World};
use crate::surface::{desugar, Surface, SurfaceArm};
use crate::syntax::{name, Expr, Name, Value};
use crate::types::{check_value, is_nominal_arity, DataType, Signature, Type, TypingEnv};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NominalError {
    #[error("E_NOT_NOMINAL: {0} is not a nominal arity")]
    NotNominal(Type),
    #[error("E_ILL_TYPED: {0}")]
    IllTyped(String),
    #[error("E_OPEN_VALUE: α-equivalence is defined on closed values only")]
    Open,
    #[error("E_ATOM_ESCAPE: atom {0} is not in the world")]
    AtomOutsideWorld(Atom),
    #[error("E_UNINHABITED: no value of type {0} within the size bound")]
    Uninhabited(Type),
}

impl NominalError {
    pub fn code(&self) -> &'static str {
        match self {
            NominalError::NotNominal(_) => "E_NOT_NOMINAL",
            NominalError::IllTyped(_) => "E_ILL_TYPED",
            NominalError::Open => "E_OPEN_VALUE",
            NominalError::AtomOutsideWorld(_) => "E_ATOM_ESCAPE",
            NominalError::Uninhabited(_) => "E_UNINHABITED",
        }
    }
}

/// Least-index atom outside `w`.
pub fn least_outside(w: &World) -> Atom {
    let mut i = 0;
    for a in w {
        if a.index() != i {
            break;
        }
        i += 1;
    }
    Atom(i)
}

/// `⊢w v =α v′ : ar`.
pub fn alpha_eq(
    sig: &Signature,
    w: &World,
    v: &Value,
    v2: &Value,
    ar: &Type,
) -> Result<bool, NominalError> {
    alpha_eq_with(sig, w, v, v2, ar, &least_outside)
}

/// [`alpha_eq`] with a caller-chosen fresh atom for the bnd rule. `choose`
/// must return an atom outside the world it is given.
pub fn alpha_eq_with(
    sig: &Signature,
    w: &World,
    v: &Value,
    v2: &Value,
    ar: &Type,
    choose: &dyn Fn(&World) -> Atom,
) -> Result<bool, NominalError> {
    if !is_nominal_arity(sig, ar) {
        return Err(NominalError::NotNominal(ar.clone()));
    }
    for x in [v, v2] {
        if !x.is_closed() {
            return Err(NominalError::Open);
        }
        let t = check_value(sig, &mut TypingEnv::new(), x)
            .map_err(|e| NominalError::IllTyped(e.to_string()))?;
        if &t != ar {
            return Err(NominalError::IllTyped(format!(
                "value has type {t}, expected {ar}"
            )));
        }
        if let Some(a) = x.atoms().into_iter().find(|a| !w.contains(a)) {
            return Err(NominalError::AtomOutsideWorld(a));
        }
    }
    Ok(aeq(sig, &mut w.clone(), v, v2, ar, choose))
}

fn aeq(
    sig: &Signature,
    w: &mut World,
    v: &Value,
    v2: &Value,
    ar: &Type,
    choose: &dyn Fn(&World) -> Atom,
) -> bool {
    match (ar, v, v2) {
        (Type::Unit, Value::Unit, Value::Unit) => true,
        (Type::Prod(t1, t2), Value::Pair(a1, b1), Value::Pair(a2, b2)) => {
            aeq(sig, w, a1, a2, t1, choose) && aeq(sig, w, b1, b2, t2, choose)
        }
        (Type::Data(_), Value::Con(c1, x1), Value::Con(c2, x2)) => {
            c1 == c2 && {
                let (_, t) = sig.constructor(c1).expect("checked constructor");
                aeq(sig, w, x1, x2, &t.clone(), choose)
            }
        }
        (Type::Atm, Value::Atom(a1), Value::Atom(a2)) => a1 == a2 && w.contains(a1),
        (Type::Bnd(t), Value::Bind(a1, b1), Value::Bind(a2, b2)) => {
            let (Value::Atom(a1), Value::Atom(a2)) = (&**a1, &**a2) else {
                return false;
            };
            let fresh = choose(w);
            debug_assert!(!w.contains(&fresh));
            let r1 = b1.rename_atom(*a1, fresh);
            let r2 = b2.rename_atom(*a2, fresh);
            w.insert(fresh);
            let r = aeq(sig, w, &r1, &r2, t, choose);
            w.remove(&fresh);
            r
        }
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// λ-terms
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LambdaTerm {
    Var(Atom),
    Lam(Atom, Box<LambdaTerm>),
    App(Box<LambdaTerm>, Box<LambdaTerm>),
}

impl LambdaTerm {
    pub fn lam(a: Atom, t: LambdaTerm) -> Self {
        LambdaTerm::Lam(a, Box::new(t))
    }

    pub fn app(t: LambdaTerm, u: LambdaTerm) -> Self {
        LambdaTerm::App(Box::new(t), Box::new(u))
    }

    pub fn atoms(&self) -> World {
        let mut w = World::new();
        self.collect(&mut w);
        w
    }

    fn collect(&self, w: &mut World) {
        match self {
            LambdaTerm::Var(a) => {
                w.insert(*a);
            }
            LambdaTerm::Lam(a, t) => {
                w.insert(*a);
                t.collect(w);
            }
            LambdaTerm::App(t, u) => {
                t.collect(w);
                u.collect(w);
            }
        }
    }

    /// Replaces the binder `a` of every `λa` by `b`, along with its bound
    /// occurrences. Sound when `b` does not occur in the term.
    pub fn rename_binders(&self, a: Atom, b: Atom) -> LambdaTerm {
        fn go(t: &LambdaTerm, a: Atom, b: Atom, bound: bool) -> LambdaTerm {
            match t {
                LambdaTerm::Var(x) if *x == a && bound => LambdaTerm::Var(b),
                LambdaTerm::Var(x) => LambdaTerm::Var(*x),
                LambdaTerm::Lam(x, body) if *x == a => LambdaTerm::lam(b, go(body, a, b, true)),
                LambdaTerm::Lam(x, body) => LambdaTerm::lam(*x, go(body, a, b, bound)),
                LambdaTerm::App(t, u) => LambdaTerm::app(go(t, a, b, bound), go(u, a, b, bound)),
            }
        }
        go(self, a, b, false)
    }
}

impl fmt::Display for LambdaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaTerm::Var(a) => write!(f, "{a}"),
            LambdaTerm::Lam(a, t) => write!(f, "(λ{a}.{t})"),
            LambdaTerm::App(t, u) => write!(f, "({t} {u})"),
        }
    }
}

/// `type term = V of atm | L of term bnd | A of term * term`.
pub fn lambda_datatype() -> DataType {
    DataType::new(
        "term",
        vec![
            ("V", Type::Atm),
            ("L", Type::bnd(Type::data("term"))),
            ("A", Type::prod(Type::data("term"), Type::data("term"))),
        ],
    )
}

/// The λ-term signature with only `eq` registered.
pub fn lambda_signature() -> Signature {
    Signature::validate(vec![lambda_datatype()]).expect("valid declaration")
}

/// `⌈a⌉ = V a`, `⌈λa.t⌉ = L <a>⌈t⌉`, `⌈t u⌉ = A (⌈t⌉, ⌈u⌉)`.
pub fn rep(t: &LambdaTerm) -> Value {
    match t {
        LambdaTerm::Var(a) => Value::con("V", Value::Atom(*a)),
        LambdaTerm::Lam(a, body) => Value::con("L", Value::bind(Value::Atom(*a), rep(body))),
        LambdaTerm::App(t, u) => Value::con("A", Value::pair(rep(t), rep(u))),
    }
}

/// Inverse of [`rep`] on closed values of type `term`.
pub fn unrep(v: &Value) -> Option<LambdaTerm> {
    let Value::Con(c, arg) = v else { return None };
    match (&**c, &**arg) {
        ("V", Value::Atom(a)) => Some(LambdaTerm::Var(*a)),
        ("L", Value::Bind(a, body)) => Some(LambdaTerm::lam(a.as_atom()?, unrep(body)?)),
        ("A", Value::Pair(t, u)) => Some(LambdaTerm::app(unrep(t)?, unrep(u)?)),
        _ => None,
    }
}

#[derive(PartialEq, Eq)]
enum DeBruijn {
    Free(Atom),
    Bound(usize),
    Lam(Box<DeBruijn>),
    App(Box<DeBruijn>, Box<DeBruijn>),
}

fn de_bruijn(t: &LambdaTerm, binders: &mut Vec<Atom>) -> DeBruijn {
    match t {
        LambdaTerm::Var(a) => match binders.iter().rev().position(|b| b == a) {
            Some(i) => DeBruijn::Bound(i),
            None => DeBruijn::Free(*a),
        },
        LambdaTerm::Lam(a, body) => {
            binders.push(*a);
            let d = de_bruijn(body, binders);
            binders.pop();
            DeBruijn::Lam(Box::new(d))
        }
        LambdaTerm::App(t, u) => DeBruijn::App(
            Box::new(de_bruijn(t, binders)),
            Box::new(de_bruijn(u, binders)),
        ),
    }
}

/// Textbook α-equivalence of λ-terms via de Bruijn indices.
pub fn lambda_alpha(t1: &LambdaTerm, t2: &LambdaTerm) -> bool {
    de_bruijn(t1, &mut Vec::new()) == de_bruijn(t2, &mut Vec::new())
}

/// A random λ-term with at most `size` nodes over `atoms`.
pub fn gen_lambda_term(rng: &mut impl Rng, atoms: &[Atom], size: usize) -> LambdaTerm {
    let pick = |rng: &mut dyn rand::RngCore| *atoms.choose(rng).expect("non-empty atom pool");
    if size <= 1 {
        return LambdaTerm::Var(pick(rng));
    }
    match rng.gen_range(0..10) {
        0..=1 => LambdaTerm::Var(pick(rng)),
        2..=5 => LambdaTerm::lam(pick(rng), gen_lambda_term(rng, atoms, size - 1)),
        _ => {
            let left = rng.gen_range(1..size);
            LambdaTerm::app(
                gen_lambda_term(rng, atoms, left),
                gen_lambda_term(rng, atoms, size - left),
            )
        }
    }
}

/// A pair of λ-terms that is α-equivalent about half of the time: the second
/// component is an α-variant, a small mutation, or an independent term.
pub fn gen_lambda_pair(
    rng: &mut impl Rng,
    atoms: &[Atom],
    size: usize,
) -> (LambdaTerm, LambdaTerm) {
    let t = gen_lambda_term(rng, atoms, size);
    let u = match rng.gen_range(0..4) {
        0 | 1 => alpha_variant(rng, &t, atoms),
        2 => mutate(rng, &t, atoms),
        _ => gen_lambda_term(rng, atoms, size),
    };
    (t, u)
}

/// Renames some binders to atoms that do not occur in the term.
fn alpha_variant(rng: &mut impl Rng, t: &LambdaTerm, atoms: &[Atom]) -> LambdaTerm {
    let used = t.atoms();
    let spare: Vec<Atom> = atoms
        .iter()
        .copied()
        .filter(|a| !used.contains(a))
        .collect();
    let mut out = t.clone();
    let mut binders: Vec<Atom> = Vec::new();
    collect_binders(t, &mut binders);
    binders.dedup();
    let mut spare = spare.into_iter();
    for b in binders {
        if rng.gen_bool(0.7) {
            if let Some(c) = spare.next() {
                out = out.rename_binders(b, c);
            }
        }
    }
    out
}

fn collect_binders(t: &LambdaTerm, out: &mut Vec<Atom>) {
    match t {
        LambdaTerm::Var(_) => {}
        LambdaTerm::Lam(a, body) => {
            if !out.contains(a) {
                out.push(*a);
            }
            collect_binders(body, out);
        }
        LambdaTerm::App(t, u) => {
            collect_binders(t, out);
            collect_binders(u, out);
        }
    }
}

/// Changes one atom occurrence or binder.
fn mutate(rng: &mut impl Rng, t: &LambdaTerm, atoms: &[Atom]) -> LambdaTerm {
    match t {
        LambdaTerm::Var(_) => LambdaTerm::Var(*atoms.choose(rng).expect("non-empty")),
        LambdaTerm::Lam(a, body) => {
            if rng.gen_bool(0.3) {
                LambdaTerm::lam(*atoms.choose(rng).expect("non-empty"), (**body).clone())
            } else {
                LambdaTerm::lam(*a, mutate(rng, body, atoms))
            }
        }
        LambdaTerm::App(l, r) => {
            if rng.gen_bool(0.5) {
                LambdaTerm::app(mutate(rng, l, atoms), (**r).clone())
            } else {
                LambdaTerm::app((**l).clone(), mutate(rng, r, atoms))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Random values at nominal arities
// ---------------------------------------------------------------------------

/// Depth of the smallest closed value of each reachable type; `None` when
/// uninhabited.
struct Inhabitation<'a> {
    sig: &'a Signature,
    have_atoms: bool,
    data_depth: BTreeMap<Name, Option<usize>>,
}

impl<'a> Inhabitation<'a> {
    fn new(sig: &'a Signature, have_atoms: bool) -> Self {
        let mut data_depth: BTreeMap<Name, Option<usize>> = sig
            .datatypes()
            .iter()
            .map(|d| (d.name.clone(), None))
            .collect();
        loop {
            let mut changed = false;
            for d in sig.datatypes() {
                let best = d
                    .constructors
                    .iter()
                    .filter_map(|(_, t)| depth_of(t, have_atoms, &data_depth))
                    .min()
                    .map(|m| m + 1);
                if best.is_some() && best != data_depth[&d.name] {
                    data_depth.insert(d.name.clone(), best);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Inhabitation {
            sig,
            have_atoms,
            data_depth,
        }
    }

    fn depth(&self, t: &Type) -> Option<usize> {
        depth_of(t, self.have_atoms, &self.data_depth)
    }
}

fn depth_of(t: &Type, have_atoms: bool, data: &BTreeMap<Name, Option<usize>>) -> Option<usize> {
    match t {
        Type::Unit => Some(1),
        Type::Atm => have_atoms.then_some(1),
        Type::Prod(a, b) => {
            Some(1 + depth_of(a, have_atoms, data)?.max(depth_of(b, have_atoms, data)?))
        }
        Type::Bnd(a) => {
            if !have_atoms {
                return None;
            }
            Some(1 + depth_of(a, have_atoms, data)?)
        }
        Type::Data(d) => data.get(d).copied().flatten(),
        Type::Fun(..) => None,
    }
}

/// A closed value of nominal arity `ar` with atoms drawn from `w` and depth
/// at most `size` (or the least possible depth, if larger).
pub fn gen_value(
    sig: &Signature,
    ar: &Type,
    w: &World,
    size: usize,
    seed: u64,
) -> Result<Value, NominalError> {
    gen_value_rng(sig, ar, w, size, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn gen_value_rng(
    sig: &Signature,
    ar: &Type,
    w: &World,
    size: usize,
    rng: &mut impl Rng,
) -> Result<Value, NominalError> {
    if !is_nominal_arity(sig, ar) {
        return Err(NominalError::NotNominal(ar.clone()));
    }
    let inh = Inhabitation::new(sig, !w.is_empty());
    let min = inh
        .depth(ar)
        .ok_or_else(|| NominalError::Uninhabited(ar.clone()))?;
    let atoms: Vec<Atom> = w.iter().copied().collect();
    Ok(gen_at(&inh, ar, &atoms, size.max(min), rng))
}

fn gen_at(
    inh: &Inhabitation,
    t: &Type,
    atoms: &[Atom],
    budget: usize,
    rng: &mut impl Rng,
) -> Value {
    match t {
        Type::Unit => Value::Unit,
        Type::Atm => Value::Atom(*atoms.choose(rng).expect("inhabited")),
        Type::Prod(a, b) => Value::pair(
            gen_at(inh, a, atoms, budget - 1, rng),
            gen_at(inh, b, atoms, budget - 1, rng),
        ),
        Type::Bnd(a) => Value::bind(
            Value::Atom(*atoms.choose(rng).expect("inhabited")),
            gen_at(inh, a, atoms, budget - 1, rng),
        ),
        Type::Data(d) => {
            let dt = inh.sig.datatype(d).expect("declared");
            let fits: Vec<&(Name, Type)> = dt
                .constructors
                .iter()
                .filter(|(_, t)| inh.depth(t).is_some_and(|m| m < budget))
                .collect();
            // As the budget shrinks, prefer the cheapest constructors so
            // generation terminates.
            let cheapest = fits
                .iter()
                .filter_map(|(_, t)| inh.depth(t))
                .min()
                .expect("inhabited");
            let pool: Vec<&&(Name, Type)> = if budget <= cheapest + 2 || rng.gen_bool(0.25) {
                fits.iter()
                    .filter(|(_, t)| inh.depth(t) == Some(cheapest))
                    .collect()
            } else {
                fits.iter().collect()
            };
            let (c, arg) = **pool.choose(rng).expect("non-empty");
            Value::Con(
                c.clone(),
                std::sync::Arc::new(gen_at(inh, arg, atoms, budget - 1, rng)),
            )
        }
        Type::Fun(..) => unreachable!("nominal arity"),
    }
}

/// A random nominal arity over the signature's data types.
pub fn gen_arity(sig: &Signature, rng: &mut impl Rng, depth: usize) -> Type {
    let nominal_data: Vec<&DataType> = sig
        .datatypes()
        .iter()
        .filter(|d| is_nominal_arity(sig, &Type::Data(d.name.clone())))
        .collect();
    let leaf = |rng: &mut dyn rand::RngCore| match rng.gen_range(0..4) {
        0 => Type::Unit,
        1 if !nominal_data.is_empty() => {
            Type::Data(nominal_data.choose(rng).expect("non-empty").name.clone())
        }
        _ => Type::Atm,
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..5) {
        0 | 1 => leaf(rng),
        2 | 3 => Type::bnd(gen_arity(sig, rng, depth - 1)),
        _ => Type::prod(
            gen_arity(sig, rng, depth - 1),
            gen_arity(sig, rng, depth - 1),
        ),
    }
}

// ---------------------------------------------------------------------------
// Generated programs
// ---------------------------------------------------------------------------

struct Names(usize);

impl Names {
    fn next(&mut self, base: &str) -> String {
        self.0 += 1;
        format!("{base}{}", self.0)
    }
}

/// `swap_τ : atm → atm → τ → τ`, a closed expression that exchanges two
/// atoms throughout a value of type `τ`.
pub fn gen_swap(sig: &Signature, ty: &Type) -> Expr {
    desugar(&swap_surface(sig, ty, &mut Names(0)))
}

fn swap_surface(sig: &Signature, ty: &Type, names: &mut Names) -> Surface {
    let x = names.next("x");
    let y = names.next("y");
    let body = swapper(sig, ty, &x, &y, &mut BTreeMap::new(), names);
    Surface::lam(&x, Type::Atm, Surface::lam(&y, Type::Atm, body))
}

/// `S_τ : τ → τ` exchanging the atoms held by variables `x` and `y`.
/// `rec` maps data types currently being defined to their function names.
fn swapper(
    sig: &Signature,
    ty: &Type,
    x: &str,
    y: &str,
    rec: &mut BTreeMap<Name, String>,
    names: &mut Names,
) -> Surface {
    let z = names.next("z");
    let zv = || Surface::var(&z);
    match ty {
        Type::Atm => Surface::lam(
            &z,
            Type::Atm,
            Surface::if_(
                Surface::obs("eq", vec![zv(), Surface::var(x)]),
                Surface::var(y),
                Surface::if_(
                    Surface::obs("eq", vec![zv(), Surface::var(y)]),
                    Surface::var(x),
                    zv(),
                ),
            ),
        ),
        Type::Unit => Surface::lam(&z, Type::Unit, zv()),
        Type::Prod(a, b) => {
            let sa = swapper(sig, a, x, y, rec, names);
            let sb = swapper(sig, b, x, y, rec, names);
            Surface::lam(
                &z,
                ty.clone(),
                Surface::pair(
                    Surface::app(sa, Surface::fst(zv())),
                    Surface::app(sb, Surface::snd(zv())),
                ),
            )
        }
        Type::Fun(a, b) => {
            let x1 = names.next("w");
            let sa = swapper(sig, a, x, y, rec, names);
            let sb = swapper(sig, b, x, y, rec, names);
            Surface::lam(
                &z,
                ty.clone(),
                Surface::lam(
                    &x1,
                    (**a).clone(),
                    Surface::app(sb, Surface::app(zv(), Surface::app(sa, Surface::var(&x1)))),
                ),
            )
        }
        Type::Bnd(a) => {
            let z1 = names.next("a");
            let z2 = names.next("b");
            let satm = swapper(sig, &Type::Atm, x, y, rec, names);
            let sa = swapper(sig, a, x, y, rec, names);
            Surface::lam(
                &z,
                ty.clone(),
                Surface::let_bind(
                    &z1,
                    &z2,
                    zv(),
                    Surface::bind(
                        Surface::app(satm, Surface::var(&z1)),
                        Surface::app(sa, Surface::var(&z2)),
                    ),
                ),
            )
        }
        Type::Data(d) => {
            if let Some(f) = rec.get(d) {
                return Surface::var(f);
            }
            let f = names.next("swap_");
            rec.insert(d.clone(), f.clone());
            let dt = sig.datatype(d).expect("declared data type");
            let arms = dt
                .constructors
                .iter()
                .map(|(c, t)| {
                    let u = names.next("u");
                    let s = swapper(sig, t, x, y, rec, names);
                    SurfaceArm {
                        con: c.clone(),
                        var: Some(name(&u)),
                        body: Surface::Con(c.clone(), Box::new(Surface::app(s, Surface::var(&u)))),
                    }
                })
                .collect();
            rec.remove(d);
            Surface::fun(&f, &z, ty.clone(), ty.clone(), Surface::match_(zv(), arms))
        }
    }
}

/// `aeq_ar : ar → ar → nat`, evaluating to `Zero ()` on α-equivalent
/// arguments and `Succ (Zero ())` otherwise.
pub fn gen_aeq(sig: &Signature, ar: &Type) -> Result<Expr, NominalError> {
    if !is_nominal_arity(sig, ar) {
        return Err(NominalError::NotNominal(ar.clone()));
    }
    Ok(desugar(&aeq_surface(
        sig,
        ar,
        &mut BTreeMap::new(),
        &mut Names(0),
    )))
}

fn aeq_surface(
    sig: &Signature,
    ar: &Type,
    rec: &mut BTreeMap<Name, String>,
    names: &mut Names,
) -> Surface {
    if let Type::Data(d) = ar {
        if let Some(f) = rec.get(d) {
            return Surface::var(f);
        }
    }
    let u = names.next("p");
    let v = names.next("q");
    let (uv, vv) = (|| Surface::var(&u), || Surface::var(&v));
    let two = |body: Surface| Surface::lam(&u, ar.clone(), Surface::lam(&v, ar.clone(), body));
    match ar {
        Type::Unit => two(Surface::numeral(0)),
        Type::Atm => two(Surface::obs("eq", vec![uv(), vv()])),
        Type::Prod(a, b) => {
            let fa = aeq_surface(sig, a, rec, names);
            let fb = aeq_surface(sig, b, rec, names);
            two(Surface::if_(
                Surface::apps(fa, vec![Surface::fst(uv()), Surface::fst(vv())]),
                Surface::apps(fb, vec![Surface::snd(uv()), Surface::snd(vv())]),
                Surface::numeral(1),
            ))
        }
        Type::Bnd(a) => {
            let (a1, u1, a2, v2) = (
                names.next("a"),
                names.next("s"),
                names.next("a"),
                names.next("t"),
            );
            let fa = aeq_surface(sig, a, rec, names);
            let swap = swap_surface(sig, a, names);
            two(Surface::let_bind(
                &a1,
                &u1,
                uv(),
                Surface::let_bind(
                    &a2,
                    &v2,
                    vv(),
                    Surface::apps(
                        fa,
                        vec![
                            Surface::var(&u1),
                            Surface::apps(
                                swap,
                                vec![Surface::var(&a2), Surface::var(&a1), Surface::var(&v2)],
                            ),
                        ],
                    ),
                ),
            ))
        }
        Type::Data(d) => {
            let f = names.next("aeq_");
            rec.insert(d.clone(), f.clone());
            let dt = sig.datatype(d).expect("declared data type").clone();
            let arms = dt
                .constructors
                .iter()
                .map(|(c, t)| {
                    let x = names.next("m");
                    let inner = dt
                        .constructors
                        .iter()
                        .map(|(c2, _)| {
                            if c2 == c {
                                let y = names.next("n");
                                let fa = aeq_surface(sig, t, rec, names);
                                SurfaceArm {
                                    con: c2.clone(),
                                    var: Some(name(&y)),
                                    body: Surface::apps(
                                        fa,
                                        vec![Surface::var(&x), Surface::var(&y)],
                                    ),
                                }
                            } else {
                                SurfaceArm {
                                    con: c2.clone(),
                                    var: None,
                                    body: Surface::numeral(1),
                                }
                            }
                        })
                        .collect();
                    SurfaceArm {
                        con: c.clone(),
                        var: Some(name(&x)),
                        body: Surface::match_(vv(), inner),
                    }
                })
                .collect();
            rec.remove(d);
            let inner_ty = Type::fun(ar.clone(), Type::nat());
            Surface::fun(
                &f,
                &u,
                ar.clone(),
                inner_ty,
                Surface::lam(&v, ar.clone(), Surface::match_(uv(), arms)),
            )
        }
        Type::Fun(..) => unreachable!("nominal arity"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::State;
    use crate::machine::Machine;
    use crate::syntax::{Configuration, FrameStack};
    use crate::types::type_of;

    fn a(i: u32) -> Atom {
        Atom(i)
    }

    fn world(ix: &[u32]) -> World {
        ix.iter().map(|&i| Atom(i)).collect()
    }

    fn run_value(sig: &Signature, e: Expr, state: &[u32]) -> Value {
        let s = State::new(state.iter().map(|&i| Atom(i)).collect()).unwrap();
        let out =
            Machine::new(sig).run(Configuration::new(s, FrameStack::id(), e).unwrap(), 100_000);
        out.value()
            .cloned()
            .unwrap_or_else(|| panic!("did not terminate: {out}"))
    }

    fn apply(f: &Expr, args: &[Value]) -> Expr {
        desugar(&Surface::apps(
            crate::surface::from_expr(f),
            args.iter().map(crate::surface::from_value).collect(),
        ))
    }

    #[test]
    fn alpha_eq_examples() {
        let sig = Signature::basic();
        let atom = |i| Value::Atom(a(i));
        assert_eq!(
            alpha_eq(&sig, &world(&[0]), &atom(0), &atom(0), &Type::Atm),
            Ok(true)
        );
        let b00 = Value::bind(atom(0), atom(0));
        let b11 = Value::bind(atom(1), atom(1));
        let b01 = Value::bind(atom(0), atom(1));
        let ab = Type::bnd(Type::Atm);
        assert_eq!(alpha_eq(&sig, &world(&[0, 1]), &b00, &b11, &ab), Ok(true));
        assert_eq!(alpha_eq(&sig, &world(&[0, 1]), &b01, &b11, &ab), Ok(false));
    }

    #[test]
    fn alpha_eq_rejects_bad_inputs() {
        let sig = Signature::basic();
        let f = Type::fun(Type::Atm, Type::Atm);
        assert_eq!(
            alpha_eq(&sig, &World::new(), &Value::Unit, &Value::Unit, &f)
                .unwrap_err()
                .code(),
            "E_NOT_NOMINAL"
        );
        assert_eq!(
            alpha_eq(
                &sig,
                &World::new(),
                &Value::var("x"),
                &Value::Unit,
                &Type::Unit
            )
            .unwrap_err()
            .code(),
            "E_OPEN_VALUE"
        );
        assert_eq!(
            alpha_eq(
                &sig,
                &World::new(),
                &Value::Unit,
                &Value::Atom(a(0)),
                &Type::Unit
            )
            .unwrap_err()
            .code(),
            "E_ILL_TYPED"
        );
        assert_eq!(
            alpha_eq(
                &sig,
                &World::new(),
                &Value::Atom(a(0)),
                &Value::Atom(a(0)),
                &Type::Atm
            )
            .unwrap_err()
            .code(),
            "E_ATOM_ESCAPE"
        );
    }

    #[test]
    fn rep_examples() {
        let (x, y) = (a(0), a(1));
        assert_eq!(rep(&LambdaTerm::Var(x)), Value::con("V", Value::Atom(x)));
        let id = LambdaTerm::lam(x, LambdaTerm::Var(x));
        assert_eq!(
            rep(&id),
            Value::con(
                "L",
                Value::bind(Value::Atom(x), Value::con("V", Value::Atom(x)))
            )
        );
        let app = LambdaTerm::app(id.clone(), LambdaTerm::Var(y));
        assert_eq!(
            rep(&app),
            Value::con("A", Value::pair(rep(&id), Value::con("V", Value::Atom(y))))
        );
        assert_eq!(unrep(&rep(&app)), Some(app));
    }

    #[test]
    fn lambda_alpha_examples() {
        let (x, y) = (a(0), a(1));
        assert!(lambda_alpha(
            &LambdaTerm::lam(x, LambdaTerm::Var(x)),
            &LambdaTerm::lam(y, LambdaTerm::Var(y))
        ));
        assert!(!lambda_alpha(&LambdaTerm::Var(x), &LambdaTerm::Var(y)));
        // λx.λy.x vs λy.λx.x
        assert!(!lambda_alpha(
            &LambdaTerm::lam(x, LambdaTerm::lam(y, LambdaTerm::Var(x))),
            &LambdaTerm::lam(y, LambdaTerm::lam(x, LambdaTerm::Var(x)))
        ));
        // Shadowing: λx.λx.x ≡ λy.λx.x
        assert!(lambda_alpha(
            &LambdaTerm::lam(x, LambdaTerm::lam(x, LambdaTerm::Var(x))),
            &LambdaTerm::lam(y, LambdaTerm::lam(x, LambdaTerm::Var(x)))
        ));
    }

    #[test]
    fn generated_values_have_requested_type() {
        let sig = lambda_signature();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..300 {
            let ar = gen_arity(&sig, &mut rng, 3);
            let v = gen_value(&sig, &ar, &world(&[0, 1, 2]), 6, i).unwrap();
            let t = check_value(&sig, &mut TypingEnv::new(), &v).unwrap();
            assert_eq!(t, ar);
            assert!(v.atoms().is_subset(&world(&[0, 1, 2])));
        }
        assert_eq!(
            gen_value(&sig, &Type::Unit, &World::new(), 1, 0),
            Ok(Value::Unit)
        );
        assert_eq!(
            gen_value(&sig, &Type::Atm, &world(&[0]), 1, 0),
            Ok(Value::Atom(a(0)))
        );
        assert_eq!(
            gen_value(&sig, &Type::Atm, &World::new(), 1, 0)
                .unwrap_err()
                .code(),
            "E_UNINHABITED"
        );
        let looping =
            Signature::validate(vec![DataType::new("inf", vec![("S", Type::data("inf"))])])
                .unwrap();
        assert_eq!(
            gen_value(&looping, &Type::data("inf"), &World::new(), 5, 0)
                .unwrap_err()
                .code(),
            "E_UNINHABITED"
        );
    }

    #[test]
    fn swap_programs() {
        let sig = lambda_signature();
        let sw = gen_swap(&sig, &Type::Atm);
        assert_eq!(
            type_of(&sig, &sw),
            Ok(Type::fun(
                Type::Atm,
                Type::fun(Type::Atm, Type::fun(Type::Atm, Type::Atm))
            ))
        );
        let atom = |i| Value::Atom(a(i));
        assert_eq!(
            run_value(&sig, apply(&sw, &[atom(0), atom(1), atom(0)]), &[0, 1]),
            atom(1)
        );
        assert_eq!(
            run_value(&sig, apply(&sw, &[atom(0), atom(1), atom(2)]), &[0, 1, 2]),
            atom(2)
        );
        let su = gen_swap(&sig, &Type::Unit);
        assert_eq!(
            run_value(&sig, apply(&su, &[atom(0), atom(1), Value::Unit]), &[0, 1]),
            Value::Unit
        );

        let term = Type::data("term");
        let st = gen_swap(&sig, &term);
        assert!(type_of(&sig, &st).is_ok());
        let t = rep(&LambdaTerm::app(
            LambdaTerm::lam(a(0), LambdaTerm::Var(a(1))),
            LambdaTerm::Var(a(0)),
        ));
        let out = run_value(&sig, apply(&st, &[atom(0), atom(1), t.clone()]), &[0, 1]);
        let expected = rep(&LambdaTerm::app(
            LambdaTerm::lam(a(1), LambdaTerm::Var(a(0))),
            LambdaTerm::Var(a(1)),
        ));
        // The bound atom is regenerated by unbinding, so compare up to α.
        let w = out.atoms().union(&world(&[0, 1])).copied().collect();
        assert_eq!(alpha_eq(&sig, &w, &out, &expected, &term), Ok(true));
    }

    #[test]
    fn swap_at_function_type_conjugates() {
        let sig = Signature::basic();
        let fty = Type::fun(Type::Atm, Type::Atm);
        let sw = gen_swap(&sig, &fty);
        assert!(type_of(&sig, &sw).is_ok());
        // const #a0, swapped (#a0 #a1), is const #a1.
        let k = Value::fun("k", "z", Type::Atm, None, Expr::Val(Value::Atom(a(0))));
        let swapped = desugar(&Surface::app(
            crate::surface::from_expr(&apply(&sw, &[Value::Atom(a(0)), Value::Atom(a(1)), k])),
            Surface::Atom(a(1)),
        ));
        assert_eq!(run_value(&sig, swapped, &[0, 1]), Value::Atom(a(1)));
    }

    #[test]
    fn aeq_programs() {
        let sig = lambda_signature();
        let term = Type::data("term");
        let aeq_t = gen_aeq(&sig, &term).unwrap();
        assert_eq!(
            type_of(&sig, &aeq_t),
            Ok(Type::fun(
                term.clone(),
                Type::fun(term.clone(), Type::nat())
            ))
        );
        let id0 = rep(&LambdaTerm::lam(a(0), LambdaTerm::Var(a(0))));
        let id1 = rep(&LambdaTerm::lam(a(1), LambdaTerm::Var(a(1))));
        assert_eq!(
            run_value(&sig, apply(&aeq_t, &[id0, id1]), &[0, 1]),
            Value::numeral(0)
        );
        let va = rep(&LambdaTerm::Var(a(0)));
        let vb = rep(&LambdaTerm::Var(a(1)));
        assert_eq!(
            run_value(&sig, apply(&aeq_t, &[va, vb]), &[0, 1]),
            Value::numeral(1)
        );
        let aeq_u = gen_aeq(&sig, &Type::Unit).unwrap();
        assert_eq!(
            run_value(&sig, apply(&aeq_u, &[Value::Unit, Value::Unit]), &[]),
            Value::numeral(0)
        );
        assert!(gen_aeq(&sig, &Type::fun(Type::Unit, Type::Unit)).is_err());
    }

    #[test]
    fn aeq_program_agrees_with_alpha_eq_on_random_terms() {
        let sig = lambda_signature();
        let term = Type::data("term");
        let aeq_t = gen_aeq(&sig, &term).unwrap();
        let atoms: Vec<Atom> = (0..4).map(Atom).collect();
        let w: World = atoms.iter().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (t, u) = gen_lambda_pair(&mut rng, &atoms, 8);
            let expect = alpha_eq(&sig, &w, &rep(&t), &rep(&u), &term).unwrap();
            assert_eq!(expect, lambda_alpha(&t, &u), "{t} vs {u}");
            let got = run_value(&sig, apply(&aeq_t, &[rep(&t), rep(&u)]), &[0, 1, 2, 3]);
            assert_eq!(got, Value::numeral(u64::from(!expect)), "{t} vs {u}");
        }
    }
}
