//! Abstract syntax of the reduced-form calculus.
//!
//! Values are a sub-grammar of expressions. Every destructor, application and
//! observation takes values as arguments, so evaluation order is explicit in
//! `let`. Variables are the only meta-level binders: atoms inside `<a>v` are
//! plain data and are never renamed by substitution or compared up to renaming.

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::atom::{Atom, Permutation, State, World};
use crate::types::Type;

/// Identifiers for variables, constructors, data types and observations.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

#[derive(Clone, Debug)]
pub enum Value {
    Var(Name),
    Unit,
    Pair(Arc<Value>, Arc<Value>),
    Fun(Arc<Fun>),
    Con(Name, Arc<Value>),
    Atom(Atom),
    /// Atom binding `<v1>v2`.
    Bind(Arc<Value>, Arc<Value>),
}

/// `fun(f x = body)`, annotated with its argument type and (optionally) its
/// result type. The result annotation may be omitted when `body` does not
/// mention `f`.
#[derive(Clone, Debug)]
pub struct Fun {
    pub name: Name,
    pub param: Name,
    pub param_ty: Type,
    pub ret_ty: Option<Type>,
    pub body: Expr,
}

#[derive(Clone, Debug)]
pub enum Expr {
    Val(Value),
    Let(Name, Arc<Expr>, Arc<Expr>),
    Fst(Value),
    Snd(Value),
    App(Value, Value),
    Match(Value, Arc<[Arm]>),
    Fresh,
    Unbind(Value),
    Obs(Name, Arc<[Value]>),
}

#[derive(Clone, Debug)]
pub struct Arm {
    pub con: Name,
    pub var: Name,
    pub body: Expr,
}

/// A single let-continuation `(x.e)`.
#[derive(Clone, Debug)]
pub struct Frame {
    pub var: Name,
    pub body: Arc<Expr>,
}

/// `Id ∘ (x1.e1) ∘ ... ∘ (xn.en)`; the last frame is the top of the stack.
#[derive(Clone, Debug, Default)]
pub struct FrameStack {
    frames: Vec<Frame>,
}

// ---------------------------------------------------------------------------
// Constructors and small helpers
// ---------------------------------------------------------------------------

impl Value {
    pub fn var(x: &str) -> Value {
        Value::Var(name(x))
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Arc::new(a), Arc::new(b))
    }

    pub fn con(c: &str, v: Value) -> Value {
        Value::Con(name(c), Arc::new(v))
    }

    pub fn bind(a: Value, v: Value) -> Value {
        Value::Bind(Arc::new(a), Arc::new(v))
    }

    pub fn fun(f: &str, x: &str, param_ty: Type, ret_ty: Option<Type>, body: Expr) -> Value {
        Value::Fun(Arc::new(Fun {
            name: name(f),
            param: name(x),
            param_ty,
            ret_ty,
            body,
        }))
    }

    /// The closed value `⌈m⌉` of type `nat`.
    pub fn numeral(m: u64) -> Value {
        let mut v = Value::con("Zero", Value::Unit);
        for _ in 0..m {
            v = Value::con("Succ", v);
        }
        v
    }

    /// Inverse of [`Value::numeral`].
    pub fn as_numeral(&self) -> Option<u64> {
        let mut n = 0;
        let mut cur = self;
        loop {
            match cur {
                Value::Con(c, arg) if &**c == "Succ" => {
                    n += 1;
                    cur = arg;
                }
                Value::Con(c, arg) if &**c == "Zero" && matches!(**arg, Value::Unit) => {
                    return Some(n)
                }
                _ => return None,
            }
        }
    }

    pub fn as_atom(&self) -> Option<Atom> {
        match self {
            Value::Atom(a) => Some(*a),
            _ => None,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }
}

impl Expr {
    pub fn let_(x: &str, e1: Expr, e2: Expr) -> Expr {
        Expr::Let(name(x), Arc::new(e1), Arc::new(e2))
    }

    pub fn match_(v: Value, arms: Vec<Arm>) -> Expr {
        Expr::Match(v, arms.into())
    }

    pub fn obs(o: &str, args: Vec<Value>) -> Expr {
        Expr::Obs(name(o), args.into())
    }

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Expr::Val(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Expr::Val(_))
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Number of syntax nodes; a rough size measure for generators.
    pub fn size(&self) -> usize {
        match self {
            Expr::Val(v) => v.size(),
            Expr::Let(_, a, b) => 1 + a.size() + b.size(),
            Expr::Fst(v) | Expr::Snd(v) | Expr::Unbind(v) => 1 + v.size(),
            Expr::App(a, b) => 1 + a.size() + b.size(),
            Expr::Match(v, arms) => {
                1 + v.size() + arms.iter().map(|a| a.body.size()).sum::<usize>()
            }
            Expr::Fresh => 1,
            Expr::Obs(_, args) => 1 + args.iter().map(Value::size).sum::<usize>(),
        }
    }
}

impl Value {
    pub fn size(&self) -> usize {
        match self {
            Value::Var(_) | Value::Unit | Value::Atom(_) => 1,
            Value::Pair(a, b) | Value::Bind(a, b) => 1 + a.size() + b.size(),
            Value::Con(_, v) => 1 + v.size(),
            Value::Fun(f) => 1 + f.body.size(),
        }
    }
}

impl Arm {
    pub fn new(con: &str, var: &str, body: Expr) -> Arm {
        Arm {
            con: name(con),
            var: name(var),
            body,
        }
    }
}

impl From<Value> for Expr {
    fn from(v: Value) -> Expr {
        Expr::Val(v)
    }
}

impl Frame {
    pub fn new(var: &str, body: Expr) -> Frame {
        Frame {
            var: name(var),
            body: Arc::new(body),
        }
    }
}

impl FrameStack {
    pub fn id() -> Self {
        FrameStack { frames: Vec::new() }
    }

    pub fn from_frames(frames: Vec<Frame>) -> Self {
        FrameStack { frames }
    }

    /// `F ∘ (x.e)`.
    pub fn push(&mut self, frame: Frame) {
        self.frames.push(frame);
    }

    pub fn with(mut self, frame: Frame) -> Self {
        self.frames.push(frame);
        self
    }

    pub fn pop(&mut self) -> Option<Frame> {
        self.frames.pop()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn is_id(&self) -> bool {
        self.frames.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Atoms
// ---------------------------------------------------------------------------

impl Value {
    pub fn collect_atoms(&self, out: &mut World) {
        match self {
            Value::Var(_) | Value::Unit => {}
            Value::Atom(a) => {
                out.insert(*a);
            }
            Value::Pair(a, b) | Value::Bind(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Value::Con(_, v) => v.collect_atoms(out),
            Value::Fun(f) => f.body.collect_atoms(out),
        }
    }

    pub fn atoms(&self) -> World {
        let mut w = World::new();
        self.collect_atoms(&mut w);
        w
    }

    /// Whether every atom literal occurring in the value satisfies `pred`.
    pub fn atoms_all(&self, pred: &dyn Fn(Atom) -> bool) -> bool {
        match self {
            Value::Var(_) | Value::Unit => true,
            Value::Atom(a) => pred(*a),
            Value::Pair(a, b) | Value::Bind(a, b) => a.atoms_all(pred) && b.atoms_all(pred),
            Value::Con(_, v) => v.atoms_all(pred),
            Value::Fun(f) => f.body.atoms_all(pred),
        }
    }
}

impl Expr {
    pub fn collect_atoms(&self, out: &mut World) {
        match self {
            Expr::Val(v) | Expr::Fst(v) | Expr::Snd(v) | Expr::Unbind(v) => v.collect_atoms(out),
            Expr::Let(_, a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Expr::App(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Expr::Match(v, arms) => {
                v.collect_atoms(out);
                for arm in arms.iter() {
                    arm.body.collect_atoms(out);
                }
            }
            Expr::Fresh => {}
            Expr::Obs(_, args) => args.iter().for_each(|v| v.collect_atoms(out)),
        }
    }

    pub fn atoms(&self) -> World {
        let mut w = World::new();
        self.collect_atoms(&mut w);
        w
    }

    pub fn atoms_all(&self, pred: &dyn Fn(Atom) -> bool) -> bool {
        match self {
            Expr::Val(v) | Expr::Fst(v) | Expr::Snd(v) | Expr::Unbind(v) => v.atoms_all(pred),
            Expr::Let(_, a, b) => a.atoms_all(pred) && b.atoms_all(pred),
            Expr::App(a, b) => a.atoms_all(pred) && b.atoms_all(pred),
            Expr::Match(v, arms) => {
                v.atoms_all(pred) && arms.iter().all(|a| a.body.atoms_all(pred))
            }
            Expr::Fresh => true,
            Expr::Obs(_, args) => args.iter().all(|v| v.atoms_all(pred)),
        }
    }
}

impl FrameStack {
    pub fn collect_atoms(&self, out: &mut World) {
        for fr in &self.frames {
            fr.body.collect_atoms(out);
        }
    }

    pub fn atoms(&self) -> World {
        let mut w = World::new();
        self.collect_atoms(&mut w);
        w
    }

    pub fn atoms_all(&self, pred: &dyn Fn(Atom) -> bool) -> bool {
        self.frames.iter().all(|fr| fr.body.atoms_all(pred))
    }
}

// ---------------------------------------------------------------------------
// Atom maps: renaming and permutation
//
// The `_opt` traversals return `None` when nothing changed so unchanged
// subtrees stay shared.
// ---------------------------------------------------------------------------

type AtomFn<'a> = &'a dyn Fn(Atom) -> Atom;

fn keep<T: Clone>(orig: &Arc<T>, new: Option<T>) -> Arc<T> {
    match new {
        Some(t) => Arc::new(t),
        None => orig.clone(),
    }
}

impl Value {
    fn map_atoms_opt(&self, f: AtomFn) -> Option<Value> {
        match self {
            Value::Var(_) | Value::Unit => None,
            Value::Atom(a) => {
                let b = f(*a);
                (b != *a).then_some(Value::Atom(b))
            }
            Value::Pair(a, b) => {
                let (na, nb) = (a.map_atoms_opt(f), b.map_atoms_opt(f));
                if na.is_none() && nb.is_none() {
                    return None;
                }
                Some(Value::Pair(keep(a, na), keep(b, nb)))
            }
            Value::Bind(a, b) => {
                let (na, nb) = (a.map_atoms_opt(f), b.map_atoms_opt(f));
                if na.is_none() && nb.is_none() {
                    return None;
                }
                Some(Value::Bind(keep(a, na), keep(b, nb)))
            }
            Value::Con(c, v) => v
                .map_atoms_opt(f)
                .map(|nv| Value::Con(c.clone(), Arc::new(nv))),
            Value::Fun(fun) => fun.body.map_atoms_opt(f).map(|body| {
                Value::Fun(Arc::new(Fun {
                    body,
                    ..(**fun).clone()
                }))
            }),
        }
    }

    pub fn map_atoms(&self, f: AtomFn) -> Value {
        self.map_atoms_opt(f).unwrap_or_else(|| self.clone())
    }

    /// `v{a := b}`: replace every occurrence of `from` by `to`.
    pub fn rename_atom(&self, from: Atom, to: Atom) -> Value {
        if from == to {
            return self.clone();
        }
        self.map_atoms(&|a| if a == from { to } else { a })
    }

    pub fn permute(&self, pi: &Permutation) -> Value {
        self.map_atoms(&|a| pi.apply(a))
    }
}

impl Expr {
    fn map_atoms_opt(&self, f: AtomFn) -> Option<Expr> {
        match self {
            Expr::Val(v) => v.map_atoms_opt(f).map(Expr::Val),
            Expr::Fst(v) => v.map_atoms_opt(f).map(Expr::Fst),
            Expr::Snd(v) => v.map_atoms_opt(f).map(Expr::Snd),
            Expr::Unbind(v) => v.map_atoms_opt(f).map(Expr::Unbind),
            Expr::Let(x, a, b) => {
                let (na, nb) = (a.map_atoms_opt(f), b.map_atoms_opt(f));
                if na.is_none() && nb.is_none() {
                    return None;
                }
                Some(Expr::Let(x.clone(), keep(a, na), keep(b, nb)))
            }
            Expr::App(a, b) => {
                let (na, nb) = (a.map_atoms_opt(f), b.map_atoms_opt(f));
                if na.is_none() && nb.is_none() {
                    return None;
                }
                Some(Expr::App(
                    na.unwrap_or_else(|| a.clone()),
                    nb.unwrap_or_else(|| b.clone()),
                ))
            }
            Expr::Match(v, arms) => {
                let nv = v.map_atoms_opt(f);
                let narms: Vec<Option<Expr>> =
                    arms.iter().map(|a| a.body.map_atoms_opt(f)).collect();
                if nv.is_none() && narms.iter().all(Option::is_none) {
                    return None;
                }
                let arms = arms
                    .iter()
                    .zip(narms)
                    .map(|(a, nb)| Arm {
                        con: a.con.clone(),
                        var: a.var.clone(),
                        body: nb.unwrap_or_else(|| a.body.clone()),
                    })
                    .collect::<Vec<_>>();
                Some(Expr::Match(nv.unwrap_or_else(|| v.clone()), arms.into()))
            }
            Expr::Fresh => None,
            Expr::Obs(o, args) => {
                let nargs: Vec<Option<Value>> = args.iter().map(|v| v.map_atoms_opt(f)).collect();
                if nargs.iter().all(Option::is_none) {
                    return None;
                }
                let args = args
                    .iter()
                    .zip(nargs)
                    .map(|(v, nv)| nv.unwrap_or_else(|| v.clone()))
                    .collect::<Vec<_>>();
                Some(Expr::Obs(o.clone(), args.into()))
            }
        }
    }

    pub fn map_atoms(&self, f: AtomFn) -> Expr {
        self.map_atoms_opt(f).unwrap_or_else(|| self.clone())
    }

    pub fn rename_atom(&self, from: Atom, to: Atom) -> Expr {
        if from == to {
            return self.clone();
        }
        self.map_atoms(&|a| if a == from { to } else { a })
    }

    pub fn permute(&self, pi: &Permutation) -> Expr {
        self.map_atoms(&|a| pi.apply(a))
    }
}

impl FrameStack {
    pub fn map_atoms(&self, f: AtomFn) -> FrameStack {
        FrameStack {
            frames: self
                .frames
                .iter()
                .map(|fr| Frame {
                    var: fr.var.clone(),
                    body: keep(&fr.body, fr.body.map_atoms_opt(f)),
                })
                .collect(),
        }
    }

    pub fn permute(&self, pi: &Permutation) -> FrameStack {
        self.map_atoms(&|a| pi.apply(a))
    }
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

fn fv_value(v: &Value, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match v {
        Value::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        Value::Unit | Value::Atom(_) => {}
        Value::Pair(a, b) | Value::Bind(a, b) => {
            fv_value(a, bound, out);
            fv_value(b, bound, out);
        }
        Value::Con(_, v) => fv_value(v, bound, out),
        Value::Fun(f) => {
            bound.push(f.name.clone());
            bound.push(f.param.clone());
            fv_expr(&f.body, bound, out);
            bound.pop();
            bound.pop();
        }
    }
}

fn fv_expr(e: &Expr, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match e {
        Expr::Val(v) | Expr::Fst(v) | Expr::Snd(v) | Expr::Unbind(v) => fv_value(v, bound, out),
        Expr::Let(x, a, b) => {
            fv_expr(a, bound, out);
            bound.push(x.clone());
            fv_expr(b, bound, out);
            bound.pop();
        }
        Expr::App(a, b) => {
            fv_value(a, bound, out);
            fv_value(b, bound, out);
        }
        Expr::Match(v, arms) => {
            fv_value(v, bound, out);
            for arm in arms.iter() {
                bound.push(arm.var.clone());
                fv_expr(&arm.body, bound, out);
                bound.pop();
            }
        }
        Expr::Fresh => {}
        Expr::Obs(_, args) => args.iter().for_each(|v| fv_value(v, bound, out)),
    }
}

impl Value {
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        fv_value(self, &mut Vec::new(), &mut out);
        out
    }
}

impl Expr {
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        fv_expr(self, &mut Vec::new(), &mut out);
        out
    }
}

impl FrameStack {
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for fr in &self.frames {
            let mut bound = vec![fr.var.clone()];
            fv_expr(&fr.body, &mut bound, &mut out);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Capture-avoiding substitution of values for variables
// ---------------------------------------------------------------------------

/// A simultaneous substitution `[x1 := v1, ...]`.
#[derive(Clone, Debug)]
pub struct Subst {
    pairs: Vec<(Name, Value)>,
    range_fv: BTreeSet<Name>,
}

impl Subst {
    pub fn new(pairs: Vec<(Name, Value)>) -> Subst {
        let mut range_fv = BTreeSet::new();
        for (_, v) in &pairs {
            fv_value(v, &mut Vec::new(), &mut range_fv);
        }
        Subst { pairs, range_fv }
    }

    pub fn single(x: Name, v: Value) -> Subst {
        Subst::new(vec![(x, v)])
    }

    fn lookup(&self, x: &Name) -> Option<&Value> {
        self.pairs
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, v)| v)
    }

    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The substitution to apply under a binder `x` whose scope is `body`, and
    /// the (possibly renamed) binder.
    fn enter<'s>(
        &'s self,
        x: &Name,
        body_fv: impl FnOnce() -> BTreeSet<Name>,
    ) -> (Cow<'s, Subst>, Name) {
        let shadows = self.pairs.iter().any(|(y, _)| y == x);
        let captures = self.range_fv.contains(x);
        if !shadows && !captures {
            return (Cow::Borrowed(self), x.clone());
        }
        let mut inner = Subst {
            pairs: self.pairs.iter().filter(|(y, _)| y != x).cloned().collect(),
            range_fv: self.range_fv.clone(),
        };
        if inner.is_empty() || !captures {
            return (Cow::Owned(inner), x.clone());
        }
        let mut avoid = body_fv();
        avoid.extend(self.range_fv.iter().cloned());
        avoid.extend(self.pairs.iter().map(|(y, _)| y.clone()));
        let fresh = fresh_var(&avoid);
        inner.pairs.push((x.clone(), Value::Var(fresh.clone())));
        inner.range_fv.insert(fresh.clone());
        (Cow::Owned(inner), fresh)
    }
}

/// The first `%k` not in `avoid`. Names of this form cannot be written by
/// hand collision-free, so generated code uses them.
pub fn fresh_var(avoid: &BTreeSet<Name>) -> Name {
    (0..)
        .map(|k| name(&format!("%{k}")))
        .find(|n| !avoid.contains(n))
        .expect("unbounded supply")
}

fn subst_arc_value(v: &Arc<Value>, s: &Subst) -> Option<Arc<Value>> {
    subst_value(v, s).map(Arc::new)
}

fn subst_value(v: &Value, s: &Subst) -> Option<Value> {
    match v {
        Value::Var(x) => s.lookup(x).cloned(),
        Value::Unit | Value::Atom(_) => None,
        Value::Pair(a, b) => {
            let (na, nb) = (subst_arc_value(a, s), subst_arc_value(b, s));
            if na.is_none() && nb.is_none() {
                return None;
            }
            Some(Value::Pair(
                na.unwrap_or_else(|| a.clone()),
                nb.unwrap_or_else(|| b.clone()),
            ))
        }
        Value::Bind(a, b) => {
            let (na, nb) = (subst_arc_value(a, s), subst_arc_value(b, s));
            if na.is_none() && nb.is_none() {
                return None;
            }
            Some(Value::Bind(
                na.unwrap_or_else(|| a.clone()),
                nb.unwrap_or_else(|| b.clone()),
            ))
        }
        Value::Con(c, v) => subst_arc_value(v, s).map(|nv| Value::Con(c.clone(), nv)),
        Value::Fun(fun) => {
            let body_fv = || fun.body.free_vars();
            let (s1, f2) = s.enter(&fun.name, body_fv);
            if s1.is_empty() {
                return None;
            }
            let (s2, x2) = s1.enter(&fun.param, || fun.body.free_vars());
            if s2.is_empty() {
                return None;
            }
            let body = subst_expr(&fun.body, &s2)?;
            Some(Value::Fun(Arc::new(Fun {
                name: f2,
                param: x2,
                param_ty: fun.param_ty.clone(),
                ret_ty: fun.ret_ty.clone(),
                body,
            })))
        }
    }
}

fn subst_expr(e: &Expr, s: &Subst) -> Option<Expr> {
    match e {
        Expr::Val(v) => subst_value(v, s).map(Expr::Val),
        Expr::Fst(v) => subst_value(v, s).map(Expr::Fst),
        Expr::Snd(v) => subst_value(v, s).map(Expr::Snd),
        Expr::Unbind(v) => subst_value(v, s).map(Expr::Unbind),
        Expr::App(a, b) => {
            let (na, nb) = (subst_value(a, s), subst_value(b, s));
            if na.is_none() && nb.is_none() {
                return None;
            }
            Some(Expr::App(
                na.unwrap_or_else(|| a.clone()),
                nb.unwrap_or_else(|| b.clone()),
            ))
        }
        Expr::Let(x, a, b) => {
            let na = subst_expr(a, s).map(Arc::new);
            let (inner, x2) = s.enter(x, || b.free_vars());
            let nb = if inner.is_empty() {
                None
            } else {
                subst_expr(b, &inner).map(Arc::new)
            };
            if na.is_none() && nb.is_none() {
                return None;
            }
            Some(Expr::Let(
                x2,
                na.unwrap_or_else(|| a.clone()),
                nb.unwrap_or_else(|| b.clone()),
            ))
        }
        Expr::Match(v, arms) => {
            let nv = subst_value(v, s);
            let narms: Vec<Option<(Name, Expr)>> = arms
                .iter()
                .map(|arm| {
                    let (inner, y) = s.enter(&arm.var, || arm.body.free_vars());
                    if inner.is_empty() {
                        None
                    } else {
                        subst_expr(&arm.body, &inner).map(|b| (y, b))
                    }
                })
                .collect();
            if nv.is_none() && narms.iter().all(Option::is_none) {
                return None;
            }
            let arms = arms
                .iter()
                .zip(narms)
                .map(|(arm, n)| match n {
                    Some((var, body)) => Arm {
                        con: arm.con.clone(),
                        var,
                        body,
                    },
                    None => arm.clone(),
                })
                .collect::<Vec<_>>();
            Some(Expr::Match(nv.unwrap_or_else(|| v.clone()), arms.into()))
        }
        Expr::Fresh => None,
        Expr::Obs(o, args) => {
            let nargs: Vec<Option<Value>> = args.iter().map(|v| subst_value(v, s)).collect();
            if nargs.iter().all(Option::is_none) {
                return None;
            }
            let args = args
                .iter()
                .zip(nargs)
                .map(|(v, n)| n.unwrap_or_else(|| v.clone()))
                .collect::<Vec<_>>();
            Some(Expr::Obs(o.clone(), args.into()))
        }
    }
}

impl Expr {
    /// `e[x1 := v1, ...]`, simultaneous and capture-avoiding for variable
    /// binders. Atoms are copied verbatim, including under `<a>-`.
    pub fn substitute(&self, bindings: &[(Name, Value)]) -> Expr {
        self.apply_subst(&Subst::new(bindings.to_vec()))
    }

    pub fn apply_subst(&self, s: &Subst) -> Expr {
        if s.is_empty() {
            return self.clone();
        }
        subst_expr(self, s).unwrap_or_else(|| self.clone())
    }
}

impl Value {
    pub fn substitute(&self, bindings: &[(Name, Value)]) -> Value {
        let s = Subst::new(bindings.to_vec());
        subst_value(self, &s).unwrap_or_else(|| self.clone())
    }
}

// ---------------------------------------------------------------------------
// Equality up to renaming of variable binders
// ---------------------------------------------------------------------------

#[derive(Default)]
struct Binders<'a> {
    left: Vec<&'a Name>,
    right: Vec<&'a Name>,
}

impl<'a> Binders<'a> {
    fn var_eq(&self, l: &Name, r: &Name) -> bool {
        let li = self.left.iter().rposition(|n| *n == l);
        let ri = self.right.iter().rposition(|n| *n == r);
        match (li, ri) {
            (Some(i), Some(j)) => i == j,
            (None, None) => l == r,
            _ => false,
        }
    }

    fn push(&mut self, l: &'a Name, r: &'a Name) {
        self.left.push(l);
        self.right.push(r);
    }

    fn pop(&mut self) {
        self.left.pop();
        self.right.pop();
    }
}

fn eq_value<'a>(a: &'a Value, b: &'a Value, env: &mut Binders<'a>) -> bool {
    match (a, b) {
        (Value::Var(x), Value::Var(y)) => env.var_eq(x, y),
        (Value::Unit, Value::Unit) => true,
        (Value::Atom(x), Value::Atom(y)) => x == y,
        (Value::Pair(a1, a2), Value::Pair(b1, b2)) | (Value::Bind(a1, a2), Value::Bind(b1, b2)) => {
            eq_value(a1, b1, env) && eq_value(a2, b2, env)
        }
        (Value::Con(c, x), Value::Con(d, y)) => c == d && eq_value(x, y, env),
        (Value::Fun(f), Value::Fun(g)) => {
            if Arc::ptr_eq(f, g) && env.left.is_empty() {
                return true;
            }
            if f.param_ty != g.param_ty || f.ret_ty != g.ret_ty {
                return false;
            }
            env.push(&f.name, &g.name);
            env.push(&f.param, &g.param);
            let r = eq_expr(&f.body, &g.body, env);
            env.pop();
            env.pop();
            r
        }
        _ => false,
    }
}

fn eq_expr<'a>(a: &'a Expr, b: &'a Expr, env: &mut Binders<'a>) -> bool {
    match (a, b) {
        (Expr::Val(x), Expr::Val(y))
        | (Expr::Fst(x), Expr::Fst(y))
        | (Expr::Snd(x), Expr::Snd(y))
        | (Expr::Unbind(x), Expr::Unbind(y)) => eq_value(x, y, env),
        (Expr::App(a1, a2), Expr::App(b1, b2)) => eq_value(a1, b1, env) && eq_value(a2, b2, env),
        (Expr::Let(x, a1, a2), Expr::Let(y, b1, b2)) => {
            if !eq_expr(a1, b1, env) {
                return false;
            }
            env.push(x, y);
            let r = eq_expr(a2, b2, env);
            env.pop();
            r
        }
        (Expr::Match(v, xs), Expr::Match(w, ys)) => {
            eq_value(v, w, env)
                && xs.len() == ys.len()
                && xs.iter().zip(ys.iter()).all(|(p, q)| {
                    if p.con != q.con {
                        return false;
                    }
                    env.push(&p.var, &q.var);
                    let r = eq_expr(&p.body, &q.body, env);
                    env.pop();
                    r
                })
        }
        (Expr::Fresh, Expr::Fresh) => true,
        (Expr::Obs(o, xs), Expr::Obs(p, ys)) => {
            o == p
                && xs.len() == ys.len()
                && xs.iter().zip(ys.iter()).all(|(x, y)| eq_value(x, y, env))
        }
        _ => false,
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        eq_value(self, other, &mut Binders::default())
    }
}

impl Eq for Value {}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        eq_expr(self, other, &mut Binders::default())
    }
}

impl Eq for Expr {}

impl PartialEq for FrameStack {
    fn eq(&self, other: &FrameStack) -> bool {
        self.frames.len() == other.frames.len()
            && self.frames.iter().zip(other.frames.iter()).all(|(p, q)| {
                let mut env = Binders::default();
                env.push(&p.var, &q.var);
                eq_expr(&p.body, &q.body, &mut env)
            })
    }
}

impl Eq for FrameStack {}

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("E_ATOM_ESCAPE: atom {0} occurs in the stack or expression but not in the state")]
    AtomEscape(Atom),
}

/// A machine configuration `<s, F, e>` with `atom(F, e) ⊆ atom(s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub state: State,
    pub stack: FrameStack,
    pub expr: Expr,
}

impl Configuration {
    pub fn new(state: State, stack: FrameStack, expr: Expr) -> Result<Self, ConfigError> {
        let mut w = stack.atoms();
        expr.collect_atoms(&mut w);
        if let Some(a) = w.into_iter().find(|&a| !state.contains(a)) {
            return Err(ConfigError::AtomEscape(a));
        }
        Ok(Configuration { state, stack, expr })
    }

    /// Builds a configuration without checking atom containment.
    pub fn new_unchecked(state: State, stack: FrameStack, expr: Expr) -> Self {
        Configuration { state, stack, expr }
    }

    pub fn is_well_formed(&self) -> bool {
        let st = &self.state;
        self.stack.atoms_all(&|a| st.contains(a)) && self.expr.atoms_all(&|a| st.contains(a))
    }

    /// `π·<s, F, e>`.
    pub fn permute(&self, pi: &Permutation) -> Configuration {
        Configuration {
            state: self.state.permute(pi),
            stack: self.stack.permute(pi),
            expr: self.expr.permute(pi),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(i: u32) -> Atom {
        Atom(i)
    }

    fn v_at(i: u32) -> Value {
        Value::con("V", Value::Atom(a(i)))
    }

    /// Independent reference walker: collects atom literals by explicit
    /// stack-based traversal.
    fn reference_atoms(e: &Expr) -> World {
        enum Node<'a> {
            E(&'a Expr),
            V(&'a Value),
        }
        let mut out = World::new();
        let mut todo = vec![Node::E(e)];
        while let Some(n) = todo.pop() {
            match n {
                Node::E(Expr::Val(v) | Expr::Fst(v) | Expr::Snd(v) | Expr::Unbind(v)) => {
                    todo.push(Node::V(v))
                }
                Node::E(Expr::Let(_, x, y)) => {
                    todo.push(Node::E(x));
                    todo.push(Node::E(y));
                }
                Node::E(Expr::App(x, y)) => {
                    todo.push(Node::V(x));
                    todo.push(Node::V(y));
                }
                Node::E(Expr::Match(v, arms)) => {
                    todo.push(Node::V(v));
                    todo.extend(arms.iter().map(|a| Node::E(&a.body)));
                }
                Node::E(Expr::Fresh) => {}
                Node::E(Expr::Obs(_, args)) => todo.extend(args.iter().map(Node::V)),
                Node::V(Value::Atom(x)) => {
                    out.insert(*x);
                }
                Node::V(Value::Pair(x, y) | Value::Bind(x, y)) => {
                    todo.push(Node::V(x));
                    todo.push(Node::V(y));
                }
                Node::V(Value::Con(_, x)) => todo.push(Node::V(x)),
                Node::V(Value::Fun(f)) => todo.push(Node::E(&f.body)),
                Node::V(Value::Var(_) | Value::Unit) => {}
            }
        }
        out
    }

    #[test]
    fn atoms_of_examples() {
        assert!(Value::Unit.atoms().is_empty());
        let b = Value::bind(Value::Atom(a(0)), v_at(0));
        assert_eq!(b.atoms(), [a(0)].into_iter().collect());
        let stack = FrameStack::id().with(Frame::new(
            "x",
            Expr::obs("eq", vec![Value::var("x"), Value::Atom(a(1))]),
        ));
        assert_eq!(stack.atoms(), [a(1)].into_iter().collect());
        let e = Expr::let_(
            "y",
            Expr::Val(b.clone()),
            Expr::App(Value::var("y"), Value::Atom(a(3))),
        );
        assert_eq!(e.atoms(), reference_atoms(&e));
    }

    #[test]
    fn free_vars_respect_binders() {
        let f = Value::fun(
            "f",
            "x",
            Type::Unit,
            None,
            Expr::App(Value::var("f"), Value::var("x")),
        );
        assert!(f.free_vars().is_empty());
        let e = Expr::let_("x", Expr::Val(Value::var("y")), Expr::Val(Value::var("x")));
        assert_eq!(e.free_vars(), [name("y")].into_iter().collect());
        let m = Expr::match_(
            Value::var("v"),
            vec![
                Arm::new("C", "x", Expr::Val(Value::var("x"))),
                Arm::new("D", "y", Expr::Val(Value::var("z"))),
            ],
        );
        assert_eq!(m.free_vars(), [name("v"), name("z")].into_iter().collect());
    }

    #[test]
    fn substitution_examples() {
        let e = Expr::Val(Value::var("x"));
        assert_eq!(
            e.substitute(&[(name("x"), Value::Atom(a(0)))]),
            Expr::Val(Value::Atom(a(0)))
        );

        let bnd = Value::bind(Value::Atom(a(0)), Value::Unit);
        let f = Expr::Val(Value::fun(
            "f",
            "y",
            Type::Unit,
            None,
            Expr::Val(Value::var("x")),
        ));
        let expected = Expr::Val(Value::fun(
            "f",
            "y",
            Type::Unit,
            None,
            Expr::Val(bnd.clone()),
        ));
        assert_eq!(f.substitute(&[(name("x"), bnd)]), expected);

        // Atom capture under <a>- is intended.
        let e = Expr::Val(Value::bind(Value::Atom(a(0)), Value::var("x")));
        assert_eq!(
            e.substitute(&[(name("x"), Value::Atom(a(0)))]),
            Expr::Val(Value::bind(Value::Atom(a(0)), Value::Atom(a(0))))
        );
    }

    #[test]
    fn substitution_avoids_variable_capture() {
        // (fun(f y = x))[x := y] must not capture y.
        let f = Value::fun("f", "y", Type::Unit, None, Expr::Val(Value::var("x")));
        let out = f.substitute(&[(name("x"), Value::var("y"))]);
        assert!(out.free_vars().contains(&name("y")));
        // let y = () in x, with x := y
        let e = Expr::let_("y", Expr::Val(Value::Unit), Expr::Val(Value::var("x")));
        let out = e.substitute(&[(name("x"), Value::var("y"))]);
        assert_eq!(out.free_vars(), [name("y")].into_iter().collect());
    }

    #[test]
    fn substitution_is_simultaneous() {
        let e = Expr::Val(Value::pair(Value::var("x"), Value::var("y")));
        let out = e.substitute(&[(name("x"), Value::var("y")), (name("y"), Value::var("x"))]);
        assert_eq!(
            out,
            Expr::Val(Value::pair(Value::var("y"), Value::var("x")))
        );
    }

    #[test]
    fn rename_atom_examples() {
        assert_eq!(v_at(0).rename_atom(a(0), a(1)), v_at(1));
        assert_eq!(Value::Unit.rename_atom(a(0), a(1)), Value::Unit);
        let t = Value::bind(
            Value::Atom(a(0)),
            Value::con("A", Value::pair(v_at(0), v_at(2))),
        );
        let expected = Value::bind(
            Value::Atom(a(1)),
            Value::con("A", Value::pair(v_at(1), v_at(2))),
        );
        assert_eq!(t.rename_atom(a(0), a(1)), expected);
    }

    #[test]
    fn equality_is_up_to_variable_binders_only() {
        let f1 = Value::fun("f", "x", Type::Atm, None, Expr::Val(Value::var("x")));
        let f2 = Value::fun("g", "y", Type::Atm, None, Expr::Val(Value::var("y")));
        assert_eq!(f1, f2);
        let f3 = Value::fun("g", "y", Type::Atm, None, Expr::Val(Value::var("g")));
        assert_ne!(f1, f3);
        // Atom bindings are not identified up to renaming.
        let b1 = Value::bind(Value::Atom(a(0)), Value::Atom(a(0)));
        let b2 = Value::bind(Value::Atom(a(1)), Value::Atom(a(1)));
        assert_ne!(b1, b2);
    }

    #[test]
    fn numerals_round_trip() {
        for m in 0..5 {
            assert_eq!(Value::numeral(m).as_numeral(), Some(m));
        }
        assert_eq!(Value::Unit.as_numeral(), None);
    }

    #[test]
    fn configuration_requires_atom_containment() {
        let s = State::empty();
        let err =
            Configuration::new(s, FrameStack::id(), Expr::Val(Value::Atom(a(0)))).unwrap_err();
        assert_eq!(err, ConfigError::AtomEscape(a(0)));
    }
}
