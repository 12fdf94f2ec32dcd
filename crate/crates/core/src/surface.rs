//! Unreduced surface expressions and their translation into reduced form.
//!
//! Every sugar form sequences its non-value subterms left to right through
//! `let`. Subterms that are already values stay in place, so desugaring a
//! printed reduced form gives back the same term.

use std::sync::Arc;

use crate::atom::Atom;
use crate::syntax::{name, Arm, Expr, Fun, Name, Value};
use crate::types::Type;

#[derive(Clone, Debug, PartialEq)]
pub enum Surface {
    Var(Name),
    Unit,
    Atom(Atom),
    Pair(Box<Surface>, Box<Surface>),
    Con(Name, Box<Surface>),
    Bind(Box<Surface>, Box<Surface>),
    Fun {
        name: Name,
        param: Name,
        param_ty: Type,
        ret_ty: Option<Type>,
        body: Box<Surface>,
    },
    /// `λ(x : τ). e`
    Lam(Name, Type, Box<Surface>),
    Let(Name, Box<Surface>, Box<Surface>),
    /// `let <x1> x2 = e in e′`
    LetBind(Name, Name, Box<Surface>, Box<Surface>),
    Fst(Box<Surface>),
    Snd(Box<Surface>),
    Unbind(Box<Surface>),
    App(Box<Surface>, Box<Surface>),
    Match(Box<Surface>, Vec<SurfaceArm>),
    If(Box<Surface>, Box<Surface>, Box<Surface>),
    Fresh,
    /// `fresh x in e`
    FreshIn(Name, Box<Surface>),
    Obs(Name, Vec<Surface>),
}

/// A match arm; `var` is `None` for the `C ()` and `C _` patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceArm {
    pub con: Name,
    pub var: Option<Name>,
    pub body: Surface,
}

fn b(s: Surface) -> Box<Surface> {
    Box::new(s)
}

impl Surface {
    pub fn var(x: &str) -> Surface {
        Surface::Var(name(x))
    }

    pub fn pair(a: Surface, c: Surface) -> Surface {
        Surface::Pair(b(a), b(c))
    }

    pub fn con(c: &str, a: Surface) -> Surface {
        Surface::Con(name(c), b(a))
    }

    pub fn bind(a: Surface, c: Surface) -> Surface {
        Surface::Bind(b(a), b(c))
    }

    pub fn lam(x: &str, t: Type, body: Surface) -> Surface {
        Surface::Lam(name(x), t, b(body))
    }

    pub fn fun(f: &str, x: &str, param_ty: Type, ret_ty: Type, body: Surface) -> Surface {
        Surface::Fun {
            name: name(f),
            param: name(x),
            param_ty,
            ret_ty: Some(ret_ty),
            body: b(body),
        }
    }

    pub fn let_(x: &str, e: Surface, body: Surface) -> Surface {
        Surface::Let(name(x), b(e), b(body))
    }

    pub fn let_bind(x1: &str, x2: &str, e: Surface, body: Surface) -> Surface {
        Surface::LetBind(name(x1), name(x2), b(e), b(body))
    }

    pub fn app(f: Surface, a: Surface) -> Surface {
        Surface::App(b(f), b(a))
    }

    /// `f a1 a2 ...`
    pub fn apps(f: Surface, args: Vec<Surface>) -> Surface {
        args.into_iter().fold(f, Surface::app)
    }

    pub fn fst(a: Surface) -> Surface {
        Surface::Fst(b(a))
    }

    pub fn snd(a: Surface) -> Surface {
        Surface::Snd(b(a))
    }

    pub fn unbind(a: Surface) -> Surface {
        Surface::Unbind(b(a))
    }

    pub fn if_(c: Surface, t: Surface, e: Surface) -> Surface {
        Surface::If(b(c), b(t), b(e))
    }

    pub fn match_(s: Surface, arms: Vec<SurfaceArm>) -> Surface {
        Surface::Match(b(s), arms)
    }

    pub fn obs(o: &str, args: Vec<Surface>) -> Surface {
        Surface::Obs(name(o), args)
    }

    pub fn numeral(m: u64) -> Surface {
        (0..m).fold(Surface::con("Zero", Surface::Unit), |acc, _| {
            Surface::con("Succ", acc)
        })
    }

    fn is_value_form(&self) -> bool {
        match self {
            Surface::Var(_)
            | Surface::Unit
            | Surface::Atom(_)
            | Surface::Fun { .. }
            | Surface::Lam(..) => true,
            Surface::Pair(a, c) | Surface::Bind(a, c) => a.is_value_form() && c.is_value_form(),
            Surface::Con(_, a) => a.is_value_form(),
            _ => false,
        }
    }

    fn for_each_name(&self, f: &mut dyn FnMut(&str)) {
        match self {
            Surface::Var(x) => f(x),
            Surface::Unit | Surface::Atom(_) | Surface::Fresh => {}
            Surface::Pair(a, c) | Surface::Bind(a, c) | Surface::App(a, c) => {
                a.for_each_name(f);
                c.for_each_name(f);
            }
            Surface::Con(_, a) | Surface::Fst(a) | Surface::Snd(a) | Surface::Unbind(a) => {
                a.for_each_name(f)
            }
            Surface::Fun {
                name, param, body, ..
            } => {
                f(name);
                f(param);
                body.for_each_name(f);
            }
            Surface::Lam(x, _, body) | Surface::FreshIn(x, body) => {
                f(x);
                body.for_each_name(f);
            }
            Surface::Let(x, a, c) => {
                f(x);
                a.for_each_name(f);
                c.for_each_name(f);
            }
            Surface::LetBind(x1, x2, a, c) => {
                f(x1);
                f(x2);
                a.for_each_name(f);
                c.for_each_name(f);
            }
            Surface::Match(s, arms) => {
                s.for_each_name(f);
                for arm in arms {
                    if let Some(x) = &arm.var {
                        f(x);
                    }
                    arm.body.for_each_name(f);
                }
            }
            Surface::If(c, t, e) => {
                c.for_each_name(f);
                t.for_each_name(f);
                e.for_each_name(f);
            }
            Surface::Obs(_, args) => args.iter().for_each(|a| a.for_each_name(f)),
        }
    }
}

/// Translates a surface expression into the reduced grammar.
pub fn desugar(s: &Surface) -> Expr {
    Desugarer::for_term(s).expr(s)
}

struct Desugarer {
    next: u64,
}

impl Desugarer {
    /// Generated names are `%k`; start above any `%k` already present so
    /// generated binders never clash with names in the input.
    fn for_term(s: &Surface) -> Self {
        let mut next = 0;
        s.for_each_name(&mut |x| {
            if let Some(k) = x.strip_prefix('%').and_then(|d| d.parse::<u64>().ok()) {
                next = next.max(k + 1);
            }
        });
        Desugarer { next }
    }

    fn fresh(&mut self) -> Name {
        let n = name(&format!("%{}", self.next));
        self.next += 1;
        n
    }

    /// Value forms only; callers check `is_value_form` first.
    fn value(&mut self, s: &Surface) -> Value {
        match s {
            Surface::Var(x) => Value::Var(x.clone()),
            Surface::Unit => Value::Unit,
            Surface::Atom(a) => Value::Atom(*a),
            Surface::Pair(a, c) => Value::Pair(Arc::new(self.value(a)), Arc::new(self.value(c))),
            Surface::Bind(a, c) => Value::Bind(Arc::new(self.value(a)), Arc::new(self.value(c))),
            Surface::Con(k, a) => Value::Con(k.clone(), Arc::new(self.value(a))),
            Surface::Fun {
                name,
                param,
                param_ty,
                ret_ty,
                body,
            } => Value::Fun(Arc::new(Fun {
                name: name.clone(),
                param: param.clone(),
                param_ty: param_ty.clone(),
                ret_ty: ret_ty.clone(),
                body: self.expr(body),
            })),
            Surface::Lam(x, t, body) => {
                let f = self.fresh();
                Value::Fun(Arc::new(Fun {
                    name: f,
                    param: x.clone(),
                    param_ty: t.clone(),
                    ret_ty: None,
                    body: self.expr(body),
                }))
            }
            _ => unreachable!("not a value form"),
        }
    }

    /// A value standing for `s`; non-values are bound to a fresh variable
    /// recorded in `binds`.
    fn atomize(&mut self, s: &Surface, binds: &mut Vec<(Name, Expr)>) -> Value {
        if s.is_value_form() {
            return self.value(s);
        }
        let e = self.expr(s);
        let x = self.fresh();
        binds.push((x.clone(), e));
        Value::Var(x)
    }

    fn wrap(binds: Vec<(Name, Expr)>, body: Expr) -> Expr {
        binds
            .into_iter()
            .rev()
            .fold(body, |acc, (x, e)| Expr::Let(x, Arc::new(e), Arc::new(acc)))
    }

    fn expr(&mut self, s: &Surface) -> Expr {
        if s.is_value_form() {
            return Expr::Val(self.value(s));
        }
        let mut binds = Vec::new();
        let body = match s {
            Surface::Pair(a, c) => {
                let va = self.atomize(a, &mut binds);
                let vc = self.atomize(c, &mut binds);
                Expr::Val(Value::Pair(Arc::new(va), Arc::new(vc)))
            }
            Surface::Bind(a, c) => {
                let va = self.atomize(a, &mut binds);
                let vc = self.atomize(c, &mut binds);
                Expr::Val(Value::Bind(Arc::new(va), Arc::new(vc)))
            }
            Surface::Con(k, a) => {
                let va = self.atomize(a, &mut binds);
                Expr::Val(Value::Con(k.clone(), Arc::new(va)))
            }
            Surface::Fst(a) => Expr::Fst(self.atomize(a, &mut binds)),
            Surface::Snd(a) => Expr::Snd(self.atomize(a, &mut binds)),
            Surface::Unbind(a) => Expr::Unbind(self.atomize(a, &mut binds)),
            Surface::App(f, a) => {
                let vf = self.atomize(f, &mut binds);
                let va = self.atomize(a, &mut binds);
                Expr::App(vf, va)
            }
            Surface::Let(x, a, c) => {
                Expr::Let(x.clone(), Arc::new(self.expr(a)), Arc::new(self.expr(c)))
            }
            Surface::LetBind(x1, x2, a, c) => {
                let v = self.atomize(a, &mut binds);
                let p = self.fresh();
                let pv = Value::Var(p.clone());
                Expr::Let(
                    p,
                    Arc::new(Expr::Unbind(v)),
                    Arc::new(Expr::Let(
                        x1.clone(),
                        Arc::new(Expr::Fst(pv.clone())),
                        Arc::new(Expr::Let(
                            x2.clone(),
                            Arc::new(Expr::Snd(pv)),
                            Arc::new(self.expr(c)),
                        )),
                    )),
                )
            }
            Surface::Match(scrut, arms) => {
                let v = self.atomize(scrut, &mut binds);
                let arms: Vec<Arm> = arms
                    .iter()
                    .map(|arm| {
                        let var = match &arm.var {
                            Some(x) => x.clone(),
                            None => self.fresh(),
                        };
                        Arm {
                            con: arm.con.clone(),
                            var,
                            body: self.expr(&arm.body),
                        }
                    })
                    .collect();
                Expr::Match(v, arms.into())
            }
            Surface::If(c, t, e) => {
                let v = self.atomize(c, &mut binds);
                let (z, x) = (self.fresh(), self.fresh());
                let arms = vec![
                    Arm {
                        con: name("Zero"),
                        var: z,
                        body: self.expr(t),
                    },
                    Arm {
                        con: name("Succ"),
                        var: x,
                        body: self.expr(e),
                    },
                ];
                Expr::Match(v, arms.into())
            }
            Surface::Fresh => Expr::Fresh,
            Surface::FreshIn(x, body) => {
                Expr::Let(x.clone(), Arc::new(Expr::Fresh), Arc::new(self.expr(body)))
            }
            Surface::Obs(o, args) => {
                let vs: Vec<Value> = args.iter().map(|a| self.atomize(a, &mut binds)).collect();
                Expr::Obs(o.clone(), vs.into())
            }
            Surface::Var(_)
            | Surface::Unit
            | Surface::Atom(_)
            | Surface::Fun { .. }
            | Surface::Lam(..) => unreachable!("value forms handled above"),
        };
        Self::wrap(binds, body)
    }
}

/// Embeds a reduced expression back into the surface grammar.
pub fn from_expr(e: &Expr) -> Surface {
    match e {
        Expr::Val(v) => from_value(v),
        Expr::Let(x, a, c) => Surface::Let(x.clone(), b(from_expr(a)), b(from_expr(c))),
        Expr::Fst(v) => Surface::fst(from_value(v)),
        Expr::Snd(v) => Surface::snd(from_value(v)),
        Expr::Unbind(v) => Surface::unbind(from_value(v)),
        Expr::App(f, a) => Surface::app(from_value(f), from_value(a)),
        Expr::Match(v, arms) => Surface::match_(
            from_value(v),
            arms.iter()
                .map(|arm| SurfaceArm {
                    con: arm.con.clone(),
                    var: Some(arm.var.clone()),
                    body: from_expr(&arm.body),
                })
                .collect(),
        ),
        Expr::Fresh => Surface::Fresh,
        Expr::Obs(o, args) => Surface::Obs(o.clone(), args.iter().map(from_value).collect()),
    }
}

pub fn from_value(v: &Value) -> Surface {
    match v {
        Value::Var(x) => Surface::Var(x.clone()),
        Value::Unit => Surface::Unit,
        Value::Atom(a) => Surface::Atom(*a),
        Value::Pair(a, c) => Surface::pair(from_value(a), from_value(c)),
        Value::Bind(a, c) => Surface::bind(from_value(a), from_value(c)),
        Value::Con(k, a) => Surface::Con(k.clone(), b(from_value(a))),
        Value::Fun(f) => Surface::Fun {
            name: f.name.clone(),
            param: f.param.clone(),
            param_ty: f.param_ty.clone(),
            ret_ty: f.ret_ty.clone(),
            body: b(from_expr(&f.body)),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_reduced_value(v: &Value) -> bool {
        match v {
            Value::Fun(f) => is_reduced(&f.body),
            Value::Pair(a, c) | Value::Bind(a, c) => is_reduced_value(a) && is_reduced_value(c),
            Value::Con(_, a) => is_reduced_value(a),
            _ => true,
        }
    }

    fn is_reduced(e: &Expr) -> bool {
        match e {
            Expr::Let(_, a, c) => is_reduced(a) && is_reduced(c),
            Expr::Match(v, arms) => is_reduced_value(v) && arms.iter().all(|a| is_reduced(&a.body)),
            Expr::Val(v) | Expr::Fst(v) | Expr::Snd(v) | Expr::Unbind(v) => is_reduced_value(v),
            Expr::App(f, a) => is_reduced_value(f) && is_reduced_value(a),
            Expr::Obs(_, args) => args.iter().all(is_reduced_value),
            Expr::Fresh => true,
        }
    }

    #[test]
    fn if_becomes_match_on_nat() {
        let s = Surface::if_(Surface::var("c"), Surface::var("t"), Surface::var("e"));
        let Expr::Match(v, arms) = desugar(&s) else {
            panic!("expected match")
        };
        assert_eq!(v, Value::var("c"));
        assert_eq!(&*arms[0].con, "Zero");
        assert_eq!(arms[0].body, Expr::Val(Value::var("t")));
        assert_eq!(&*arms[1].con, "Succ");
        assert_eq!(arms[1].body, Expr::Val(Value::var("e")));
    }

    #[test]
    fn lambda_and_fresh() {
        let id = desugar(&Surface::lam("x", Type::Atm, Surface::var("x")));
        let Expr::Val(Value::Fun(f)) = id else {
            panic!()
        };
        assert_eq!(&*f.param, "x");
        assert!(f.name.starts_with('%'));
        assert_eq!(f.body, Expr::Val(Value::var("x")));

        let e = desugar(&Surface::FreshIn(name("x"), b(Surface::var("x"))));
        assert_eq!(e, Expr::let_("x", Expr::Fresh, Expr::Val(Value::var("x"))));
    }

    #[test]
    fn let_bind_unfolds_through_unbind() {
        let s = Surface::let_bind("a", "t", Surface::var("p"), Surface::var("t"));
        let expected = Expr::let_(
            "q",
            Expr::Unbind(Value::var("p")),
            Expr::let_(
                "a",
                Expr::Fst(Value::var("q")),
                Expr::let_("t", Expr::Snd(Value::var("q")), Expr::Val(Value::var("t"))),
            ),
        );
        assert_eq!(desugar(&s), expected);
    }

    #[test]
    fn sequencing_is_left_to_right() {
        let s = Surface::pair(Surface::Fresh, Surface::Fresh);
        let Expr::Let(x1, a, rest) = desugar(&s) else {
            panic!()
        };
        assert_eq!(*a, Expr::Fresh);
        let Expr::Let(x2, c, body) = &*rest else {
            panic!()
        };
        assert_eq!(**c, Expr::Fresh);
        assert_eq!(
            **body,
            Expr::Val(Value::Pair(
                Arc::new(Value::Var(x1)),
                Arc::new(Value::Var(x2.clone()))
            ))
        );
    }

    #[test]
    fn generated_names_avoid_input_names() {
        let s = Surface::let_(
            "%3",
            Surface::Fresh,
            Surface::obs("eq", vec![Surface::Fresh, Surface::var("%3")]),
        );
        let e = desugar(&s);
        assert!(is_reduced(&e));
        let Expr::Let(_, _, rest) = e else { panic!() };
        let Expr::Let(g, _, _) = &*rest else { panic!() };
        assert_eq!(&**g, "%4");
    }

    #[test]
    fn reduced_forms_are_fixed_points() {
        let e = Expr::let_(
            "x",
            Expr::Fresh,
            Expr::obs("eq", vec![Value::var("x"), Value::var("x")]),
        );
        assert_eq!(desugar(&from_expr(&e)), e);
    }
}
