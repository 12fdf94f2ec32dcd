//! Concrete-syntax printing of reduced forms. The output reparses to an
//! expression equal up to renaming of variable binders.

use std::fmt::Write;

use crate::syntax::{Configuration, Expr, FrameStack, Value};

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e);
    out
}

pub fn value_to_string(v: &Value) -> String {
    let mut out = String::new();
    value(&mut out, v);
    out
}

/// `Id ∘ (x.e1) ∘ ...`, printed bottom first.
pub fn stack_to_string(f: &FrameStack) -> String {
    let mut out = String::from("Id");
    for fr in f.frames() {
        let _ = write!(out, " o ({}. ", fr.var);
        expr(&mut out, &fr.body);
        out.push(')');
    }
    out
}

pub fn config_to_string(c: &Configuration) -> String {
    format!(
        "<{}, {}, {}>",
        c.state,
        stack_to_string(&c.stack),
        expr_to_string(&c.expr)
    )
}

fn expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Val(v) => value(out, v),
        Expr::Let(x, a, b) => {
            let _ = write!(out, "let {x} = ");
            if matches!(**a, Expr::Let(..)) {
                out.push('(');
                expr(out, a);
                out.push(')');
            } else {
                expr(out, a);
            }
            out.push_str(" in ");
            expr(out, b);
        }
        Expr::Fst(v) => {
            out.push_str("fst ");
            atomic(out, v);
        }
        Expr::Snd(v) => {
            out.push_str("snd ");
            atomic(out, v);
        }
        Expr::Unbind(v) => {
            out.push_str("unbind ");
            atomic(out, v);
        }
        Expr::App(f, a) => {
            atomic(out, f);
            out.push(' ');
            atomic(out, a);
        }
        Expr::Match(v, arms) => {
            out.push_str("match ");
            value(out, v);
            out.push_str(" with (");
            for (i, arm) in arms.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                let _ = write!(out, "{} {} -> ", arm.con, arm.var);
                expr(out, &arm.body);
            }
            out.push(')');
        }
        Expr::Fresh => out.push_str("fresh ()"),
        Expr::Obs(o, args) => {
            let _ = write!(out, "@{o}");
            for a in args.iter() {
                out.push(' ');
                atomic(out, a);
            }
        }
    }
}

fn value(out: &mut String, v: &Value) {
    match v {
        Value::Con(c, a) => {
            let _ = write!(out, "{c} ");
            atomic(out, a);
        }
        Value::Bind(a, b) => {
            out.push('<');
            value(out, a);
            out.push_str("> ");
            atomic(out, b);
        }
        _ => atomic(out, v),
    }
}

fn atomic(out: &mut String, v: &Value) {
    match v {
        Value::Var(x) => out.push_str(x),
        Value::Unit => out.push_str("()"),
        Value::Atom(a) => {
            let _ = write!(out, "{a}");
        }
        Value::Pair(a, b) => {
            out.push('(');
            value(out, a);
            out.push_str(", ");
            value(out, b);
            out.push(')');
        }
        Value::Fun(f) => {
            let _ = write!(out, "fun({} ({} : {})", f.name, f.param, f.param_ty);
            if let Some(rt) = &f.ret_ty {
                let _ = write!(out, " : {rt}");
            }
            out.push_str(" = ");
            expr(out, &f.body);
            out.push(')');
        }
        Value::Con(..) | Value::Bind(..) => {
            out.push('(');
            value(out, v);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::Atom;
    use crate::syntax::Arm;
    use crate::types::Type;

    #[test]
    fn printed_forms() {
        let b = Value::bind(Value::Atom(Atom(0)), Value::con("V", Value::Atom(Atom(0))));
        assert_eq!(value_to_string(&b), "<#a0> (V #a0)");
        assert_eq!(value_to_string(&Value::numeral(1)), "Succ (Zero ())");
        let f = Value::fun(
            "f",
            "x",
            Type::Unit,
            Some(Type::Unit),
            Expr::App(Value::var("f"), Value::var("x")),
        );
        assert_eq!(value_to_string(&f), "fun(f (x : unit) : unit = f x)");
        let m = Expr::match_(
            Value::var("n"),
            vec![
                Arm::new("Zero", "u", Expr::Val(Value::Unit)),
                Arm::new(
                    "Succ",
                    "m",
                    Expr::obs("eq", vec![Value::Atom(Atom(0)), Value::Atom(Atom(1))]),
                ),
            ],
        );
        assert_eq!(
            expr_to_string(&m),
            "match n with (Zero u -> () | Succ m -> @eq #a0 #a1)"
        );
        assert_eq!(expr_to_string(&Expr::Fresh), "fresh ()");
    }
}
