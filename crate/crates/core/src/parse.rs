//! Lexer and recursive-descent parser for program files, surface
//! expressions and types.
//!
//! ```text
//! program  ::= item* expr
//! item     ::= 'type' tydecl ('and' tydecl)* ';'
//!            | 'observations' ':' ident (',' ident)*
//!            | 'observation' ident '/' NUM '=' obsterm ';'
//! tydecl   ::= ident '=' '|'? condecl ('|' condecl)*
//! condecl  ::= CON ('of' type)?
//! type     ::= prodty ('->' type)?
//! prodty   ::= postty ('*' postty)*
//! postty   ::= basety 'bnd'*
//! basety   ::= 'unit' | 'atm' | ident | '(' type ')'
//! expr     ::= 'let' ident '=' expr 'in' expr
//!            | 'let' '<' ident '>' ident '=' expr 'in' expr
//!            | 'fresh' ident 'in' expr
//!            | 'if' expr 'then' expr 'else' expr
//!            | '\' '(' ident ':' type ')' '.' expr
//!            | 'match' expr 'with' '(' arm ('|' arm)* ')'
//!            | app
//! arm      ::= CON (ident | '_' | '(' ')') '->' expr
//! app      ::= head atomic*
//! head     ::= ('fst' | 'snd' | 'unbind' | CON) atomic
//!            | '@' ident atomic*
//!            | '<' expr '>' atomic
//!            | atomic
//! atomic   ::= ident | ATOM | NUM | '(' ')' | '(' expr ')' | '(' expr ',' expr ')'
//!            | 'fresh' '(' ')'
//!            | 'fun' '(' ident '(' ident ':' type ')' (':' type)? '=' expr ')'
//! ```
//!
//! A numeral `n` abbreviates `Succ (... (Zero ()))`. Comments run from `--`
//! to the end of the line.

use std::fmt;

use thiserror::Error;

use crate::atom::Atom;
use crate::observations::ObsTerm;
use crate::surface::{Surface, SurfaceArm};
use crate::syntax::{name, Name};
use crate::types::{DataType, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("E_SYNTAX at {line}:{col}: {msg}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Con(String),
    Atom(u32),
    Num(u64),
    Arg(usize),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Con(s) => write!(f, "`{s}`"),
            Tok::Atom(n) => write!(f, "`#a{n}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Arg(n) => write!(f, "`${n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "fun",
    "let",
    "in",
    "match",
    "with",
    "fresh",
    "unbind",
    "fst",
    "snd",
    "if",
    "then",
    "else",
    "type",
    "and",
    "of",
    "unit",
    "atm",
    "bnd",
    "observations",
    "observation",
    "len",
    "pos",
];

const SYMBOLS: &[&str] = &[
    "->", "(", ")", ",", "<", ">", "=", "|", ":", ";", ".", "\\", "@", "*", "/", "+", "-", "_",
];

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut line_start) = (0, 1, 0);
    let err = |line, col, msg: String| SyntaxError { line, col, msg };
    let ident_char = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '\'';
    let take_while = |i: &mut usize, p: &dyn Fn(char) -> bool| {
        let s = *i;
        while *i < chars.len() && p(chars[*i]) {
            *i += 1;
        }
        chars[s..*i].iter().collect::<String>()
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let col = i - line_start + 1;
        let tok = if c == '#' {
            if chars.get(i + 1) != Some(&'a') {
                return Err(err(line, col, "expected atom literal `#a<digits>`".into()));
            }
            i += 2;
            let digits = take_while(&mut i, &|c| c.is_ascii_digit());
            let n = digits
                .parse::<u32>()
                .map_err(|_| err(line, col, "expected atom literal `#a<digits>`".into()))?;
            Tok::Atom(n)
        } else if c == '$' {
            i += 1;
            let digits = take_while(&mut i, &|c| c.is_ascii_digit());
            Tok::Arg(
                digits
                    .parse()
                    .map_err(|_| err(line, col, "expected argument index `$<digits>`".into()))?,
            )
        } else if c == '%' {
            i += 1;
            let digits = take_while(&mut i, &|c| c.is_ascii_digit());
            if digits.is_empty() {
                return Err(err(line, col, "expected `%<digits>`".into()));
            }
            Tok::Ident(format!("%{digits}"))
        } else if c.is_ascii_digit() {
            let digits = take_while(&mut i, &|c| c.is_ascii_digit());
            Tok::Num(
                digits
                    .parse()
                    .map_err(|_| err(line, col, "number too large".into()))?,
            )
        } else if c.is_ascii_uppercase() {
            Tok::Con(take_while(&mut i, &ident_char))
        } else if c.is_ascii_lowercase()
            || (c == '_' && chars.get(i + 1).is_some_and(|&d| ident_char(d)))
        {
            Tok::Ident(take_while(&mut i, &ident_char))
        } else if let Some(sym) = SYMBOLS.iter().find(|s| {
            let sc: Vec<char> = s.chars().collect();
            chars[i..].starts_with(&sc)
        }) {
            i += sym.chars().count();
            Tok::Sym(sym)
        } else {
            return Err(err(line, col, format!("unexpected character `{c}`")));
        };
        out.push(Token { tok, line, col });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col: i - line_start + 1,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(SyntaxError {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn unexpected<T>(&self, what: &str) -> PResult<T> {
        self.error(format!("expected {what}, found {}", self.peek()))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.unexpected(&format!("`{k}`"))
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let n = name(s);
                self.bump();
                Ok(n)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn con(&mut self) -> PResult<Name> {
        match self.peek() {
            Tok::Con(s) => {
                let n = name(s);
                self.bump();
                Ok(n)
            }
            _ => self.unexpected("a constructor"),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    // ---- types ----

    fn ty(&mut self) -> PResult<Type> {
        let lhs = self.prod_ty()?;
        if self.eat_sym("->") {
            Ok(Type::fun(lhs, self.ty()?))
        } else {
            Ok(lhs)
        }
    }

    fn prod_ty(&mut self) -> PResult<Type> {
        let mut t = self.post_ty()?;
        while self.eat_sym("*") {
            t = Type::prod(t, self.post_ty()?);
        }
        Ok(t)
    }

    fn post_ty(&mut self) -> PResult<Type> {
        let mut t = self.base_ty()?;
        while self.eat_kw("bnd") {
            t = Type::bnd(t);
        }
        Ok(t)
    }

    fn base_ty(&mut self) -> PResult<Type> {
        if self.eat_kw("unit") {
            return Ok(Type::Unit);
        }
        if self.eat_kw("atm") {
            return Ok(Type::Atm);
        }
        if self.eat_sym("(") {
            let t = self.ty()?;
            self.expect_sym(")")?;
            return Ok(t);
        }
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Ok(Type::Data(self.ident()?)),
            _ => self.unexpected("a type"),
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Surface> {
        if self.eat_kw("let") {
            if self.eat_sym("<") {
                let x1 = self.ident()?;
                self.expect_sym(">")?;
                let x2 = self.ident()?;
                if x1 == x2 {
                    return self.error("the two variables of `let <x1> x2` must differ");
                }
                self.expect_sym("=")?;
                let e = self.expr()?;
                self.expect_kw("in")?;
                let body = self.expr()?;
                return Ok(Surface::LetBind(x1, x2, Box::new(e), Box::new(body)));
            }
            let x = self.ident()?;
            self.expect_sym("=")?;
            let e = self.expr()?;
            self.expect_kw("in")?;
            let body = self.expr()?;
            return Ok(Surface::Let(x, Box::new(e), Box::new(body)));
        }
        if self.is_kw("fresh") && matches!(self.peek2(), Tok::Ident(_)) {
            self.bump();
            let x = self.ident()?;
            self.expect_kw("in")?;
            let body = self.expr()?;
            return Ok(Surface::FreshIn(x, Box::new(body)));
        }
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let t = self.expr()?;
            self.expect_kw("else")?;
            let e = self.expr()?;
            return Ok(Surface::if_(c, t, e));
        }
        if self.eat_sym("\\") {
            self.expect_sym("(")?;
            let x = self.ident()?;
            self.expect_sym(":")?;
            let t = self.ty()?;
            self.expect_sym(")")?;
            self.expect_sym(".")?;
            let body = self.expr()?;
            return Ok(Surface::Lam(x, t, Box::new(body)));
        }
        if self.eat_kw("match") {
            let s = self.expr()?;
            self.expect_kw("with")?;
            self.expect_sym("(")?;
            let mut arms = vec![self.arm()?];
            while self.eat_sym("|") {
                arms.push(self.arm()?);
            }
            self.expect_sym(")")?;
            return Ok(Surface::match_(s, arms));
        }
        self.app()
    }

    fn arm(&mut self) -> PResult<SurfaceArm> {
        let con = self.con()?;
        let var = if self.eat_sym("_") {
            None
        } else if self.is_sym("(") && matches!(self.peek2(), Tok::Sym(")")) {
            self.bump();
            self.bump();
            None
        } else {
            Some(self.ident()?)
        };
        self.expect_sym("->")?;
        let body = self.expr()?;
        Ok(SurfaceArm { con, var, body })
    }

    fn starts_atomic(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => s == "fun" || s == "fresh" || !KEYWORDS.contains(&s.as_str()),
            Tok::Atom(_) => true,
            Tok::Sym("(") | Tok::Num(_) => true,
            _ => false,
        }
    }

    fn app(&mut self) -> PResult<Surface> {
        let head = match self.peek().clone() {
            Tok::Ident(k) if k == "fst" || k == "snd" || k == "unbind" => {
                self.bump();
                let a = self.atomic()?;
                match k.as_str() {
                    "fst" => Surface::fst(a),
                    "snd" => Surface::snd(a),
                    _ => Surface::unbind(a),
                }
            }
            Tok::Con(c) => {
                self.bump();
                let a = self.atomic()?;
                Surface::Con(name(&c), Box::new(a))
            }
            Tok::Sym("@") => {
                self.bump();
                let o = self.ident()?;
                let mut args = Vec::new();
                while self.starts_atomic() {
                    args.push(self.atomic()?);
                }
                return Ok(Surface::Obs(o, args));
            }
            Tok::Sym("<") => {
                self.bump();
                let a = self.expr()?;
                self.expect_sym(">")?;
                let v = self.atomic()?;
                Surface::bind(a, v)
            }
            _ => self.atomic()?,
        };
        let mut e = head;
        while self.starts_atomic() {
            e = Surface::app(e, self.atomic()?);
        }
        Ok(e)
    }

    fn atomic(&mut self) -> PResult<Surface> {
        match self.peek().clone() {
            Tok::Atom(n) => {
                self.bump();
                Ok(Surface::Atom(Atom(n)))
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Surface::numeral(n))
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat_sym(")") {
                    return Ok(Surface::Unit);
                }
                let a = self.expr()?;
                if self.eat_sym(",") {
                    let b = self.expr()?;
                    self.expect_sym(")")?;
                    return Ok(Surface::pair(a, b));
                }
                self.expect_sym(")")?;
                Ok(a)
            }
            Tok::Ident(k) if k == "fresh" => {
                self.bump();
                self.expect_sym("(")?;
                self.expect_sym(")")?;
                Ok(Surface::Fresh)
            }
            Tok::Ident(k) if k == "fun" => {
                self.bump();
                self.expect_sym("(")?;
                let f = self.ident()?;
                self.expect_sym("(")?;
                let x = self.ident()?;
                if x == f {
                    return self.error("function name and parameter must differ");
                }
                self.expect_sym(":")?;
                let param_ty = self.ty()?;
                self.expect_sym(")")?;
                let ret_ty = if self.eat_sym(":") {
                    Some(self.ty()?)
                } else {
                    None
                };
                self.expect_sym("=")?;
                let body = self.expr()?;
                self.expect_sym(")")?;
                Ok(Surface::Fun {
                    name: f,
                    param: x,
                    param_ty,
                    ret_ty,
                    body: Box::new(body),
                })
            }
            Tok::Ident(_) => Ok(Surface::Var(self.ident()?)),
            _ => self.unexpected("an expression"),
        }
    }

    // ---- program items ----

    fn datatype(&mut self) -> PResult<DataType> {
        let n = self.ident()?;
        self.expect_sym("=")?;
        self.eat_sym("|");
        let mut cons = Vec::new();
        loop {
            let c = self.con()?;
            let t = if self.eat_kw("of") {
                self.ty()?
            } else {
                Type::Unit
            };
            cons.push((c, t));
            if !self.eat_sym("|") {
                break;
            }
        }
        Ok(DataType {
            name: n,
            constructors: cons,
        })
    }

    fn obs_term(&mut self) -> PResult<ObsTerm> {
        let mut t = self.obs_atom()?;
        loop {
            if self.eat_sym("+") {
                t = ObsTerm::Add(Box::new(t), Box::new(self.obs_atom()?));
            } else if self.eat_sym("-") {
                t = ObsTerm::Sub(Box::new(t), Box::new(self.obs_atom()?));
            } else {
                return Ok(t);
            }
        }
    }

    fn obs_arg(&mut self) -> PResult<usize> {
        match self.peek() {
            Tok::Arg(i) => {
                let i = *i;
                self.bump();
                Ok(i)
            }
            _ => self.unexpected("an argument `$i`"),
        }
    }

    fn obs_atom(&mut self) -> PResult<ObsTerm> {
        if self.eat_kw("len") {
            return Ok(ObsTerm::Len);
        }
        if self.eat_kw("pos") {
            return Ok(ObsTerm::Pos(self.obs_arg()?));
        }
        if self.eat_kw("if") {
            let i = self.obs_arg()?;
            let lt = if self.eat_sym("=") {
                false
            } else if self.eat_sym("<") {
                true
            } else {
                return self.unexpected("`=` or `<`");
            };
            let j = self.obs_arg()?;
            self.expect_kw("then")?;
            let t = Box::new(self.obs_term()?);
            self.expect_kw("else")?;
            let u = Box::new(self.obs_term()?);
            return Ok(if lt {
                ObsTerm::IfLt(i, j, t, u)
            } else {
                ObsTerm::IfEq(i, j, t, u)
            });
        }
        if self.eat_sym("(") {
            let t = self.obs_term()?;
            self.expect_sym(")")?;
            return Ok(t);
        }
        match self.peek() {
            Tok::Num(n) => {
                let n = *n;
                self.bump();
                Ok(ObsTerm::Const(n))
            }
            _ => self.unexpected("an observation term"),
        }
    }
}

/// A user-defined observation: `observation name/arity = term ;`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObsDef {
    pub name: Name,
    pub arity: usize,
    pub term: ObsTerm,
}

/// A parsed program file, before signature validation.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgramAst {
    pub datatypes: Vec<DataType>,
    /// The `observations:` selection, if given.
    pub observations: Option<Vec<Name>>,
    pub obs_defs: Vec<ObsDef>,
    pub body: Surface,
}

pub fn parse_program(src: &str) -> Result<ProgramAst, SyntaxError> {
    let mut p = Parser::new(src)?;
    let mut datatypes = Vec::new();
    let mut observations: Option<Vec<Name>> = None;
    let mut obs_defs = Vec::new();
    loop {
        if p.eat_kw("type") {
            datatypes.push(p.datatype()?);
            while p.eat_kw("and") {
                datatypes.push(p.datatype()?);
            }
            p.expect_sym(";")?;
        } else if p.eat_kw("observations") {
            if observations.is_some() {
                return p.error("duplicate `observations:` line");
            }
            p.expect_sym(":")?;
            let mut names = vec![p.ident()?];
            while p.eat_sym(",") {
                names.push(p.ident()?);
            }
            observations = Some(names);
        } else if p.eat_kw("observation") {
            let n = p.ident()?;
            p.expect_sym("/")?;
            let arity = match p.bump() {
                Tok::Num(k) => k as usize,
                _ => {
                    p.pos -= 1;
                    return p.unexpected("an arity");
                }
            };
            p.expect_sym("=")?;
            let term = p.obs_term()?;
            p.expect_sym(";")?;
            obs_defs.push(ObsDef {
                name: n,
                arity,
                term,
            });
        } else {
            break;
        }
    }
    let body = p.expr()?;
    p.expect_eof()?;
    Ok(ProgramAst {
        datatypes,
        observations,
        obs_defs,
        body,
    })
}

pub fn parse_expr(src: &str) -> Result<Surface, SyntaxError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_type(src: &str) -> Result<Type, SyntaxError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses `#a0,#a1,...` (also accepting bare indices and `a0`).
pub fn parse_atom_list(src: &str) -> Result<Vec<Atom>, SyntaxError> {
    let mut out = Vec::new();
    for (i, part) in src.split(',').map(str::trim).enumerate() {
        if part.is_empty() {
            continue;
        }
        let digits = part.trim_start_matches('#').trim_start_matches('a');
        let n = digits.parse::<u32>().map_err(|_| SyntaxError {
            line: 1,
            col: i + 1,
            msg: format!("bad atom `{part}`"),
        })?;
        out.push(Atom(n));
    }
    Ok(out)
}
