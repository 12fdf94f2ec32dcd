//! Random well-typed types, expressions, configurations and evaluation
//! contexts.
//!
//! Everything is generated in surface syntax and desugared, so generated
//! terms exercise the same path as parsed programs.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::atom::{Atom, State, World};
use crate::nominal::{gen_aeq, gen_value_rng};
use crate::surface::{desugar, from_expr, from_value, Surface, SurfaceArm};
use crate::syntax::{name, Configuration, Frame, FrameStack, Name, Value};
use crate::types::{is_nominal_arity, Signature, Type};

/// Type-directed generator of surface expressions over a fixed pool of
/// atoms and the observations registered in a signature.
pub struct ExprGen<'a> {
    sig: &'a Signature,
    atoms: Vec<Atom>,
    obs: Vec<(Name, usize)>,
    data_cost: BTreeMap<Name, Option<usize>>,
    counter: usize,
    values_only: bool,
    /// Probability that a function introduction is recursive.
    pub recursion: f64,
}

type Env = Vec<(String, Type)>;

impl<'a> ExprGen<'a> {
    pub fn new(sig: &'a Signature, world: &World) -> Self {
        let mut data_cost: BTreeMap<Name, Option<usize>> = sig
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
                    .filter_map(|(_, t)| cost(t, &data_cost))
                    .min()
                    .map(|c| c + 1);
                if best.is_some() && best != data_cost[&d.name] {
                    data_cost.insert(d.name.clone(), best);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        ExprGen {
            sig,
            atoms: world.iter().copied().collect(),
            obs: sig
                .observations()
                .map(|o| (o.name.clone(), o.arity))
                .collect(),
            data_cost,
            counter: 0,
            values_only: false,
            recursion: 0.1,
        }
    }

    pub fn signature(&self) -> &'a Signature {
        self.sig
    }

    fn fresh_name(&mut self, base: &str) -> String {
        self.counter += 1;
        format!("{base}{}", self.counter)
    }

    fn inhabited_data(&self) -> Vec<Name> {
        self.data_cost
            .iter()
            .filter(|(_, c)| c.is_some())
            .map(|(d, _)| d.clone())
            .collect()
    }

    /// A random type. Leaves favour `unit`, `atm` and `nat`.
    pub fn gen_type(&self, rng: &mut impl Rng, depth: usize) -> Type {
        let data = self.inhabited_data();
        let leaf = |rng: &mut dyn rand::RngCore| match rng.gen_range(0..6) {
            0 | 1 => Type::Atm,
            2 => Type::Unit,
            3 if !data.is_empty() => Type::Data(data.choose(rng).expect("non-empty").clone()),
            _ => Type::nat(),
        };
        if depth == 0 {
            return leaf(rng);
        }
        match rng.gen_range(0..8) {
            0..=3 => leaf(rng),
            4 => Type::prod(self.gen_type(rng, depth - 1), self.gen_type(rng, depth - 1)),
            5 => Type::fun(self.gen_type(rng, depth - 1), self.gen_type(rng, depth - 1)),
            _ => Type::bnd(self.gen_type(rng, depth - 1)),
        }
    }

    /// `fun(f (x : unit) : τ = f x) ()`.
    pub fn diverge(&mut self, ty: &Type) -> Surface {
        let f = self.fresh_name("loop");
        let x = self.fresh_name("u");
        Surface::app(
            Surface::fun(
                &f,
                &x,
                Type::Unit,
                ty.clone(),
                Surface::app(Surface::var(&f), Surface::var(&x)),
            ),
            Surface::Unit,
        )
    }

    fn atom(&self, rng: &mut impl Rng) -> Surface {
        match self.atoms.choose(rng) {
            Some(a) if self.values_only || rng.gen_range(0..5) > 0 => Surface::Atom(*a),
            _ => Surface::Fresh,
        }
    }

    /// The cheapest expression of type `ty`; diverges at uninhabited types.
    pub fn minimal(&mut self, rng: &mut impl Rng, ty: &Type) -> Surface {
        match ty {
            Type::Unit => Surface::Unit,
            Type::Atm => self.atom(rng),
            Type::Prod(a, b) => Surface::pair(self.minimal(rng, a), self.minimal(rng, b)),
            Type::Fun(a, b) => {
                let x = self.fresh_name("x");
                let body = self.minimal(rng, b);
                Surface::lam(&x, (**a).clone(), body)
            }
            Type::Bnd(t) => Surface::bind(self.atom(rng), self.minimal(rng, t)),
            Type::Data(d) => {
                let best = self.sig.datatype(d).and_then(|dt| {
                    dt.constructors
                        .iter()
                        .filter_map(|(c, t)| {
                            cost(t, &self.data_cost).map(|k| (k, c.clone(), t.clone()))
                        })
                        .min_by_key(|(k, _, _)| *k)
                });
                match best {
                    Some((_, c, t)) => Surface::Con(c, Box::new(self.minimal(rng, &t))),
                    None => self.diverge(ty),
                }
            }
        }
    }

    /// Variables and projections of variables in `env` with type `ty`.
    fn accessors(env: &Env, ty: &Type) -> Vec<Surface> {
        let mut out = Vec::new();
        for (x, t) in env {
            collect_paths(Surface::var(x), t, ty, 2, &mut out);
        }
        out
    }

    /// A random expression of type `ty` under `env`.
    pub fn expr(&mut self, rng: &mut impl Rng, env: &mut Env, ty: &Type, depth: usize) -> Surface {
        let access = Self::accessors(env, ty);
        if depth == 0 {
            if !access.is_empty() && rng.gen_bool(0.6) {
                return access.choose(rng).expect("non-empty").clone();
            }
            return self.minimal(rng, ty);
        }
        let is_nat = *ty == Type::nat();
        let unbind_target = matches!(ty, Type::Prod(a, _) if **a == Type::Atm);
        let weights: [(u32, u8); 12] = [
            (if access.is_empty() { 0 } else { 5 }, 0),
            (4, 1), // intro
            (2, 2), // let
            (1, 3), // application
            (1, 4), // projection
            (1, 5), // match
            (1, 6), // let <x1> x2
            (2, 7), // observe and branch
            (if is_nat && !self.obs.is_empty() { 3 } else { 0 }, 8),
            (1, 9), // fresh x in
            (if unbind_target { 2 } else { 0 }, 10),
            (if rng.gen_bool(0.05) { 1 } else { 0 }, 11),
        ];
        let total: u32 = weights.iter().map(|(w, _)| w).sum();
        let mut pick = rng.gen_range(0..total);
        let mut choice = 1;
        for (w, c) in weights {
            if pick < w {
                choice = c;
                break;
            }
            pick -= w;
        }
        let d = depth - 1;
        match choice {
            0 => access.choose(rng).expect("non-empty").clone(),
            1 => self.intro(rng, env, ty, d),
            2 => {
                let s = self.gen_type(rng, 1);
                let x = self.fresh_name("x");
                let e1 = self.expr(rng, env, &s, d);
                env.push((x.clone(), s));
                let e2 = self.expr(rng, env, ty, d);
                env.pop();
                Surface::let_(&x, e1, e2)
            }
            3 => {
                let s = self.gen_type(rng, 1);
                let f = self.expr(rng, env, &Type::fun(s.clone(), ty.clone()), d);
                let a = self.expr(rng, env, &s, d);
                Surface::app(f, a)
            }
            4 => {
                let s = self.gen_type(rng, 1);
                if rng.gen_bool(0.5) {
                    Surface::fst(self.expr(rng, env, &Type::prod(ty.clone(), s), d))
                } else {
                    Surface::snd(self.expr(rng, env, &Type::prod(s, ty.clone()), d))
                }
            }
            5 => {
                let data = self.inhabited_data();
                let delta = if rng.gen_bool(0.6) {
                    name("nat")
                } else {
                    data.choose(rng).cloned().unwrap_or_else(|| name("nat"))
                };
                let scrut = self.expr(rng, env, &Type::Data(delta.clone()), d);
                let dt = self.sig.datatype(&delta).expect("declared").clone();
                let arms = dt
                    .constructors
                    .iter()
                    .map(|(c, t)| {
                        let y = self.fresh_name("y");
                        env.push((y.clone(), t.clone()));
                        let body = self.expr(rng, env, ty, d);
                        env.pop();
                        SurfaceArm {
                            con: c.clone(),
                            var: Some(name(&y)),
                            body,
                        }
                    })
                    .collect();
                Surface::match_(scrut, arms)
            }
            6 => {
                let s = self.gen_type(rng, 1);
                let e1 = self.expr(rng, env, &Type::bnd(s.clone()), d);
                let (x1, x2) = (self.fresh_name("a"), self.fresh_name("x"));
                env.push((x1.clone(), Type::Atm));
                env.push((x2.clone(), s));
                let body = self.expr(rng, env, ty, d);
                env.pop();
                env.pop();
                Surface::let_bind(&x1, &x2, e1, body)
            }
            7 => {
                let cond = self.observe(rng, env, d);
                let t = self.expr(rng, env, ty, d);
                let e = self.expr(rng, env, ty, d);
                Surface::if_(cond, t, e)
            }
            8 => self.observe(rng, env, d),
            9 => {
                let x = self.fresh_name("a");
                env.push((x.clone(), Type::Atm));
                let body = self.expr(rng, env, ty, d);
                env.pop();
                Surface::FreshIn(name(&x), Box::new(body))
            }
            10 => {
                let Type::Prod(_, s) = ty else { unreachable!() };
                Surface::unbind(self.expr(rng, env, &Type::bnd((**s).clone()), d))
            }
            _ => self.diverge(ty),
        }
    }

    /// `@o a1 .. ak` over atom-typed subexpressions; falls back to `0` when
    /// no observation is registered.
    fn observe(&mut self, rng: &mut impl Rng, env: &mut Env, depth: usize) -> Surface {
        let Some((o, arity)) = self.obs.choose(rng).cloned() else {
            return Surface::numeral(0);
        };
        let args = (0..arity)
            .map(|_| self.expr(rng, env, &Type::Atm, depth / 2))
            .collect();
        Surface::Obs(o, args)
    }

    fn intro(&mut self, rng: &mut impl Rng, env: &mut Env, ty: &Type, d: usize) -> Surface {
        match ty {
            Type::Unit => Surface::Unit,
            Type::Atm => self.atom(rng),
            Type::Prod(a, b) => {
                let l = self.expr(rng, env, a, d);
                let r = self.expr(rng, env, b, d);
                Surface::pair(l, r)
            }
            Type::Fun(a, b) => {
                let x = self.fresh_name("x");
                if rng.gen_bool(self.recursion) {
                    let f = self.fresh_name("f");
                    env.push((f.clone(), ty.clone()));
                    env.push((x.clone(), (**a).clone()));
                    let body = self.expr(rng, env, b, d);
                    env.pop();
                    env.pop();
                    Surface::fun(&f, &x, (**a).clone(), (**b).clone(), body)
                } else {
                    env.push((x.clone(), (**a).clone()));
                    let body = self.expr(rng, env, b, d);
                    env.pop();
                    Surface::lam(&x, (**a).clone(), body)
                }
            }
            Type::Bnd(t) => {
                let a = self.expr(rng, env, &Type::Atm, d / 2);
                let v = self.expr(rng, env, t, d);
                Surface::bind(a, v)
            }
            Type::Data(dname) => {
                let dt = self.sig.datatype(dname).expect("declared").clone();
                let usable: Vec<&(Name, Type)> = dt
                    .constructors
                    .iter()
                    .filter(|(_, t)| cost(t, &self.data_cost).is_some())
                    .collect();
                match usable.choose(rng) {
                    Some((c, t)) => {
                        let arg = self.expr(rng, env, t, d);
                        Surface::Con(c.clone(), Box::new(arg))
                    }
                    None => self.diverge(ty),
                }
            }
        }
    }

    /// A random closed value of type `ty`. Function bodies are arbitrary
    /// expressions.
    pub fn value(&mut self, rng: &mut impl Rng, ty: &Type, depth: usize) -> Surface {
        match ty {
            Type::Unit => Surface::Unit,
            Type::Atm => match self.atoms.choose(rng) {
                Some(a) => Surface::Atom(*a),
                None => Surface::Fresh,
            },
            Type::Prod(a, b) => Surface::pair(self.value(rng, a, depth), self.value(rng, b, depth)),
            Type::Fun(..) => self.intro(rng, &mut Vec::new(), ty, depth),
            Type::Bnd(t) => {
                let a = self.value(rng, &Type::Atm, depth);
                Surface::bind(a, self.value(rng, t, depth))
            }
            Type::Data(dname) => {
                if depth == 0 {
                    self.values_only = true;
                    let v = self.minimal(rng, ty);
                    self.values_only = false;
                    return v;
                }
                let dt = self.sig.datatype(dname).expect("declared").clone();
                let usable: Vec<&(Name, Type)> = dt
                    .constructors
                    .iter()
                    .filter(|(_, t)| cost(t, &self.data_cost).is_some())
                    .collect();
                match usable.choose(rng) {
                    Some((c, t)) => {
                        Surface::Con(c.clone(), Box::new(self.value(rng, t, depth - 1)))
                    }
                    None => self.diverge(ty),
                }
            }
        }
    }
}

fn cost(t: &Type, data: &BTreeMap<Name, Option<usize>>) -> Option<usize> {
    match t {
        Type::Unit | Type::Atm => Some(1),
        Type::Fun(..) => Some(2),
        Type::Prod(a, b) => Some(1 + cost(a, data)?.max(cost(b, data)?)),
        Type::Bnd(a) => Some(1 + cost(a, data)?),
        Type::Data(d) => data.get(d).copied().flatten(),
    }
}

fn collect_paths(e: Surface, t: &Type, want: &Type, depth: usize, out: &mut Vec<Surface>) {
    if t == want {
        out.push(e.clone());
    }
    if depth == 0 {
        return;
    }
    if let Type::Prod(a, b) = t {
        collect_paths(Surface::fst(e.clone()), a, want, depth - 1, out);
        collect_paths(Surface::snd(e), b, want, depth - 1, out);
    }
}

/// Size parameters for [`gen_config`].
#[derive(Clone, Debug)]
pub struct ConfigSpec {
    pub max_state: usize,
    /// Atoms are drawn from `#a0 .. #a{atom_range-1}`.
    pub atom_range: u32,
    pub expr_depth: usize,
    pub max_frames: usize,
    pub type_depth: usize,
}

impl Default for ConfigSpec {
    fn default() -> Self {
        ConfigSpec {
            max_state: 5,
            atom_range: 10,
            expr_depth: 5,
            max_frames: 3,
            type_depth: 2,
        }
    }
}

/// A random state of distinct atoms in random order.
pub fn gen_state(rng: &mut impl Rng, max_len: usize, atom_range: u32) -> State {
    let n = rng.gen_range(0..=max_len.min(atom_range as usize));
    let mut pool: Vec<Atom> = (0..atom_range).map(Atom).collect();
    pool.shuffle(rng);
    pool.truncate(n);
    State::new(pool).expect("distinct atoms")
}

/// A random closed well-typed configuration and its result type.
pub fn gen_config(sig: &Signature, rng: &mut impl Rng, spec: &ConfigSpec) -> (Configuration, Type) {
    let state = gen_state(rng, spec.max_state, spec.atom_range);
    let mut g = ExprGen::new(sig, &state.world());
    let k = rng.gen_range(0..=spec.max_frames);
    let types: Vec<Type> = (0..=k).map(|_| g.gen_type(rng, spec.type_depth)).collect();
    let e = desugar(&g.expr(rng, &mut Vec::new(), &types[0], spec.expr_depth));
    let mut frames = Vec::with_capacity(k);
    for i in 0..k {
        let x = g.fresh_name("k");
        let mut env = vec![(x.clone(), types[i].clone())];
        let body = desugar(&g.expr(rng, &mut env, &types[i + 1], spec.expr_depth));
        frames.push(Frame::new(&x, body));
    }
    frames.reverse();
    let cfg = Configuration::new(state, FrameStack::from_frames(frames), e)
        .expect("atoms drawn from the state");
    (cfg, types[k].clone())
}

/// Parameters for [`gen_stack`].
#[derive(Clone, Debug)]
pub struct StackGenSpec {
    /// Type of the value plugged into the stack.
    pub arg: Type,
    pub world: World,
    pub max_depth: usize,
    pub seed: u64,
    /// Closed values the stack may compare its argument against with the
    /// in-language α-equivalence test.
    pub probes: Vec<Value>,
}

impl StackGenSpec {
    pub fn new(arg: Type, world: World, max_depth: usize, seed: u64) -> Self {
        StackGenSpec {
            arg,
            world,
            max_depth,
            seed,
            probes: Vec::new(),
        }
    }
}

/// A random well-typed frame stack accepting `spec.arg`, with its result
/// type.
pub fn gen_stack(sig: &Signature, spec: &StackGenSpec) -> (FrameStack, Type) {
    let mut rng = crate::rng::trial_rng(spec.seed, 0);
    StackGen::new(sig, &spec.world, &spec.probes).gen(&mut rng, &spec.arg, spec.max_depth)
}

/// Frame-by-frame generator of evaluation contexts. Each frame consumes
/// the value produced so far with a destructor, an observation, an
/// α-equivalence comparison, or a generic expression; values of type `nat`
/// are often turned into termination behaviour by branching to divergence.
pub struct StackGen<'a> {
    g: ExprGen<'a>,
    world: World,
    probes: Vec<(Type, Value)>,
    aeq: HashMap<Type, Surface>,
}

impl<'a> StackGen<'a> {
    pub fn new(sig: &'a Signature, world: &World, probes: &[Value]) -> Self {
        let mut g = ExprGen::new(sig, world);
        g.recursion = 0.0;
        let probes = probes
            .iter()
            .filter_map(|v| {
                let t =
                    crate::types::check_value(sig, &mut crate::types::TypingEnv::new(), v).ok()?;
                Some((t, v.clone()))
            })
            .collect();
        StackGen {
            g,
            world: world.clone(),
            probes,
            aeq: HashMap::new(),
        }
    }

    pub fn gen(&mut self, rng: &mut impl Rng, arg: &Type, max_depth: usize) -> (FrameStack, Type) {
        let depth = rng.gen_range(0..=max_depth);
        let mut ty = arg.clone();
        let mut frames = Vec::new();
        for _ in 0..depth {
            if ty == Type::Unit && rng.gen_bool(0.7) {
                break;
            }
            let x = self.g.fresh_name("k");
            let (body, out) = self.frame(rng, &x, &ty);
            frames.push(Frame::new(&x, desugar(&body)));
            ty = out;
        }
        frames.reverse();
        (FrameStack::from_frames(frames), ty)
    }

    fn aeq_fn(&mut self, ty: &Type) -> Surface {
        if let Some(s) = self.aeq.get(ty) {
            return s.clone();
        }
        let s = from_expr(&gen_aeq(self.g.signature(), ty).expect("nominal arity"));
        self.aeq.insert(ty.clone(), s.clone());
        s
    }

    fn branch(&mut self, rng: &mut impl Rng, x: &str) -> Surface {
        let (zero, succ) = if rng.gen_bool(0.5) {
            (Surface::Unit, self.g.diverge(&Type::Unit))
        } else {
            (self.g.diverge(&Type::Unit), Surface::Unit)
        };
        Surface::match_(
            Surface::var(x),
            vec![
                SurfaceArm {
                    con: name("Zero"),
                    var: None,
                    body: zero,
                },
                SurfaceArm {
                    con: name("Succ"),
                    var: None,
                    body: succ,
                },
            ],
        )
    }

    fn frame(&mut self, rng: &mut impl Rng, x: &str, ty: &Type) -> (Surface, Type) {
        let sig = self.g.signature();
        let xv = Surface::var(x);
        let nominal = is_nominal_arity(sig, ty);
        let roll = rng.gen_range(0..10);
        if nominal && roll < 3 {
            let other = self.comparand(rng, ty);
            let f = self.aeq_fn(ty);
            let args = if rng.gen_bool(0.5) {
                vec![xv, other]
            } else {
                vec![other, xv]
            };
            return (Surface::apps(f, args), Type::nat());
        }
        match ty {
            Type::Data(d) if **d == *"nat" && roll < 8 => (self.branch(rng, x), Type::Unit),
            Type::Data(d) if roll < 7 => {
                // Constructor index as a numeral.
                let dt = sig.datatype(d).expect("declared").clone();
                let arms = dt
                    .constructors
                    .iter()
                    .enumerate()
                    .map(|(i, (c, _))| SurfaceArm {
                        con: c.clone(),
                        var: None,
                        body: Surface::numeral(i as u64),
                    })
                    .collect();
                (Surface::match_(xv, arms), Type::nat())
            }
            Type::Atm if roll < 8 => {
                let unary: Vec<(Name, usize)> =
                    self.g.obs.iter().filter(|o| o.1 > 0).cloned().collect();
                if let Some(o) = unary.choose(rng).cloned() {
                    let mut args: Vec<Surface> = (1..o.1).map(|_| self.g.atom(rng)).collect();
                    args.insert(rng.gen_range(0..=args.len()), xv);
                    (Surface::Obs(o.0, args), Type::nat())
                } else {
                    (xv, Type::Atm)
                }
            }
            Type::Prod(a, b) if roll < 7 => {
                if rng.gen_bool(0.5) {
                    (Surface::fst(xv), (**a).clone())
                } else {
                    (Surface::snd(xv), (**b).clone())
                }
            }
            Type::Fun(a, b) if roll < 9 => {
                let arg = self.g.expr(rng, &mut Vec::new(), a, 2);
                (Surface::app(xv, arg), (**b).clone())
            }
            Type::Bnd(t) if roll < 8 => (Surface::unbind(xv), Type::prod(Type::Atm, (**t).clone())),
            _ => {
                let out = if rng.gen_bool(0.5) {
                    Type::nat()
                } else {
                    self.g.gen_type(rng, 1)
                };
                let mut env = vec![(x.to_string(), ty.clone())];
                (self.g.expr(rng, &mut env, &out, 3), out)
            }
        }
    }

    /// A probe of the right type, or a fresh random value.
    fn comparand(&mut self, rng: &mut impl Rng, ty: &Type) -> Surface {
        let matching: Vec<&Value> = self
            .probes
            .iter()
            .filter(|(t, _)| t == ty)
            .map(|(_, v)| v)
            .collect();
        if !matching.is_empty() && rng.gen_bool(0.7) {
            return from_value(matching.choose(rng).expect("non-empty"));
        }
        match gen_value_rng(self.g.signature(), ty, &self.world, 4, rng) {
            Ok(v) => from_value(&v),
            Err(_) => self.g.minimal(rng, ty),
        }
    }
}


#[cfg(test)]
mod diversity {
    use super::*;
    use crate::machine::Machine;
    use crate::syntax::Expr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn count(e: &Expr, pred: &dyn Fn(&Expr) -> bool) -> usize {
        let here = usize::from(pred(e));
        here + match e {
            Expr::Let(_, a, b) => count(a, pred) + count(b, pred),
            Expr::Match(_, arms) => arms.iter().map(|a| count(&a.body, pred)).sum(),
            _ => 0,
        }
    }

    /// Guards against the generator collapsing to trivial configurations,
    /// which would make the sampled suites vacuous.
    #[test]
    fn configurations_exercise_the_machine() {
        let sig = crate::suites::rich_signature();
        let m = Machine::new(&sig);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (mut long, mut fresh, mut unbind, mut obs, mut frames, mut diverged) =
            (0, 0, 0, 0, 0, 0);
        for _ in 0..500 {
            let (cfg, _) = gen_config(&sig, &mut rng, &ConfigSpec::default());
            frames += usize::from(!cfg.stack.is_id());
            let has = |p: &dyn Fn(&Expr) -> bool| {
                count(&cfg.expr, p)
                    + cfg
                        .stack
                        .frames()
                        .iter()
                        .map(|f| count(&f.body, p))
                        .sum::<usize>()
                    > 0
            };
            fresh += usize::from(has(&|e| matches!(e, Expr::Fresh)));
            unbind += usize::from(has(&|e| matches!(e, Expr::Unbind(_))));
            obs += usize::from(has(&|e| matches!(e, Expr::Obs(..))));
            let t = m.run(cfg, 10_000).termination();
            long += usize::from(t.terminated() && t.steps() > 20);
            diverged += usize::from(!t.terminated());
        }
        assert!(long > 250, "{long}");
        assert!(
            fresh > 250 && unbind > 250 && obs > 250,
            "{fresh} {unbind} {obs}"
        );
        assert!(frames > 250, "{frames}");
        assert!(diverged > 5 && diverged < 100, "{diverged}");
    }
}
