//! A FreshML-style calculus: syntax, typing, an abstract machine with
//! generative unbinding and state-dependent observations on atoms,
//! α-equivalence over nominal signatures, and sampling-based equivalence
//! testing.

pub mod atom;
pub mod generate;
pub mod harness;
pub mod machine;
pub mod nominal;
pub mod observations;
pub mod parse;
pub mod print;
pub mod program;
pub mod rng;
pub mod suites;
pub mod surface;
pub mod syntax;
pub mod types;

pub use atom::{Atom, Permutation, State, World};
pub use machine::{FreshPolicy, Machine, Outcome, StepResult, Termination};
pub use observations::Observation;
pub use surface::{desugar, Surface};
pub use syntax::{Configuration, Expr, Frame, FrameStack, Value};
pub use types::{Signature, Type};
