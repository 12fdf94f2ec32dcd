//! Program files: an optional signature block, an observation selection,
//! observation definitions and a body expression.

use thiserror::Error;

use crate::observations::{Observation, RegistrationError};
use crate::parse::{parse_program, SyntaxError};
use crate::surface::desugar;
use crate::syntax::{Expr, Name};
use crate::types::{type_of, Signature, Type, TypeError};

/// Sampling budget used to confirm the declared flags of user-defined
/// observations.
pub const REGISTRATION_TRIALS: usize = 1000;

#[derive(Debug, Clone, Error)]
pub enum ProgramError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Registration(#[from] RegistrationError),
    #[error("E_UNKNOWN_OBS: no observation named {0}")]
    UnknownObservation(Name),
}

impl ProgramError {
    pub fn code(&self) -> &'static str {
        match self {
            ProgramError::Syntax(_) => "E_SYNTAX",
            ProgramError::Type(e) => e.code(),
            ProgramError::Registration(_) => "E_REGISTRATION",
            ProgramError::UnknownObservation(_) => "E_UNKNOWN_OBS",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Program {
    pub signature: Signature,
    pub body: Expr,
}

impl Program {
    pub fn type_of(&self) -> Result<Type, TypeError> {
        type_of(&self.signature, &self.body)
    }
}

/// Parses a program and builds its signature. Without an `observations:`
/// line only `eq` is registered; defined observations are always
/// registered, after their declared flags survive sampling.
pub fn load_program(src: &str) -> Result<Program, ProgramError> {
    let ast = parse_program(src)?;
    let base = Signature::validate(ast.datatypes)?;
    let mut selected = Vec::new();
    for n in ast.observations.iter().flatten() {
        if ast.obs_defs.iter().any(|d| d.name == *n) || &**n == "eq" {
            continue;
        }
        selected.push(
            Observation::by_name(n).ok_or_else(|| ProgramError::UnknownObservation(n.clone()))?,
        );
    }
    let mut signature = base.with_observations(selected);
    for d in ast.obs_defs {
        signature.register(
            Observation::from_term(&d.name, d.arity, d.term),
            REGISTRATION_TRIALS,
            0,
        )?;
    }
    Ok(Program {
        signature,
        body: desugar(&ast.body),
    })
}
