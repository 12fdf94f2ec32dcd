use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use freshml::harness::{ciu_test_with, CiuSpec, DEFAULT_FUEL, DEFAULT_TRIALS};
use freshml::machine::{trace_line, Machine, Outcome};
use freshml::nominal::{alpha_eq, gen_aeq, gen_swap};
use freshml::observations::{check_affine, check_equivariance, Observation, Verdict};
use freshml::parse::{parse_atom_list, parse_program, parse_type};
use freshml::print::{expr_to_string, value_to_string};
use freshml::program::{load_program, Program};
use freshml::suites::{rich_signature, safety_suite};
use freshml::syntax::{Configuration, FrameStack};
use freshml::types::{is_nominal_arity, Signature, Type};
use freshml::{FreshPolicy, State, World};

const EXIT_OK: u8 = 0;
const EXIT_STATIC: u8 = 1;
const EXIT_FUEL: u8 = 2;
const EXIT_STUCK: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

/// Steps run from each sampled configuration by `fuzz-safety`.
const SAFETY_STEPS: u64 = 200;

#[derive(Parser)]
#[command(
    name = "freshml",
    version,
    about = "Evaluate, type-check and test freshml programs"
)]
struct Cli {
    /// Seed for every sampled choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Least,
    Greatest,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program on the abstract machine.
    Run {
        file: PathBuf,
        /// Initial state, e.g. `#a0,#a1`. Defaults to the program's atoms in order.
        #[arg(long)]
        state: Option<String>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        /// Print one line per machine step.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = Policy::Least)]
        policy: Policy,
    },
    /// Type-check a program and print its type.
    Check { file: PathBuf },
    /// Decide α-equivalence of two closed values at a nominal arity.
    Alpha {
        file1: PathBuf,
        file2: PathBuf,
        #[arg(long)]
        arity: String,
    },
    /// Search for a CIU context distinguishing two closed expressions.
    FuzzEquiv {
        file1: PathBuf,
        file2: PathBuf,
        #[arg(long = "type")]
        ty: String,
        /// Atoms the expressions may mention. Defaults to those they do mention.
        #[arg(long)]
        world: Option<String>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Check preservation and progress on random well-typed configurations.
    FuzzSafety {
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
    },
    /// Sample the equivariance and affine laws of an observation.
    ObsCheck {
        name: String,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// Program file whose observation definitions are also searched.
        #[arg(long)]
        program: Option<PathBuf>,
    },
    /// Print the generated swap program for a type.
    EmitSwap {
        ty: String,
        /// File with data type declarations the type may refer to.
        #[arg(long)]
        decls: Option<PathBuf>,
    },
    /// Print the generated α-equivalence program for a nominal arity.
    EmitAeq {
        ty: String,
        #[arg(long)]
        decls: Option<PathBuf>,
    },
}

/// A static error: bad input, a parse or type error, an unknown name.
#[derive(Debug)]
struct CliError {
    code: String,
    message: String,
    file: Option<PathBuf>,
}

impl CliError {
    fn new(code: &str, message: impl Into<String>) -> Self {
        CliError {
            code: code.to_string(),
            message: message.into(),
            file: None,
        }
    }

    fn in_file(mut self, path: &Path) -> Self {
        self.file = Some(path.to_path_buf());
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.file {
            write!(f, "{}: ", p.display())?;
        }
        if self.message.starts_with(&self.code) {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.code, self.message)
        }
    }
}

macro_rules! coded {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new(e.code(), e.to_string())
            }
        }
    )*};
}

coded!(
    freshml::program::ProgramError,
    freshml::types::TypeError,
    freshml::harness::HarnessError,
    freshml::nominal::NominalError
);

impl From<freshml::parse::SyntaxError> for CliError {
    fn from(e: freshml::parse::SyntaxError) -> Self {
        CliError::new("E_SYNTAX", e.to_string())
    }
}

/// What a command produced: text lines, the JSON report and the exit code.
struct Report {
    text: Vec<String>,
    json: Json,
    exit: u8,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::new("E_IO", format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Program, CliError> {
    let src = read(path)?;
    let p = load_program(&src).map_err(|e| CliError::from(e).in_file(path))?;
    p.type_of().map_err(|e| CliError::from(e).in_file(path))?;
    Ok(p)
}

/// Loads a file holding only declarations (and an optional body, ignored).
fn load_decls(path: Option<&Path>) -> Result<Signature, CliError> {
    let Some(path) = path else {
        return Ok(Signature::basic());
    };
    let src = read(path)?;
    let ast = parse_program(&src).map_err(|e| CliError::from(e).in_file(path))?;
    Signature::validate(ast.datatypes).map_err(|e| CliError::from(e).in_file(path))
}

fn world_of(text: &str) -> Result<World, CliError> {
    Ok(parse_atom_list(text)?.into_iter().collect())
}

fn cmd_run(
    file: &Path,
    state: Option<&str>,
    fuel: u64,
    trace: bool,
    policy: Policy,
) -> Result<Report, CliError> {
    let p = load(file)?;
    let ty = p.type_of()?;
    let atoms = match state {
        Some(s) => parse_atom_list(s)?,
        None => p.body.atoms().into_iter().collect(),
    };
    let state = State::new(atoms).map_err(|e| CliError::new("E_STATE", e.to_string()))?;
    let cfg = Configuration::new(state, FrameStack::id(), p.body.clone())
        .map_err(|e| CliError::new("E_ATOM_ESCAPE", e.to_string()))?;
    let policy = match policy {
        Policy::Least => FreshPolicy::LeastUnused,
        Policy::Greatest => FreshPolicy::GreatestPlusOne,
    };
    let machine = Machine::with_policy(&p.signature, policy);
    let (lines, outcome) = if trace {
        let (cfgs, out) = machine.trace(cfg, fuel);
        (
            cfgs.iter()
                .enumerate()
                .map(|(i, c)| trace_line(i, c))
                .collect(),
            out,
        )
    } else {
        (Vec::new(), machine.run(cfg, fuel))
    };
    let exit = match &outcome {
        Outcome::Terminated { .. } => EXIT_OK,
        Outcome::FuelExhausted { .. } => EXIT_FUEL,
        Outcome::Stuck { .. } => EXIT_STUCK,
    };
    let mut json = json!({
        "schema": 1,
        "type": ty.to_string(),
        "outcome": outcome.termination(),
        "line": outcome.to_string(),
    });
    if let Outcome::Terminated { state, value, .. } = &outcome {
        json["value"] = json!(value_to_string(value));
        json["state"] = json!(state);
    }
    if trace {
        json["trace"] = json!(lines);
    }
    let mut text = lines;
    text.push(outcome.to_string());
    Ok(Report { text, json, exit })
}

fn cmd_check(file: &Path) -> Result<Report, CliError> {
    let p = load(file)?;
    let ty = p.type_of()?;
    let nominal = p.signature.is_nominal() && is_nominal_arity(&p.signature, &ty);
    let yes_no = if nominal { "yes" } else { "no" };
    Ok(Report {
        text: vec![ty.to_string(), format!("nominal: {yes_no}")],
        json: json!({ "schema": 1, "type": ty.to_string(), "nominal": nominal }),
        exit: EXIT_OK,
    })
}

fn cmd_alpha(file1: &Path, file2: &Path, arity: &str) -> Result<Report, CliError> {
    let p1 = load(file1)?;
    let p2 = load(file2)?;
    let ar = parse_type(arity)?;
    let value = |p: &Program, path: &Path| {
        p.body.as_value().cloned().ok_or_else(|| {
            CliError::new("E_NOT_VALUE", format!("{} is not a value", path.display()))
        })
    };
    let (v1, v2) = (value(&p1, file1)?, value(&p2, file2)?);
    let mut w = v1.atoms();
    v2.collect_atoms(&mut w);
    let eq = alpha_eq(&p1.signature, &w, &v1, &v2, &ar)?;
    let verdict = if eq { "ALPHA-EQ" } else { "NOT-ALPHA-EQ" };
    Ok(Report {
        text: vec![verdict.to_string()],
        json: json!({ "schema": 1, "verdict": verdict, "arity": ar.to_string() }),
        exit: EXIT_OK,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_fuzz_equiv(
    file1: &Path,
    file2: &Path,
    ty: &str,
    world: Option<&str>,
    trials: usize,
    fuel: u64,
    seed: u64,
) -> Result<Report, CliError> {
    let p1 = load(file1)?;
    let p2 = load(file2)?;
    let ty = parse_type(ty)?;
    let w = match world {
        Some(text) => world_of(text)?,
        None => {
            let mut w = p1.body.atoms();
            p2.body.collect_atoms(&mut w);
            w
        }
    };
    // Both bodies are read against the first file's signature.
    let verdict = ciu_test_with(
        &p1.signature,
        &w,
        &p1.body,
        &p2.body,
        &ty,
        &CiuSpec::new(trials, fuel, seed),
    )?;
    let mut json = serde_json::to_value(&verdict).expect("verdict serializes");
    json["schema"] = json!(1);
    json["fuel"] = json!(fuel);
    json["seed"] = json!(seed);
    Ok(Report {
        text: vec![verdict.to_string()],
        json,
        exit: EXIT_OK,
    })
}

fn cmd_fuzz_safety(trials: usize, seed: u64) -> Result<Report, CliError> {
    let r = safety_suite(&rich_signature(), trials, SAFETY_STEPS, seed);
    let mut text = vec![format!(
        "{} preservation+progress {}/{}",
        if r.ok() { "PASS" } else { "FAIL" },
        r.passed,
        r.samples
    )];
    text.extend(r.failures.iter().cloned());
    Ok(Report {
        text,
        json: serde_json::to_value(&r).expect("report serializes"),
        exit: if r.ok() { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}

fn cmd_obs_check(
    name: &str,
    trials: usize,
    seed: u64,
    program: Option<&Path>,
) -> Result<Report, CliError> {
    let defined = match program {
        Some(path) => load(path)?.signature.observation(name).cloned(),
        None => None,
    };
    let o = defined
        .or_else(|| Observation::by_name(name))
        .ok_or_else(|| CliError::new("E_UNKNOWN_OBS", format!("no observation named {name}")))?;
    let laws = [
        (
            "equivariance",
            o.equivariant,
            check_equivariance(&o, trials, seed),
        ),
        ("affine", o.affine, check_affine(&o, trials, seed)),
    ];
    let mut text = Vec::new();
    let mut report = serde_json::Map::new();
    let mut consistent = true;
    for (law, declared, verdict) in &laws {
        consistent &= verdict.passed() || !declared;
        text.push(match verdict {
            Verdict::Pass { .. } => format!("{law} PASS"),
            Verdict::Counterexample(c) => format!("{law} FAIL {c}"),
        });
        report.insert(
            law.to_string(),
            json!({ "declared": declared, "result": verdict }),
        );
    }
    text.push(format!(
        "declared flags {}",
        if consistent { "consistent" } else { "REFUTED" }
    ));
    let mut json =
        json!({ "schema": 1, "observation": o.name.to_string(), "trials": trials, "seed": seed });
    json.as_object_mut().expect("object").extend(report);
    json["consistent"] = json!(consistent);
    Ok(Report {
        text,
        json,
        exit: if consistent {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        },
    })
}

fn cmd_emit(ty: &str, decls: Option<&Path>, aeq: bool) -> Result<Report, CliError> {
    let sig = load_decls(decls)?;
    let ty: Type = parse_type(ty)?;
    sig.check_type(&ty)?;
    let program = if aeq {
        gen_aeq(&sig, &ty)?
    } else {
        gen_swap(&sig, &ty)
    };
    let text = expr_to_string(&program);
    Ok(Report {
        json: json!({ "schema": 1, "type": ty.to_string(), "program": text }),
        text: vec![text],
        exit: EXIT_OK,
    })
}

fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Run {
            file,
            state,
            fuel,
            trace,
            policy,
        } => cmd_run(file, state.as_deref(), *fuel, *trace, *policy),
        Command::Check { file } => cmd_check(file),
        Command::Alpha {
            file1,
            file2,
            arity,
        } => cmd_alpha(file1, file2, arity),
        Command::FuzzEquiv {
            file1,
            file2,
            ty,
            world,
            trials,
            fuel,
        } => cmd_fuzz_equiv(file1, file2, ty, world.as_deref(), *trials, *fuel, cli.seed),
        Command::FuzzSafety { trials } => cmd_fuzz_safety(*trials, cli.seed),
        Command::ObsCheck {
            name,
            trials,
            program,
        } => cmd_obs_check(name, *trials, cli.seed, program.as_deref()),
        Command::EmitSwap { ty, decls } => cmd_emit(ty, decls.as_deref(), false),
        Command::EmitAeq { ty, decls } => cmd_emit(ty, decls.as_deref(), true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(r) => {
            if cli.json {
                println!("{}", r.json);
            } else {
                for line in &r.text {
                    println!("{line}");
                }
            }
            ExitCode::from(r.exit)
        }
        Err(e) => {
            if cli.json {
                let file = e.file.as_ref().map(|p| p.display().to_string());
                println!(
                    "{}",
                    json!({ "schema": 1, "error": { "code": e.code, "message": e.message, "file": file } })
                );
            } else {
                eprintln!("{e}");
            }
            ExitCode::from(EXIT_STATIC)
        }
    }
}
