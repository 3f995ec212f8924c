//! The `idvoi` command line: every command is a thin wrapper over the library.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use idvoi::model::{validate_model, ModelDocument, ModelError};
use idvoi::oracle::{oracle_meu, OracleError};
use idvoi::solve::{bn_posterior, DecisionPolicy, SolveError};
use idvoi::voi::{voi_report, Method, VoiError, VoiQuery};
use idvoi::{parse_model, Evidence, InfluenceDiagram, ObservationScenario};
use serde_json::json;
use thiserror::Error;

/// Exit status of a command.
pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "idvoi", version, about = "Influence diagrams: MEU, policies and value of information")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List every violated model invariant; exit 0 iff there is none.
    Validate {
        /// Model document (JSON).
        model: PathBuf,
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
    /// Maximum expected utility and optimal policies.
    Solve {
        /// Model document (JSON).
        model: PathBuf,
        /// Past evidence, `Var=state,...`; decisions included.
        #[arg(long, default_value = "")]
        evidence: String,
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
    /// Posterior marginals, decisions not in the evidence taken as uniform.
    Posterior {
        /// Model document (JSON).
        model: PathBuf,
        /// Variables to report, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<String>,
        /// Evidence, `Var=state,...`.
        #[arg(long, default_value = "")]
        evidence: String,
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
    /// Myopic value of information of candidate observations before a decision.
    Value {
        /// Model document (JSON).
        model: PathBuf,
        /// The decision `D_i` (by name).
        #[arg(long)]
        decision: String,
        /// Chance variables to value, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        candidates: Vec<String>,
        /// Evidence, `Var=state,...`.
        #[arg(long, default_value = "")]
        evidence: String,
        /// auto, direct, cooper, expand or general.
        #[arg(long, default_value = "auto")]
        method: String,
        /// Compare against observing the candidates in `I_k` instead of their
        /// current placement (`I_n`: never observed).
        #[arg(long)]
        to: Option<String>,
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
    /// Exhaustive MEU, optionally with observations moved, `X:to=I_k`.
    Oracle {
        /// Model document (JSON).
        model: PathBuf,
        /// Evidence, `Var=state,...`.
        #[arg(long, default_value = "")]
        evidence: String,
        /// Move an observation, `X:to=I_k`; repeatable.
        #[arg(long = "move")]
        moves: Vec<String>,
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
    /// Start the HTTP session service on the loopback interface.
    Serve {
        /// Port on 127.0.0.1.
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Append session step logs here and replay them on start.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Illegal(_) => CliError::Domain(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Model(m) => m.into(),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<VoiError> for CliError {
    fn from(e: VoiError) -> Self {
        match e {
            VoiError::Model(m) => m.into(),
            VoiError::Solve(s) => s.into(),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Model(m) => m.into(),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<InfluenceDiagram, CliError> {
    Ok(parse_model(&read(path)?)?)
}

/// Parses `I_k` (or a bare `k`) into an information-set index.
pub fn parse_set_index(id: &InfluenceDiagram, text: &str) -> Result<usize, CliError> {
    let digits = text.strip_prefix("I_").unwrap_or(text);
    let k: usize = digits
        .parse()
        .map_err(|_| CliError::Usage(format!("expected an information set `I_k`, got `{text}`")))?;
    if k > id.num_decisions() {
        return Err(CliError::Usage(format!(
            "information set I_{k} does not exist (I_0..I_{})",
            id.num_decisions()
        )));
    }
    Ok(k)
}

/// Applies `X:to=I_k` moves to the modeled scenario.
pub fn apply_moves(id: &InfluenceDiagram, moves: &[String]) -> Result<ObservationScenario, CliError> {
    let mut scenario = ObservationScenario::modeled(id);
    for m in moves {
        let (name, target) = m
            .split_once(":to=")
            .ok_or_else(|| CliError::Usage(format!("malformed move `{m}` (expected X:to=I_k)")))?;
        let x = id.lookup(name)?;
        let k = parse_set_index(id, target)?;
        scenario = scenario.with_placement(id, x, k)?;
    }
    Ok(scenario)
}

fn lines(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Usage(format!("cannot write output: {e}")))
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

/// Runs one command; `serve` is handled by the binary.
pub fn execute(command: &Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Validate { model, json } => {
            let text = read(model)?;
            let doc: ModelDocument = serde_json::from_str(&text).map_err(|e| {
                CliError::Usage(format!(
                    "syntax error at line {}, column {}: {e}",
                    e.line(),
                    e.column()
                ))
            })?;
            let violations = validate_model(&doc);
            if *json {
                lines(out, &pretty(&json!({ "violations": violations })))?;
            } else {
                for v in &violations {
                    lines(out, &format!("{v}\n"))?;
                }
            }
            Ok(if violations.is_empty() { EXIT_OK } else { EXIT_DOMAIN })
        }
        Command::Solve {
            model,
            evidence,
            json,
        } => {
            let id = load_model(model)?;
            let e = Evidence::parse(&id, evidence)?;
            let sol = idvoi::solve_meu(&id, &ObservationScenario::modeled(&id), &e)?;
            if *json {
                lines(out, &pretty(&sol.to_json(&id)))?;
            } else {
                let mut s = format!(
                    "MEU: {}\nP(e): {}\npropagations: {}\n",
                    sol.meu, sol.evidence_probability, sol.propagations
                );
                for p in &sol.policies {
                    let states = &id.variable(p.decision).states;
                    let domain: Vec<&str> = p.domain.iter().map(|v| id.name(*v)).collect();
                    s.push_str(&format!(
                        "policy {} | [{}]: {}\n",
                        id.name(p.decision),
                        domain.join(", "),
                        p.actions
                            .iter()
                            .map(|a| states[*a].as_str())
                            .collect::<Vec<_>>()
                            .join(" ")
                    ));
                }
                lines(out, &s)?;
            }
            Ok(EXIT_OK)
        }
        Command::Posterior {
            model,
            targets,
            evidence,
            json,
        } => {
            let id = load_model(model)?;
            let e = Evidence::parse(&id, evidence)?;
            let vars = targets
                .iter()
                .map(|t| id.lookup(t))
                .collect::<Result<Vec<_>, _>>()?;
            let marginals = bn_posterior(&id, &e, &vars, &DecisionPolicy::Uniform)?;
            let mut doc = BTreeMap::new();
            let mut s = String::new();
            for (v, m) in vars.iter().zip(&marginals) {
                let states: BTreeMap<&str, f64> = id
                    .variable(*v)
                    .states
                    .iter()
                    .map(String::as_str)
                    .zip(m.values.iter().copied())
                    .collect();
                s.push_str(&format!("{}:", id.name(*v)));
                for (label, p) in id.variable(*v).states.iter().zip(&m.values) {
                    s.push_str(&format!(" {label}={p}"));
                }
                s.push('\n');
                doc.insert(id.name(*v), states);
            }
            lines(out, &if *json { pretty(&json!(doc)) } else { s })?;
            Ok(EXIT_OK)
        }
        Command::Value {
            model,
            decision,
            candidates,
            evidence,
            method,
            to,
            json,
        } => {
            let id = load_model(model)?;
            let e = Evidence::parse(&id, evidence)?;
            let d = id.lookup(decision)?;
            let i = id
                .decision_index(d)
                .ok_or_else(|| CliError::Usage(format!("`{decision}` is not a decision")))?;
            let method = match method.as_str() {
                "auto" => None,
                m => Some(m.parse::<Method>().map_err(CliError::Usage)?),
            };
            let vars = candidates
                .iter()
                .map(|c| id.lookup(c))
                .collect::<Result<Vec<_>, _>>()?;
            let mut query = VoiQuery::new(i, vars.clone(), e).with_method(method);
            if let Some(to) = to {
                let k = parse_set_index(&id, to)?;
                let j = (k < id.num_decisions()).then_some(k + 1);
                query.sources = vars.iter().map(|v| (*v, j)).collect();
            }
            let report = voi_report(&id, &query)?;
            if *json {
                lines(out, &pretty(&report.to_json()))?;
            } else {
                let mut s = format!(
                    "decision: {}\nbaseline: {}\npropagations: {}\n",
                    report.decision, report.baseline, report.propagations
                );
                for c in &report.candidates {
                    match (c.voi, &c.reason, &c.error) {
                        (Some(voi), _, _) => s.push_str(&format!(
                            "{}: voi={} euo={} method={} propagations={}\n",
                            c.name,
                            voi,
                            c.euo.unwrap_or(f64::NAN),
                            c.method.map_or("-", Method::as_str),
                            c.propagations.unwrap_or(0)
                        )),
                        (None, Some(reason), _) => {
                            s.push_str(&format!("{}: illegal: {reason}\n", c.name))
                        }
                        (None, None, Some(err)) => {
                            s.push_str(&format!("{}: failed: {err}\n", c.name))
                        }
                        _ => s.push_str(&format!("{}: no value\n", c.name)),
                    }
                }
                lines(out, &s)?;
            }
            Ok(EXIT_OK)
        }
        Command::Oracle {
            model,
            evidence,
            moves,
            json,
        } => {
            let id = load_model(model)?;
            let e = Evidence::parse(&id, evidence)?;
            let scenario = apply_moves(&id, moves)?;
            let modeled = ObservationScenario::modeled(&id);
            let meu = oracle_meu(&id, &scenario, &e)?;
            let baseline = oracle_meu(&id, &modeled, &e)?;
            let doc = json!({
                "meu": meu,
                "modeled_meu": baseline,
                "difference": meu - baseline,
            });
            if *json {
                lines(out, &pretty(&doc))?;
            } else {
                lines(
                    out,
                    &format!(
                        "MEU: {meu}\nmodeled MEU: {baseline}\ndifference: {}\n",
                        meu - baseline
                    ),
                )?;
            }
            Ok(EXIT_OK)
        }
        Command::Serve { .. } => Err(CliError::Usage("`serve` runs from the binary".into())),
    }
}

/// Parses `args` (program name first) and runs the command, writing results to
/// `out` and messages to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
