//! Command-line front end: `derive`, `resolve`, `link`, `query`, `check`
//! and `export` over one or more fact files.
//!
//! Exit status: 0 on success, 1 when the input is rejected (parse error,
//! cycle, unknown node, failed check), 2 on usage errors and unreadable
//! files. Diagnostics go to standard error as `LEVEL code message` lines,
//! filtered by `KDGRAPH_VERBOSITY` (`error`, `warn` or `info`; default
//! `warn`).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::diag::{Diagnostic, Level};
use crate::error::Error;
use crate::pipeline::{self, Analysis};
use crate::query::{self, DEFAULT_ORDERING_CAP};
use crate::resolution::Confidence;
use crate::store::{parse_into, render_facts, KnowledgeStore};

pub const VERBOSITY_VAR: &str = "KDGRAPH_VERBOSITY";

#[derive(Debug, Parser)]
#[command(name = "kdgraph", version, about = "Complete and query frame-based knowledge bases")]
pub struct Cli {
    /// Restrict the analysis to the graph rooted at this node.
    #[arg(long, global = true, value_name = "NODE")]
    pub root: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Fact files, read in order into one store.
    #[arg(required = true, value_name = "FILE")]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FactFormat {
    Facts,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnswerFormat {
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Dot,
    Json,
    Facts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphVariant {
    Udg,
    Kdg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pattern {
    HowOccurs,
    HowProduces,
    HowRelated,
    WhyImportant,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every derivation stage and print the derived facts.
    Derive {
        #[command(flatten)]
        inputs: Inputs,
        /// Print asserted facts too.
        #[arg(long)]
        all: bool,
        #[arg(long, value_enum, default_value = "facts")]
        format: FactFormat,
    },
    /// Print instance matches and spatial matches as JSON.
    Resolve {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Print joins, possible next events, chains and super-events as JSON.
    Link {
        #[command(flatten)]
        inputs: Inputs,
        /// Drop joins whose weaker confidence is below this level.
        #[arg(long, value_name = "LEVEL")]
        min_confidence: Option<Confidence>,
        /// Write the super-event facts to this file.
        #[arg(long, value_name = "FILE")]
        patch: Option<PathBuf>,
    },
    /// Extract the answer structure of a question pattern.
    Query {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum)]
        pattern: Pattern,
        /// First node of the question.
        #[arg(long)]
        x: String,
        /// Second node; every pattern but how-occurs needs it.
        #[arg(long)]
        y: Option<String>,
        /// Maximum number of edges in an ordering path.
        #[arg(long, default_value_t = DEFAULT_ORDERING_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: AnswerFormat,
    },
    /// Compare the engine with the rule program; exit 1 on a difference.
    Check {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Export the graph or the completed store.
    Export {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value = "dot")]
        format: ExportFormat,
        #[arg(long, value_enum, default_value = "kdg")]
        graph: GraphVariant,
    },
}

impl Command {
    fn inputs(&self) -> &Inputs {
        match self {
            Command::Derive { inputs, .. }
            | Command::Resolve { inputs }
            | Command::Link { inputs, .. }
            | Command::Query { inputs, .. }
            | Command::Check { inputs, .. }
            | Command::Export { inputs, .. } => inputs,
        }
    }
}

/// Why a command stopped.
enum Failure {
    Usage(String),
    Rejected(Error),
    CheckFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Rejected(e)
    }
}

fn error_code(e: &Error) -> &'static str {
    match e {
        Error::Parse(_) => "parse",
        Error::HierarchyCycle(_) => "hierarchy-cycle",
        Error::KdgCycle(_) => "kdg-cycle",
        Error::SubeventCycle(_) => "subevent-cycle",
        Error::UnknownNode(_) => "unknown-node",
        Error::NotAnEvent(_) => "not-an-event",
        Error::NotAnEntity(_) => "not-an-entity",
        Error::ChainTooShort(_) => "chain-too-short",
        Error::ConflictingParentage { .. } => "conflicting-parentage",
        Error::Program(_) => "program",
        Error::Io(_) => "io",
    }
}

fn verbosity() -> Level {
    std::env::var(VERBOSITY_VAR)
        .ok()
        .and_then(|v| Level::parse(&v))
        .unwrap_or(Level::Warn)
}

struct Session<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    verbosity: Level,
}

impl Session<'_> {
    fn diagnostics<'d>(&mut self, diags: impl IntoIterator<Item = &'d Diagnostic>) {
        for d in diags {
            if d.level <= self.verbosity {
                let _ = writeln!(self.err, "{d}");
            }
        }
    }

    fn print(&mut self, text: &str) -> Result<(), Failure> {
        self.out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(format!("cannot write output: {e}")))
    }

    fn json(&mut self, value: &serde_json::Value) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        self.print(&format!("{text}\n"))
    }
}

fn load(inputs: &Inputs) -> Result<KnowledgeStore, Failure> {
    let mut store = KnowledgeStore::new();
    for path in &inputs.files {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        parse_into(&mut store, &text, &path.display().to_string()).map_err(Error::from)?;
    }
    Ok(store)
}

fn run_command(cli: &Cli, s: &mut Session<'_>) -> Result<(), Failure> {
    let store = load(cli.command.inputs())?;
    let root = cli.root.as_deref();
    if let Command::Check { format, .. } = &cli.command {
        let report = crate::oracle::differential_check(&store, root)?;
        match format {
            ReportFormat::Text => s.print(&report.to_text())?,
            ReportFormat::Json => s.json(&report.to_json())?,
        }
        return if report.passes() { Ok(()) } else { Err(Failure::CheckFailed) };
    }

    let analysis: Analysis = pipeline::analyze(&store, root)?;
    s.diagnostics(&analysis.diagnostics);
    match &cli.command {
        Command::Derive { all, format, .. } => {
            let facts: Vec<_> = if *all {
                analysis.store.iter().collect()
            } else {
                analysis.store.derived().collect()
            };
            match format {
                FactFormat::Facts => s.print(&render_facts(facts))?,
                FactFormat::Json => s.json(&serde_json::to_value(facts).expect("facts serialize"))?,
            }
        }
        Command::Resolve { .. } => {
            let matches = analysis.matches();
            let (spatial, diags) = analysis.spatial(&matches);
            s.diagnostics(&diags);
            s.json(&serde_json::json!({
                "match_with": matches.report(),
                "spatially_match": spatial.report(),
            }))?;
        }
        Command::Link {
            min_confidence,
            patch,
            ..
        } => {
            let report = analysis.link(*min_confidence)?;
            s.diagnostics(&report.diagnostics);
            if let Some(path) = patch {
                std::fs::write(path, report.patch().to_fact_file())
                    .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            }
            s.json(&report.to_json())?;
        }
        Command::Query {
            pattern,
            x,
            y,
            cap,
            format,
            ..
        } => {
            let need_y = || {
                y.as_deref()
                    .ok_or_else(|| Failure::Usage("this pattern needs --y".to_owned()))
            };
            let answer = match pattern {
                Pattern::HowOccurs => query::how_occurs(&analysis.kdg, x)?,
                Pattern::HowProduces => {
                    let matches = analysis.matches();
                    query::how_produces(&analysis.kdg, &analysis.store, &matches, x, need_y()?)?
                }
                Pattern::HowRelated => query::how_related(&analysis.kdg, x, need_y()?, *cap)?,
                Pattern::WhyImportant => {
                    query::why_important(&analysis.kdg, &analysis.store, x, need_y()?, *cap)?
                }
            };
            match format {
                AnswerFormat::Json => s.json(&answer.to_json())?,
                AnswerFormat::Dot => s.print(&answer.to_dot())?,
            }
        }
        Command::Export { format, graph, .. } => {
            let (g, name) = match graph {
                GraphVariant::Udg => (&analysis.udg, "udg"),
                GraphVariant::Kdg => (&analysis.kdg, "kdg"),
            };
            match format {
                ExportFormat::Dot => s.print(&g.to_dot(name))?,
                ExportFormat::Json => s.json(&g.to_json())?,
                ExportFormat::Facts => s.print(&analysis.store.to_fact_file())?,
            }
        }
        Command::Check { .. } => unreachable!("handled above"),
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let mut session = Session {
        out,
        err,
        verbosity: verbosity(),
    };
    match run_command(&cli, &mut session) {
        Ok(()) => 0,
        Err(Failure::CheckFailed) => 1,
        Err(Failure::Rejected(e)) => {
            let _ = writeln!(session.err, "{}", Diagnostic::error(error_code(&e), e.to_string()));
            1
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(session.err, "{}", Diagnostic::error("usage", msg));
            2
        }
    }
}
