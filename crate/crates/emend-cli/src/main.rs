//! `emend` — compile and execute amendatory legal texts against a corpus
//! file.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (bad corpus, failed
//! run, unknown document…), 3 compile finished but left residual
//! instructions.

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use emend_core::compiler::{Compiler, SourceUnit};
use emend_core::corpus::{DocId, DocumentVersion, VersionStore};
use emend_core::{diff_versions, execute, parse_program, print_program, PatternSet};
use emend_cli::{format, report};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "emend", version, about = "Consolidation engine for amendatory legal texts")]
struct Cli {
    /// Corpus file; defaults to $EMEND_CORPUS.
    #[arg(long, global = true, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Pattern table replacing the built-in English one.
    #[arg(long, global = true, value_name = "FILE")]
    patterns: Option<PathBuf>,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Create an empty corpus file.
    Init,
    /// Add the document versions of a JSON file to the corpus.
    Ingest {
        /// File in the corpus format (its documents are merged in).
        file: PathBuf,
    },
    /// Compile an amending act from the corpus into a change program.
    Compile {
        /// Act unit, dated ("fr/loi/2022-1348/1/20221025") or plain.
        uri: String,
        /// Publication date when the uri is undated; defaults to the act's
        /// latest stored version.
        #[arg(long)]
        date: Option<NaiveDate>,
        /// Write the program here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Execute a change program file against the corpus.
    Run {
        file: PathBuf,
        /// Execute but discard the resulting versions.
        #[arg(long)]
        dry_run: bool,
    },
    /// Print the version of a document in force at a date.
    Show {
        uri: String,
        #[arg(long)]
        date: NaiveDate,
    },
    /// List a document's versions.
    Timeline { uri: String },
    /// Compare the versions of a document in force at two dates.
    Diff {
        uri: String,
        #[arg(long)]
        from: NaiveDate,
        #[arg(long)]
        to: NaiveDate,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version land here too; only real usage errors are 1.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn corpus_path(cli: &Cli) -> Result<PathBuf> {
    cli.corpus
        .clone()
        .or_else(|| std::env::var_os("EMEND_CORPUS").map(PathBuf::from))
        .ok_or_else(|| anyhow!("no corpus file: pass --corpus or set EMEND_CORPUS"))
}

fn load_compiler(cli: &Cli) -> Result<Compiler> {
    match &cli.patterns {
        None => Ok(Compiler::english()),
        Some(path) => {
            let data = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let pats = PatternSet::from_json(&data)
                .with_context(|| format!("loading pattern table {}", path.display()))?;
            Ok(Compiler::new(pats))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let corpus = corpus_path(&cli)?;
    match &cli.cmd {
        Cmd::Init => init(&corpus),
        Cmd::Ingest { file } => ingest(&corpus, file),
        Cmd::Compile { uri, date, out } => compile(&cli, &corpus, uri, *date, out.as_deref()),
        Cmd::Run { file, dry_run } => run_program(&cli, &corpus, file, *dry_run),
        Cmd::Show { uri, date } => show(&cli, &corpus, uri, *date),
        Cmd::Timeline { uri } => timeline(&cli, &corpus, uri),
        Cmd::Diff { uri, from, to } => diff(&cli, &corpus, uri, *from, *to),
    }
}

fn init(corpus: &Path) -> Result<ExitCode> {
    if corpus.exists() {
        bail!("{} already exists", corpus.display());
    }
    format::save_store(corpus, &VersionStore::default())?;
    Ok(ExitCode::SUCCESS)
}

fn ingest(corpus: &Path, file: &Path) -> Result<ExitCode> {
    let mut store = format::load_store(corpus)?;
    let incoming = format::load_store(file)?;
    let mut added = 0usize;
    for doc in incoming.documents() {
        for version in incoming.versions(doc)? {
            store.add_version(version.clone())?;
            added += 1;
        }
    }
    format::save_store(corpus, &store)?;
    eprintln!("added {added} version(s)");
    Ok(ExitCode::SUCCESS)
}

/// Picks the act version to compile: a dated uri names it exactly, an undated
/// one takes `--date` or falls back to the latest stored version.
fn pick_source<'s>(
    store: &'s VersionStore,
    uri: &str,
    date: Option<NaiveDate>,
) -> Result<&'s DocumentVersion> {
    let id = DocId::parse(uri)?;
    match (id.version_date, date) {
        (Some(at), _) | (None, Some(at)) => Ok(store.get_version(&id.versionless(), at)?),
        (None, None) => {
            let versions = store.versions(&id)?;
            versions.last().ok_or_else(|| anyhow!("{id} has no versions"))
        }
    }
}

fn compile(
    cli: &Cli,
    corpus: &Path,
    uri: &str,
    date: Option<NaiveDate>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let store = format::load_store(corpus)?;
    let source = pick_source(&store, uri, date)?;
    let compiler = load_compiler(cli)?;
    let unit = SourceUnit::from_version(source);
    let (program, coverage) = compiler.compile(&unit)?;
    let text = print_program(&program);

    if let Some(path) = out {
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    if cli.json {
        let payload = serde_json::json!({
            "program": text,
            "coverage": report::coverage_json(&coverage),
        });
        println!("{payload:#}");
    } else {
        if out.is_none() {
            print!("{text}");
        }
        eprint!("{}", report::coverage_human(&coverage));
    }
    if coverage.residuals.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

fn run_program(cli: &Cli, corpus: &Path, file: &Path, dry_run: bool) -> Result<ExitCode> {
    let text =
        std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let program = parse_program(&text).map_err(|e| anyhow!("{}: {e}", file.display()))?;
    let mut store = format::load_store(corpus)?;
    let report = execute(&program, &mut store)?;
    if report.committed && !dry_run {
        format::save_store(corpus, &store)?;
    }
    if cli.json {
        println!("{:#}", report::execution_json(&report));
    } else {
        eprint!("{}", report::execution_human(&report));
    }
    if report.committed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn show(cli: &Cli, corpus: &Path, uri: &str, date: NaiveDate) -> Result<ExitCode> {
    let store = format::load_store(corpus)?;
    let id = DocId::parse(uri)?;
    let version = store.get_version(&id, date)?;
    if cli.json {
        println!("{:#}", report::version_json(version));
    } else {
        print!("{}", report::version_human(version));
    }
    Ok(ExitCode::SUCCESS)
}

fn timeline(cli: &Cli, corpus: &Path, uri: &str) -> Result<ExitCode> {
    let store = format::load_store(corpus)?;
    let id = DocId::parse(uri)?;
    let versions = store.versions(&id)?;
    if cli.json {
        println!("{:#}", report::timeline_json(versions));
    } else {
        print!("{}", report::timeline_human(versions));
    }
    Ok(ExitCode::SUCCESS)
}

fn diff(cli: &Cli, corpus: &Path, uri: &str, from: NaiveDate, to: NaiveDate) -> Result<ExitCode> {
    let store = format::load_store(corpus)?;
    let id = DocId::parse(uri)?;
    let a = store.get_version(&id, from)?;
    let b = store.get_version(&id, to)?;
    let entries = diff_versions(a, b);
    if cli.json {
        println!("{:#}", report::diff_json(&entries));
    } else {
        print!("{}", report::diff_human(&entries));
    }
    Ok(ExitCode::SUCCESS)
}
