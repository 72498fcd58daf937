use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use contextuality::audit::corpus;
use contextuality::audit::table1::TABLE_EXTENSIONS;
use contextuality::audit::{fuzz_axiom, table1, theorem_chain, AuditOutcome, AxiomId, GenParams, Which};
use contextuality::deciders::{decide, decision_system, Extension, Status};
use contextuality::io::{self, BehaviorDoc};
use contextuality::model::Behavior;
use contextuality::transforms::{parse_pipeline, run_pipeline, Step};

const EXIT_CODES: &str = "\
Exit codes:
  0  success; for classify, noncontextual
  1  input, parse or budget error
  2  classify: contextual; audit: axiom violated; validate: violations found
  3  classify: undefined (the extension does not apply to the input)";

#[derive(Parser)]
#[command(name = "ctxaudit", version, about = "Decide and audit contextuality of finite behaviors", after_help = EXIT_CODES)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check a behavior file and list every problem found.
    Validate { file: PathBuf },
    /// Classify a behavior under one extension.
    #[command(after_help = EXIT_CODES)]
    Classify {
        file: PathBuf,
        /// ks, cbd1, cbd2, bcbd2, cbcbd2-strict, cbcbd2-lifted, dc, dnc or dccc.
        #[arg(long, short)]
        extension: String,
        /// Include the global assignment, coupling or Farkas certificate.
        #[arg(long)]
        witness: bool,
        /// Also write the linear system that was decided, in plain text.
        #[arg(long, value_name = "PATH")]
        emit_lp: Option<PathBuf>,
    },
    /// Apply a JSON pipeline of transformations to a behavior.
    Transform {
        file: PathBuf,
        pipeline: PathBuf,
        /// Write the result here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fuzz one axiom against one extension.
    Audit {
        #[arg(long, short)]
        extension: String,
        /// ks-compat, isomorphism, nestedness, coarsening, post-processing, joining,
        /// independence, independence-canonical, determinism, det-redundancy or relabeling.
        #[arg(long, short)]
        axiom: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rebuild the extension-by-axiom table.
    Table1 {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replay an impossibility chain step by step.
    Chain {
        /// thm2 or thm3.
        #[arg(long, default_value = "thm2")]
        which: String,
    },
    /// List or print the built-in example behaviors.
    Examples {
        #[arg(long, conflicts_with = "name")]
        list: bool,
        #[arg(long)]
        name: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(path: &Path) -> Result<Behavior> {
    io::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn validate(file: &Path, format: Format) -> Result<u8> {
    let violations = io::validate_json(&read(file)?).with_context(|| format!("in {}", file.display()))?;
    match format {
        Format::Json => {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            println!("{}", serde_json::json!({ "valid": list.is_empty(), "violations": list }));
        }
        Format::Text if violations.is_empty() => println!("valid"),
        Format::Text => violations.iter().for_each(|v| println!("{v}")),
    }
    Ok(if violations.is_empty() { 0 } else { 2 })
}

fn classify(file: &Path, ext: &str, witness: bool, emit_lp: Option<&Path>, format: Format) -> Result<u8> {
    let ext: Extension = ext.parse().map_err(anyhow::Error::msg)?;
    let b = load(file)?;
    let mut v = decide(&b, ext)?;
    if !witness {
        v = v.without_witness();
    }
    if let Some(path) = emit_lp {
        match decision_system(&b, ext)? {
            Some(sys) => fs::write(path, sys.to_text()).with_context(|| format!("cannot write {}", path.display()))?,
            None => bail!("{} is not decided by a linear system on this input", ext.label()),
        }
    }
    match format {
        Format::Json => println!("{}", v.to_json()),
        Format::Text => {
            match &v.reason {
                Some(r) => println!("{}: {} ({})", ext.label(), v.status, r.code()),
                None => println!("{}: {}", ext.label(), v.status),
            }
            if witness && v.witness.is_some() {
                println!("{}", serde_json::to_string_pretty(&v.witness).expect("witnesses serialize"));
            }
        }
    }
    Ok(match v.status {
        Status::Noncontextual => 0,
        Status::Contextual => 2,
        Status::Undefined => 3,
    })
}

/// Resolves `with_file` operands relative to the pipeline's directory.
fn resolve_operands(steps: &mut [Step], base: &Path) -> Result<()> {
    for step in steps {
        if let Step::Product { with, with_file, .. } = step {
            if let Some(f) = with_file.take() {
                let path = base.join(&f);
                let b = load(&path)?;
                *with = Some(BehaviorDoc::from_behavior(&b));
            }
        }
    }
    Ok(())
}

fn transform(file: &Path, pipeline: &Path, output: Option<&Path>) -> Result<u8> {
    let b = load(file)?;
    let mut steps = parse_pipeline(&read(pipeline)?).with_context(|| format!("in {}", pipeline.display()))?;
    resolve_operands(&mut steps, pipeline.parent().unwrap_or(Path::new(".")))?;
    let out = run_pipeline(&b, &steps)?;
    emit(&io::to_json(&out), output)?;
    Ok(0)
}

fn audit(ext: &str, axiom: &str, trials: usize, seed: u64, format: Format) -> Result<u8> {
    let ext: Extension = ext.parse().map_err(anyhow::Error::msg)?;
    let axiom: AxiomId = axiom.parse().map_err(anyhow::Error::msg)?;
    let r = fuzz_axiom(ext, axiom, trials, seed, &GenParams::default())?;
    match format {
        Format::Json => println!("{}", r.to_json()),
        Format::Text => print!("{}", r.render_text()),
    }
    Ok(if matches!(r.outcome, AuditOutcome::Violated { .. }) { 2 } else { 0 })
}

fn examples(list: bool, name: Option<&str>, output: Option<&Path>, format: Format) -> Result<u8> {
    match name {
        Some(n) => {
            let b = corpus::get(n).with_context(|| format!("no example named {n:?}; try --list"))?;
            emit(&io::to_json(&b), output)?;
        }
        None if list => match format {
            Format::Json => println!("{}", serde_json::json!(corpus::names())),
            Format::Text => corpus::names().iter().for_each(|n| println!("{n}")),
        },
        None => bail!("pass --list or --name NAME"),
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    let format = cli.format;
    match cli.command {
        Command::Validate { file } => validate(&file, format),
        Command::Classify { file, extension, witness, emit_lp } => {
            classify(&file, &extension, witness, emit_lp.as_deref(), format)
        }
        Command::Transform { file, pipeline, output } => transform(&file, &pipeline, output.as_deref()),
        Command::Audit { extension, axiom, trials, seed } => audit(&extension, &axiom, trials, seed, format),
        Command::Table1 { trials, seed } => {
            let t = table1(&TABLE_EXTENSIONS, trials, seed)?;
            match format {
                Format::Json => println!("{}", t.to_json()),
                Format::Text => print!("{}", t.render_text()),
            }
            Ok(0)
        }
        Command::Chain { which } => {
            let which: Which = which.parse().map_err(anyhow::Error::msg)?;
            let rep = theorem_chain(which)?;
            match format {
                Format::Json => println!("{}", rep.to_json()),
                Format::Text => print!("{}", rep.render_text()),
            }
            Ok(if rep.all_checks_pass() { 0 } else { 1 })
        }
        Command::Examples { list, name, output } => examples(list, name.as_deref(), output.as_deref(), format),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
