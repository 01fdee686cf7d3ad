//! `cbd` — analyze contextuality in systems of finite random variables.
//!
//! Subcommands: `validate` (structural checks), `analyze` (no-signaling,
//! CH/Fine, identity coupling, agreement measure, quasi-coupling), and
//! `estimate` (build a system JSON from a trials CSV).
//!
//! Exit codes: 0 success, 1 I/O or internal error, 2 input validation
//! failure, 3 `--assert-noncontextual` failed.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use cbd_core::bell;
use cbd_core::coupling::{identity_coupling_exists, max_uniform_agreement};
use cbd_core::ingest::{estimate_system, parse_trials_csv, Design};
use cbd_core::quasi::quasi_coupling;
use cbd_core::system::{build_system, check_no_signaling, System, SystemSpec};

#[derive(Parser)]
#[command(name = "cbd", version, about = "Contextuality analysis for finite systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Section {
    Quasi,
    Agreement,
}

#[derive(Subcommand)]
enum Command {
    /// Check a system JSON file for structural validity.
    Validate { path: PathBuf },
    /// Run the full analysis pipeline on a system JSON file.
    Analyze {
        path: PathBuf,
        /// Report format.
        #[arg(long, value_enum, default_value = "text")]
        output: OutputFormat,
        /// Skip an expensive section (repeatable).
        #[arg(long, value_enum)]
        skip: Vec<Section>,
        /// Exit 3 unless an identity coupling exists.
        #[arg(long)]
        assert_noncontextual: bool,
    },
    /// Estimate a system from a trials CSV and a design file.
    Estimate {
        trials: PathBuf,
        #[arg(long)]
        design: PathBuf,
        /// Output path for the estimated system JSON.
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { path } => cmd_validate(&path),
        Command::Analyze {
            path,
            output,
            skip,
            assert_noncontextual,
        } => cmd_analyze(&path, output, &skip, assert_noncontextual),
        Command::Estimate { trials, design, out } => cmd_estimate(&trials, &design, &out),
    }
}

fn load_system(path: &PathBuf) -> anyhow::Result<Result<System, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let spec: SystemSpec = serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("cannot parse {}: {e}", path.display()))?;
    Ok(build_system(&spec).map_err(|e| e.to_string()))
}

fn cmd_validate(path: &PathBuf) -> anyhow::Result<ExitCode> {
    match load_system(path)? {
        Ok(sys) => {
            println!("ok: system {:?}", sys.name);
            println!(
                "  contents: {}, contexts: {}, identity classes: {}",
                sys.contents.len(),
                sys.contexts.len(),
                sys.classes.len()
            );
            for ctx in &sys.contexts {
                println!(
                    "  context {}: contents [{}], {} support tuples",
                    ctx.id,
                    ctx.contents.join(", "),
                    ctx.pmf.len()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(msg) => {
            eprintln!("invalid: {msg}");
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_analyze(
    path: &PathBuf,
    output: OutputFormat,
    skip: &[Section],
    assert_noncontextual: bool,
) -> anyhow::Result<ExitCode> {
    let sys = match load_system(path)? {
        Ok(sys) => sys,
        Err(msg) => {
            eprintln!("invalid: {msg}");
            return Ok(ExitCode::from(2));
        }
    };
    let started = Instant::now();

    let nosig = check_no_signaling(&sys);
    let bell_section = match bell::from_system(&sys) {
        Err(e) => report::bell_section(Err(e.to_string())),
        Ok(bs) => {
            let sel = bell::marginal_selectivity(&bs);
            let class = bell::classify(&bs);
            match bell::ch_fine(&bs) {
                Ok(ch) => report::bell_section(Ok((&sel, Some(&ch), class))),
                Err(_) => report::bell_section(Ok((&sel, None, class))),
            }
        }
    };
    let witness = identity_coupling_exists(&sys);
    let agreement = if skip.contains(&Section::Agreement) {
        None
    } else {
        Some(match max_uniform_agreement(&sys) {
            Ok(outcome) => report::agreement_section(Ok(&outcome)),
            Err(e) => report::agreement_section(Err(e.to_string())),
        })
    };
    let quasi = if skip.contains(&Section::Quasi) {
        None
    } else {
        Some(report::quasi_section(&quasi_coupling(&sys)))
    };

    let rep = report::AnalysisReport {
        system: sys.name.clone(),
        validation: "ok".into(),
        no_signaling: report::no_signaling_section(&nosig),
        bell: bell_section,
        identity: report::identity_section(&witness),
        agreement,
        quasi,
    };
    // timings go to stderr so the report itself stays byte-deterministic
    eprintln!("analyzed {} in {:?}", sys.name, started.elapsed());

    match output {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&rep)?),
        OutputFormat::Text => print!("{}", report::render_text(&rep, &sys)),
    }

    if assert_noncontextual && !rep.identity.exists {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_estimate(trials: &PathBuf, design: &PathBuf, out: &PathBuf) -> anyhow::Result<ExitCode> {
    let trial_text = std::fs::read_to_string(trials)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", trials.display()))?;
    let design_text = std::fs::read_to_string(design)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", design.display()))?;
    let design = match Design::from_json(&design_text) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("invalid design: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let records = match parse_trials_csv(&trial_text) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("invalid trials: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let (system, counts) = match estimate_system(&records, &design) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("estimation failed: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    for c in &counts {
        println!("context {}: {} trials", c.context, c.total);
        for (values, n) in &c.counts {
            println!("  ({}) x {}", values.join(","), n);
        }
    }
    let spec = system_to_spec(&system);
    std::fs::write(out, serde_json::to_string_pretty(&spec)? + "\n")
        .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn system_to_spec(sys: &System) -> SystemSpec {
    use cbd_core::system::{ContentSpec, ContextSpec, PmfEntry};
    SystemSpec {
        name: sys.name.clone(),
        contents: sys
            .contents
            .iter()
            .map(|c| ContentSpec {
                id: c.id.clone(),
                outcomes: c.outcomes.clone(),
            })
            .collect(),
        contexts: sys
            .contexts
            .iter()
            .map(|ctx| ContextSpec {
                id: ctx.id.clone(),
                contents: ctx.contents.clone(),
                pmf: ctx
                    .pmf
                    .iter()
                    .filter(|(_, m)| !m.is_zero())
                    .map(|(values, m)| PmfEntry {
                        values: values.clone(),
                        p: m.clone(),
                    })
                    .collect(),
            })
            .collect(),
        identity_classes: None,
    }
}
