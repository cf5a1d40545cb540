//! `skic`: compile lambda programs to SKI combinators under an MDL objective.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use skic_core::explain::explain_term;
use skic_core::metrics::{symbolic_density, DEFAULT_C};
use skic_core::pipeline::{
    reports_csv, run_corpus, run_file, to_json, PipelineConfig, Target,
};
use skic_core::ski::{parse_gael_program, RuleSet};

const EXIT_INPUT: u8 = 1;
const EXIT_UNFAITHFUL: u8 = 3;

#[derive(Parser)]
#[command(name = "skic", version, about = "Lambda to SKI combinator compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CompressOpts {
    /// Weight of encoding length against semantic distance, in [0, 1]
    #[arg(long = "lambda", default_value_t = 0.99)]
    lambda: f64,

    /// Beam width of the rule-set search
    #[arg(long, default_value_t = 8)]
    beam: usize,

    /// Rule sets to consider, first is the baseline (naive, i, eta)
    #[arg(long, value_delimiter = ',', default_value = "naive,i,eta")]
    rules: Vec<RuleSet>,

    /// Reduction step budget per evaluation
    #[arg(long, default_value_t = skic_core::lambda_ir::DEFAULT_FUEL)]
    fuel: u64,

    /// Maximum number of probe tuples per comparison
    #[arg(long, default_value_t = 216)]
    probes: usize,

    /// Disable common-subterm extraction
    #[arg(long)]
    no_extract: bool,

    /// Constant of the density lower-bound diagnostic
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,

    /// Write a JSON report here, plus a CSV summary next to it
    #[arg(long)]
    report: Option<PathBuf>,
}

impl CompressOpts {
    fn config(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.mdl.lambda_weight = self.lambda;
        cfg.mdl.beam_width = self.beam;
        cfg.mdl.rule_sets = self.rules.clone();
        cfg.mdl.fuel = self.fuel;
        cfg.mdl.probes.max_tuples = self.probes;
        cfg.mdl.extraction_enabled = !self.no_extract;
        cfg.c = self.c;
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compress one source program
    Compress {
        file: PathBuf,

        #[command(flatten)]
        opts: CompressOpts,

        /// Targets to print (gael, lambda, pseudo)
        #[arg(long, value_delimiter = ',', default_value = "gael")]
        emit: Vec<Target>,
    },

    /// Compress every .lc file in a directory and summarize
    Corpus {
        dir: PathBuf,

        #[command(flatten)]
        opts: CompressOpts,
    },

    /// Explain a GAEL program in controlled English
    Explain { file: PathBuf },

    /// DEFLATE-based density of a file's bytes
    Density {
        file: PathBuf,

        #[arg(long, default_value_t = DEFAULT_C)]
        c: f64,
    },
}

fn write_reports(path: &Path, json: &str, csv: &str) -> Result<()> {
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    let csv_path = path.with_extension("csv");
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
    Ok(())
}

fn compress(file: &Path, opts: &CompressOpts, emit: &[Target]) -> Result<u8> {
    let cfg = opts.config();
    cfg.mdl.validate()?;
    let out = run_file(file, &cfg)?;
    for target in emit {
        let text = match target {
            Target::Gael => &out.artifacts.gael,
            Target::Lambda => &out.artifacts.lambda,
            Target::Pseudo => &out.artifacts.pseudo,
        };
        print!("{text}");
    }
    let r = &out.report;
    eprintln!(
        "{}: {} -> {} tokens, cr {:.4}, equivalence {}",
        r.program_id, r.p_tokens, r.s_tokens, r.cr, r.equivalence
    );
    if let Some(path) = &opts.report {
        write_reports(path, &to_json(r), &reports_csv([r])?)?;
    }
    Ok(if r.equivalence == "different" { EXIT_UNFAITHFUL } else { 0 })
}

fn corpus(dir: &Path, opts: &CompressOpts) -> Result<u8> {
    let cfg = opts.config();
    cfg.mdl.validate()?;
    let report = run_corpus(dir, &cfg)?;
    println!("{:<24} {:>6} {:>6} {:>8}  equivalence", "program", "p", "s", "cr");
    for e in &report.entries {
        match (&e.report, &e.error) {
            (Some(r), _) => println!(
                "{:<24} {:>6} {:>6} {:>8.4}  {}",
                r.program_id, r.p_tokens, r.s_tokens, r.cr, r.equivalence
            ),
            (None, Some(err)) => println!("{:<24} error: {err}", e.file),
            (None, None) => unreachable!("entry has a report or an error"),
        }
    }
    let a = &report.aggregates;
    println!(
        "programs {}  failed {}  mean cr {:.4}  median cr {:.4}  equal {:.1}%",
        a.programs,
        a.failed,
        a.mean_cr,
        a.median_cr,
        100.0 * a.equivalence_pass_rate
    );
    if let Some(path) = &opts.report {
        write_reports(path, &to_json(&report), &reports_csv(report.reports())?)?;
    }
    Ok(if report.reports().any(|r| r.equivalence == "different") {
        EXIT_UNFAITHFUL
    } else if a.failed > 0 {
        EXIT_INPUT
    } else {
        0
    })
}

fn explain(file: &Path) -> Result<u8> {
    let src = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let prog = parse_gael_program(&src)?;
    for (name, t) in &prog.defs {
        println!("-- {name}");
        print!("{}", explain_term(t).to_text());
    }
    if let Some(m) = &prog.main {
        println!("-- main");
        print!("{}", explain_term(m).to_text());
    }
    Ok(0)
}

fn density(file: &Path, c: f64) -> Result<u8> {
    let bytes = fs::read(file).with_context(|| format!("reading {}", file.display()))?;
    print!("{}", to_json(&symbolic_density(&bytes, c)?));
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compress { file, opts, emit } => compress(file, opts, emit),
        Command::Corpus { dir, opts } => corpus(dir, opts),
        Command::Explain { file } => explain(file),
        Command::Density { file, c } => density(file, *c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
