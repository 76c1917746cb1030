//! Command-line front end.
//!
//! `refine`  writes every flat model of a specification plus a manifest;
//! `check`   refines in memory and proves each model solution-equivalent
//!           to the specification by exhaustive enumeration;
//! `solve`   enumerates the specification's solutions directly.
//!
//! Exit codes: 1 parse/validate/type error, 2 refinement error,
//! 3 equivalence check failure, 4 solution space too large.

use clap::{Args, Parser, Subcommand, ValueEnum};
use refine::ast::Expr;
use refine::diag::OracleError;
use refine::emit::print_model;
use refine::oracle;
use refine::parser::{parse_expr_text, parse_param_text};
use refine::pipeline::{self, PipelineError, PipelineOptions};
use refine::rep::RepMode;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "refine", version, about = "Refines abstract constraint specifications into flat int/bool matrix models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Specification file
    spec: PathBuf,
    /// Parameter binding `name=expr` (repeatable)
    #[arg(long = "param", value_name = "NAME=EXPR")]
    params: Vec<String>,
    /// File of `letting name be expr` parameter bindings
    #[arg(long = "param-file", value_name = "FILE")]
    param_file: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Keep at most this many models
    #[arg(long, default_value_t = 64)]
    max_models: usize,
    /// Abort after this many rewrite steps
    #[arg(long, default_value_t = 100_000)]
    max_steps: u64,
    /// Choose representations per constraint (with channelling) instead of
    /// one per variable
    #[arg(long)]
    per_constraint_reps: bool,
    /// Consider every admissible representation, not just the preferred set
    #[arg(long)]
    all_reps: bool,
    /// Keep loop-invariant helper constraints inside their quantifiers
    #[arg(long)]
    no_hoist: bool,
    /// Print the rewrite rule trace of each model
    #[arg(long)]
    trace: bool,
    /// What an undefined constraint evaluation means for a candidate
    /// assignment on the abstract side
    #[arg(long, value_enum, default_value_t = UndefArg::Exclude)]
    undef: UndefArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum UndefArg {
    /// Exclude the candidate (treat the constraint as unsatisfied)
    Exclude,
    /// Abort with the evaluation error
    Error,
}

impl From<UndefArg> for oracle::UndefPolicy {
    fn from(a: UndefArg) -> Self {
        match a {
            UndefArg::Exclude => oracle::UndefPolicy::Exclude,
            UndefArg::Error => oracle::UndefPolicy::Error,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write all flat models of a specification to a directory
    Refine {
        #[command(flatten)]
        args: RefineArgs,
        /// Output directory for model files and the manifest
        #[arg(long, default_value = "models")]
        out: PathBuf,
    },
    /// Refine and prove each model equivalent to the specification
    Check {
        #[command(flatten)]
        args: RefineArgs,
    },
    /// Refine, solve the first model, and print the decoded solutions
    Solve {
        #[command(flatten)]
        args: RefineArgs,
    },
}

fn parse_params(common: &CommonArgs) -> Result<Vec<(String, Expr)>, String> {
    let mut params = Vec::new();
    if let Some(pf) = &common.param_file {
        let text = std::fs::read_to_string(pf)
            .map_err(|e| format!("cannot read {}: {e}", pf.display()))?;
        params.extend(parse_param_text(&text).map_err(|d| d.to_string())?);
    }
    for p in &common.params {
        let (name, expr) = p
            .split_once('=')
            .ok_or_else(|| format!("malformed --param `{p}`, expected NAME=EXPR"))?;
        let e = parse_expr_text(expr).map_err(|d| d.to_string())?;
        params.push((name.trim().to_string(), e));
    }
    Ok(params)
}

fn options(args: &RefineArgs) -> PipelineOptions {
    PipelineOptions {
        rep_mode: if args.per_constraint_reps {
            RepMode::PerConstraint
        } else {
            RepMode::SingleRep
        },
        all_reps: args.all_reps,
        hoist: !args.no_hoist,
        max_steps: args.max_steps,
        max_models: args.max_models,
    }
}

const EXIT_FRONT: u8 = 1;
const EXIT_REFINE: u8 = 2;
const EXIT_CHECK: u8 = 3;
const EXIT_TOO_LARGE: u8 = 4;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn run_pipeline(
    args: &RefineArgs,
) -> Result<pipeline::PipelineOutput, ExitCode> {
    let source = std::fs::read_to_string(&args.common.spec)
        .map_err(|e| fail(EXIT_FRONT, format!("cannot read {}: {e}", args.common.spec.display())))?;
    let params = parse_params(&args.common).map_err(|m| fail(EXIT_FRONT, m))?;
    pipeline::refine_source(&source, &params, &options(args)).map_err(|e| match e {
        PipelineError::Front(d) => fail(EXIT_FRONT, d),
        PipelineError::Refine(r) => fail(EXIT_REFINE, r),
    })
}

fn cmd_refine(args: RefineArgs, out_dir: PathBuf) -> ExitCode {
    let out = match run_pipeline(&args) {
        Ok(o) => o,
        Err(code) => return code,
    };
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        return fail(EXIT_REFINE, format!("cannot create {}: {e}", out_dir.display()));
    }
    let mut manifest = format!("spec-hash: {}\n", out.spec_hash);
    for (i, fm) in out.models.iter().enumerate() {
        let file = format!("model_{:04}.eprime", i + 1);
        if let Err(e) = std::fs::write(out_dir.join(&file), print_model(fm)) {
            return fail(EXIT_REFINE, format!("cannot write {file}: {e}"));
        }
        manifest.push_str(&format!(
            "{file} | reps: {} | steps: {}\n",
            if fm.rep_summary.is_empty() { "-".to_string() } else { fm.rep_summary.join(" ") },
            fm.rule_trace.len()
        ));
        if args.trace {
            println!("{file}: {}", fm.rule_trace.join(","));
        }
    }
    if let Err(e) = std::fs::write(out_dir.join("manifest.txt"), manifest) {
        return fail(EXIT_REFINE, format!("cannot write manifest: {e}"));
    }
    println!("wrote {} model(s) to {}", out.models.len(), out_dir.display());
    ExitCode::SUCCESS
}

fn cmd_check(args: RefineArgs) -> ExitCode {
    let out = match run_pipeline(&args) {
        Ok(o) => o,
        Err(code) => return code,
    };
    let mut failures = 0usize;
    for (i, fm) in out.models.iter().enumerate() {
        let label = format!("model_{:04}", i + 1);
        if args.trace {
            println!("{label}: {}", fm.rule_trace.join(","));
        }
        match oracle::check_equivalence_with(&out.spec, fm, args.undef.into()) {
            Ok(r) if r.equivalent => println!(
                "{label}: PASS ({} = {}, reps: {})",
                r.abstract_solutions,
                r.flat_solutions,
                if fm.rep_summary.is_empty() { "-".to_string() } else { fm.rep_summary.join(" ") }
            ),
            Ok(r) => {
                println!("{label}: FAIL ({})", r.failure_summary());
                failures += 1;
            }
            Err(OracleError::TooLarge(m)) => return fail(EXIT_TOO_LARGE, m),
            Err(e) => return fail(EXIT_CHECK, e),
        }
    }
    if failures > 0 {
        return fail(EXIT_CHECK, format!("{failures} model(s) failed the equivalence check"));
    }
    println!("all {} model(s) equivalent", out.models.len());
    ExitCode::SUCCESS
}

fn cmd_solve(args: RefineArgs) -> ExitCode {
    let out = match run_pipeline(&args) {
        Ok(o) => o,
        Err(code) => return code,
    };
    let fm = match out.models.first() {
        Some(fm) => fm,
        None => return fail(EXIT_REFINE, "refinement produced no models"),
    };
    let result = oracle::tags_from_summary(&fm.rep_summary).and_then(|tags| {
        let flat = oracle::enumerate_solutions(&fm.spec)?;
        let mut decoded = std::collections::BTreeSet::new();
        for f in &flat {
            decoded.insert(oracle::decode_solution(&out.spec, &tags, f)?);
        }
        Ok(decoded)
    });
    match result {
        Ok(sols) => {
            for s in &sols {
                let line: Vec<String> = s
                    .iter()
                    .map(|(n, v)| format!("{n} = {}", oracle::format_value(v)))
                    .collect();
                println!("{}", line.join(", "));
            }
            println!("{} solution(s)", sols.len());
            ExitCode::SUCCESS
        }
        Err(OracleError::TooLarge(m)) => fail(EXIT_TOO_LARGE, m),
        Err(e) => fail(EXIT_CHECK, e),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Refine { args, out } => cmd_refine(args, out),
        Command::Check { args } => cmd_check(args),
        Command::Solve { args } => cmd_solve(args),
    }
}
