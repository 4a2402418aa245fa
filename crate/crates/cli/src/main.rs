use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use logic_forge::agent::{format_output, LlmClientConfig, OutputFormat, PipelineConfig};
use logic_forge::bench::{
    generate_puzzle, parse_size, render_dsl, results_path, run_bench, BenchConfig, FormalizerChoice,
    GenSpec, TaskSource,
};
use logic_forge::cemit::emit;
use logic_forge::frontend::{compile, CheckedProgram, SourceText};
use logic_forge::model::{decode, lower, ConstraintModel};
use logic_forge::solver::{find_second, solve_traced, Budget, SolveError};
use serde_json::json;

#[derive(Parser)]
#[command(name = "logic-forge", version, about = "Logic.py solver, C harness emitter and puzzle benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct BudgetArgs {
    /// Maximum search decisions.
    #[arg(long, default_value_t = 10_000_000)]
    max_decisions: u64,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
}

impl BudgetArgs {
    fn budget(self) -> Budget {
        Budget {
            max_decisions: self.max_decisions,
            max_time: Duration::from_secs_f64(self.timeout),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve a Logic.py program and print the solution table as JSON.
    Solve {
        dsl: PathBuf,
        /// Write the search trace to stderr.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Emit a CBMC-style C harness for a Logic.py program.
    EmitC {
        dsl: PathBuf,
        /// Output file (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate puzzles with unique solutions.
    Gen {
        #[arg(long)]
        seed: u64,
        /// Entities x features, e.g. 4x4.
        #[arg(long)]
        size: String,
        /// Number of puzzles (seeds seed, seed+1, ...).
        #[arg(short = 'n', default_value_t = 1)]
        count: usize,
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the pipeline over a dataset or generated puzzles and score it.
    Bench {
        /// Dataset JSONL file.
        #[arg(long, conflicts_with = "gen_spec", required_unless_present = "gen_spec")]
        dataset: Option<PathBuf>,
        /// JSON file `{"seed": S, "count": K, "sizes": ["3x3", ...]}`.
        #[arg(long)]
        gen_spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormalizerArg::Oracle)]
        formalizer: FormalizerArg,
        #[arg(long, default_value_t = 8)]
        concurrency: usize,
        /// Report path; per-task results go to `<stem>.results.jsonl` beside it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        max_attempts: u32,
        /// Reject formalizations whose solution is not unique.
        #[arg(long)]
        ambiguity_check: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Report whether a program has more than one solution table.
    CheckAmbiguity {
        dsl: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormalizerArg {
    Oracle,
    Llm,
}

fn load(path: &Path) -> Result<(CheckedProgram, ConstraintModel)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let program = compile(&SourceText::new(path.display().to_string(), text))?;
    let model = lower(&program)?;
    Ok((program, model))
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn budget_error(e: SolveError) -> Result<ExitCode> {
    match e {
        SolveError::BudgetExceeded { stats } => {
            print_json(&json!({"status": "BudgetExceeded", "stats": stats}))?;
            Ok(ExitCode::from(3))
        }
        e => Err(e.into()),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { dsl, trace, budget } => {
            let (_, model) = load(&dsl)?;
            let mut stderr = std::io::stderr().lock();
            let sink: Option<&mut dyn Write> = if trace { Some(&mut stderr) } else { None };
            let out = match solve_traced(&model, budget.budget(), sink) {
                Ok(out) => out,
                Err(e) => return budget_error(e),
            };
            match out.assignment {
                Some(a) => {
                    let table = decode(&model, &a.vars)?;
                    let doc = format_output(&table, &OutputFormat::default())?;
                    print_json(&json!({"status": out.status, "solution": doc, "stats": out.stats}))?;
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    print_json(&json!({"status": out.status, "stats": out.stats}))?;
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::EmitC { dsl, output } => {
            let (program, _) = load(&dsl)?;
            let harness = emit(&program)?;
            match output {
                Some(path) => std::fs::write(&path, &harness.text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().write_all(harness.text.as_bytes())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen { seed, size, count, output } => {
            let Some((e, f)) = parse_size(&size) else {
                bail!("size must look like 4x4, got `{size}`");
            };
            std::fs::create_dir_all(&output)?;
            let mut dataset = String::new();
            for i in 0..count {
                let inst = generate_puzzle(seed + i as u64, e, f)?;
                std::fs::write(output.join(format!("{}.json", inst.id)), serde_json::to_string_pretty(&inst)? + "\n")?;
                std::fs::write(output.join(format!("{}.py", inst.id)), render_dsl(&inst).text)?;
                dataset.push_str(&serde_json::to_string(&inst.to_task())?);
                dataset.push('\n');
                eprintln!("{}: {} clues", inst.id, inst.clues.len());
            }
            std::fs::write(output.join("dataset.jsonl"), dataset)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            dataset,
            gen_spec,
            formalizer,
            concurrency,
            out,
            max_attempts,
            ambiguity_check,
            budget,
        } => {
            let source = match (dataset, gen_spec) {
                (Some(path), _) => TaskSource::Dataset(path),
                (None, Some(spec)) => {
                    let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
                    let spec: GenSpec = serde_json::from_str(&text).context("parsing generator spec")?;
                    TaskSource::Generated(spec)
                }
                (None, None) => bail!("one of --dataset or --gen-spec is required"),
            };
            let formalizer = match formalizer {
                FormalizerArg::Oracle => FormalizerChoice::Oracle,
                FormalizerArg::Llm => FormalizerChoice::Llm(LlmClientConfig::from_env().map_err(anyhow::Error::msg)?),
            };
            let config = BenchConfig {
                source,
                formalizer,
                concurrency,
                out: out.clone(),
                pipeline: PipelineConfig {
                    max_attempts,
                    budget: budget.budget(),
                    ambiguity_check,
                    format: OutputFormat::default(),
                },
            };
            let report = run_bench(&config)?;
            let mut summary = json!({
                "tasks": report.tasks,
                "puzzle_accuracy": report.puzzle_accuracy,
                "cell_accuracy": report.cell_accuracy,
                "easy": report.easy,
                "hard": report.hard,
                "statuses": report.statuses,
                "wall_clock_secs": report.wall_clock_secs,
            });
            if let Some(out) = &out {
                summary["report"] = json!(out.display().to_string());
                summary["results"] = json!(results_path(out).display().to_string());
            }
            print_json(&summary)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckAmbiguity { dsl, budget } => {
            let (_, model) = load(&dsl)?;
            let first = match solve_traced(&model, budget.budget(), None) {
                Ok(out) => out,
                Err(e) => return budget_error(e),
            };
            let Some(a) = first.assignment else {
                print_json(&json!({"status": "Unsat"}))?;
                return Ok(ExitCode::from(1));
            };
            let report = match find_second(&model, &a, budget.budget()) {
                Ok(r) => r,
                Err(e) => return budget_error(e),
            };
            let table = |vars: &[i64]| -> Result<serde_json::Value> {
                Ok(format_output(&decode(&model, vars)?, &OutputFormat::default())?)
            };
            match report.second {
                None => {
                    print_json(&json!({"status": "Unique", "solution": table(&a.vars)?}))?;
                    Ok(ExitCode::SUCCESS)
                }
                Some(b) => {
                    print_json(&json!({
                        "status": "Ambiguous",
                        "first": table(&a.vars)?,
                        "second": table(&b.vars)?,
                    }))?;
                    Ok(ExitCode::from(2))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(4)
        }
    }
}
