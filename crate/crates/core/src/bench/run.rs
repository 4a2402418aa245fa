use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{generate_puzzle, load_dataset, parse_size, score, EvalReport, OracleFormalizer, PuzzleTask, TaskResult};
use crate::agent::{run_pipeline, Formalizer, LlmClientConfig, LlmFormalizer, PipelineConfig};

/// Generated workload: task `i` uses seed `seed + i` and size
/// `sizes[i % sizes.len()]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    pub count: usize,
    pub sizes: Vec<String>,
}

#[derive(Clone, Debug)]
pub enum TaskSource {
    Dataset(PathBuf),
    Generated(GenSpec),
}

#[derive(Clone, Debug)]
pub enum FormalizerChoice {
    Oracle,
    Llm(LlmClientConfig),
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub source: TaskSource,
    pub formalizer: FormalizerChoice,
    pub concurrency: usize,
    /// Report path; per-task results go next to it as `<stem>.results.jsonl`.
    pub out: Option<PathBuf>,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] super::DatasetError),
    #[error("puzzle generation failed for task {index}: {message}")]
    Generation { index: usize, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no tasks to run")]
    Empty,
}

pub fn results_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    report.with_file_name(format!("{stem}.results.jsonl"))
}

/// Runs `f` over `items` on `threads` workers; `sink` receives each result on
/// the calling thread as soon as it is ready.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(usize, &T) -> R + Sync,
    mut sink: impl FnMut(usize, R),
) {
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..threads.max(1).min(items.len().max(1)) {
            let tx = tx.clone();
            let (next, f) = (&next, &f);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                if tx.send((i, f(i, item))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            sink(i, r);
        }
    });
}

fn load_tasks(config: &BenchConfig) -> Result<Vec<PuzzleTask>, BenchError> {
    match &config.source {
        TaskSource::Dataset(path) => Ok(load_dataset(path)?.0),
        TaskSource::Generated(spec) => {
            if spec.sizes.is_empty() {
                return Err(BenchError::Config("generator spec lists no sizes".into()));
            }
            let sizes = spec
                .sizes
                .iter()
                .map(|s| parse_size(s).ok_or_else(|| BenchError::Config(format!("bad size `{s}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            let jobs: Vec<(u64, usize, usize)> = (0..spec.count)
                .map(|i| {
                    let (n, f) = sizes[i % sizes.len()];
                    (spec.seed + i as u64, n, f)
                })
                .collect();
            let mut slots: Vec<Option<Result<PuzzleTask, String>>> = vec![None; jobs.len()];
            parallel_map(
                &jobs,
                config.concurrency,
                |_, &(seed, n, f)| generate_puzzle(seed, n, f).map(|p| p.to_task()).map_err(|e| e.to_string()),
                |i, r| slots[i] = Some(r),
            );
            slots
                .into_iter()
                .enumerate()
                .map(|(index, r)| {
                    r.expect("every job reports")
                        .map_err(|message| BenchError::Generation { index, message })
                })
                .collect()
        }
    }
}

/// Runs the pipeline over every task. Per-task results are appended to the
/// results file as they complete; the report is written at the end.
pub fn run_bench(config: &BenchConfig) -> Result<EvalReport, BenchError> {
    if config.concurrency == 0 {
        return Err(BenchError::Config("concurrency must be at least 1".into()));
    }
    if config.pipeline.max_attempts == 0 {
        return Err(BenchError::Config("max_attempts must be at least 1".into()));
    }
    let formalizer: Box<dyn Formalizer> = match &config.formalizer {
        FormalizerChoice::Oracle => Box::new(OracleFormalizer),
        FormalizerChoice::Llm(c) => {
            Box::new(LlmFormalizer::new(c.clone()).map_err(|e| BenchError::Config(e.to_string()))?)
        }
    };
    let started = Instant::now();
    let tasks = load_tasks(config)?;
    if tasks.is_empty() {
        return Err(BenchError::Empty);
    }
    let mut writer = match &config.out {
        Some(out) => {
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Some(BufWriter::new(File::create(results_path(out))?))
        }
        None => None,
    };

    let mut results: Vec<Option<TaskResult>> = vec![None; tasks.len()];
    let mut io_error = None;
    parallel_map(
        &tasks,
        config.concurrency,
        |_, task| {
            let mut pipeline = config.pipeline.clone();
            pipeline.format = task.format.clone();
            let r = run_pipeline(&task.puzzle, formalizer.as_ref(), &pipeline);
            TaskResult {
                id: task.id.clone(),
                size: task.size.clone(),
                status: r.status,
                attempts: r.attempts,
                predicted: r.solution,
                truth: task.truth.clone(),
            }
        },
        |i, r| {
            if let Some(w) = writer.as_mut() {
                let line = serde_json::to_string(&r).expect("task results serialize");
                if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                    io_error.get_or_insert(e);
                }
            }
            results[i] = Some(r);
        },
    );
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let results: Vec<TaskResult> = results.into_iter().map(|r| r.expect("every task reports")).collect();
    let mut report = score(&results).map_err(|_| BenchError::Empty)?;
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    if let Some(out) = &config.out {
        std::fs::write(out, serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    }
    Ok(report)
}
