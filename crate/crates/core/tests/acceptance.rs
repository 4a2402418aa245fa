//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are printed even when everything passes.

use std::sync::Arc;
use std::time::{Duration, Instant};

use logic_forge::agent::{
    run_pipeline, Fault, FaultInjector, PipelineConfig, PipelineStatus, ReplayFormalizer,
};
use logic_forge::bench::{
    generate_puzzle, paper_instance, render_dsl, run_bench, score, BenchConfig, FormalizerChoice,
    GenSpec, OracleFormalizer, PuzzleInstance, TaskResult, TaskSource,
};
use logic_forge::cemit::emit;
use logic_forge::frontend::{check, compile, parse, pretty, SourceText, Stmt};
use logic_forge::model::{decode, lower, Cell, ConstraintModel, SolutionTable};
use logic_forge::solver::{brute_force, find_second, solve, Budget, SolveStatus, BRUTE_FORCE_CAP};

const PAPER_DSL: &str = include_str!("fixtures/paper_puzzle.py");
const FIG3_FIG4: &str = include_str!("fixtures/fig3_fig4.py");
const FIG3_FIG4_C: &str = include_str!("fixtures/fig3_fig4.c");
const TRANSCRIPT: &str = include_str!("fixtures/paper_transcript.jsonl");
const TRANSCRIPT_RESULT: &str = include_str!("fixtures/paper_transcript.result.json");

const C1_LIMIT: Duration = Duration::from_secs(1);
const C2_LIMIT: Duration = Duration::from_secs(60);
const C2_PUZZLES: usize = 200;
const C7_LIMIT: Duration = Duration::from_secs(120);
const C7_PUZZLES: usize = 100;
const SHAPES: &[&str] = &["2x3", "2x4", "3x2", "3x3", "3x4", "4x2", "4x3", "4x4"];
const SEED: u64 = 20_240_000;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn model_of(src: &SourceText) -> Result<ConstraintModel, String> {
    let program = compile(src).map_err(|e| e.to_string())?;
    lower(&program).map_err(|e| e.to_string())
}

fn table_one() -> SolutionTable {
    let row = |h: i64, n: &str, o: &str, b: &str, p: &str| -> Vec<Cell> {
        vec![Cell::Int(h), n.into(), o.into(), b.into(), p.into()]
    };
    SolutionTable {
        columns: ["house", "name", "occupation", "book", "phone"].map(String::from).to_vec(),
        rows: vec![
            row(1, "alice", "engineer", "romance", "google pixel 6"),
            row(2, "peter", "artist", "fantasy", "samsung galaxy s21"),
            row(3, "eric", "teacher", "science fiction", "iphone 13"),
            row(4, "arnold", "doctor", "mystery", "oneplus 9"),
        ],
        position_column: Some("house".into()),
    }
}

/// Solves and reports (status, decoded table, second table exists).
fn solve_fully(model: &ConstraintModel) -> Result<(SolveStatus, Option<SolutionTable>, bool), String> {
    let out = solve(model, Budget::default()).map_err(|e| e.to_string())?;
    let Some(a) = out.assignment else {
        return Ok((out.status, None, false));
    };
    let table = decode(model, &a.vars).map_err(|e| e.to_string())?;
    let second = find_second(model, &a, Budget::default()).map_err(|e| e.to_string())?;
    Ok((out.status, Some(table), second.second.is_some()))
}

fn generated(count: usize, seed: u64) -> Result<Vec<PuzzleInstance>, String> {
    (0..count)
        .map(|i| {
            let (e, f) = logic_forge::bench::parse_size(SHAPES[i % SHAPES.len()]).unwrap();
            generate_puzzle(seed + i as u64, e, f).map_err(|err| format!("generation {i}: {err}"))
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let inst = paper_instance();
    let sources = [
        ("hand-written DSL", SourceText::new("paper_puzzle.py", PAPER_DSL)),
        ("PuzzleInstance", render_dsl(&inst)),
    ];
    for (label, src) in &sources {
        let model = model_of(src)?;
        let (status, table, ambiguous) = solve_fully(&model)?;
        ensure!(status == SolveStatus::Sat, "{label}: {status:?}");
        ensure!(table.as_ref() == Some(&table_one()), "{label}: table differs: {table:?}");
        ensure!(!ambiguous, "{label}: find_second found another table");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < C1_LIMIT, "took {elapsed:?}, limit {C1_LIMIT:?}");
    Ok(format!("Table 1 from both encodings, unique, {:.0} ms", elapsed.as_secs_f64() * 1e3))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let puzzles = generated(C2_PUZZLES, SEED)?;
    let (mut checked, mut ambiguous_variants) = (0, 0);
    for p in &puzzles {
        // the puzzle itself and an under-constrained variant without its last clue
        let mut fewer = p.clone();
        fewer.clues.pop();
        for inst in [p, &fewer] {
            let model = model_of(&render_dsl(inst))?;
            let bf = brute_force(&model, BRUTE_FORCE_CAP).map_err(|e| format!("{}: {e}", inst.id))?;
            let (status, table, ambiguous) = solve_fully(&model)?;
            ensure!(
                (status == SolveStatus::Sat) == !bf.solutions.is_empty(),
                "{}: solver {status:?}, brute force {} solutions",
                inst.id,
                bf.solutions.len()
            );
            ensure!(ambiguous == (bf.solutions.len() > 1), "{}: ambiguity disagrees", inst.id);
            let bf_tables: Vec<SolutionTable> = bf
                .solutions
                .iter()
                .map(|a| decode(&model, &a.vars).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            if let Some(t) = &table {
                ensure!(bf_tables.contains(t), "{}: solver table not among brute-force tables", inst.id);
            }
            if std::ptr::eq(inst, p) {
                ensure!(bf_tables == [p.truth.clone()], "{}: not uniquely the truth", inst.id);
            } else {
                ambiguous_variants += ambiguous as usize;
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < C2_LIMIT, "took {elapsed:?}, limit {C2_LIMIT:?}");
    Ok(format!(
        "{checked} programs ({C2_PUZZLES} puzzles + clue-dropped variants, {ambiguous_variants} ambiguous) agree with brute force, {:.1} s",
        elapsed.as_secs_f64()
    ))
}

fn criterion_3() -> Outcome {
    let inst = paper_instance();
    let config = PipelineConfig {
        format: inst.to_task().format,
        ..PipelineConfig::default()
    };

    // (a) a clue turned into a contradiction: Unsat, then recovery
    let contradict = |src: &str| src.replace("  assert c2_a.house == 2\n", "  assert c2_a.house == 2\n  assert c2_a.house != 2\n");
    let (ds, v) = logic_forge::bench::render_dsl_parts(4, &inst.features, &inst.clues);
    let broken = SourceText::new("v.py", contradict(&v.text));
    ensure!(broken.text != v.text, "mutation did not apply");
    let model = model_of(&logic_forge::agent::merge_sources(&ds, &broken))?;
    let status = solve(&model, Budget::default()).map_err(|e| e.to_string())?.status;
    ensure!(status == SolveStatus::Unsat, "contradiction solved as {status:?}");
    let f = FaultInjector::first(OracleFormalizer, 1, Fault::Rewrite(Arc::new(contradict)));
    let r = run_pipeline(&inst.text, &f, &config);
    ensure!(
        r.status == PipelineStatus::Solved && r.attempts == 2,
        "(a) fault-then-correct: {:?} after {}",
        r.status,
        r.attempts
    );

    // (b) unparseable every time
    let f = FaultInjector::always(OracleFormalizer, Fault::Garbage);
    let r = run_pipeline(&inst.text, &f, &config);
    ensure!(
        r.status == PipelineStatus::FailedSyntax && r.attempts == config.max_attempts,
        "(b) {:?} after {}",
        r.status,
        r.attempts
    );

    // (c) dropping a clue of a locally minimal puzzle, ambiguity check on
    let g = generate_puzzle(SEED, 4, 4).map_err(|e| e.to_string())?;
    let drop_first = |src: &str| -> String {
        src.lines()
            .filter(|l| !l.contains("c1_") && !l.starts_with("  # Clue 1:"))
            .map(|l| format!("{l}\n"))
            .collect()
    };
    let f = FaultInjector::always(OracleFormalizer, Fault::Rewrite(Arc::new(drop_first)));
    let on = PipelineConfig {
        ambiguity_check: true,
        format: g.to_task().format,
        ..PipelineConfig::default()
    };
    let r = run_pipeline(&g.text, &f, &on);
    ensure!(r.status == PipelineStatus::FailedAmbiguous, "(c) {:?}", r.status);
    Ok("Unsat->retry->Solved in 2; FailedSyntax after 5; FailedAmbiguous".into())
}

/// The program with every assert turned into an assume and vice versa.
fn swap_conditions(src: &SourceText) -> Result<SourceText, String> {
    let mut program = parse(src).map_err(|e| e.to_string())?;
    for f in &mut program.functions {
        for s in &mut f.body {
            *s = match s.clone() {
                Stmt::Assume { cond, span } => Stmt::Assert { cond, span },
                Stmt::Assert { cond, span } => Stmt::Assume { cond, span },
                other => other,
            };
        }
    }
    check(&program, &src.origin).map_err(|e| e.to_string())?;
    Ok(SourceText::new("swapped.py", pretty(&program)))
}

fn criterion_4() -> Outcome {
    let puzzles = generated(C2_PUZZLES, SEED)?;
    let mut n = 0;
    let mut sources: Vec<SourceText> = puzzles.iter().map(render_dsl).collect();
    sources.push(SourceText::new("paper_puzzle.py", PAPER_DSL));
    for src in &sources {
        let swapped = swap_conditions(src)?;
        ensure!(swapped.text.contains("assert") , "swap produced no asserts");
        let a = solve_fully(&model_of(src)?)?;
        let b = solve_fully(&model_of(&swapped)?)?;
        ensure!(a == b, "{}: outcome changed: {a:?} vs {b:?}", src.origin);
        n += 1;
    }
    Ok(format!("{n} programs: identical status, table and uniqueness after swapping"))
}

fn criterion_5() -> Outcome {
    let program = compile(&SourceText::new("fig3_fig4.py", FIG3_FIG4)).map_err(|e| e.to_string())?;
    let h = emit(&program).map_err(|e| e.to_string())?;
    ensure!(h.text == FIG3_FIG4_C, "harness differs from the checked-in golden");
    ensure!(emit(&program).map_err(|e| e.to_string())? == h, "emission not byte-stable");
    let structs = h.section(&h.sections.structs);
    for class in &program.program.classes {
        ensure!(structs.contains(&format!("struct {} {{", class.name)), "no struct for {}", class.name);
    }
    let defs = structs.lines().filter(|l| l.starts_with("struct ") && l.ends_with('{')).count();
    ensure!(defs == program.program.classes.len(), "{defs} struct definitions");
    let unique_fields: usize = program
        .program
        .classes
        .iter()
        .flat_map(|c| &c.fields)
        .filter(|f| f.unique)
        .count();
    let inits = h.section(&h.sections.init_helpers).matches("__CPROVER_unique_domain(\n").count();
    ensure!(inits == unique_fields, "{inits} unique_domain inits for {unique_fields} Unique fields");
    let conditions = program.body.iter().filter(|s| !matches!(s, Stmt::Assign { .. })).count();
    let assumes = h.section(&h.sections.validate).matches("__CPROVER_assume(").count();
    ensure!(assumes == conditions, "{assumes} assumes for {conditions} conditions");
    let main = h.section(&h.sections.main).trim_end();
    ensure!(main.ends_with("__CPROVER_assert(false, \"\");\n}"), "main does not end in the reachability assert");
    Ok(format!(
        "{defs} structs, {inits} unique_domain inits, {assumes} assumes, golden byte-identical"
    ))
}

fn criterion_6() -> Outcome {
    let t = table_one();
    let mut partial = t.clone();
    // 4 wrong cells out of 16
    for r in 0..4 {
        partial.rows[r][4] = Cell::Str("wrong".into());
    }
    let result = |id: &str, p: Option<SolutionTable>| TaskResult {
        id: id.into(),
        size: "4x4".into(),
        status: if p.is_some() { PipelineStatus::Solved } else { PipelineStatus::FailedSyntax },
        attempts: 1,
        predicted: p,
        truth: t.clone(),
    };
    let acc = |rs: &[TaskResult]| -> Result<(f64, f64), String> {
        let r = score(rs).map_err(|e| e.to_string())?;
        Ok((r.puzzle_accuracy, r.cell_accuracy))
    };
    let fixture = acc(&[result("a", Some(t.clone())), result("b", Some(partial))])?;
    ensure!(fixture == (0.5, 0.875), "fixture scored {fixture:?}");
    let all = acc(&[result("a", Some(t.clone())), result("b", Some(t.clone()))])?;
    ensure!(all == (1.0, 1.0), "all-correct scored {all:?}");
    let none = acc(&[result("a", None), result("b", None)])?;
    ensure!(none == (0.0, 0.0), "all-missing scored {none:?}");
    Ok("0.5/0.875, 1.0/1.0, 0.0/0.0".into())
}

fn criterion_7() -> Outcome {
    let config = |concurrency| BenchConfig {
        source: TaskSource::Generated(GenSpec {
            seed: SEED + 10_000,
            count: C7_PUZZLES,
            sizes: SHAPES.iter().map(|s| s.to_string()).collect(),
        }),
        formalizer: FormalizerChoice::Oracle,
        concurrency,
        out: None,
        pipeline: PipelineConfig::default(),
    };
    let start = Instant::now();
    let eight = run_bench(&config(8)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(eight.puzzle_accuracy == 1.0, "puzzle accuracy {}", eight.puzzle_accuracy);
    ensure!(eight.tasks == C7_PUZZLES, "{} tasks", eight.tasks);
    ensure!(elapsed < C7_LIMIT, "took {elapsed:?}, limit {C7_LIMIT:?}");
    let one = run_bench(&config(1)).map_err(|e| e.to_string())?;
    ensure!(one.without_timing() == eight.without_timing(), "concurrency 1 and 8 reports differ");
    Ok(format!(
        "{C7_PUZZLES} puzzles at concurrency 8 in {:.1} s, accuracy 1.0, identical to concurrency 1 ({:.1} s)",
        elapsed.as_secs_f64(),
        one.wall_clock_secs
    ))
}

fn criterion_8() -> Outcome {
    let replay = ReplayFormalizer::from_jsonl(TRANSCRIPT.as_bytes()).map_err(|e| e.to_string())?;
    let inst = paper_instance();
    let config = PipelineConfig {
        format: inst.to_task().format,
        ..PipelineConfig::default()
    };
    let r = run_pipeline(&inst.text, &replay, &config);
    let json = serde_json::to_string_pretty(&r).map_err(|e| e.to_string())? + "\n";
    ensure!(json == TRANSCRIPT_RESULT, "replayed result differs from the stored one");
    Ok("transcript replay reproduces the stored PipelineResult bit-for-bit; \
        the reported 91.4% puzzle / 92.98% cell accuracy needs Llama 3.1 70B and the private \
        ZebraLogicBench data: not reproducible at desk scale"
        .into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("paper worked example", criterion_1),
        ("solver vs brute-force oracle", criterion_2),
        ("recovery edges", criterion_3),
        ("assert/assume interchangeability", criterion_4),
        ("C emitter goldens", criterion_5),
        ("metrics", criterion_6),
        ("benchmark harness", criterion_7),
        ("transcript replay", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
