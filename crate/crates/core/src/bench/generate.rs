use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::render::{render_dsl_parts, render_text};
use super::{Attr, Clue, Feature, PuzzleInstance, POSITION};
use crate::agent::merge_sources;
use crate::frontend::compile;
use crate::model::{lower, Cell, SolutionTable};
use crate::solver::{find_second, solve, Budget, SolveError};

/// Feature names and their value pools (at least six values each).
pub const FEATURE_POOLS: &[(&str, &[&str])] = &[
    ("name", &["alice", "bob", "carol", "david", "eric", "fiona", "arnold", "peter"]),
    ("occupation", &["artist", "engineer", "teacher", "doctor", "lawyer", "nurse", "chef"]),
    ("book", &["fantasy", "science fiction", "mystery", "romance", "biography", "history"]),
    (
        "phone",
        &["google pixel 6", "iphone 13", "oneplus 9", "samsung galaxy s21", "huawei p50", "xiaomi mi 11"],
    ),
    ("color", &["red", "green", "blue", "yellow", "white", "purple"]),
    ("pet", &["cat", "dog", "bird", "fish", "hamster", "rabbit"]),
    ("drink", &["coffee", "tea", "milk", "water", "juice", "soda"]),
    ("food", &["pizza", "soup", "stew", "salad", "tacos", "sushi"]),
    ("car", &["ford", "toyota", "honda", "bmw", "tesla", "audi"]),
    ("hobby", &["painting", "gardening", "cooking", "hiking", "chess", "knitting"]),
];

const GENERATION_BUDGET: Budget = Budget {
    max_decisions: 1_000_000,
    max_time: Duration::from_secs(30),
};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GenerationError {
    #[error("size {0}x{1} is outside 2..=6 x 2..=6")]
    InvalidSize(usize, usize),
    #[error("no clue set over the candidates makes the puzzle unique")]
    NotUnique,
    #[error("uniqueness could not be certified: {0}")]
    Solver(String),
}

/// The four-house puzzle with ten clues used as the running example.
pub fn paper_instance() -> PuzzleInstance {
    let feature = |name: &str, values: &[&str]| Feature {
        name: name.into(),
        values: values.iter().map(|v| v.to_string()).collect(),
    };
    let features = vec![
        feature("name", &["alice", "eric", "arnold", "peter"]),
        feature("occupation", &["artist", "engineer", "teacher", "doctor"]),
        feature("book", &["fantasy", "science fiction", "mystery", "romance"]),
        feature("phone", &["google pixel 6", "iphone 13", "oneplus 9", "samsung galaxy s21"]),
    ];
    let at = Attr::new;
    let clues = vec![
        Clue::DirectlyLeft { a: at("occupation", "engineer"), b: at("phone", "samsung galaxy s21") },
        Clue::AtPosition { attr: at("book", "fantasy"), pos: 2 },
        Clue::NotAtPosition { attr: at("name", "alice"), pos: 2 },
        Clue::SamePerson { a: at("name", "eric"), b: at("occupation", "teacher") },
        Clue::SamePerson { a: at("phone", "samsung galaxy s21"), b: at("book", "fantasy") },
        Clue::SamePerson { a: at("phone", "iphone 13"), b: at("book", "science fiction") },
        Clue::LeftOf { a: at("book", "science fiction"), b: at("phone", "oneplus 9") },
        Clue::SamePerson { a: at("phone", "oneplus 9"), b: at("name", "arnold") },
        Clue::SamePerson { a: at("occupation", "doctor"), b: at("book", "mystery") },
        Clue::SamePerson { a: at("phone", "iphone 13"), b: at("occupation", "teacher") },
    ];
    let rows = [
        ["alice", "engineer", "romance", "google pixel 6"],
        ["peter", "artist", "fantasy", "samsung galaxy s21"],
        ["eric", "teacher", "science fiction", "iphone 13"],
        ["arnold", "doctor", "mystery", "oneplus 9"],
    ];
    let truth = table(
        &features,
        rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
    );
    PuzzleInstance {
        id: "paper-4x4".into(),
        n_entities: 4,
        n_features: 4,
        text: render_text(4, &features, &clues),
        features,
        clues,
        truth,
    }
}

/// `rows[p][f]` is the value of feature `f` in house `p + 1`.
fn table(features: &[Feature], rows: Vec<Vec<String>>) -> SolutionTable {
    let mut columns = vec![POSITION.to_string()];
    columns.extend(features.iter().map(|f| f.name.clone()));
    SolutionTable {
        columns,
        rows: rows
            .into_iter()
            .enumerate()
            .map(|(p, r)| {
                std::iter::once(Cell::Int(p as i64 + 1))
                    .chain(r.into_iter().map(Cell::Str))
                    .collect()
            })
            .collect(),
        position_column: Some(POSITION.into()),
    }
}

/// Every clue of every kind that holds in the ground truth, grouped by kind.
fn candidates(features: &[Feature], truth: &[Vec<String>]) -> Vec<Vec<Clue>> {
    let n = truth.len();
    let attr = |p: usize, f: usize| Attr::new(features[f].name.clone(), truth[p][f].clone());
    let nf = features.len();
    let mut same = Vec::new();
    let mut at = Vec::new();
    let mut not_at = Vec::new();
    let mut directly_left = Vec::new();
    let mut left_of = Vec::new();
    let mut next_to = Vec::new();
    for p in 0..n {
        for f in 0..nf {
            for g in 0..nf {
                if f != g {
                    same.push(Clue::SamePerson { a: attr(p, f), b: attr(p, g) });
                }
            }
            for q in 0..n {
                let pos = q as i64 + 1;
                if q == p {
                    at.push(Clue::AtPosition { attr: attr(p, f), pos });
                } else {
                    not_at.push(Clue::NotAtPosition { attr: attr(p, f), pos });
                }
            }
        }
        for q in 0..n {
            for f in 0..nf {
                for g in 0..nf {
                    if q == p + 1 {
                        directly_left.push(Clue::DirectlyLeft { a: attr(p, f), b: attr(q, g) });
                    }
                    if q > p {
                        left_of.push(Clue::LeftOf { a: attr(p, f), b: attr(q, g) });
                    }
                    if q.abs_diff(p) == 1 {
                        next_to.push(Clue::NextTo { a: attr(p, f), b: attr(q, g) });
                    }
                }
            }
        }
    }
    vec![same, at, not_at, directly_left, left_of, next_to]
}

fn unique(n: usize, features: &[Feature], clues: &[Clue]) -> Result<bool, GenerationError> {
    let (ds, v) = render_dsl_parts(n, features, clues);
    let program = compile(&merge_sources(&ds, &v)).map_err(|e| GenerationError::Solver(e.to_string()))?;
    let model = lower(&program).map_err(|e| GenerationError::Solver(e.to_string()))?;
    let err = |e: SolveError| GenerationError::Solver(e.to_string());
    let first = solve(&model, GENERATION_BUDGET)
        .map_err(err)?
        .assignment
        .ok_or_else(|| GenerationError::Solver("clues true of the truth table are UNSAT".into()))?;
    Ok(find_second(&model, &first, GENERATION_BUDGET).map_err(err)?.second.is_none())
}

/// Draws a ground truth, then true clues in a round-robin over clue kinds
/// until the solution is unique, then drops clues greedily while it stays
/// unique. Deterministic in `seed`.
pub fn generate_puzzle(seed: u64, n: usize, nf: usize) -> Result<PuzzleInstance, GenerationError> {
    if !(2..=6).contains(&n) || !(2..=6).contains(&nf) {
        return Err(GenerationError::InvalidSize(n, nf));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pools: Vec<&(&str, &[&str])> = FEATURE_POOLS.choose_multiple(&mut rng, nf).collect();
    let mut features = Vec::with_capacity(nf);
    let mut by_feature = Vec::with_capacity(nf);
    for (name, pool) in pools {
        let values: Vec<String> = pool.choose_multiple(&mut rng, n).map(|s| s.to_string()).collect();
        let mut placed = values.clone();
        placed.shuffle(&mut rng);
        features.push(Feature { name: name.to_string(), values });
        by_feature.push(placed);
    }
    let truth_rows: Vec<Vec<String>> = (0..n)
        .map(|p| by_feature.iter().map(|col| col[p].clone()).collect())
        .collect();

    let mut kinds = candidates(&features, &truth_rows);
    for kind in &mut kinds {
        kind.shuffle(&mut rng);
    }
    kinds.shuffle(&mut rng);
    let mut pool = Vec::new();
    let longest = kinds.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..longest {
        for kind in &kinds {
            if let Some(c) = kind.get(i) {
                pool.push(c.clone());
            }
        }
    }

    let mut take = (n * nf).min(pool.len());
    while !unique(n, &features, &pool[..take])? {
        if take == pool.len() {
            return Err(GenerationError::NotUnique);
        }
        take = (take + n).min(pool.len());
    }
    let mut clues: Vec<Clue> = pool[..take].to_vec();
    let mut order: Vec<usize> = (0..clues.len()).collect();
    order.shuffle(&mut rng);
    let mut keep = vec![true; clues.len()];
    for i in order {
        keep[i] = false;
        let trial: Vec<Clue> = clues
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(c, _)| c.clone())
            .collect();
        if !unique(n, &features, &trial)? {
            keep[i] = true;
        }
    }
    clues = clues.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect();

    Ok(PuzzleInstance {
        id: format!("gen-{seed}-{n}x{nf}"),
        n_entities: n,
        n_features: nf,
        text: render_text(n, &features, &clues),
        truth: table(&features, truth_rows),
        features,
        clues,
    })
}
