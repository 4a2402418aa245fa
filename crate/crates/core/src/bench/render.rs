//! Prose and Logic.py renderings of a puzzle, and the deterministic
//! formalizer that reads the prose back.

use std::fmt::Write;

use thiserror::Error;

use super::{Attr, Clue, Feature, PuzzleInstance, POSITION};
use crate::agent::{merge_sources, Formalizer, FormalizerError, OutputFormat};
use crate::frontend::{quote, SourceText};

const ENTITY_CLASS: &str = "House";
const ROOT_CLASS: &str = "PuzzleSolution";
const LIST_FIELD: &str = "houses";
const FEATURE_PREFIX: &str = " - Each person has a unique ";
const PERSON: &str = "the person whose ";

pub fn render_text(n: usize, features: &[Feature], clues: &[Clue]) -> String {
    let mut out = format!(
        "There are {n} houses, numbered 1 to {n} from left to right, as seen from across the street. \
         Each house is occupied by a different person. Each house has a unique attribute for each of \
         the following characteristics:\n"
    );
    for f in features {
        let _ = writeln!(out, "{FEATURE_PREFIX}{}: {}", f.name, f.values.join(", "));
    }
    out.push_str("\nClues:\n");
    for (i, clue) in clues.iter().enumerate() {
        let _ = writeln!(out, "{}. {}", i + 1, sentence(clue));
    }
    out
}

fn person(a: &Attr) -> String {
    format!("{PERSON}{} is {}", a.feature, a.value)
}

fn sentence(clue: &Clue) -> String {
    let s = match clue {
        Clue::SamePerson { a, b } => format!("{} is {}", person(a), person(b)),
        Clue::AtPosition { attr, pos } => format!("{} is in house {pos}", person(attr)),
        Clue::NotAtPosition { attr, pos } => format!("{} is not in house {pos}", person(attr)),
        Clue::DirectlyLeft { a, b } => format!("{} is directly left of {}", person(a), person(b)),
        Clue::LeftOf { a, b } => format!("{} is somewhere to the left of {}", person(a), person(b)),
        Clue::NextTo { a, b } => format!("{} is next to {}", person(a), person(b)),
    };
    let mut chars = s.chars();
    let first = chars.next().map(|c| c.to_ascii_uppercase()).unwrap_or_default();
    format!("{first}{}.", chars.as_str())
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("puzzle text line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Inverse of [`render_text`].
pub fn parse_text(text: &str) -> Result<(usize, Vec<Feature>, Vec<Clue>), ParseError> {
    let err = |line: usize, message: &str| ParseError {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| err(1, "empty puzzle"))?;
    let n: usize = head
        .strip_prefix("There are ")
        .and_then(|r| r.split_whitespace().next())
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| err(1, "missing house count"))?;
    let mut features = Vec::new();
    let mut clues = Vec::new();
    let mut in_clues = false;
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if line.trim() == "Clues:" {
            in_clues = true;
            continue;
        }
        if !in_clues {
            let rest = line
                .strip_prefix(FEATURE_PREFIX)
                .ok_or_else(|| err(lineno, "expected a feature line"))?;
            let (name, values) = rest
                .split_once(": ")
                .ok_or_else(|| err(lineno, "expected `name: values`"))?;
            features.push(Feature {
                name: name.to_string(),
                values: values.split(", ").map(str::to_string).collect(),
            });
            continue;
        }
        let body = line
            .split_once(". ")
            .map(|(_, b)| b)
            .and_then(|b| b.strip_suffix('.'))
            .ok_or_else(|| err(lineno, "expected a numbered clue"))?;
        clues.push(parse_clue(body).ok_or_else(|| err(lineno, "unrecognised clue"))?);
    }
    Ok((n, features, clues))
}

fn parse_person(s: &str) -> Option<(Attr, &str)> {
    let rest = s
        .strip_prefix(PERSON)
        .or_else(|| s.strip_prefix("The person whose "))?;
    let (feature, rest) = rest.split_once(" is ")?;
    match rest.split_once(" is ") {
        Some((value, tail)) => Some((Attr::new(feature, value), tail)),
        None => Some((Attr::new(feature, rest), "")),
    }
}

fn parse_clue(s: &str) -> Option<Clue> {
    let (a, tail) = parse_person(s)?;
    let pos = |t: &str| t.parse::<i64>().ok();
    if let Some(p) = tail.strip_prefix("in house ") {
        return Some(Clue::AtPosition { attr: a, pos: pos(p)? });
    }
    if let Some(p) = tail.strip_prefix("not in house ") {
        return Some(Clue::NotAtPosition { attr: a, pos: pos(p)? });
    }
    let other = |t: &str| parse_person(t).filter(|(_, rest)| rest.is_empty()).map(|(b, _)| b);
    if let Some(t) = tail.strip_prefix("directly left of ") {
        return Some(Clue::DirectlyLeft { a, b: other(t)? });
    }
    if let Some(t) = tail.strip_prefix("somewhere to the left of ") {
        return Some(Clue::LeftOf { a, b: other(t)? });
    }
    if let Some(t) = tail.strip_prefix("next to ") {
        return Some(Clue::NextTo { a, b: other(t)? });
    }
    Some(Clue::SamePerson { a, b: other(tail)? })
}

/// Data structure and validator sources, in the shape a formalizer emits.
pub fn render_dsl_parts(n: usize, features: &[Feature], clues: &[Clue]) -> (SourceText, SourceText) {
    let mut ds = format!(
        "class {ENTITY_CLASS}:\n  {POSITION}: Unique[Domain[int, range(1, {})]]\n",
        n + 1
    );
    for f in features {
        let values: Vec<String> = f.values.iter().map(|v| quote(&v.to_lowercase())).collect();
        let _ = writeln!(ds, "  {}: Unique[Domain[str, {}]]", f.name, values.join(", "));
    }
    let _ = write!(ds, "\nclass {ROOT_CLASS}:\n  {LIST_FIELD}: list[{ENTITY_CLASS}, {n}]\n");

    let mut v = format!("def validate(solution: {ROOT_CLASS}) -> None:\n");
    if clues.is_empty() {
        v.push_str("  pass\n");
    }
    for (i, clue) in clues.iter().enumerate() {
        let k = i + 1;
        let _ = writeln!(v, "  # Clue {k}: {}", sentence(clue));
        let pick = |v: &mut String, var: &str, a: &Attr| {
            let _ = writeln!(
                v,
                "  {var} = nondet(solution.{LIST_FIELD})\n  assume({var}.{} == {})",
                a.feature,
                quote(&a.value.to_lowercase())
            );
        };
        let (a_var, b_var) = (format!("c{k}_a"), format!("c{k}_b"));
        match clue {
            Clue::SamePerson { a, b } => {
                pick(&mut v, &a_var, a);
                let _ = writeln!(v, "  assert {a_var}.{} == {}", b.feature, quote(&b.value.to_lowercase()));
            }
            Clue::AtPosition { attr, pos } => {
                pick(&mut v, &a_var, attr);
                let _ = writeln!(v, "  assert {a_var}.{POSITION} == {pos}");
            }
            Clue::NotAtPosition { attr, pos } => {
                pick(&mut v, &a_var, attr);
                let _ = writeln!(v, "  assert {a_var}.{POSITION} != {pos}");
            }
            Clue::DirectlyLeft { a, b } | Clue::LeftOf { a, b } | Clue::NextTo { a, b } => {
                pick(&mut v, &a_var, a);
                pick(&mut v, &b_var, b);
                let cond = match clue {
                    Clue::DirectlyLeft { .. } => {
                        format!("{a_var}.{POSITION} == {b_var}.{POSITION} - 1")
                    }
                    Clue::LeftOf { .. } => format!("{a_var}.{POSITION} < {b_var}.{POSITION}"),
                    _ => format!("abs({a_var}.{POSITION} - {b_var}.{POSITION}) == 1"),
                };
                let _ = writeln!(v, "  assert {cond}");
            }
        }
    }
    (
        SourceText::new("data_structure.py", ds),
        SourceText::new("constraints.py", v),
    )
}

/// The whole program for an instance: data structure, then validator.
pub fn render_dsl(instance: &PuzzleInstance) -> SourceText {
    let (ds, v) = render_dsl_parts(instance.n_entities, &instance.features, &instance.clues);
    merge_sources(&ds, &v)
}

/// Reads puzzles written by [`render_text`] and emits the exact program.
#[derive(Clone, Copy, Debug, Default)]
pub struct OracleFormalizer;

impl OracleFormalizer {
    fn parts(puzzle: &str) -> Result<(SourceText, SourceText), FormalizerError> {
        let (n, features, clues) =
            parse_text(puzzle).map_err(|e| FormalizerError::Transport(e.to_string()))?;
        Ok(render_dsl_parts(n, &features, &clues))
    }
}

impl Formalizer for OracleFormalizer {
    fn gen_data_structure(&self, puzzle: &str, _: &OutputFormat) -> Result<SourceText, FormalizerError> {
        Ok(Self::parts(puzzle)?.0)
    }

    fn gen_constraints(&self, _: &SourceText, puzzle: &str) -> Result<SourceText, FormalizerError> {
        Ok(Self::parts(puzzle)?.1)
    }
}
