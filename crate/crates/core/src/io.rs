//! JSON landscape files.
//!
//! ```json
//! {"states": [{"label": "a", "energy": 0}, ...], "edges": [[0, 1], ...]}
//! ```
//!
//! Syntax errors carry serde's line and column. Semantic errors on a given
//! edge or state are mapped back to the line where that element starts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{BuildOptions, Landscape};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRecord {
    pub label: String,
    pub energy: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeFile {
    pub states: Vec<StateRecord>,
    pub edges: Vec<[usize; 2]>,
}

impl LandscapeFile {
    pub fn from_landscape(l: &Landscape) -> Self {
        LandscapeFile {
            states: (0..l.n_states())
                .map(|i| StateRecord {
                    label: l.labels()[i].clone(),
                    energy: l.energy_of(i).0,
                })
                .collect(),
            edges: l.edges().map(|(a, b)| [a.index(), b.index()]).collect(),
        }
    }
}

pub fn parse_landscape(text: &str) -> Result<Landscape> {
    parse_landscape_with(text, BuildOptions::default())
}

pub fn parse_landscape_with(text: &str, options: BuildOptions) -> Result<Landscape> {
    let file: LandscapeFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let states = file.states.into_iter().map(|s| (s.label, s.energy)).collect();
    let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
    Landscape::build_with(states, &edges, options).map_err(|err| {
        let edge = match &err {
            Error::SelfLoop { edge, .. } | Error::InvalidEdge { edge, .. } => Some(*edge),
            _ => None,
        };
        match edge.and_then(|k| element_position(text, "edges", k)) {
            Some((line, column)) => Error::Parse {
                line,
                column,
                message: err.to_string(),
            },
            None => err,
        }
    })
}

pub fn read_landscape(path: &Path) -> Result<Landscape> {
    parse_landscape(&std::fs::read_to_string(path)?)
}

pub fn landscape_to_json(l: &Landscape) -> String {
    serde_json::to_string_pretty(&LandscapeFile::from_landscape(l)).expect("serializable")
}

/// 1-based line and column where element `index` of the top-level array
/// `key` starts. Assumes `text` is valid JSON.
fn element_position(text: &str, key: &str, index: usize) -> Option<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut i = 0;
    let mut last_string: Option<(usize, usize)> = None;
    let mut target_depth = None;
    let mut count = 0usize;
    let mut expect_element = false;
    while i < bytes.len() {
        let c = bytes[i];
        if let Some(d) = target_depth {
            if expect_element && depth == d && !c.is_ascii_whitespace() && c != b']' {
                if count == index {
                    return Some(line_col(text, i));
                }
                count += 1;
                expect_element = false;
            }
        }
        match c {
            b'"' => {
                let start = i + 1;
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    if bytes[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
                last_string = Some((start, i));
            }
            b'{' | b'[' => {
                depth += 1;
                if c == b'[' && depth == 2 && target_depth.is_none() {
                    if let Some((s, e)) = last_string {
                        if &text[s..e] == key {
                            target_depth = Some(2);
                            expect_element = true;
                        }
                    }
                }
            }
            b'}' | b']' => {
                if target_depth == Some(depth) {
                    return None;
                }
                depth = depth.saturating_sub(1);
            }
            b',' if target_depth == Some(depth) => expect_element = true,
            _ => {}
        }
        i += 1;
    }
    None
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}
