use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{BipartiteGraph, Pair};
use crate::error::{Error, Result};

/// Supported edge-list layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeFormat {
    /// `<left>\t<right>` per line; `#` lines are comments.
    TsvPair,
    /// `<user>\t<item>\t<rating>\t<timestamp>`; rating and timestamp are
    /// validated and then discarded.
    MovielensUData,
}

impl FromStr for EdgeFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv_pair" | "tsv" => Ok(EdgeFormat::TsvPair),
            "movielens_u_data" | "movielens" => Ok(EdgeFormat::MovielensUData),
            other => Err(Error::InvalidParameter(format!("unknown edge format {other:?}"))),
        }
    }
}

#[derive(Default)]
struct Interner {
    index: HashMap<String, u32>,
    labels: Vec<String>,
}

impl Interner {
    fn id(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.index.insert(label.to_string(), id);
        self.labels.push(label.to_string());
        id
    }
}

pub fn load_edge_list(path: &Path, format: EdgeFormat) -> Result<BipartiteGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses an edge list. Ids are re-indexed densely per side in order of
/// first appearance.
pub fn parse_edge_list(reader: impl BufRead, format: EdgeFormat) -> Result<BipartiteGraph> {
    let mut left = Interner::default();
    let mut right = Interner::default();
    let mut edges = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let expected = match format {
            EdgeFormat::TsvPair => 2,
            EdgeFormat::MovielensUData => 4,
        };
        if fields.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        if format == EdgeFormat::MovielensUData {
            for (name, value) in [("rating", fields[2]), ("timestamp", fields[3])] {
                if value.parse::<f64>().is_err() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("{name} {value:?} is not numeric"),
                    });
                }
            }
        }
        edges.push(Pair {
            left: left.id(fields[0]),
            right: right.id(fields[1]),
        });
    }

    if edges.is_empty() {
        return Err(Error::EmptyGraph("edge list has no edges".into()));
    }
    BipartiteGraph::from_labelled_edges(left.labels, right.labels, edges)
}
