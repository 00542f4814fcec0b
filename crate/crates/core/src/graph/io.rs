use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{BuildStats, DirectedGraph};
use crate::{Error, Result};

/// Field separator for edge and label files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Delimiter {
    /// Any run of ASCII whitespace.
    #[default]
    Whitespace,
    Char(char),
}

impl Delimiter {
    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Whitespace => line.split_whitespace().collect(),
            Delimiter::Char(c) => line.split(*c).map(str::trim).collect(),
        }
    }
}

impl FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "" | "whitespace" | "ws" => Ok(Delimiter::Whitespace),
            "tab" | "\\t" => Ok(Delimiter::Char('\t')),
            "comma" => Ok(Delimiter::Char(',')),
            "space" => Ok(Delimiter::Char(' ')),
            _ => {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(Delimiter::Char(c)),
                    _ => Err(Error::InvalidArgument(format!("bad delimiter `{s}`"))),
                }
            }
        }
    }
}

impl std::fmt::Display for Delimiter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Delimiter::Whitespace => f.write_str("whitespace"),
            Delimiter::Char('\t') => f.write_str("tab"),
            Delimiter::Char(',') => f.write_str("comma"),
            Delimiter::Char(' ') => f.write_str("space"),
            Delimiter::Char(c) => write!(f, "{c}"),
        }
    }
}

/// Bijection between external node labels and dense ids `0..len`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeIdMap {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl NodeIdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ids `0..n` labelled by their decimal representation.
    pub fn identity(n: usize) -> Self {
        let mut map = Self::new();
        for i in 0..n {
            map.intern(&i.to_string());
        }
        map
    }

    /// Returns the id for `label`, allocating the next one if unseen.
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn resolve(&self, label: &str) -> Result<usize> {
        self.get(label).ok_or_else(|| Error::UnknownNode(label.to_owned()))
    }
}

#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: DirectedGraph,
    pub ids: NodeIdMap,
    pub stats: BuildStats,
}

fn is_comment(line: &str) -> bool {
    line.starts_with('#') || line.starts_with('%')
}

/// Loads a `src<delim>dst` edge list. Lines starting with `#` or `%` and
/// blank lines are skipped. Self-loops and repeated edges are dropped and
/// logged.
pub fn load_edge_list(path: impl AsRef<Path>, delimiter: Delimiter) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, delimiter, path)
}

/// Parses edge-list text; `origin` is only used in error messages.
pub fn parse_edge_list(text: &str, delimiter: Delimiter, origin: impl AsRef<Path>) -> Result<LoadedGraph> {
    let mut ids = NodeIdMap::new();
    let mut raw = Vec::new();
    let mut self_loops = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || is_comment(line) {
            continue;
        }
        let fields = delimiter.split(line);
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse {
                path: origin.as_ref().to_path_buf(),
                line: lineno + 1,
                message: format!("expected two fields, found `{line}`"),
            });
        }
        if fields[0] == fields[1] {
            self_loops += 1;
            continue;
        }
        let u = ids.intern(fields[0]);
        let v = ids.intern(fields[1]);
        raw.push((u, v));
    }
    if raw.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let (graph, mut stats) = DirectedGraph::from_edges(ids.len(), raw)?;
    stats.self_loops += self_loops;
    if stats.self_loops > 0 || stats.duplicates > 0 {
        log::warn!(
            "{}: dropped {} self-loops and {} duplicate edges",
            origin.as_ref().display(),
            stats.self_loops,
            stats.duplicates
        );
    }
    Ok(LoadedGraph { graph, ids, stats })
}

/// Partial node → class assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeLabels {
    /// Class names indexed by class id, in order of first appearance.
    pub classes: Vec<String>,
    /// Node id → class id.
    pub assignments: BTreeMap<usize, usize>,
}

impl NodeLabels {
    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// Loads `node<delim>class` lines. Every node must be known to `ids`; a
/// node listed twice with different classes is an error.
pub fn load_labels(path: impl AsRef<Path>, ids: &NodeIdMap, delimiter: Delimiter) -> Result<NodeLabels> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, ids, delimiter, path)
}

pub(crate) fn parse_labels(text: &str, ids: &NodeIdMap, delimiter: Delimiter, origin: &Path) -> Result<NodeLabels> {
    let mut labels = NodeLabels::default();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || is_comment(line) {
            continue;
        }
        let fields = delimiter.split(line);
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                message: format!("expected `node class`, found `{line}`"),
            });
        }
        let node = ids.resolve(fields[0])?;
        let next = class_index.len();
        let class = *class_index.entry(fields[1].to_owned()).or_insert_with(|| {
            labels.classes.push(fields[1].to_owned());
            next
        });
        if let Some(&prev) = labels.assignments.get(&node) {
            if prev != class {
                return Err(Error::ConflictingLabel {
                    node: fields[0].to_owned(),
                    first: labels.classes[prev].clone(),
                    second: labels.classes[class].clone(),
                });
            }
        }
        labels.assignments.insert(node, class);
    }
    Ok(labels)
}
