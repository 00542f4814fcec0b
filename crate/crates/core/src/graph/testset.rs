use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{DirectedGraph, Edge, NodeIdMap};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairKind {
    HeldOutEdge,
    RandomNonEdge,
    ReversedPositive,
}

impl PairKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PairKind::HeldOutEdge => "held_out_edge",
            PairKind::RandomNonEdge => "random_nonedge",
            PairKind::ReversedPositive => "reversed_positive",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "held_out_edge" => Some(PairKind::HeldOutEdge),
            "random_nonedge" => Some(PairKind::RandomNonEdge),
            "reversed_positive" => Some(PairKind::ReversedPositive),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabeledPair {
    pub u: usize,
    pub v: usize,
    pub positive: bool,
    pub kind: PairKind,
}

/// Balanced link-prediction test set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledPairSet {
    pub pairs: Vec<LabeledPair>,
}

impl LabeledPairSet {
    pub fn positives(&self) -> impl Iterator<Item = &LabeledPair> {
        self.pairs.iter().filter(|p| p.positive)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &LabeledPair> {
        self.pairs.iter().filter(|p| !p.positive)
    }

    pub fn count_kind(&self, kind: PairKind) -> usize {
        self.pairs.iter().filter(|p| p.kind == kind).count()
    }
}

/// Builds the balanced test set for one reversed fraction.
///
/// Positives are the held-out edges. Up to `floor(reversed_fraction · |held_out|)`
/// negatives are reversals `(v, u)` of held-out edges whose reverse is not an
/// edge of `full`; the rest are uniformly drawn node pairs that are neither
/// edges of `full` nor already chosen.
pub fn build_test_set<R: Rng + ?Sized>(
    held_out: &[Edge],
    full: &DirectedGraph,
    reversed_fraction: f64,
    rng: &mut R,
) -> Result<LabeledPairSet> {
    if held_out.is_empty() {
        return Err(Error::InvalidArgument("held-out edge set is empty".into()));
    }
    if !(0.0..=1.0).contains(&reversed_fraction) {
        return Err(Error::InvalidArgument(format!(
            "reversed fraction must lie in [0, 1], got {reversed_fraction}"
        )));
    }
    let total = held_out.len();
    let want_reversed = (reversed_fraction * total as f64).floor() as usize;

    let mut pairs: Vec<LabeledPair> = held_out
        .iter()
        .map(|&(u, v)| LabeledPair {
            u,
            v,
            positive: true,
            kind: PairKind::HeldOutEdge,
        })
        .collect();
    let mut chosen: HashSet<Edge> = HashSet::with_capacity(total);

    if want_reversed > 0 {
        let mut order: Vec<usize> = (0..total).collect();
        order.shuffle(rng);
        for idx in order {
            if chosen.len() == want_reversed {
                break;
            }
            let (u, v) = held_out[idx];
            if !full.has_edge(v, u) && chosen.insert((v, u)) {
                pairs.push(LabeledPair {
                    u: v,
                    v: u,
                    positive: false,
                    kind: PairKind::ReversedPositive,
                });
            }
        }
        if chosen.len() < want_reversed {
            log::warn!(
                "only {} of {} requested reversals available (bi-directional edges); filling with random non-edges",
                chosen.len(),
                want_reversed
            );
        }
    }

    let n = full.node_count();
    let need = total - chosen.len();
    let available = (n * n.saturating_sub(1)).saturating_sub(full.edge_count() + chosen.len());
    if need > available {
        return Err(Error::InvalidArgument(format!(
            "graph too dense: need {need} random non-edges, only {available} exist"
        )));
    }
    while chosen.len() < total {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v || full.has_edge(u, v) || !chosen.insert((u, v)) {
            continue;
        }
        pairs.push(LabeledPair {
            u,
            v,
            positive: false,
            kind: PairKind::RandomNonEdge,
        });
    }
    Ok(LabeledPairSet { pairs })
}

/// Everything needed to re-score a link-prediction run against a saved
/// checkpoint: the held-out positives and one negative set per reversed
/// fraction.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitManifest {
    pub removal_fraction: f64,
    pub held_out: Vec<Edge>,
    pub test_sets: Vec<(f64, LabeledPairSet)>,
}

impl SplitManifest {
    /// Training graph implied by removing the held-out edges from `full`.
    pub fn train_graph(&self, full: &DirectedGraph) -> DirectedGraph {
        let held: HashSet<Edge> = self.held_out.iter().copied().collect();
        full.with_edges(full.edges().iter().copied().filter(|e| !held.contains(e)))
    }
}

/// Writes a split manifest using the external node labels.
///
/// ```text
/// # dggan split manifest
/// removal_fraction<TAB>0.5
/// held_out<TAB>src<TAB>dst
/// negative<TAB>fraction<TAB>src<TAB>dst<TAB>kind
/// ```
pub fn write_split_manifest(path: impl AsRef<Path>, manifest: &SplitManifest, ids: &NodeIdMap) -> Result<()> {
    let mut out = String::from("# dggan split manifest\n");
    let _ = writeln!(out, "removal_fraction\t{}", manifest.removal_fraction);
    for &(u, v) in &manifest.held_out {
        let _ = writeln!(out, "held_out\t{}\t{}", ids.label(u), ids.label(v));
    }
    for (fraction, set) in &manifest.test_sets {
        for p in set.negatives() {
            let _ = writeln!(
                out,
                "negative\t{}\t{}\t{}\t{}",
                fraction,
                ids.label(p.u),
                ids.label(p.v),
                p.kind.as_str()
            );
        }
    }
    let path = path.as_ref();
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_split_manifest(path: impl AsRef<Path>, ids: &NodeIdMap) -> Result<SplitManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut removal_fraction = None;
    let mut held_out = Vec::new();
    let mut negatives: Vec<(f64, LabeledPair)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            ["removal_fraction", f] => {
                removal_fraction = Some(f.parse().map_err(|_| bad(lineno, format!("bad fraction `{f}`")))?);
            }
            ["held_out", u, v] => held_out.push((ids.resolve(u)?, ids.resolve(v)?)),
            ["negative", f, u, v, kind] => {
                let fraction: f64 = f.parse().map_err(|_| bad(lineno, format!("bad fraction `{f}`")))?;
                let kind = PairKind::parse(kind).ok_or_else(|| bad(lineno, format!("bad kind `{kind}`")))?;
                negatives.push((
                    fraction,
                    LabeledPair {
                        u: ids.resolve(u)?,
                        v: ids.resolve(v)?,
                        positive: false,
                        kind,
                    },
                ));
            }
            _ => return Err(bad(lineno, format!("unrecognised record `{line}`"))),
        }
    }
    let removal_fraction = removal_fraction.ok_or_else(|| bad(0, "missing removal_fraction".into()))?;

    let mut test_sets: Vec<(f64, LabeledPairSet)> = Vec::new();
    for (fraction, pair) in negatives {
        let slot = match test_sets.iter().position(|(f, _)| *f == fraction) {
            Some(i) => i,
            None => {
                let positives = held_out
                    .iter()
                    .map(|&(u, v)| LabeledPair {
                        u,
                        v,
                        positive: true,
                        kind: PairKind::HeldOutEdge,
                    })
                    .collect();
                test_sets.push((fraction, LabeledPairSet { pairs: positives }));
                test_sets.len() - 1
            }
        };
        test_sets[slot].1.pairs.push(pair);
    }
    Ok(SplitManifest {
        removal_fraction,
        held_out,
        test_sets,
    })
}
