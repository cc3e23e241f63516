//! Signed k-nearest-neighbor graph over the expanded dataset.
//!
//! Every original or positive point is an anchor. An anchor of class `c`
//! links with sign `+1` to its `n_pos` nearest points among the class-`c`
//! originals and positives, and with sign `-1` to its `n_neg` nearest points
//! among the other classes' originals and positives plus the class-`c`
//! negatives. Generated negatives never act as anchors. Distances are cosine
//! distances in input space; ties go to the lower index.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::{cosine_distance, AugmentedDataset, NeighborKind};
use crate::error::{CoinError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            1 => Some(Sign::Positive),
            -1 => Some(Sign::Negative),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub anchor: usize,
    pub neighbor: usize,
    pub sign: Sign,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignedGraph {
    node_count: usize,
    n_pos: usize,
    n_neg: usize,
    edges: Vec<Edge>,
    /// Edge range of each node; `None` for non-anchors.
    spans: Vec<Option<Range<usize>>>,
}

impl SignedGraph {
    /// Assembles a graph from edges grouped by anchor. `anchors` flags which
    /// nodes are anchors.
    pub fn from_edges(
        node_count: usize,
        n_pos: usize,
        n_neg: usize,
        anchors: &[bool],
        edges: Vec<Edge>,
    ) -> Result<Self> {
        if anchors.len() != node_count {
            return Err(CoinError::LengthMismatch {
                left: anchors.len(),
                right: node_count,
            });
        }
        let mut spans: Vec<Option<Range<usize>>> = anchors.iter().map(|&a| a.then_some(0..0)).collect();
        let mut start = 0;
        while start < edges.len() {
            let anchor = edges[start].anchor;
            let mut end = start;
            while end < edges.len() && edges[end].anchor == anchor {
                let e = edges[end];
                if e.neighbor >= node_count || e.anchor >= node_count {
                    return Err(CoinError::OutOfRange {
                        index: e.neighbor.max(e.anchor),
                        len: node_count,
                    });
                }
                if e.neighbor == e.anchor {
                    return Err(CoinError::IndexMismatch(format!("self edge at node {anchor}")));
                }
                end += 1;
            }
            match spans[anchor] {
                Some(ref r) if r.is_empty() => spans[anchor] = Some(start..end),
                Some(_) => {
                    return Err(CoinError::IndexMismatch(format!(
                        "edges of anchor {anchor} are not contiguous"
                    )))
                }
                None => return Err(CoinError::NonAnchor(anchor)),
            }
            start = end;
        }
        Ok(Self {
            node_count,
            n_pos,
            n_neg,
            edges,
            spans,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_anchor(&self, i: usize) -> bool {
        self.spans.get(i).is_some_and(Option::is_some)
    }

    pub fn anchors(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count).filter(|&i| self.is_anchor(i))
    }

    /// Edges of anchor `i`, positives first, each group nearest first.
    pub fn neighbors_of(&self, i: usize) -> Result<&[Edge]> {
        match self.spans.get(i) {
            None => Err(CoinError::OutOfRange {
                index: i,
                len: self.node_count,
            }),
            Some(None) => Err(CoinError::NonAnchor(i)),
            Some(Some(r)) => Ok(&self.edges[r.clone()]),
        }
    }
}

/// Pool membership for an anchor of class `class`.
fn in_positive_pool(class: usize, other_class: usize, other_kind: NeighborKind) -> bool {
    other_class == class && other_kind != NeighborKind::Negative
}

fn in_negative_pool(class: usize, other_class: usize, other_kind: NeighborKind) -> bool {
    if other_class == class {
        other_kind == NeighborKind::Negative
    } else {
        other_kind != NeighborKind::Negative
    }
}

fn nearest(candidates: &mut [(f64, usize)], k: usize) -> &[(f64, usize)] {
    let k = k.min(candidates.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k > 0 && k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, cmp);
    }
    let head = &mut candidates[..k];
    head.sort_unstable_by(cmp);
    head
}

pub fn build_signed_graph(aug: &AugmentedDataset, n_pos: usize, n_neg: usize) -> Result<SignedGraph> {
    let points = aug.points();
    let n = points.len();
    let anchors: Vec<bool> = points.iter().map(|p| p.kind != NeighborKind::Negative).collect();
    let mut edges = Vec::new();
    if n_pos == 0 && n_neg == 0 {
        return SignedGraph::from_edges(n, n_pos, n_neg, &anchors, edges);
    }

    let mut pos_pool = Vec::with_capacity(n);
    let mut neg_pool = Vec::with_capacity(n);
    for (i, anchor) in points.iter().enumerate() {
        if !anchors[i] {
            continue;
        }
        pos_pool.clear();
        neg_pool.clear();
        for (j, other) in points.iter().enumerate() {
            if j == i {
                continue;
            }
            let want_pos = n_pos > 0 && in_positive_pool(anchor.class, other.class, other.kind);
            let want_neg = n_neg > 0 && in_negative_pool(anchor.class, other.class, other.kind);
            if !(want_pos || want_neg) {
                continue;
            }
            let d = cosine_distance(&anchor.values, &other.values)?;
            if want_pos {
                pos_pool.push((d, j));
            } else {
                neg_pool.push((d, j));
            }
        }
        if n_pos > 0 && pos_pool.is_empty() {
            return Err(CoinError::EmptyPool {
                anchor: i,
                pool: "positive",
            });
        }
        if n_neg > 0 && neg_pool.is_empty() {
            return Err(CoinError::EmptyPool {
                anchor: i,
                pool: "negative",
            });
        }
        for &(_, j) in nearest(&mut pos_pool, n_pos) {
            edges.push(Edge {
                anchor: i,
                neighbor: j,
                sign: Sign::Positive,
            });
        }
        for &(_, j) in nearest(&mut neg_pool, n_neg) {
            edges.push(Edge {
                anchor: i,
                neighbor: j,
                sign: Sign::Negative,
            });
        }
    }
    SignedGraph::from_edges(n, n_pos, n_neg, &anchors, edges)
}

/// Edge list as `i,j,sign`. A leading comment line records the node count,
/// the neighbor counts and the anchor flags so the graph can be rebuilt.
pub fn save_graph(graph: &SignedGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CoinError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let flags: String = (0..graph.node_count)
        .map(|i| if graph.is_anchor(i) { '1' } else { '0' })
        .collect();
    let mut body = format!(
        "# nodes={} n_pos={} n_neg={} anchors={}\ni,j,sign\n",
        graph.node_count, graph.n_pos, graph.n_neg, flags
    );
    for e in &graph.edges {
        body.push_str(&format!("{},{},{}\n", e.anchor, e.neighbor, e.sign.value()));
    }
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CoinError::io(path, e))
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<SignedGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CoinError::io(path, e))?;
    let mut lines = text.lines();
    let meta = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| CoinError::malformed(path, 1, "missing metadata line"))?;
    let mut nodes = None;
    let mut n_pos = None;
    let mut n_neg = None;
    let mut anchors = None;
    for kv in meta.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CoinError::malformed(path, 1, format!("bad metadata token {kv:?}")))?;
        let num = || {
            v.parse::<usize>()
                .map_err(|_| CoinError::malformed(path, 1, format!("bad value for {k}")))
        };
        match k {
            "nodes" => nodes = Some(num()?),
            "n_pos" => n_pos = Some(num()?),
            "n_neg" => n_neg = Some(num()?),
            "anchors" => anchors = Some(v.chars().map(|c| c == '1').collect::<Vec<bool>>()),
            _ => return Err(CoinError::malformed(path, 1, format!("unknown metadata key {k}"))),
        }
    }
    let missing = |k: &str| CoinError::malformed(path, 1, format!("metadata lacks {k}"));
    let nodes = nodes.ok_or_else(|| missing("nodes"))?;
    let anchors = anchors.unwrap_or_default();
    if anchors.len() != nodes {
        return Err(CoinError::malformed(path, 1, "anchor flags do not match node count"));
    }
    if lines.next() != Some("i,j,sign") {
        return Err(CoinError::malformed(path, 2, "expected header i,j,sign"));
    }
    let mut edges = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k as u64 + 3;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CoinError::malformed(
                path,
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let idx = |s: &str, name: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CoinError::malformed(path, lineno, format!("field `{name}`: invalid index {s:?}")))
        };
        let sign = fields[2]
            .trim()
            .parse::<i64>()
            .ok()
            .and_then(Sign::from_value)
            .ok_or_else(|| {
                CoinError::malformed(
                    path,
                    lineno,
                    format!("field `sign`: expected 1 or -1, found {:?}", fields[2]),
                )
            })?;
        edges.push(Edge {
            anchor: idx(fields[0], "i")?,
            neighbor: idx(fields[1], "j")?,
            sign,
        });
    }
    SignedGraph::from_edges(
        nodes,
        n_pos.ok_or_else(|| missing("n_pos"))?,
        n_neg.ok_or_else(|| missing("n_neg"))?,
        &anchors,
        edges,
    )
    .map_err(|e| CoinError::malformed(path, 0, e.to_string()))
}
