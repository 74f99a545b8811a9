//! The directed evidence-comment network: node and pair classification,
//! weakly connected components, induced subgraphs and degree centrality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotationSet, Sentiment};
use crate::error::{Error, Result};
use crate::ingest::{CommentLink, Corpus, Pmid, PubRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    OriginalResearch,
    OtherResearch,
    Comment,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::OriginalResearch => "original_research",
            NodeKind::OtherResearch => "other_research",
            NodeKind::Comment => "comment",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "original_research" => Ok(NodeKind::OriginalResearch),
            "other_research" => Ok(NodeKind::OtherResearch),
            "comment" => Ok(NodeKind::Comment),
            _ => Err(Error::Parse(format!("unknown node kind {s:?}"))),
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairKind {
    EvidenceComment,
    CommentComment,
}

const COMMENT_TYPES: [&str; 3] = ["Comment", "Letter", "Editorial"];

fn is_primary_research_type(tag: &str) -> bool {
    let t = tag.to_ascii_lowercase();
    t == "journal article"
        || t.starts_with("clinical trial")
        || t == "randomized controlled trial"
        || t == "pragmatic clinical trial"
        || t == "controlled clinical trial"
        || t == "observational study"
        || t == "case reports"
        || t == "multicenter study"
        || t == "comparative study"
}

/// Comment if typed as a comment or if the record comments on something;
/// otherwise original research when it carries a primary-research type and
/// is not a review; otherwise other research.
pub fn classify_node(record: &PubRecord, links: &[CommentLink]) -> NodeKind {
    let comments_on_something = links.iter().any(|l| l.source == record.pmid);
    classify_with(record, comments_on_something)
}

fn classify_with(record: &PubRecord, is_source: bool) -> NodeKind {
    if is_source || COMMENT_TYPES.iter().any(|t| record.has_pub_type(t)) {
        return NodeKind::Comment;
    }
    let primary = record.pub_types.iter().any(|t| is_primary_research_type(t));
    if primary && !record.has_pub_type("Review") {
        NodeKind::OriginalResearch
    } else {
        NodeKind::OtherResearch
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeAttrs {
    pub kind: NodeKind,
    pub date: Option<NaiveDate>,
    pub title: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub source: Pmid,
    pub target: Pmid,
    pub sentiment: Option<Sentiment>,
}

impl Edge {
    pub fn link(&self) -> CommentLink {
        CommentLink::new(self.source, self.target)
    }
}

/// Directed graph; edges point from a comment to what it comments on.
///
/// Nodes are keyed by PMID and edges kept sorted by (source, target), so two
/// networks built from the same content compare equal regardless of input
/// order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ecn {
    nodes: BTreeMap<Pmid, NodeAttrs>,
    edges: Vec<Edge>,
}

impl Ecn {
    /// Assembles a network, enforcing endpoint, self-loop and parallel-edge
    /// invariants.
    pub fn from_parts(nodes: BTreeMap<Pmid, NodeAttrs>, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut by_pair: BTreeMap<CommentLink, Edge> = BTreeMap::new();
        for e in edges {
            if e.source == e.target {
                return Err(Error::InvalidArgument(format!("self-loop on {}", e.source)));
            }
            for p in [e.source, e.target] {
                if !nodes.contains_key(&p) {
                    return Err(Error::InvalidArgument(format!("edge endpoint {p} is not a node")));
                }
            }
            if by_pair.insert(e.link(), e).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "parallel edge {}->{}",
                    e.source, e.target
                )));
            }
        }
        Ok(Ecn {
            nodes,
            edges: by_pair.into_values().collect(),
        })
    }

    pub fn nodes(&self) -> &BTreeMap<Pmid, NodeAttrs> {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, pmid: Pmid) -> Option<&NodeAttrs> {
        self.nodes.get(&pmid)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Copy with each edge's sentiment taken from the matching annotation.
    pub fn with_sentiments(&self, annotations: &AnnotationSet) -> Ecn {
        Ecn {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    sentiment: annotations.sentiment_of(&e.link()),
                    ..*e
                })
                .collect(),
        }
    }

    /// Subgraph induced by `members`: those nodes plus every edge with both
    /// endpoints inside.
    pub fn induced(&self, members: &BTreeSet<Pmid>) -> Ecn {
        Ecn {
            nodes: self
                .nodes
                .iter()
                .filter(|(p, _)| members.contains(p))
                .map(|(p, a)| (*p, a.clone()))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| members.contains(&e.source) && members.contains(&e.target))
                .copied()
                .collect(),
        }
    }

    /// Distinct undirected neighbours of every node.
    fn neighbours(&self) -> BTreeMap<Pmid, BTreeSet<Pmid>> {
        let mut adj: BTreeMap<Pmid, BTreeSet<Pmid>> = self.nodes.keys().map(|p| (*p, BTreeSet::new())).collect();
        for e in &self.edges {
            adj.entry(e.source).or_default().insert(e.target);
            adj.entry(e.target).or_default().insert(e.source);
        }
        adj
    }
}

/// Whether a link is a reply to a comment or a comment on evidence.
pub fn classify_pair(link: &CommentLink, ecn: &Ecn) -> Result<PairKind> {
    if ecn.node(link.source).is_none() {
        return Err(Error::InvalidArgument(format!("link source {} is not in the network", link.source)));
    }
    let target = ecn
        .node(link.target)
        .ok_or_else(|| Error::InvalidArgument(format!("link target {} is not in the network", link.target)))?;
    Ok(if target.kind == NodeKind::Comment {
        PairKind::CommentComment
    } else {
        PairKind::EvidenceComment
    })
}

/// One node per record and one edge per resolved link; duplicates and
/// self-loops are dropped.
pub fn build_ecn(corpus: &Corpus) -> Ecn {
    let sources: BTreeSet<Pmid> = corpus.resolved_links().map(|l| l.source).collect();
    let nodes = corpus
        .records
        .values()
        .map(|r| {
            (
                r.pmid,
                NodeAttrs {
                    kind: classify_with(r, sources.contains(&r.pmid)),
                    date: r.effective_date(),
                    title: r.title.clone(),
                },
            )
        })
        .collect();
    let pairs: BTreeSet<CommentLink> = corpus
        .resolved_links()
        .filter(|l| !l.is_self_loop())
        .copied()
        .collect();
    Ecn {
        nodes,
        edges: pairs
            .into_iter()
            .map(|l| Edge {
                source: l.source,
                target: l.target,
                sentiment: None,
            })
            .collect(),
    }
}

/// Components ordered by size descending, ties by smallest member ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComponentSet {
    components: Vec<BTreeSet<Pmid>>,
}

impl ComponentSet {
    pub fn from_unordered(mut components: Vec<BTreeSet<Pmid>>) -> Self {
        components.retain(|c| !c.is_empty());
        components.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.first().cmp(&b.first())));
        ComponentSet { components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BTreeSet<Pmid>> {
        self.components.iter()
    }

    /// The k-th biggest component, 1-based.
    pub fn get(&self, k: usize) -> Option<&BTreeSet<Pmid>> {
        k.checked_sub(1).and_then(|i| self.components.get(i))
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.components.iter().map(BTreeSet::len).collect()
    }

    /// Index (1-based rank) of the component holding `pmid`.
    pub fn rank_of(&self, pmid: Pmid) -> Option<usize> {
        self.components.iter().position(|c| c.contains(&pmid)).map(|i| i + 1)
    }
}

/// Disjoint-set forest over dense indices.
struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Components of the network with edge direction ignored.
pub fn weakly_connected_components(ecn: &Ecn) -> ComponentSet {
    let ids: Vec<Pmid> = ecn.nodes.keys().copied().collect();
    let index: BTreeMap<Pmid, usize> = ids.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut dsu = DisjointSet::new(ids.len());
    for e in &ecn.edges {
        dsu.union(index[&e.source], index[&e.target]);
    }
    let mut groups: BTreeMap<usize, BTreeSet<Pmid>> = BTreeMap::new();
    for (i, p) in ids.iter().enumerate() {
        groups.entry(dsu.find(i)).or_default().insert(*p);
    }
    ComponentSet::from_unordered(groups.into_values().collect())
}

/// Induced subgraph of the k-th biggest component (1-based).
pub fn top_subgraph(ecn: &Ecn, k: usize) -> Result<Ecn> {
    let components = weakly_connected_components(ecn);
    let members = components.get(k).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "component rank {k} out of range (graph has {} components)",
            components.len()
        ))
    })?;
    Ok(ecn.induced(members))
}

/// Undirected degree divided by (component size - 1); nodes in single-node
/// components score 0. Degree counts distinct neighbours, so a mutual pair of
/// comments contributes once.
pub fn degree_centrality(ecn: &Ecn) -> BTreeMap<Pmid, f64> {
    let adj = ecn.neighbours();
    let mut out = BTreeMap::new();
    for component in weakly_connected_components(ecn).iter() {
        let n = component.len();
        for p in component {
            let value = if n <= 1 {
                0.0
            } else {
                adj[p].len() as f64 / (n - 1) as f64
            };
            out.insert(*p, value);
        }
    }
    out
}

/// Counts of node kinds, reported alongside raw evidence/comment counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KindCounts {
    pub original_research: usize,
    pub other_research: usize,
    pub comment: usize,
}

pub fn kind_counts(ecn: &Ecn) -> KindCounts {
    let mut k = KindCounts::default();
    for a in ecn.nodes.values() {
        match a.kind {
            NodeKind::OriginalResearch => k.original_research += 1,
            NodeKind::OtherResearch => k.other_research += 1,
            NodeKind::Comment => k.comment += 1,
        }
    }
    k
}
