//! Labeled graph model, transaction database I/O and the edge-support index.
//!
//! The text format is the line-oriented transaction format used by the
//! gSpan family of miners:
//!
//! ```text
//! t # 0
//! v 0 A
//! v 1 B
//! e 0 1 x
//! ```
//!
//! Labels are arbitrary whitespace-free tokens, interned into dense ids in
//! order of first appearance (vertex and edge labels have separate tables).

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::io::BufRead;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};

pub type LabelId = u32;
pub type VertexId = usize;
pub type GraphId = usize;

/// Bidirectional token <-> dense id table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    tokens: Vec<String>,
    ids: HashMap<String, LabelId>,
}

impl LabelTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, token: &str) -> LabelId {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as LabelId;
        self.tokens.push(token.to_owned());
        self.ids.insert(token.to_owned(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<LabelId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: LabelId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub label: LabelId,
}

/// A simple, undirected, vertex- and edge-labeled graph.
///
/// Adjacency lists are kept sorted by neighbor index so that edge lookups
/// are a binary search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    pub id: GraphId,
    vertices: Vec<LabelId>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(VertexId, LabelId)>>,
}

impl LabeledGraph {
    /// Builds a graph, checking simplicity (no self-loops, no multi-edges)
    /// and index bounds. Connectivity is not checked here.
    pub fn new(id: GraphId, vertices: Vec<LabelId>, edges: Vec<(VertexId, VertexId, LabelId)>) -> Result<Self> {
        let n = vertices.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut out = Vec::with_capacity(edges.len());
        for (u, v, label) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u},{v}) references a vertex outside 0..{n}")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {u}")));
            }
            adjacency[u].push((v, label));
            adjacency[v].push((u, label));
            out.push(Edge { u, v, label });
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidGraph(format!("duplicate edge at vertex {u}")));
            }
        }
        Ok(Self { id, vertices, edges: out, adjacency })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_label(&self, v: VertexId) -> LabelId {
        self.vertices[v]
    }

    pub fn vertex_labels(&self) -> &[LabelId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, LabelId)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_label(&self, u: VertexId, v: VertexId) -> Option<LabelId> {
        let list = &self.adjacency[u];
        list.binary_search_by_key(&v, |&(w, _)| w).ok().map(|i| list[i].1)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edge_label(u, v).is_some()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(w, _) in &self.adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    }

    /// The subgraph induced by `vertices`, re-indexed in the given order.
    pub fn induced_subgraph(&self, vertices: &[VertexId]) -> LabeledGraph {
        let labels = vertices.iter().map(|&v| self.vertices[v]).collect();
        let mut edges = Vec::new();
        for (i, &a) in vertices.iter().enumerate() {
            for (j, &b) in vertices.iter().enumerate().skip(i + 1) {
                if let Some(l) = self.edge_label(a, b) {
                    edges.push((i, j, l));
                }
            }
        }
        LabeledGraph::new(self.id, labels, edges).expect("induced subgraph of a simple graph is simple")
    }

    /// Applies a vertex permutation: old vertex `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[VertexId]) -> LabeledGraph {
        let n = self.vertex_count();
        let mut labels = vec![0; n];
        for v in 0..n {
            labels[perm[v]] = self.vertices[v];
        }
        let edges = self.edges.iter().map(|e| (perm[e.u], perm[e.v], e.label)).collect();
        LabeledGraph::new(self.id, labels, edges).expect("permutation preserves simplicity")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphDatabase {
    pub graphs: Vec<LabeledGraph>,
    pub vertex_labels: LabelTable,
    pub edge_labels: LabelTable,
}

/// Transactions dropped during parsing, with the reason.
#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub rejected: Vec<(String, String)>,
}

impl GraphDatabase {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graph(&self, gid: GraphId) -> &LabeledGraph {
        &self.graphs[gid]
    }

    /// Appends a graph, assigning it the next id.
    pub fn push(&mut self, mut graph: LabeledGraph) -> GraphId {
        let gid = self.graphs.len();
        graph.id = gid;
        self.graphs.push(graph);
        gid
    }

    pub fn parse_str(text: &str) -> Result<(Self, ParseReport)> {
        Self::parse(text.as_bytes())
    }

    /// Parses a transaction stream.
    ///
    /// Malformed lines abort with the offending line number. Transactions
    /// that contain self-loops, duplicate edges or are disconnected are
    /// skipped, logged, and listed in the returned report.
    pub fn parse<R: BufRead>(reader: R) -> Result<(Self, ParseReport)> {
        let mut db = GraphDatabase::default();
        let mut report = ParseReport::default();
        let mut current: Option<PendingGraph> = None;

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let malformed = |msg: &str| Error::Parse { line: line_no, message: format!("{msg}: {trimmed:?}") };
            match fields.next() {
                Some("t") => {
                    if let Some(pending) = current.take() {
                        pending.finish(&mut db, &mut report);
                    }
                    if fields.next() != Some("#") {
                        return Err(malformed("expected `t # <gid>`"));
                    }
                    let name = fields.next().ok_or_else(|| malformed("missing transaction id"))?;
                    current = Some(PendingGraph::new(name.to_owned()));
                }
                Some("v") => {
                    let g = current.as_mut().ok_or_else(|| malformed("vertex outside a transaction"))?;
                    let vid: usize = parse_field(fields.next(), line_no, "vertex id")?;
                    let token = fields.next().ok_or_else(|| malformed("missing vertex label"))?;
                    if vid != g.labels.len() {
                        return Err(malformed("vertex ids must be dense and ascending"));
                    }
                    g.labels.push(db.vertex_labels.intern(token));
                }
                Some("e") => {
                    let g = current.as_mut().ok_or_else(|| malformed("edge outside a transaction"))?;
                    let u: usize = parse_field(fields.next(), line_no, "edge endpoint")?;
                    let v: usize = parse_field(fields.next(), line_no, "edge endpoint")?;
                    let token = fields.next().ok_or_else(|| malformed("missing edge label"))?;
                    if u >= g.labels.len() || v >= g.labels.len() {
                        return Err(malformed("edge references an undeclared vertex"));
                    }
                    g.edges.push((u, v, db.edge_labels.intern(token)));
                }
                // comments are allowed anywhere; a transaction only ends at the next `t`
                Some(tok) if tok.starts_with('#') => {}
                _ => return Err(malformed("unrecognised line")),
            }
        }
        if let Some(pending) = current.take() {
            pending.finish(&mut db, &mut report);
        }
        if !report.rejected.is_empty() {
            log::warn!("skipped {} invalid transaction(s)", report.rejected.len());
        }
        Ok((db, report))
    }

    /// Serializes to the transaction format. Graph ids are rewritten to
    /// their database position.
    pub fn write(&self) -> String {
        let mut out = String::new();
        for g in &self.graphs {
            writeln!(out, "t # {}", g.id).unwrap();
            for (v, &l) in g.vertices.iter().enumerate() {
                writeln!(out, "v {} {}", v, self.vertex_labels.token(l)).unwrap();
            }
            for e in &g.edges {
                writeln!(out, "e {} {} {}", e.u, e.v, self.edge_labels.token(e.label)).unwrap();
            }
        }
        out
    }

    pub fn stats(&self) -> DbStats {
        let n = self.len();
        let (sum_v, sum_e) =
            self.graphs.iter().fold((0usize, 0usize), |(v, e), g| (v + g.vertex_count(), e + g.edge_count()));
        let mean = |s: usize| if n == 0 { 0.0 } else { s as f64 / n as f64 };
        DbStats {
            graphs: n,
            avg_vertices: mean(sum_v),
            avg_edges: mean(sum_e),
            vertex_labels: self.vertex_labels.len(),
            edge_labels: self.edge_labels.len(),
        }
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<T> {
    field
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::Parse { line, message: format!("missing or invalid {what}") })
}

struct PendingGraph {
    name: String,
    labels: Vec<LabelId>,
    edges: Vec<(VertexId, VertexId, LabelId)>,
}

impl PendingGraph {
    fn new(name: String) -> Self {
        Self { name, labels: Vec::new(), edges: Vec::new() }
    }

    fn finish(self, db: &mut GraphDatabase, report: &mut ParseReport) {
        let gid = db.len();
        match LabeledGraph::new(gid, self.labels, self.edges) {
            Ok(g) if g.vertex_count() > 0 && g.is_connected() => {
                db.graphs.push(g);
            }
            Ok(_) => {
                log::warn!("transaction {}: disconnected or empty graph, skipped", self.name);
                report.rejected.push((self.name, "disconnected".into()));
            }
            Err(e) => {
                log::warn!("transaction {}: {e}, skipped", self.name);
                report.rejected.push((self.name, e.to_string()));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbStats {
    pub graphs: usize,
    pub avg_vertices: f64,
    pub avg_edges: f64,
    pub vertex_labels: usize,
    pub edge_labels: usize,
}

/// An unordered labeled edge in canonical orientation (`la <= lb`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeTriple {
    la: LabelId,
    le: LabelId,
    lb: LabelId,
}

impl EdgeTriple {
    pub fn new(a: LabelId, edge: LabelId, b: LabelId) -> Self {
        let (la, lb) = if a <= b { (a, b) } else { (b, a) };
        Self { la, le: edge, lb }
    }

    pub fn parts(&self) -> (LabelId, LabelId, LabelId) {
        (self.la, self.le, self.lb)
    }
}

/// Edge triple -> set of graph ids containing such an edge.
#[derive(Debug, Clone)]
pub struct EdgeSupportIndex {
    width: usize,
    sets: HashMap<EdgeTriple, FixedBitSet>,
}

impl EdgeSupportIndex {
    /// One pass over every edge of every graph.
    pub fn build(db: &GraphDatabase) -> Self {
        let width = db.len();
        let mut sets: HashMap<EdgeTriple, FixedBitSet> = HashMap::new();
        for g in &db.graphs {
            for e in &g.edges {
                let t = EdgeTriple::new(g.vertex_label(e.u), e.label, g.vertex_label(e.v));
                sets.entry(t).or_insert_with(|| FixedBitSet::with_capacity(width)).insert(g.id);
            }
        }
        Self { width, sets }
    }

    /// Number of graphs the index was built over.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn support_set(&self, t: &EdgeTriple) -> Option<&FixedBitSet> {
        self.sets.get(t)
    }

    pub fn support(&self, t: &EdgeTriple) -> usize {
        self.sets.get(t).map_or(0, |s| s.count_ones(..))
    }

    /// Graph ids containing `t`, ascending.
    pub fn graph_ids(&self, t: &EdgeTriple) -> Vec<GraphId> {
        self.sets.get(t).map_or_else(Vec::new, |s| s.ones().collect())
    }

    pub fn triples(&self) -> impl Iterator<Item = &EdgeTriple> {
        self.sets.keys()
    }
}
