//! Minimum DFS code canonical labeling for small labeled graphs.
//!
//! The code is built greedily one edge at a time. All partial embeddings
//! ("projections") that realise the current minimal prefix are kept, every
//! rightmost-path extension of every projection is generated, and only the
//! projections producing the smallest extension survive. Extension order:
//!
//! * backward edges (from the rightmost vertex to a vertex on the rightmost
//!   path) come before any forward edge, smaller target index first, then
//!   smaller edge label;
//! * forward edges grow from the deepest rightmost-path vertex first, then by
//!   edge label, then by the new vertex's label.
//!
//! Since the surviving set is closed under automorphisms of the input, the
//! result does not depend on vertex numbering.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LabelId, LabeledGraph, VertexId};

pub const DEFAULT_MAX_VERTICES: usize = 16;

/// Largest graph accepted by [`brute_force_isomorphic`].
pub const BRUTE_FORCE_MAX_VERTICES: usize = 8;

const UNSEEN: u8 = u8::MAX;

/// One tuple of a DFS code: discovery indices and labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DfsEdge {
    pub from: usize,
    pub to: usize,
    pub from_label: LabelId,
    pub edge_label: LabelId,
    pub to_label: LabelId,
}

impl DfsEdge {
    pub fn is_forward(&self) -> bool {
        self.to > self.from
    }

    /// Sort key realising the extension order described in the module docs.
    /// Only meaningful between edges that extend the same prefix.
    pub fn order_key(&self) -> (u8, usize, LabelId, LabelId, LabelId) {
        if self.is_forward() {
            (1, usize::MAX - self.from, self.from_label, self.edge_label, self.to_label)
        } else {
            (0, self.to, self.edge_label, self.from_label, self.to_label)
        }
    }
}

impl fmt::Display for DfsEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{},{})", self.from, self.to, self.from_label, self.edge_label, self.to_label)
    }
}

/// Isomorphism-invariant pattern key: the text rendering of the minimum
/// DFS code, tuples joined by `;`. A single vertex renders as `(0,<label>)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalCode(String);

impl CanonicalCode {
    pub fn from_edges(edges: &[DfsEdge]) -> Self {
        let parts: Vec<String> = edges.iter().map(ToString::to_string).collect();
        Self(parts.join(";"))
    }

    fn single_vertex(label: LabelId) -> Self {
        Self(format!("(0,{label})"))
    }

    /// Wraps an already serialized code (e.g. read back from a file).
    pub fn from_text(text: impl Into<String>) -> Self {
        Self(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Number of edges in the pattern.
    pub fn edge_count(&self) -> usize {
        if self.0.is_empty() || !self.0.contains(';') && self.0.matches(',').count() == 1 {
            0
        } else {
            self.0.split(';').count()
        }
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Canonical code with the default vertex limit.
pub fn min_dfs_code(g: &LabeledGraph) -> Result<CanonicalCode> {
    min_dfs_code_with_limit(g, DEFAULT_MAX_VERTICES)
}

pub fn min_dfs_code_with_limit(g: &LabeledGraph, max_vertices: usize) -> Result<CanonicalCode> {
    let n = g.vertex_count();
    if n == 1 {
        return Ok(CanonicalCode::single_vertex(g.vertex_label(0)));
    }
    Ok(CanonicalCode::from_edges(&min_dfs_edges(g, max_vertices)?))
}

#[derive(Clone, Copy)]
struct Projection {
    /// dfs index -> host vertex
    map: [u8; 16],
    /// host vertex -> dfs index
    inv: [u8; 16],
    used: u128,
}

struct SmallHost {
    n: usize,
    labels: Vec<LabelId>,
    /// (edge id, edge label) per ordered vertex pair
    pairs: Vec<Option<(u8, LabelId)>>,
}

impl SmallHost {
    fn pair(&self, u: usize, v: usize) -> Option<(u8, LabelId)> {
        self.pairs[u * self.n + v]
    }
}

/// The minimum DFS code as a tuple sequence.
pub fn min_dfs_edges(g: &LabeledGraph, max_vertices: usize) -> Result<Vec<DfsEdge>> {
    let n = g.vertex_count();
    let max = max_vertices.min(DEFAULT_MAX_VERTICES);
    if n > max {
        return Err(Error::TooLarge { size: n, max });
    }
    if n == 0 {
        return Err(Error::InvalidGraph("empty graph has no code".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if n == 1 {
        return Ok(Vec::new());
    }

    let mut pairs = vec![None; n * n];
    for (id, e) in g.edges().iter().enumerate() {
        pairs[e.u * n + e.v] = Some((id as u8, e.label));
        pairs[e.v * n + e.u] = Some((id as u8, e.label));
    }
    let host = SmallHost { n, labels: g.vertex_labels().to_vec(), pairs };
    let m = g.edge_count();

    // first edge: minimal (from_label, edge_label, to_label) over both orientations
    let mut first: Option<DfsEdge> = None;
    let mut projections = Vec::new();
    for e in g.edges() {
        for (a, b) in [(e.u, e.v), (e.v, e.u)] {
            let cand =
                DfsEdge { from: 0, to: 1, from_label: host.labels[a], edge_label: e.label, to_label: host.labels[b] };
            let key = (cand.from_label, cand.edge_label, cand.to_label);
            let ord = first.map_or(Ordering::Less, |f| key.cmp(&(f.from_label, f.edge_label, f.to_label)));
            if ord == Ordering::Greater {
                continue;
            }
            if ord == Ordering::Less {
                first = Some(cand);
                projections.clear();
            }
            let mut p = Projection { map: [UNSEEN; 16], inv: [UNSEEN; 16], used: 0 };
            p.map[0] = a as u8;
            p.map[1] = b as u8;
            p.inv[a] = 0;
            p.inv[b] = 1;
            p.used |= 1u128 << host.pair(a, b).unwrap().0;
            projections.push(p);
        }
    }

    let mut code = vec![first.expect("connected graph with n >= 2 has an edge")];
    let mut rmpath: Vec<usize> = vec![0, 1];
    let mut discovered = 2usize;

    while code.len() < m {
        let mut best: Option<DfsEdge> = None;
        let mut next: Vec<Projection> = Vec::new();
        let rightmost = *rmpath.last().unwrap();

        for proj in &projections {
            for (cand, ext) in extensions(&host, proj, &rmpath, rightmost, discovered) {
                let ord = best.map_or(Ordering::Less, |b| cand.order_key().cmp(&b.order_key()));
                match ord {
                    Ordering::Greater => {}
                    Ordering::Less => {
                        best = Some(cand);
                        next.clear();
                        next.push(ext);
                    }
                    Ordering::Equal => next.push(ext),
                }
            }
        }

        let edge = best.expect("connected graph always admits a rightmost extension");
        if edge.is_forward() {
            let pos = rmpath.iter().position(|&x| x == edge.from).unwrap();
            rmpath.truncate(pos + 1);
            rmpath.push(edge.to);
            discovered += 1;
        }
        code.push(edge);
        projections = next;
    }
    Ok(code)
}

fn extensions(
    host: &SmallHost,
    proj: &Projection,
    rmpath: &[usize],
    rightmost: usize,
    discovered: usize,
) -> Vec<(DfsEdge, Projection)> {
    let mut out = Vec::new();
    let hr = proj.map[rightmost] as usize;

    // backward: rightmost vertex -> rightmost path
    for &j in &rmpath[..rmpath.len() - 1] {
        let hj = proj.map[j] as usize;
        if let Some((eid, le)) = host.pair(hr, hj) {
            if proj.used & (1u128 << eid) == 0 {
                let mut ext = *proj;
                ext.used |= 1u128 << eid;
                out.push((
                    DfsEdge {
                        from: rightmost,
                        to: j,
                        from_label: host.labels[hr],
                        edge_label: le,
                        to_label: host.labels[hj],
                    },
                    ext,
                ));
            }
        }
    }
    if !out.is_empty() {
        return out;
    }

    // forward: from any rightmost-path vertex to an undiscovered vertex
    for &i in rmpath.iter().rev() {
        let hi = proj.map[i] as usize;
        for w in 0..host.n {
            if proj.inv[w] != UNSEEN {
                continue;
            }
            if let Some((eid, le)) = host.pair(hi, w) {
                let mut ext = *proj;
                ext.used |= 1u128 << eid;
                ext.map[discovered] = w as u8;
                ext.inv[w] = discovered as u8;
                out.push((
                    DfsEdge {
                        from: i,
                        to: discovered,
                        from_label: host.labels[hi],
                        edge_label: le,
                        to_label: host.labels[w],
                    },
                    ext,
                ));
            }
        }
    }
    out
}

/// Exhaustive isomorphism test over all vertex permutations.
pub fn brute_force_isomorphic(g1: &LabeledGraph, g2: &LabeledGraph) -> Result<bool> {
    let n = g1.vertex_count();
    for g in [g1, g2] {
        if g.vertex_count() > BRUTE_FORCE_MAX_VERTICES {
            return Err(Error::TooLarge { size: g.vertex_count(), max: BRUTE_FORCE_MAX_VERTICES });
        }
    }
    if n != g2.vertex_count() || g1.edge_count() != g2.edge_count() {
        return Ok(false);
    }
    let mut l1 = g1.vertex_labels().to_vec();
    let mut l2 = g2.vertex_labels().to_vec();
    l1.sort_unstable();
    l2.sort_unstable();
    if l1 != l2 {
        return Ok(false);
    }
    let mut perm: Vec<VertexId> = (0..n).collect();
    Ok(any_permutation(&mut perm, 0, &mut |perm| {
        (0..n).all(|v| g1.vertex_label(v) == g2.vertex_label(perm[v]))
            && g1.edges().iter().all(|e| g2.edge_label(perm[e.u], perm[e.v]) == Some(e.label))
    }))
}

fn any_permutation(perm: &mut Vec<VertexId>, k: usize, test: &mut impl FnMut(&[VertexId]) -> bool) -> bool {
    if k == perm.len() {
        return test(perm);
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        if any_permutation(perm, k + 1, test) {
            perm.swap(k, i);
            return true;
        }
        perm.swap(k, i);
    }
    false
}

/// Whether canonical-code equality agrees with brute-force isomorphism.
pub fn codes_equal_iff_isomorphic(g1: &LabeledGraph, g2: &LabeledGraph) -> Result<bool> {
    let iso = brute_force_isomorphic(g1, g2)?;
    let same = min_dfs_code(g1)? == min_dfs_code(g2)?;
    Ok(iso == same)
}
