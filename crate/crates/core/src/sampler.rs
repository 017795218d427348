//! Metropolis-Hastings walk over the connected induced p-subgraphs of one
//! host graph.
//!
//! A state is a set of p host vertices inducing a connected subgraph. Its
//! neighbors are the sets obtained by swapping one member for a non-member
//! that keeps the induced subgraph connected. Proposals are uniform over
//! neighbors and accepted with `min(1, d_x * s(y) / (d_y * s(x)))`, which
//! targets a stationary distribution proportional to the score `s`.

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeSupportIndex, EdgeTriple, GraphId, LabeledGraph, VertexId};

/// Largest pattern the walk supports (local adjacency is a `u32` mask).
pub const MAX_PATTERN_SIZE: usize = 16;

/// Proposal retries in [`MhMode::Paper`] before giving up on a step.
pub const DEFAULT_RETRY_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreFn {
    /// Mean support of the induced edges' label triples.
    S1,
    /// Size of the intersection of the induced edges' support-sets.
    S2,
    /// Constant 1.
    Uniform,
}

impl FromStr for ScoreFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(ScoreFn::S1),
            "s2" => Ok(ScoreFn::S2),
            "uniform" => Ok(ScoreFn::Uniform),
            _ => Err(Error::Config(format!("unknown score function {s:?}"))),
        }
    }
}

/// How a rejected proposal is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MhMode {
    /// Keep proposing until a neighbor is accepted, then move there.
    Paper,
    /// Propose once; on rejection stay put (the standard MH kernel).
    Strict,
}

impl FromStr for MhMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(MhMode::Paper),
            "strict" => Ok(MhMode::Strict),
            _ => Err(Error::Config(format!("unknown MH mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphState {
    pub host: GraphId,
    /// Sorted host vertex indices.
    pub vertices: Vec<VertexId>,
    /// Neighbor count of this state.
    pub degree: usize,
    pub score: f64,
}

/// Swap `out` (a member) for `into` (a non-member).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NeighborMove {
    pub out: VertexId,
    pub into: VertexId,
}

impl NeighborMove {
    pub fn apply(&self, vertices: &[VertexId]) -> Vec<VertexId> {
        let mut next: Vec<VertexId> = vertices.iter().copied().filter(|&v| v != self.out).collect();
        let pos = next.binary_search(&self.into).unwrap_err();
        next.insert(pos, self.into);
        next
    }
}

/// Scores vertex sets of database graphs against an edge-support index.
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'a> {
    pub index: &'a EdgeSupportIndex,
    pub kind: ScoreFn,
}

impl<'a> Scorer<'a> {
    pub fn new(index: &'a EdgeSupportIndex, kind: ScoreFn) -> Self {
        Self { index, kind }
    }

    pub fn score(&self, g: &LabeledGraph, vertices: &[VertexId]) -> f64 {
        match self.kind {
            ScoreFn::S1 => score_s1(vertices, g, self.index),
            ScoreFn::S2 => score_s2(vertices, g, self.index) as f64,
            ScoreFn::Uniform => 1.0,
        }
    }
}

fn induced_triples<'a>(vertices: &'a [VertexId], g: &'a LabeledGraph) -> impl Iterator<Item = EdgeTriple> + 'a {
    vertices.iter().enumerate().flat_map(move |(i, &a)| {
        vertices[i + 1..]
            .iter()
            .filter_map(move |&b| g.edge_label(a, b).map(|l| EdgeTriple::new(g.vertex_label(a), l, g.vertex_label(b))))
    })
}

/// Mean edge support over the induced edges. Zero if there are none.
pub fn score_s1(vertices: &[VertexId], g: &LabeledGraph, index: &EdgeSupportIndex) -> f64 {
    let (sum, count) = induced_triples(vertices, g).fold((0usize, 0usize), |(s, c), t| (s + index.support(&t), c + 1));
    if count == 0 {
        0.0
    } else {
        sum as f64 / count as f64
    }
}

/// Cardinality of the intersection of the induced edges' support-sets.
pub fn score_s2(vertices: &[VertexId], g: &LabeledGraph, index: &EdgeSupportIndex) -> usize {
    let mut sets = Vec::new();
    for t in induced_triples(vertices, g) {
        match index.support_set(&t) {
            Some(s) => sets.push(s.as_slice()),
            None => return 0,
        }
    }
    let Some((first, rest)) = sets.split_first() else {
        return 0;
    };
    first.iter().enumerate().map(|(i, &block)| rest.iter().fold(block, |acc, s| acc & s[i]).count_ones() as usize).sum()
}

pub fn acceptance_probability(d_x: usize, s_x: f64, d_y: usize, s_y: f64) -> Result<f64> {
    if d_y == 0 || s_x <= 0.0 {
        return Err(Error::Undefined("acceptance ratio has a zero denominator"));
    }
    Ok(((d_x as f64 * s_y) / (d_y as f64 * s_x)).min(1.0))
}

/// Local view of a vertex set: bit `j` of `adj[i]` marks adjacency between
/// the i-th and j-th members.
struct LocalView {
    adj: Vec<u32>,
    boundary: Vec<VertexId>,
    /// Member mask adjacent to each boundary vertex.
    boundary_masks: Vec<u32>,
}

impl LocalView {
    fn new(g: &LabeledGraph, vertices: &[VertexId]) -> Self {
        let p = vertices.len();
        debug_assert!(p <= MAX_PATTERN_SIZE);
        let mut adj = vec![0u32; p];
        let mut boundary = Vec::new();
        for (i, &v) in vertices.iter().enumerate() {
            for &(w, _) in g.neighbors(v) {
                match vertices.binary_search(&w) {
                    Ok(j) => adj[i] |= 1 << j,
                    Err(_) => boundary.push(w),
                }
            }
        }
        boundary.sort_unstable();
        boundary.dedup();
        let boundary_masks = boundary
            .iter()
            .map(|&w| {
                vertices.iter().enumerate().filter(|&(_, &v)| g.has_edge(v, w)).fold(0u32, |m, (i, _)| m | 1 << i)
            })
            .collect();
        Self { adj, boundary, boundary_masks }
    }

    /// Connected components of the members left after removing member `k`.
    fn components_without(&self, k: usize) -> Vec<u32> {
        let p = self.adj.len();
        let mut remaining: u32 = ((1u64 << p) - 1) as u32 & !(1 << k);
        let mut comps = Vec::new();
        while remaining != 0 {
            let start = remaining.trailing_zeros() as usize;
            let mut comp = 1u32 << start;
            let mut frontier = comp;
            while frontier != 0 {
                let i = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let fresh = self.adj[i] & remaining & !comp;
                comp |= fresh;
                frontier |= fresh;
            }
            remaining &= !comp;
            comps.push(comp);
        }
        comps
    }

    fn for_each_move(&self, vertices: &[VertexId], mut f: impl FnMut(NeighborMove)) {
        for (k, &out) in vertices.iter().enumerate() {
            let comps = self.components_without(k);
            for (&into, &mask) in self.boundary.iter().zip(&self.boundary_masks) {
                let mask = mask & !(1 << k);
                // `into` must touch every component left behind
                if mask != 0 && comps.iter().all(|&c| c & mask != 0) {
                    f(NeighborMove { out, into });
                }
            }
        }
    }
}

/// Every valid swap from `vertices`, ordered by (out, into).
pub fn enumerate_neighbors(g: &LabeledGraph, vertices: &[VertexId]) -> Vec<NeighborMove> {
    let view = LocalView::new(g, vertices);
    let mut moves = Vec::new();
    view.for_each_move(vertices, |m| moves.push(m));
    moves
}

pub fn neighbor_count(g: &LabeledGraph, vertices: &[VertexId]) -> usize {
    let view = LocalView::new(g, vertices);
    let mut count = 0;
    view.for_each_move(vertices, |_| count += 1);
    count
}

/// Plain BFS connectivity check of the subgraph induced by `vertices`.
pub fn is_connected_subset(g: &LabeledGraph, vertices: &[VertexId]) -> bool {
    if vertices.is_empty() {
        return true;
    }
    let mut seen = vec![false; vertices.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for (j, &w) in vertices.iter().enumerate() {
            if !seen[j] && g.has_edge(vertices[i], w) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn check_size(g: &LabeledGraph, p: usize) -> Result<()> {
    if !(2..=MAX_PATTERN_SIZE).contains(&p) {
        return Err(Error::Config(format!("pattern size must be in 2..={MAX_PATTERN_SIZE}, got {p}")));
    }
    if g.vertex_count() < p {
        return Err(Error::GraphTooSmall { vertices: g.vertex_count(), p });
    }
    Ok(())
}

pub fn make_state(g: &LabeledGraph, mut vertices: Vec<VertexId>, scorer: &Scorer<'_>) -> SubgraphState {
    vertices.sort_unstable();
    let degree = neighbor_count(g, &vertices);
    let score = scorer.score(g, &vertices);
    SubgraphState { host: g.id, vertices, degree, score }
}

/// Grows a p-subgraph from a uniformly chosen edge by repeatedly adding a
/// uniformly chosen frontier vertex.
pub fn init_state<R: Rng>(g: &LabeledGraph, p: usize, scorer: &Scorer<'_>, rng: &mut R) -> Result<SubgraphState> {
    check_size(g, p)?;
    let e = g.edges()[rng.gen_range(0..g.edge_count())];
    let mut vertices = vec![e.u.min(e.v), e.u.max(e.v)];
    while vertices.len() < p {
        let mut frontier: Vec<VertexId> = vertices
            .iter()
            .flat_map(|&v| g.neighbors(v).iter().map(|&(w, _)| w))
            .filter(|w| vertices.binary_search(w).is_err())
            .collect();
        frontier.sort_unstable();
        frontier.dedup();
        let w = frontier[rng.gen_range(0..frontier.len())];
        let pos = vertices.binary_search(&w).unwrap_err();
        vertices.insert(pos, w);
    }
    Ok(make_state(g, vertices, scorer))
}

/// Result of one sampling step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Moved,
    /// STRICT-mode rejection, or PAPER-mode retry cap reached.
    Stayed,
    /// The state had no neighbors and was re-seeded.
    Reinitialized,
}

/// One transition of the chain. Returns the next state and what happened.
pub fn mh_step<R: Rng>(
    g: &LabeledGraph,
    state: &SubgraphState,
    scorer: &Scorer<'_>,
    mode: MhMode,
    rng: &mut R,
) -> Result<(SubgraphState, StepOutcome)> {
    mh_step_with_cap(g, state, scorer, mode, DEFAULT_RETRY_CAP, rng)
}

pub fn mh_step_with_cap<R: Rng>(
    g: &LabeledGraph,
    state: &SubgraphState,
    scorer: &Scorer<'_>,
    mode: MhMode,
    retry_cap: usize,
    rng: &mut R,
) -> Result<(SubgraphState, StepOutcome)> {
    let moves = enumerate_neighbors(g, &state.vertices);
    if moves.is_empty() {
        let fresh = init_state(g, state.vertices.len(), scorer, rng)?;
        return Ok((fresh, StepOutcome::Reinitialized));
    }
    let d_x = moves.len();
    let attempts = match mode {
        MhMode::Paper => retry_cap.max(1),
        MhMode::Strict => 1,
    };
    for _ in 0..attempts {
        let mv = moves[rng.gen_range(0..d_x)];
        let candidate = make_state(g, mv.apply(&state.vertices), scorer);
        let accept = acceptance_probability(d_x, state.score, candidate.degree, candidate.score)?;
        if rng.gen::<f64>() <= accept {
            return Ok((candidate, StepOutcome::Moved));
        }
    }
    if mode == MhMode::Paper {
        log::debug!("graph {}: no proposal accepted after {attempts} tries", g.id);
    }
    Ok((state.clone(), StepOutcome::Stayed))
}

/// Saved chain state per database graph.
#[derive(Debug, Clone, Default)]
pub struct ChainRegistry {
    states: Vec<Option<SubgraphState>>,
}

impl ChainRegistry {
    pub fn new(graphs: usize) -> Self {
        Self { states: vec![None; graphs] }
    }

    pub fn get(&self, gid: GraphId) -> Option<&SubgraphState> {
        self.states.get(gid).and_then(Option::as_ref)
    }

    pub fn set(&mut self, state: SubgraphState) {
        let gid = state.host;
        self.states[gid] = Some(state);
    }

    pub fn active(&self) -> usize {
        self.states.iter().filter(|s| s.is_some()).count()
    }

    /// Advances the chain of `g`: a graph sampled for the first time gets a
    /// freshly grown state, later visits take one MH step from the saved
    /// state.
    pub fn sample<R: Rng>(
        &mut self,
        g: &LabeledGraph,
        p: usize,
        scorer: &Scorer<'_>,
        mode: MhMode,
        rng: &mut R,
    ) -> Result<&SubgraphState> {
        let next = match self.get(g.id) {
            None => init_state(g, p, scorer, rng)?,
            Some(current) => mh_step(g, current, scorer, mode, rng)?.0,
        };
        self.set(next);
        Ok(self.get(g.id).unwrap())
    }
}
