//! Exhaustive ground truth: every connected induced p-subgraph of every
//! database graph, grouped by canonical code.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::BufRead;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use crate::canonical::{min_dfs_code, CanonicalCode};
use crate::error::{Error, Result};
use crate::graph::{GraphDatabase, GraphId, LabeledGraph, VertexId};
use crate::metrics::RankedList;
use crate::par::{self, Execution};

pub const DEFAULT_ENUMERATION_CAP: u64 = 100_000_000;

/// Calls `visit` once per connected induced subgraph with `p` vertices
/// (ESU: each set is reached from its smallest vertex only, and extension
/// candidates are restricted to the exclusive neighborhood).
///
/// `visit` returns `false` to stop early.
pub fn for_each_p_subgraph(g: &LabeledGraph, p: usize, mut visit: impl FnMut(&[VertexId]) -> bool) -> bool {
    if p == 0 {
        return true;
    }
    let n = g.vertex_count();
    let mut in_neighborhood = vec![0u32; n];
    for root in 0..n {
        if !for_each_from_root(g, p, root, &mut in_neighborhood, &mut visit) {
            return false;
        }
    }
    true
}

fn for_each_from_root(
    g: &LabeledGraph,
    p: usize,
    root: VertexId,
    in_neighborhood: &mut [u32],
    visit: &mut impl FnMut(&[VertexId]) -> bool,
) -> bool {
    let mut subgraph = vec![root];
    let extension: Vec<VertexId> = g.neighbors(root).iter().map(|&(w, _)| w).filter(|&w| w > root).collect();
    mark(g, root, in_neighborhood, 1);
    let go_on = extend(g, p, root, &mut subgraph, extension, in_neighborhood, visit);
    mark(g, root, in_neighborhood, -1);
    go_on
}

/// `in_neighborhood[v]` counts how many members of the current subgraph are
/// `v` itself or adjacent to `v`.
fn mark(g: &LabeledGraph, v: VertexId, counts: &mut [u32], delta: i32) {
    let apply = |c: &mut u32| *c = c.wrapping_add_signed(delta);
    apply(&mut counts[v]);
    for &(w, _) in g.neighbors(v) {
        apply(&mut counts[w]);
    }
}

fn extend(
    g: &LabeledGraph,
    p: usize,
    root: VertexId,
    subgraph: &mut Vec<VertexId>,
    mut extension: Vec<VertexId>,
    in_neighborhood: &mut [u32],
    visit: &mut impl FnMut(&[VertexId]) -> bool,
) -> bool {
    if subgraph.len() == p {
        let mut sorted = subgraph.clone();
        sorted.sort_unstable();
        return visit(&sorted);
    }
    while let Some(w) = extension.pop() {
        let mut next = extension.clone();
        for &(u, _) in g.neighbors(w) {
            if u > root && in_neighborhood[u] == 0 {
                next.push(u);
            }
        }
        subgraph.push(w);
        mark(g, w, in_neighborhood, 1);
        let go_on = extend(g, p, root, subgraph, next, in_neighborhood, visit);
        mark(g, w, in_neighborhood, -1);
        subgraph.pop();
        if !go_on {
            return false;
        }
    }
    true
}

/// All connected induced p-subgraphs of `g` as sorted vertex sets.
pub fn enumerate_p_subgraphs(g: &LabeledGraph, p: usize) -> impl Iterator<Item = Vec<VertexId>> {
    let mut out = Vec::new();
    for_each_p_subgraph(g, p, |s| {
        out.push(s.to_vec());
        true
    });
    out.into_iter()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSupport {
    pub support_set: BTreeSet<GraphId>,
    /// Occurrences (vertex sets) summed over all graphs.
    pub occurrences: u64,
}

impl CodeSupport {
    pub fn support(&self) -> usize {
        self.support_set.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub p: usize,
    pub codes: BTreeMap<CanonicalCode, CodeSupport>,
    /// Number of connected induced p-subgraphs per graph (`x_j`).
    pub per_graph: Vec<u64>,
}

impl GroundTruth {
    pub fn graphs(&self) -> usize {
        self.per_graph.len()
    }

    pub fn support(&self, code: &CanonicalCode) -> usize {
        self.codes.get(code).map_or(0, CodeSupport::support)
    }

    /// Codes by support descending, ties by code ascending.
    pub fn ranked(&self) -> RankedList {
        let mut items: Vec<(CanonicalCode, f64)> =
            self.codes.iter().map(|(c, s)| (c.clone(), s.support() as f64)).collect();
        // BTreeMap order is code-ascending; a stable sort keeps it within ties
        items.sort_by(|a, b| b.1.total_cmp(&a.1));
        RankedList::new(items).expect("sorted above")
    }

    /// TSV: `code \t support \t id,id,..`, in rank order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (code, _) in self.ranked().items() {
            let s = &self.codes[code];
            let ids: Vec<String> = s.support_set.iter().map(ToString::to_string).collect();
            writeln!(out, "{}\t{}\t{}", code, s.support(), ids.join(",")).unwrap();
        }
        out
    }

    /// TSV: `gid \t x`.
    pub fn counts_tsv(&self) -> String {
        let mut out = String::new();
        for (gid, x) in self.per_graph.iter().enumerate() {
            writeln!(out, "{gid}\t{x}").unwrap();
        }
        out
    }
}

/// Parses a truth TSV back into (code, support, support-set) rows.
pub fn read_truth_tsv<R: BufRead>(reader: R) -> Result<Vec<(CanonicalCode, usize, Vec<GraphId>)>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| Error::Parse { line: i + 1, message: m.to_owned() };
        let mut cols = line.split('\t');
        let code = cols.next().ok_or_else(|| bad("missing code"))?;
        let support: usize =
            cols.next().and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("missing or invalid support"))?;
        let ids = match cols.next().map(str::trim) {
            None | Some("") => Vec::new(),
            Some(s) => s
                .split(',')
                .map(|x| x.parse().map_err(|_| bad("invalid graph id")))
                .collect::<Result<Vec<GraphId>>>()?,
        };
        rows.push((CanonicalCode::from_text(code), support, ids));
    }
    Ok(rows)
}

/// Exact supports of all p-subgraph patterns, refusing when the number of
/// occurrences would exceed `cap`.
pub fn ground_truth(db: &GraphDatabase, p: usize, cap: u64, exec: Execution) -> Result<GroundTruth> {
    if p == 0 {
        return Err(Error::Config("pattern size must be at least 1".into()));
    }
    let total_roots: u64 = db.graphs.iter().map(|g| g.vertex_count() as u64).sum();
    let seen = AtomicU64::new(0);
    let roots_done = AtomicU64::new(0);
    let aborted = AtomicBool::new(false);

    type Partial = Result<(HashMap<CanonicalCode, u64>, u64)>;
    let partials: Vec<Partial> = par::map(exec, &db.graphs, |g| {
        let mut counts: HashMap<CanonicalCode, u64> = HashMap::new();
        let mut x = 0u64;
        let mut error = None;
        let mut in_neighborhood = vec![0u32; g.vertex_count()];
        for root in 0..g.vertex_count() {
            if aborted.load(Ordering::Relaxed) {
                break;
            }
            let finished = for_each_from_root(g, p, root, &mut in_neighborhood, &mut |s| {
                if seen.fetch_add(1, Ordering::Relaxed) >= cap {
                    aborted.store(true, Ordering::Relaxed);
                    return false;
                }
                match min_dfs_code(&g.induced_subgraph(s)) {
                    Ok(code) => {
                        *counts.entry(code).or_insert(0) += 1;
                        x += 1;
                        true
                    }
                    Err(e) => {
                        error = Some(e);
                        false
                    }
                }
            });
            roots_done.fetch_add(1, Ordering::Relaxed);
            if let Some(e) = error.take() {
                return Err(e);
            }
            if !finished {
                break;
            }
        }
        Ok((counts, x))
    });

    if aborted.load(Ordering::Relaxed) {
        let done = roots_done.load(Ordering::Relaxed).max(1);
        let counted = seen.load(Ordering::Relaxed);
        let estimate = (counted as f64 * total_roots as f64 / done as f64).ceil() as u64;
        return Err(Error::CapExceeded { estimate: estimate.max(cap + 1), cap });
    }

    let mut codes: BTreeMap<CanonicalCode, CodeSupport> = BTreeMap::new();
    let mut per_graph = Vec::with_capacity(db.len());
    for (gid, partial) in partials.into_iter().enumerate() {
        let (counts, x) = partial?;
        per_graph.push(x);
        for (code, c) in counts {
            let slot =
                codes.entry(code).or_insert_with(|| CodeSupport { support_set: BTreeSet::new(), occurrences: 0 });
            slot.support_set.insert(gid);
            slot.occurrences += c;
        }
    }
    Ok(GroundTruth { p, codes, per_graph })
}

/// Expected support under uniform per-graph sampling, linearised:
/// `(t/n) * sum over graphs z containing the pattern of 1/x_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedSupport {
    pub value: f64,
    /// False when `t / (n * min x_z) > 1`, outside the regime where the
    /// linearisation holds.
    pub in_regime: bool,
}

pub fn expected_support_uniform(code: &CanonicalCode, t: u64, truth: &GroundTruth) -> ExpectedSupport {
    let n = truth.graphs() as f64;
    let Some(entry) = truth.codes.get(code) else {
        return ExpectedSupport { value: 0.0, in_regime: true };
    };
    let per_graph = t as f64 / n;
    let mut sum = 0.0;
    let mut min_x = u64::MAX;
    for &z in &entry.support_set {
        let x = truth.per_graph[z];
        sum += 1.0 / x as f64;
        min_x = min_x.min(x);
    }
    let in_regime = per_graph / min_x as f64 <= 1.0;
    if !in_regime {
        log::warn!("t/(n*min x) = {:.3} > 1: expected-support formula is only approximate", per_graph / min_x as f64);
    }
    ExpectedSupport { value: per_graph * sum, in_regime }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LabeledGraph;
    use crate::sampler::is_connected_subset;
    use rand::{Rng, SeedableRng};

    const TWO_GRAPHS: &str = "t # 0\nv 0 A\nv 1 B\nv 2 C\ne 0 1 1\ne 1 2 1\n\
                              t # 1\nv 0 A\nv 1 B\nv 2 C\ne 0 1 1\ne 1 2 1\ne 0 2 1\n";

    fn fixture() -> GraphDatabase {
        GraphDatabase::parse_str(TWO_GRAPHS).unwrap().0
    }

    /// Every p-subset, kept if connected.
    fn naive(g: &LabeledGraph, p: usize) -> Vec<Vec<VertexId>> {
        let n = g.vertex_count();
        let mut out: Vec<Vec<VertexId>> = (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == p)
            .map(|m| (0..n).filter(|&v| m & (1 << v) != 0).collect::<Vec<_>>())
            .filter(|s| is_connected_subset(g, s))
            .collect();
        out.sort();
        out
    }

    #[test]
    fn counts_on_small_graphs() {
        let db = fixture();
        assert_eq!(enumerate_p_subgraphs(db.graph(1), 2).count(), 3);
        assert_eq!(enumerate_p_subgraphs(db.graph(1), 3).count(), 1);
        assert_eq!(enumerate_p_subgraphs(db.graph(0), 3).count(), 1);
        assert_eq!(enumerate_p_subgraphs(db.graph(0), 2).count(), 2);
        assert_eq!(enumerate_p_subgraphs(db.graph(0), 4).count(), 0);
        assert_eq!(enumerate_p_subgraphs(db.graph(0), 0).count(), 0);
    }

    #[test]
    fn esu_matches_naive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..60 {
            let n = rng.gen_range(1..=8);
            let extra = rng.gen_range(0..=2 * n);
            let g = crate::generator::random_connected_graph(&mut rng, n, extra, 2, 1);
            for p in 1..=n {
                let mut got: Vec<_> = enumerate_p_subgraphs(&g, p).collect();
                got.sort();
                let before = got.len();
                got.dedup();
                assert_eq!(before, got.len(), "duplicates");
                assert_eq!(got, naive(&g, p));
            }
        }
    }

    #[test]
    fn truth_p2() {
        let db = fixture();
        let t = ground_truth(&db, 2, DEFAULT_ENUMERATION_CAP, Execution::Sequential).unwrap();
        let supports: Vec<usize> = t.ranked().items().iter().map(|(_, s)| *s as usize).collect();
        assert_eq!(supports, vec![2, 2, 1]);
        assert_eq!(t.per_graph, vec![2, 3]);
        let total: u64 = t.codes.values().map(|c| c.occurrences).sum();
        assert_eq!(total, t.per_graph.iter().sum::<u64>());
        // the A-C edge only exists in the triangle
        let ac = min_dfs_code(&db.graph(1).induced_subgraph(&[0, 2])).unwrap();
        assert_eq!(t.codes[&ac].support_set, BTreeSet::from([1]));
    }

    #[test]
    fn truth_p3_and_p1() {
        let db = fixture();
        let t = ground_truth(&db, 3, DEFAULT_ENUMERATION_CAP, Execution::Parallel).unwrap();
        assert_eq!(t.codes.len(), 2);
        assert!(t.codes.values().all(|c| c.support() == 1));
        let t1 = ground_truth(&db, 1, DEFAULT_ENUMERATION_CAP, Execution::Parallel).unwrap();
        assert_eq!(t1.codes.len(), 3);
        assert!(t1.codes.values().all(|c| c.support() == 2));
    }

    #[test]
    fn execution_modes_agree() {
        let db = crate::generator::generate_database(&crate::generator::GenParams { graphs: 6, ..Default::default() })
            .unwrap();
        let a = ground_truth(&db, 3, DEFAULT_ENUMERATION_CAP, Execution::Sequential).unwrap();
        let b = ground_truth(&db, 3, DEFAULT_ENUMERATION_CAP, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn permutation_invariant() {
        let db = crate::generator::generate_database(&crate::generator::GenParams { graphs: 4, ..Default::default() })
            .unwrap();
        let mut shuffled = GraphDatabase {
            vertex_labels: db.vertex_labels.clone(),
            edge_labels: db.edge_labels.clone(),
            ..Default::default()
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for g in &db.graphs {
            use rand::seq::SliceRandom;
            let mut perm: Vec<usize> = (0..g.vertex_count()).collect();
            perm.shuffle(&mut rng);
            shuffled.push(g.permuted(&perm));
        }
        let a = ground_truth(&db, 3, DEFAULT_ENUMERATION_CAP, Execution::Parallel).unwrap();
        let b = ground_truth(&shuffled, 3, DEFAULT_ENUMERATION_CAP, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cap_refusal_reports_estimate() {
        let db = crate::generator::generate_database(&crate::generator::GenParams::default()).unwrap();
        let exact = ground_truth(&db, 3, DEFAULT_ENUMERATION_CAP, Execution::Parallel).unwrap();
        let total: u64 = exact.per_graph.iter().sum();
        match ground_truth(&db, 3, total / 4, Execution::Sequential) {
            Err(Error::CapExceeded { estimate, cap }) => {
                assert_eq!(cap, total / 4);
                assert!(estimate > cap);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
        assert!(ground_truth(&db, 3, total, Execution::Parallel).is_ok());
    }

    #[test]
    fn tsv_round_trip() {
        let db = fixture();
        let t = ground_truth(&db, 2, DEFAULT_ENUMERATION_CAP, Execution::Sequential).unwrap();
        let tsv = t.to_tsv();
        assert_eq!(tsv.lines().count(), 3);
        let rows = read_truth_tsv(tsv.as_bytes()).unwrap();
        assert_eq!(rows.iter().map(|r| r.1).collect::<Vec<_>>(), vec![2, 2, 1]);
        assert_eq!(rows[2].2, vec![1]);
        assert_eq!(t.counts_tsv(), "0\t2\n1\t3\n");
        assert!(read_truth_tsv("x\tnope\n".as_bytes()).is_err());
    }

    #[test]
    fn expected_support_formula() {
        let db = fixture();
        let t = ground_truth(&db, 2, DEFAULT_ENUMERATION_CAP, Execution::Sequential).unwrap();
        let ab = min_dfs_code(&db.graph(0).induced_subgraph(&[0, 1])).unwrap();
        let e = expected_support_uniform(&ab, 2, &t);
        assert!((e.value - 5.0 / 6.0).abs() < 1e-12);
        assert!(e.in_regime);
        let absent = CanonicalCode::from_text("(0,1,9,9,9)");
        assert_eq!(expected_support_uniform(&absent, 2, &t).value, 0.0);
        assert!(!expected_support_uniform(&ab, 100, &t).in_regime);
    }
}
