//! Synthetic database generator: random spanning tree plus extra random
//! edges, labels drawn uniformly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GraphDatabase, LabelId, LabeledGraph};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenParams {
    pub graphs: usize,
    /// Vertex counts are drawn uniformly from `mean ± mean/5`.
    pub vertices_mean: usize,
    /// Target edge count is `round(edge_factor * |V|)`, at least `|V| - 1`.
    pub edge_factor: f64,
    pub vertex_labels: usize,
    pub edge_labels: usize,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self { graphs: 20, vertices_mean: 30, edge_factor: 1.5, vertex_labels: 4, edge_labels: 2, seed: 1 }
    }
}

impl GenParams {
    fn validate(&self) -> Result<()> {
        if self.vertices_mean == 0 || self.vertex_labels == 0 || self.edge_labels == 0 {
            return Err(Error::Config("vertex count and label counts must be positive".into()));
        }
        if !(self.edge_factor.is_finite() && self.edge_factor >= 0.0) {
            return Err(Error::Config("edge factor must be a non-negative number".into()));
        }
        let max_v = self.vertices_mean + self.vertices_mean / 5;
        let wanted = (self.edge_factor * max_v as f64).round() as usize;
        let complete = max_v * (max_v - 1) / 2;
        if wanted > complete {
            return Err(Error::Config(format!(
                "{wanted} edges requested for {max_v} vertices, a complete graph only has {complete}"
            )));
        }
        Ok(())
    }
}

/// Vertex labels are named `V0, V1, ..`, edge labels `0, 1, ..`.
pub fn generate_database(params: &GenParams) -> Result<GraphDatabase> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut db = GraphDatabase::default();
    for l in 0..params.vertex_labels {
        db.vertex_labels.intern(&format!("V{l}"));
    }
    for l in 0..params.edge_labels {
        db.edge_labels.intern(&l.to_string());
    }
    let spread = params.vertices_mean / 5;
    for _ in 0..params.graphs {
        let n = rng.gen_range(params.vertices_mean - spread..=params.vertices_mean + spread).max(1);
        let target = ((params.edge_factor * n as f64).round() as usize).max(n - 1);
        let g = random_connected_graph(&mut rng, n, target - (n - 1), params.vertex_labels, params.edge_labels);
        db.push(g);
    }
    Ok(db)
}

/// A connected simple graph with `n - 1 + extra` edges (capped at the
/// complete graph).
pub fn random_connected_graph<R: Rng>(
    rng: &mut R,
    n: usize,
    extra: usize,
    vertex_labels: usize,
    edge_labels: usize,
) -> LabeledGraph {
    let labels: Vec<LabelId> = (0..n).map(|_| rng.gen_range(0..vertex_labels) as LabelId).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut present = vec![false; n * n];
    let mut edges = Vec::new();
    for i in 1..n {
        let (u, v) = (order[i], order[rng.gen_range(0..i)]);
        present[u * n + v] = true;
        present[v * n + u] = true;
        edges.push((u, v, rng.gen_range(0..edge_labels) as LabelId));
    }
    let mut missing: Vec<(usize, usize)> =
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|&(u, v)| !present[u * n + v]).collect();
    missing.shuffle(rng);
    for &(u, v) in missing.iter().take(extra) {
        edges.push((u, v, rng.gen_range(0..edge_labels) as LabelId));
    }
    LabeledGraph::new(0, labels, edges).expect("generator emits simple graphs")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeSupportIndex;

    #[test]
    fn deterministic_connected_simple() {
        let p = GenParams::default();
        let a = generate_database(&p).unwrap();
        let b = generate_database(&p).unwrap();
        assert_eq!(a.write(), b.write());
        assert_eq!(a.len(), 20);
        for g in &a.graphs {
            assert!(g.is_connected());
            assert!((24..=36).contains(&g.vertex_count()));
            assert_eq!(g.edge_count(), (1.5 * g.vertex_count() as f64).round() as usize);
        }
        // parses back to the same database
        let (c, report) = GraphDatabase::parse_str(&a.write()).unwrap();
        assert!(report.rejected.is_empty());
        assert_eq!(c.write(), a.write());
    }

    #[test]
    fn degenerate_labels_give_full_support() {
        let p = GenParams { vertex_labels: 1, edge_labels: 1, graphs: 5, ..Default::default() };
        let db = generate_database(&p).unwrap();
        let idx = EdgeSupportIndex::build(&db);
        assert_eq!(idx.triples().count(), 1);
        let t = *idx.triples().next().unwrap();
        assert_eq!(idx.support(&t), 5);
    }

    #[test]
    fn impossible_density_rejected() {
        let p = GenParams { vertices_mean: 5, edge_factor: 3.0, ..Default::default() };
        assert!(generate_database(&p).is_err());
    }
}
