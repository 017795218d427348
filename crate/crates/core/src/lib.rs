//! Top-k frequent induced subgraph mining over a database of labeled graphs.
//!
//! Patterns of a fixed vertex count are sampled with one Metropolis-Hastings
//! chain per database graph, biased by scores derived from edge supports, and
//! collected into a bounded priority queue keyed by a minimum DFS code. No
//! subgraph isomorphism test is ever run; exhaustive enumeration is provided
//! separately as an oracle for evaluating small databases.

pub mod canonical;
pub mod error;
pub mod generator;
pub mod graph;
pub mod metrics;
pub mod miner;
pub mod oracle;
pub mod par;
pub mod queue;
pub mod report;
pub mod sampler;

pub use canonical::{min_dfs_code, CanonicalCode};
pub use error::{Error, Result};
pub use graph::{EdgeSupportIndex, EdgeTriple, GraphDatabase, LabeledGraph};
pub use miner::{mine, mine_uniform_baseline, run_chains, MineConfig, MineResult};
pub use oracle::{ground_truth, GroundTruth};
pub use par::Execution;
pub use queue::{PatternEntry, PatternQueue};
pub use sampler::{MhMode, ScoreFn, SubgraphState};
