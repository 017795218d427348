//! The mining loop: pick a database graph uniformly, advance its saved
//! chain one step, skip unpromising samples before canonical coding, and
//! record the rest in the pattern queue.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::{min_dfs_code, CanonicalCode};
use crate::error::{Error, Result};
use crate::graph::{EdgeSupportIndex, GraphDatabase, GraphId};
use crate::metrics::mean_pairwise_jaccard;
use crate::par::{self, Execution};
use crate::queue::{PatternQueue, PatternRecord, RecordOutcome, DEFAULT_CAPACITY};
use crate::sampler::{ChainRegistry, MhMode, ScoreFn, Scorer};

/// Added per chain index to the base seed in [`run_chains`].
pub const DEFAULT_CHAIN_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineConfig {
    /// Pattern size in vertices.
    pub p: usize,
    pub k: usize,
    pub max_iter: u64,
    pub score: ScoreFn,
    pub mh_mode: MhMode,
    pub queue_capacity: usize,
    pub seed: u64,
    /// Iterations between convergence checkpoints; `None` = `max(1, max_iter / 100)`.
    pub checkpoint_every: Option<u64>,
    pub num_chains: usize,
    pub jaccard_eps: f64,
    /// Chain `i` uses seed `seed + i * stride`; 0 gives every chain the same seed.
    pub chain_seed_stride: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for MineConfig {
    fn default() -> Self {
        Self {
            p: 4,
            k: 50,
            max_iter: 100_000,
            score: ScoreFn::S2,
            mh_mode: MhMode::Paper,
            queue_capacity: DEFAULT_CAPACITY,
            seed: 0,
            checkpoint_every: None,
            num_chains: 1,
            jaccard_eps: 0.05,
            chain_seed_stride: DEFAULT_CHAIN_SEED_STRIDE,
            execution: Execution::Parallel,
        }
    }
}

impl MineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::Config(format!("pattern size must be at least 2, got {}", self.p)));
        }
        if self.k == 0 || self.k > self.queue_capacity {
            return Err(Error::Config(format!(
                "k must be in 1..={} (the queue capacity), got {}",
                self.queue_capacity, self.k
            )));
        }
        if self.num_chains == 0 {
            return Err(Error::Config("at least one chain is required".into()));
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::Config("checkpoint interval must be positive".into()));
        }
        Ok(())
    }

    pub fn checkpoint_interval(&self) -> u64 {
        self.checkpoint_every.unwrap_or((self.max_iter / 100).max(1))
    }

    pub fn chain_seed(&self, chain: usize) -> u64 {
        self.seed.wrapping_add((chain as u64).wrapping_mul(self.chain_seed_stride))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub sampling_s: f64,
    pub coding_s: f64,
    pub queue_s: f64,
    pub total_s: f64,
}

impl Timings {
    fn add(&mut self, other: &Timings) {
        self.sampling_s += other.sampling_s;
        self.coding_s += other.coding_s;
        self.queue_s += other.queue_s;
        self.total_s += other.total_s;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MineStats {
    pub gate_skips: u64,
    /// Canonical codes computed; equals iterations minus gate skips.
    pub codes_generated: u64,
    pub inserted: u64,
    pub updated: u64,
    pub unchanged: u64,
    pub evictions: u64,
    /// How often each database graph was drawn.
    pub selections: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: u64,
    pub mean_jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineResult {
    pub config: MineConfig,
    /// Iterations per chain.
    pub iterations: u64,
    pub top: Vec<PatternRecord>,
    pub timings: Timings,
    pub stats: MineStats,
    /// Final top-k codes of each chain (one list for a single run).
    pub chain_tops: Vec<Vec<CanonicalCode>>,
    pub convergence: Vec<Checkpoint>,
    /// Graphs excluded from sampling because they have fewer than p vertices.
    pub skipped_graphs: Vec<GraphId>,
}

impl MineResult {
    pub fn top_codes(&self) -> Vec<&CanonicalCode> {
        self.top.iter().map(|r| &r.code).collect()
    }
}

/// One sampling chain-set: a queue plus a saved MH state per database graph.
pub struct Miner<'a> {
    db: &'a GraphDatabase,
    scorer: Scorer<'a>,
    config: MineConfig,
    eligible: Vec<GraphId>,
    registry: ChainRegistry,
    queue: PatternQueue,
    rng: ChaCha8Rng,
    iter: u64,
    stats: MineStats,
    timings: Timings,
}

impl<'a> Miner<'a> {
    pub fn new(db: &'a GraphDatabase, index: &'a EdgeSupportIndex, config: &MineConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let eligible: Vec<GraphId> = db.graphs.iter().filter(|g| g.vertex_count() >= config.p).map(|g| g.id).collect();
        if eligible.is_empty() {
            return Err(Error::NoEligibleGraphs { p: config.p });
        }
        Ok(Self {
            db,
            scorer: Scorer::new(index, config.score),
            config: config.clone(),
            eligible,
            registry: ChainRegistry::new(db.len()),
            queue: PatternQueue::new(config.queue_capacity)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
            iter: 0,
            stats: MineStats { selections: vec![0; db.len()], ..Default::default() },
            timings: Timings::default(),
        })
    }

    pub fn iterations(&self) -> u64 {
        self.iter
    }

    pub fn queue(&self) -> &PatternQueue {
        &self.queue
    }

    pub fn stats(&self) -> &MineStats {
        &self.stats
    }

    pub fn skipped_graphs(&self) -> Vec<GraphId> {
        self.db.graphs.iter().filter(|g| g.vertex_count() < self.config.p).map(|g| g.id).collect()
    }

    pub fn top_code_set(&self) -> HashSet<CanonicalCode> {
        self.queue.top(self.config.k).into_iter().map(|e| e.code.clone()).collect()
    }

    pub fn run(&mut self, iterations: u64) -> Result<()> {
        let start = Instant::now();
        for _ in 0..iterations {
            self.step()?;
        }
        self.timings.total_s += start.elapsed().as_secs_f64();
        Ok(())
    }

    fn step(&mut self) -> Result<()> {
        self.iter += 1;
        let gid = self.eligible[self.rng.gen_range(0..self.eligible.len())];
        self.stats.selections[gid] += 1;
        let g = self.db.graph(gid);

        let t = Instant::now();
        let state = self.registry.sample(g, self.config.p, &self.scorer, self.config.mh_mode, &mut self.rng)?;
        self.timings.sampling_s += secs(t.elapsed());

        let score = state.score;
        if self.queue.is_full() && !self.queue.passes_gate(score) {
            self.stats.gate_skips += 1;
            return Ok(());
        }

        let t = Instant::now();
        let code = min_dfs_code(&g.induced_subgraph(&state.vertices))?;
        self.stats.codes_generated += 1;
        self.timings.coding_s += secs(t.elapsed());

        let t = Instant::now();
        match self.queue.record(&code, gid, score, self.iter) {
            RecordOutcome::Inserted => self.stats.inserted += 1,
            RecordOutcome::InsertedWithEviction => {
                self.stats.inserted += 1;
                self.stats.evictions += 1;
            }
            RecordOutcome::Updated => self.stats.updated += 1,
            RecordOutcome::Unchanged => self.stats.unchanged += 1,
        }
        self.timings.queue_s += secs(t.elapsed());
        Ok(())
    }

    pub fn into_result(self) -> MineResult {
        let top = self
            .queue
            .top(self.config.k)
            .into_iter()
            .enumerate()
            .map(|(i, e)| PatternRecord::from_entry(i + 1, e))
            .collect::<Vec<_>>();
        let skipped_graphs = self.skipped_graphs();
        MineResult {
            chain_tops: vec![top.iter().map(|r| r.code.clone()).collect()],
            config: self.config,
            iterations: self.iter,
            top,
            timings: self.timings,
            stats: self.stats,
            convergence: Vec::new(),
            skipped_graphs,
        }
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Single-chain mining run.
pub fn mine(db: &GraphDatabase, config: &MineConfig) -> Result<MineResult> {
    let index = EdgeSupportIndex::build(db);
    mine_with_index(db, &index, config)
}

pub fn mine_with_index(db: &GraphDatabase, index: &EdgeSupportIndex, config: &MineConfig) -> Result<MineResult> {
    let mut miner = Miner::new(db, index, config, config.seed)?;
    miner.run(config.max_iter)?;
    Ok(miner.into_result())
}

/// [`mine`] with a constant target distribution.
pub fn mine_uniform_baseline(db: &GraphDatabase, config: &MineConfig) -> Result<MineResult> {
    mine(db, &MineConfig { score: ScoreFn::Uniform, ..config.clone() })
}

/// Runs `num_chains` independent miners side by side. At every checkpoint
/// the mean pairwise Jaccard distance of their top-k code sets is recorded;
/// the run stops once it drops below `jaccard_eps` or the budget is spent.
/// The chains' queues are then merged (support-lists united) and re-ranked.
pub fn run_chains(db: &GraphDatabase, config: &MineConfig) -> Result<MineResult> {
    let index = EdgeSupportIndex::build(db);
    run_chains_with_index(db, &index, config)
}

pub fn run_chains_with_index(db: &GraphDatabase, index: &EdgeSupportIndex, config: &MineConfig) -> Result<MineResult> {
    config.validate()?;
    let mut chains = (0..config.num_chains)
        .map(|i| Miner::new(db, index, config, config.chain_seed(i)))
        .collect::<Result<Vec<_>>>()?;
    let interval = config.checkpoint_interval();
    let mut convergence = Vec::new();
    let mut done = 0u64;
    while done < config.max_iter {
        let n = interval.min(config.max_iter - done);
        par::map_mut(config.execution, &mut chains, |m| m.run(n)).into_iter().collect::<Result<()>>()?;
        done += n;
        let sets: Vec<HashSet<CanonicalCode>> = chains.iter().map(Miner::top_code_set).collect();
        let mean = mean_pairwise_jaccard(&sets);
        convergence.push(Checkpoint { iteration: done, mean_jaccard: mean });
        if config.num_chains >= 2 && mean < config.jaccard_eps {
            break;
        }
    }

    let mut merged = PatternQueue::new(config.queue_capacity)?;
    let mut timings = Timings::default();
    let mut stats = MineStats { selections: vec![0; db.len()], ..Default::default() };
    let mut chain_tops = Vec::with_capacity(chains.len());
    let skipped_graphs = chains[0].skipped_graphs();
    for chain in &chains {
        // best-first so that a capacity-bound merge keeps the strongest entries
        for e in chain.queue().iter() {
            merged.merge_entry(e.clone());
        }
        chain_tops.push(chain.queue().top(config.k).into_iter().map(|e| e.code.clone()).collect());
        timings.add(&chain.timings);
        let s = chain.stats();
        stats.gate_skips += s.gate_skips;
        stats.codes_generated += s.codes_generated;
        stats.inserted += s.inserted;
        stats.updated += s.updated;
        stats.unchanged += s.unchanged;
        stats.evictions += s.evictions;
        for (acc, x) in stats.selections.iter_mut().zip(&s.selections) {
            *acc += x;
        }
    }
    let top = merged.top(config.k).into_iter().enumerate().map(|(i, e)| PatternRecord::from_entry(i + 1, e)).collect();
    Ok(MineResult {
        config: config.clone(),
        iterations: done,
        top,
        timings,
        stats,
        chain_tops,
        convergence,
        skipped_graphs,
    })
}
