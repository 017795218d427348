//! Capacity-bounded pattern store.
//!
//! Entries are ranked by expected support (descending), then score
//! (descending), then the iteration of the last support increase (recent
//! first), then canonical code (ascending). The last entry in this order is
//! the eviction candidate.
//!
//! The ranking is split into a head and a tail set, the tail holding the last
//! `floor(m/2)` of `m` entries (the single entry when `m = 1`), so that the
//! tail's average score is available in O(1) after O(log m) maintenance.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalCode;
use crate::error::{Error, Result};
use crate::graph::GraphId;

pub const DEFAULT_CAPACITY: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternEntry {
    pub code: CanonicalCode,
    /// Database graphs the pattern has been sampled from.
    pub idset: BTreeSet<GraphId>,
    pub score: f64,
    pub last_update_iter: u64,
}

impl PatternEntry {
    pub fn support(&self) -> usize {
        self.idset.len()
    }

    fn key(&self) -> RankKey {
        RankKey {
            support: Reverse(self.idset.len()),
            score: Reverse(OrderedFloat(self.score)),
            iter: Reverse(self.last_update_iter),
            code: self.code.clone(),
        }
    }
}

/// Ascending order = best first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct RankKey {
    support: Reverse<usize>,
    score: Reverse<OrderedFloat<f64>>,
    iter: Reverse<u64>,
    code: CanonicalCode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordOutcome {
    Updated,
    Inserted,
    InsertedWithEviction,
    Unchanged,
}

#[derive(Debug, Clone)]
pub struct PatternQueue {
    capacity: usize,
    entries: HashMap<CanonicalCode, PatternEntry>,
    head: BTreeSet<RankKey>,
    tail: BTreeSet<RankKey>,
    tail_sum: f64,
}

fn tail_len(m: usize) -> usize {
    if m == 1 {
        1
    } else {
        m / 2
    }
}

impl PatternQueue {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("queue capacity must be at least 1".into()));
        }
        Ok(Self { capacity, entries: HashMap::new(), head: BTreeSet::new(), tail: BTreeSet::new(), tail_sum: 0.0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn get(&self, code: &CanonicalCode) -> Option<&PatternEntry> {
        self.entries.get(code)
    }

    pub fn contains(&self, code: &CanonicalCode) -> bool {
        self.entries.contains_key(code)
    }

    /// Mean score of the tail half of the ranking.
    pub fn lower_half_avg_score(&self) -> Result<f64> {
        if self.tail.is_empty() {
            return Err(Error::EmptyQueue);
        }
        Ok(self.tail_sum / self.tail.len() as f64)
    }

    /// Whether a sample with `score` may enter: always when there is room,
    /// otherwise only when it beats the tail-half average.
    pub fn passes_gate(&self, score: f64) -> bool {
        match self.lower_half_avg_score() {
            Ok(avg) if self.is_full() => score > avg,
            _ => true,
        }
    }

    /// Adds `gid` to the support-list of `code`, inserting the pattern (and
    /// evicting the last entry when full) if it is new.
    pub fn record(&mut self, code: &CanonicalCode, gid: GraphId, score: f64, iter: u64) -> RecordOutcome {
        if let Some(entry) = self.entries.get(code) {
            if entry.idset.contains(&gid) {
                return RecordOutcome::Unchanged;
            }
            let old = entry.key();
            let entry = self.entries.get_mut(code).unwrap();
            entry.idset.insert(gid);
            entry.last_update_iter = iter;
            let new = entry.key();
            self.remove_key(&old);
            self.insert_key(new);
            return RecordOutcome::Updated;
        }
        let mut outcome = RecordOutcome::Inserted;
        if self.is_full() {
            self.evict_last().expect("full queue is nonempty");
            outcome = RecordOutcome::InsertedWithEviction;
        }
        let entry = PatternEntry { code: code.clone(), idset: BTreeSet::from([gid]), score, last_update_iter: iter };
        self.insert_key(entry.key());
        self.entries.insert(code.clone(), entry);
        outcome
    }

    /// Inserts a complete entry, merging support-lists with an existing
    /// entry of the same code (used when combining chains).
    pub fn merge_entry(&mut self, entry: PatternEntry) {
        if let Some(existing) = self.entries.get(&entry.code) {
            let old = existing.key();
            let existing = self.entries.get_mut(&entry.code).unwrap();
            existing.idset.extend(entry.idset.iter().copied());
            existing.last_update_iter = existing.last_update_iter.max(entry.last_update_iter);
            let new = existing.key();
            self.remove_key(&old);
            self.insert_key(new);
            return;
        }
        if self.is_full() {
            self.evict_last().expect("full queue is nonempty");
        }
        self.insert_key(entry.key());
        self.entries.insert(entry.code.clone(), entry);
    }

    /// Removes the lowest-ranked entry.
    pub fn evict_last(&mut self) -> Result<PatternEntry> {
        let key = self.tail.last().cloned().ok_or(Error::EmptyQueue)?;
        let entry = self.entries.remove(&key.code).expect("indexes agree");
        self.remove_key(&key);
        Ok(entry)
    }

    /// The best `k` entries, best first.
    pub fn top(&self, k: usize) -> Vec<&PatternEntry> {
        self.iter().take(k).collect()
    }

    /// All entries in rank order.
    pub fn iter(&self) -> impl Iterator<Item = &PatternEntry> + '_ {
        self.head.iter().chain(self.tail.iter()).map(|k| &self.entries[&k.code])
    }

    fn insert_key(&mut self, key: RankKey) {
        match self.tail.first() {
            Some(first) if key >= *first => {
                self.tail_sum += key.score.0 .0;
                self.tail.insert(key);
            }
            _ => {
                self.head.insert(key);
            }
        }
        self.rebalance();
    }

    fn remove_key(&mut self, key: &RankKey) {
        if self.tail.remove(key) {
            self.tail_sum -= key.score.0 .0;
        } else {
            let removed = self.head.remove(key);
            debug_assert!(removed);
        }
        self.rebalance();
    }

    fn rebalance(&mut self) {
        let m = self.head.len() + self.tail.len();
        let want = if m == 0 { 0 } else { tail_len(m) };
        while self.tail.len() > want {
            let k = self.tail.pop_first().unwrap();
            self.tail_sum -= k.score.0 .0;
            self.head.insert(k);
        }
        while self.tail.len() < want {
            let k = self.head.pop_last().unwrap();
            self.tail_sum += k.score.0 .0;
            self.tail.insert(k);
        }
        if self.tail.is_empty() {
            self.tail_sum = 0.0;
        }
    }

    /// Verifies internal consistency; used by tests.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let m = self.entries.len();
        if m > self.capacity {
            return Err(format!("{m} entries exceed capacity {}", self.capacity));
        }
        if self.head.len() + self.tail.len() != m {
            return Err("order index and code index disagree in size".into());
        }
        if m > 0 && self.tail.len() != tail_len(m) {
            return Err(format!("tail has {} entries, expected {}", self.tail.len(), tail_len(m)));
        }
        if let (Some(h), Some(t)) = (self.head.last(), self.tail.first()) {
            if h >= t {
                return Err("head and tail overlap".into());
            }
        }
        let keys: Vec<RankKey> = self.iter().map(PatternEntry::key).collect();
        let indexed: Vec<&RankKey> = self.head.iter().chain(self.tail.iter()).collect();
        if keys.iter().zip(&indexed).any(|(a, b)| a != *b) {
            return Err("stale order key".into());
        }
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err("order index not strictly sorted".into());
        }
        let direct: f64 = self.tail.iter().map(|k| self.entries[&k.code].score).sum();
        if (direct - self.tail_sum).abs() > 1e-6 * direct.abs().max(1.0) {
            return Err(format!("tail sum {} drifted from {direct}", self.tail_sum));
        }
        Ok(())
    }

    /// JSON-lines export, one record per entry in rank order.
    pub fn snapshot(&self) -> Vec<PatternRecord> {
        self.iter().enumerate().map(|(i, e)| PatternRecord::from_entry(i + 1, e)).collect()
    }
}

/// One exported queue entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub rank: usize,
    pub code: CanonicalCode,
    pub support_a: usize,
    pub idset: Vec<GraphId>,
    pub score: f64,
    pub last_update_iter: u64,
}

impl PatternRecord {
    pub fn from_entry(rank: usize, e: &PatternEntry) -> Self {
        Self {
            rank,
            code: e.code.clone(),
            support_a: e.support(),
            idset: e.idset.iter().copied().collect(),
            score: e.score,
            last_update_iter: e.last_update_iter,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn code(s: &str) -> CanonicalCode {
        CanonicalCode::from_text(s)
    }

    /// Queue with entries given as (code, support, score, iter).
    fn queue_with(capacity: usize, items: &[(&str, usize, f64, u64)]) -> PatternQueue {
        let mut q = PatternQueue::new(capacity).unwrap();
        for &(c, sup, score, iter) in items {
            for gid in 0..sup {
                q.record(&code(c), gid, score, iter);
            }
        }
        q
    }

    fn order(q: &PatternQueue) -> Vec<String> {
        q.iter().map(|e| e.code.to_string()).collect()
    }

    #[test]
    fn top_orders_by_support_then_score() {
        let q = queue_with(10, &[("c", 2, 9.0, 1), ("a", 3, 4.0, 1), ("b", 3, 5.0, 1)]);
        assert_eq!(order(&q), vec!["b", "a", "c"]);
        assert_eq!(q.top(2).len(), 2);
        assert_eq!(q.top(50).len(), 3);
    }

    #[test]
    fn recent_update_ranks_first() {
        let q = queue_with(10, &[("old", 1, 2.0, 10), ("new", 1, 2.0, 12)]);
        assert_eq!(order(&q), vec!["new", "old"]);
    }

    #[test]
    fn lower_half_average() {
        let q = queue_with(10, &[("a", 1, 9.0, 0), ("b", 1, 5.0, 0), ("c", 1, 4.0, 0), ("d", 1, 2.0, 0)]);
        assert_eq!(q.lower_half_avg_score().unwrap(), 3.0);
        let q = queue_with(10, &[("a", 1, 7.0, 0)]);
        assert_eq!(q.lower_half_avg_score().unwrap(), 7.0);
        let q = queue_with(10, &[("a", 1, 6.0, 0), ("b", 1, 6.0, 0), ("c", 1, 6.0, 0)]);
        assert_eq!(q.lower_half_avg_score().unwrap(), 6.0);
        assert!(PatternQueue::new(3).unwrap().lower_half_avg_score().is_err());
    }

    #[test]
    fn gate() {
        let q = queue_with(10, &[("a", 1, 9.0, 0)]);
        assert!(q.passes_gate(0.0));
        let q = queue_with(4, &[("a", 2, 9.0, 0), ("b", 2, 5.0, 0), ("c", 1, 4.0, 0), ("d", 1, 3.0, 0)]);
        assert!(q.is_full());
        assert_eq!(q.lower_half_avg_score().unwrap(), 3.5);
        assert!(!q.passes_gate(3.0));
        assert!(!q.passes_gate(3.5));
        assert!(q.passes_gate(5.0));
    }

    #[test]
    fn record_update_and_idempotence() {
        let mut q = PatternQueue::new(5).unwrap();
        assert_eq!(q.record(&code("a"), 0, 1.0, 1), RecordOutcome::Inserted);
        assert_eq!(q.record(&code("a"), 1, 1.0, 5), RecordOutcome::Updated);
        let e = q.get(&code("a")).unwrap();
        assert_eq!((e.support(), e.last_update_iter), (2, 5));
        assert_eq!(q.record(&code("a"), 1, 1.0, 9), RecordOutcome::Unchanged);
        assert_eq!(q.get(&code("a")).unwrap().last_update_iter, 5);
    }

    #[test]
    fn eviction_removes_worst() {
        let mut q = queue_with(3, &[("s3", 3, 1.0, 1), ("s2", 2, 1.0, 1), ("s1", 1, 2.0, 0)]);
        assert!(q.passes_gate(5.0));
        assert_eq!(q.record(&code("new"), 7, 5.0, 20), RecordOutcome::InsertedWithEviction);
        assert!(!q.contains(&code("s1")));
        assert_eq!(q.get(&code("new")).unwrap().support(), 1);
        assert_eq!(q.len(), 3);
    }

    #[test]
    fn evict_last_cases() {
        let mut q = queue_with(5, &[("a", 3, 5.0, 0), ("b", 2, 1.0, 0)]);
        assert_eq!(q.evict_last().unwrap().code, code("b"));
        let mut q = queue_with(5, &[("x", 1, 1.0, 3), ("y", 1, 1.0, 1), ("z", 1, 1.0, 2)]);
        assert_eq!(q.evict_last().unwrap().code, code("y"));
        let mut q = queue_with(5, &[("x", 1, 1.0, 3)]);
        q.evict_last().unwrap();
        assert!(q.is_empty());
        assert!(matches!(q.evict_last(), Err(Error::EmptyQueue)));
        q.check_invariants().unwrap();
    }

    #[test]
    fn merge_unions_idsets() {
        let mut q = queue_with(5, &[("a", 2, 1.0, 3)]);
        let other = PatternEntry { code: code("a"), idset: BTreeSet::from([1, 4]), score: 1.0, last_update_iter: 7 };
        q.merge_entry(other);
        let e = q.get(&code("a")).unwrap();
        assert_eq!(e.idset, BTreeSet::from([0, 1, 4]));
        assert_eq!(e.last_update_iter, 7);
        q.check_invariants().unwrap();
    }

    #[test]
    fn snapshot_records() {
        let q = queue_with(5, &[("a", 2, 1.5, 3)]);
        let snap = q.snapshot();
        assert_eq!(snap[0].rank, 1);
        assert_eq!(snap[0].idset, vec![0, 1]);
        let line = serde_json::to_string(&snap[0]).unwrap();
        assert_eq!(line, r#"{"rank":1,"code":"a","support_a":2,"idset":[0,1],"score":1.5,"last_update_iter":3}"#);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Record { code: u8, gid: u8, iter: u64 },
        Evict,
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            6 => (0u8..30, 0u8..8, 0u64..1000).prop_map(|(code, gid, iter)| Op::Record { code, gid, iter }),
            1 => Just(Op::Evict),
        ]
    }

    fn replay(capacity: usize, ops: &[Op]) -> PatternQueue {
        let mut q = PatternQueue::new(capacity).unwrap();
        for o in ops {
            match *o {
                Op::Record { code: c, gid, iter } => {
                    // score is a fixed function of the code
                    let score = f64::from(c % 7) + 0.5;
                    let cc = code(&format!("p{c:02}"));
                    if q.contains(&cc) || q.passes_gate(score) {
                        q.record(&cc, gid as usize, score, iter);
                    }
                }
                Op::Evict => {
                    let _ = q.evict_last();
                }
            }
            q.check_invariants().unwrap();
        }
        q
    }

    proptest! {
        #[test]
        fn invariants_hold(capacity in 1usize..12, ops in prop::collection::vec(op(), 0..200)) {
            let q = replay(capacity, &ops);
            let again = replay(capacity, &ops);
            prop_assert_eq!(q.snapshot(), again.snapshot());
        }

        #[test]
        fn duplicate_gid_is_noop(capacity in 1usize..8, ops in prop::collection::vec(op(), 1..60)) {
            let mut q = replay(capacity, &ops);
            let first = q.iter().next().cloned();
            if let Some(e) = first {
                let gid = *e.idset.iter().next().unwrap();
                let before = q.snapshot();
                prop_assert_eq!(q.record(&e.code, gid, e.score, 99_999), RecordOutcome::Unchanged);
                prop_assert_eq!(before, q.snapshot());
            }
        }
    }
}
