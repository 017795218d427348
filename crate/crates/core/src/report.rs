//! Result files: a JSON header line followed by one JSON line per pattern.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::RankedList;
use crate::miner::{Checkpoint, MineConfig, MineResult, MineStats, Timings};
use crate::queue::PatternRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultHeader {
    pub config: MineConfig,
    pub seed: u64,
    pub iterations: u64,
    /// Omitted unless requested, so that identical runs give identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
    pub stats: MineStats,
    pub convergence: Vec<Checkpoint>,
    pub skipped_graphs: Vec<usize>,
}

pub fn write_result(result: &MineResult, include_timings: bool) -> String {
    let header = ResultHeader {
        config: result.config.clone(),
        seed: result.config.seed,
        iterations: result.iterations,
        timings: include_timings.then(|| result.timings.clone()),
        stats: result.stats.clone(),
        convergence: result.convergence.clone(),
        skipped_graphs: result.skipped_graphs.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for rec in &result.top {
        out.push_str(&serde_json::to_string(rec).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_result<R: BufRead>(reader: R) -> Result<(ResultHeader, Vec<PatternRecord>)> {
    let mut lines = reader.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    let json_err = |line: usize, e: serde_json::Error| Error::Parse { line, message: e.to_string() };
    let (_, first) = lines.next().ok_or(Error::Parse { line: 1, message: "empty result file".into() })?;
    let header: ResultHeader = serde_json::from_str(&first?).map_err(|e| json_err(1, e))?;
    let mut records = Vec::new();
    for (i, line) in lines {
        records.push(serde_json::from_str(&line?).map_err(|e| json_err(i + 1, e))?);
    }
    Ok((header, records))
}

/// Mined patterns ranked by expected support.
pub fn mined_ranking(records: &[PatternRecord]) -> Result<RankedList> {
    let mut sorted: Vec<&PatternRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.rank);
    RankedList::new(sorted.into_iter().map(|r| (r.code.clone(), r.support_a as f64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphDatabase;
    use crate::miner::mine;

    #[test]
    fn round_trip() {
        let (db, _) = GraphDatabase::parse_str("t # 0\nv 0 A\nv 1 B\nv 2 C\ne 0 1 1\ne 1 2 1\ne 0 2 1\n").unwrap();
        let r = mine(&db, &MineConfig { p: 2, k: 5, max_iter: 100, seed: 3, ..Default::default() }).unwrap();
        let text = write_result(&r, false);
        assert!(!text.contains("timings"));
        let (header, records) = read_result(text.as_bytes()).unwrap();
        assert_eq!(header.iterations, 100);
        assert_eq!(header.config, r.config);
        assert_eq!(records, r.top);
        let with = write_result(&r, true);
        assert!(read_result(with.as_bytes()).unwrap().0.timings.is_some());
        assert_eq!(mined_ranking(&records).unwrap().len(), 3);
        assert!(read_result("".as_bytes()).is_err());
    }
}
