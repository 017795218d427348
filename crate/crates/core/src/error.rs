use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph has {size} vertices, above the limit of {max}")]
    TooLarge { size: usize, max: usize },
    #[error("graph has {vertices} vertices, fewer than the pattern size {p}")]
    GraphTooSmall { vertices: usize, p: usize },
    #[error("no eligible graphs: every graph has fewer than {p} vertices")]
    NoEligibleGraphs { p: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("enumeration refused: estimated {estimate} subgraph occurrences exceeds the cap of {cap}")]
    CapExceeded { estimate: u64, cap: u64 },
    #[error("{0}")]
    Undefined(&'static str),
    #[error("queue is empty")]
    EmptyQueue,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
