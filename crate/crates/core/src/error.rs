use thiserror::Error;

/// Errors produced by topology construction, simulation, and detection.
#[derive(Debug, Error)]
pub enum Error {
    #[error("n_subtrees must be at least 1")]
    EmptyTopology,
    #[error("unknown host id: {0}")]
    UnknownHost(String),
    #[error("unknown link id: {0}")]
    UnknownLink(String),
    #[error("requested {requested} target links but the topology has {available}")]
    TooManyTargetLinks { requested: usize, available: usize },
    #[error("no bots given for target selection")]
    NoBots,
    #[error("no decoys given for target selection")]
    NoDecoys,
    #[error("rolling schedule needs at least 2 target sets, got {0}")]
    RollingNeedsSets(usize),
    #[error("tick {tick} s does not divide poll interval {poll} s")]
    TickPollMismatch { tick: f64, poll: f64 },
    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series too short: {len} samples, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("window {window} exceeds series length {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("cannot normalize an all-zero series")]
    AllZeroSeries,
    #[error("window [{start}, {end}] falls outside the sampled range")]
    WindowOutOfRange { start: f64, end: f64 },
    #[error("feature selection is empty")]
    EmptySelection,
    #[error("feature subset of size {requested} exceeds the {available} available links")]
    SubsetTooLarge { requested: usize, available: usize },
    #[error("training set contains a single class")]
    SingleClass,
    #[error("n_trees must be at least 1")]
    NoTrees,
    #[error("feature dimension mismatch: model has {model}, rows have {rows}")]
    DimensionMismatch { model: usize, rows: usize },
    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
