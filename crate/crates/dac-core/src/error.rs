use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("azimuth undefined for a center on the vertical axis")]
    DegenerateAzimuth,
    #[error("up vector is parallel to the viewing direction")]
    ParallelUp,
    #[error("camera center coincides with the look-at target")]
    CoincidentTarget,
    #[error("pixel ({px}, {py}) outside a {width}x{height} image")]
    PixelOutOfBounds { px: u32, py: u32, width: u32, height: u32 },
    #[error("requested {requested} points from only {available} candidates")]
    NotEnoughCandidates { requested: usize, available: usize },
    #[error("scene has no primitives")]
    EmptyScene,
    #[error("partition count must be at least 2, got {0}")]
    TooFewPartitions(usize),
    #[error("partition {0} holds no views")]
    EmptyPartition(usize),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("node {0} is isolated")]
    IsolatedNode(usize),
    #[error("view {view} out of range for {count} views (record {record})")]
    ViewOutOfRange { record: usize, view: usize, count: usize },
    #[error("view {0} is not assigned to any partition")]
    Unassigned(usize),
    #[error("image shapes differ: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("image of {width}x{height} is smaller than the {window}x{window} window")]
    ImageTooSmall { width: usize, height: usize, window: usize },
    #[error("step {step} outside schedule of {iterations} iterations")]
    StepOutOfRange { step: usize, iterations: usize },
    #[error("loss term `{0}` is not finite")]
    NonFiniteLoss(&'static str),
    #[error("backward called before any forward pass was recorded")]
    NoForward,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
