use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("mesh file {path}: {reason}")]
    MeshFormat { path: String, reason: String },
    #[error("mesh has {got} vertices, topology expects {expected}")]
    TopologyMismatch { got: usize, expected: usize },
    #[error("basis file: {0}")]
    BasisFormat(String),
    #[error("region {0} is empty")]
    EmptyRegion(&'static str),
    #[error("invalid region label {0}")]
    BadRegionLabel(u8),

    #[error("pca: {0}")]
    Pca(&'static str),
    #[error("ridge regression: singular normal matrix (lambda = 0)")]
    SingularSystem,
    #[error("rigid fit: degenerate point configuration")]
    DegenerateFit,
    #[error("ransac: no consensus found")]
    RansacNoConsensus,
    #[error("pnp: {0}")]
    Pnp(&'static str),
    #[error("optimizer: non-finite gradient at step {step} (param block {block})")]
    NonFiniteGradient { step: u64, block: &'static str },
    #[error("loss term {term}: {reason}")]
    LossEval { term: &'static str, reason: String },

    #[error("frame {0}: {1}")]
    Frame(usize, String),
    #[error("frame selection: empty front group")]
    EmptyFrontGroup,
    #[error("not enough liftable landmarks ({0} < 4)")]
    TooFewLandmarks(usize),

    #[error("corpus: {0}")]
    Corpus(String),
    #[error("unwrap produced no visible texels")]
    NoVisibleTexels,
    #[error("texture valid coverage {0:.1}% below minimum")]
    LowCoverage(f64),

    #[error("config: {0}")]
    Config(String),
    #[error("stale render context")]
    StaleContext,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
