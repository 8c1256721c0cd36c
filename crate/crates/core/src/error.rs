use thiserror::Error;

/// Errors raised by space models, kernel arithmetic, constructions and
/// verification reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("gram rule evaluation failed: {0}")]
    Evaluation(String),
    #[error("no reproducibility entry for point ({re}, {im})")]
    MissingReproducibility { re: f64, im: f64 },
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("inadmissible multiset: {0}")]
    InadmissibleMultiset(String),
    #[error("kernel of order {order} at ({re}, {im}) is not bounded in this space")]
    InadmissibleKernel { re: f64, im: f64, order: usize },
    #[error("tail bound did not reach {target:e} within {max_terms} terms")]
    ToleranceUnreachable { target: f64, max_terms: usize },
    #[error("divergent series: {0}")]
    DivergentSeries(String),
    #[error("no finite tail bound is available")]
    UnboundedTail,
    #[error("kernel gram matrix is numerically singular (pivot ratio {pivot_ratio:e})")]
    SingularGram { pivot_ratio: f64 },
    #[error("spanning gram matrix is ill-conditioned (pivot ratio {pivot_ratio:e} below {cap:e})")]
    IllConditioned { pivot_ratio: f64, cap: f64 },
    #[error("residue conditions are rank deficient")]
    DegenerateResidueSystem,
    #[error("truncation error {tail:e} exceeds the residual threshold {threshold:e} on the scan circle")]
    TruncationDominatesResidual { tail: f64, threshold: f64 },
    #[error("function is numerically zero")]
    ZeroFunction,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
