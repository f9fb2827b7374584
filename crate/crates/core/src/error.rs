use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty cloud")]
    EmptyCloud,
    #[error("out of domain: position {0}")]
    OutOfDomain(f64),
    #[error("grid mismatch")]
    GridMismatch,
    #[error("empty measure")]
    EmptyMeasure,
    #[error("unbalanced: masses {0} and {1} differ")]
    Unbalanced(f64, f64),
    #[error("LP oracle limited to small supports ({atoms} atoms > {limit})")]
    SupportTooLarge { atoms: usize, limit: usize },
    #[error("not a tangent vector: net mass {0:e}")]
    NotTangent(f64),
    #[error("mobility vanishes at face {0}")]
    MobilityVanishes(usize),
    #[error("entropy derivative undefined at vacuum (cell {0})")]
    VacuumDerivative(usize),
    #[error("mixing entropy derivative undefined at saturated cell {0}")]
    SaturatedDerivative(usize),
    #[error("scheme instability: density {value:e} at cell {cell}; reduce dt")]
    SchemeInstability { cell: usize, value: f64 },
    #[error("reduce dt: {0}")]
    ReduceDt(String),
    #[error("step too aggressive; reduce h or refine")]
    StepTooAggressive,
    #[error("decay step too large")]
    DecayStepTooLarge,
    #[error("not a Legendre pair: conjugate mismatch {0:e}")]
    NotLegendrePair(f64),
    #[error("conjugate infinite")]
    ConjugateInfinite,
    #[error("infeasible energy")]
    InfeasibleEnergy,
    #[error("no convergence after {iterations} iterations (best value {best})")]
    NoConvergence { iterations: usize, best: f64 },
    #[error("size limit exceeded: {0}")]
    TooLarge(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
