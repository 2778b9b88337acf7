use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("potential is not repulsive at x = {x}: q = {q}, q' = {dq}")]
    NotRepulsive { x: f64, q: f64, dq: f64 },
    #[error("declared decay rate {declared} but fitted {fitted}")]
    DecayMismatch { declared: f64, fitted: f64 },
    #[error("potential fits none of the three classes: {0}")]
    Unclassifiable(String),
    #[error("x = {0} outside the domain of the potential")]
    DomainError(f64),
    #[error("moment integral of order {j} diverges")]
    DivergentTail { j: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("integrator step collapsed at x = {x}")]
    StiffnessFailure { x: f64 },
    #[error("asymptotic order N = {n} too low for decay rate {beta} (need N*beta >= 1)")]
    OrderTooLow { n: usize, beta: f64 },
    #[error("far-field fit degenerate at k = {k}: residual {residual} vs |A| = {amplitude}")]
    FitDegenerate { k: f64, residual: f64, amplitude: f64 },
    #[error("{defect} of the squared norm lies outside the covered band")]
    BandTruncation { defect: f64 },
    #[error("dt = {dt} violates the CFL bound for dx = {dx}")]
    CflViolation { dt: f64, dx: f64 },
    #[error("energy blow-up at t = {t}")]
    Blowup { t: f64 },
    #[error("region not covered by the recorded history: {0}")]
    RegionOutsideHistory(String),
    #[error("variant {variant} inadmissible for decay rate {beta}")]
    VariantInadmissible { variant: String, beta: f64 },
    #[error("k spacing {spacing} exceeds the resolution bound {bound}")]
    UnderResolved { spacing: f64, bound: f64 },
    #[error("potentials differ beyond R = {r}: at x = {x} the gap is {gap}")]
    PotentialsDifferFar { r: f64, x: f64, gap: f64 },
    #[error("amplitude fit not converged: relative change {change}")]
    NonConvergentFit { change: f64 },
    #[error("Q1 stays bounded (decay rate {beta} > 1)")]
    Q1Bounded { beta: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
