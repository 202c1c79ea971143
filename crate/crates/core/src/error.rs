use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FbaError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infinite product diverges: |base| = {0} >= 1")]
    Divergence(f64),
    #[error("argument {0} sits on a pole")]
    Pole(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("contour infeasible: {0}")]
    ContourInfeasible(String),
    #[error("non-finite integrand sample at {0}")]
    NonFinite(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("zero collision: two iterates converged to {0}")]
    ZeroCollision(String),
    #[error("homotopy failed; last good q = {last_good_q}: {reason}")]
    Homotopy { last_good_q: f64, reason: String },
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    #[error("resonance: {0}")]
    Resonance(String),
    #[error("series tail too large: {0}")]
    Tail(String),
    #[error("singular linear system")]
    Singular,
}

pub type Result<T> = std::result::Result<T, FbaError>;
