use thiserror::Error;

/// Failures raised by the model, the asymptotic construction and the direct solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameter: {0}")]
    InvalidModel(String),

    #[error("packing fraction reached unity: 1 - d1*c1 - d2*c2 = {0}")]
    PackingOverflow(f64),

    #[error("degenerate layer: {0}")]
    DegenerateLayer(String),

    #[error("no sign change in [{lo}, {hi}] (f = {flo}, {fhi})")]
    BracketFailure { lo: f64, hi: f64, flo: f64, fhi: f64 },

    #[error("invalid layer limits: {0}")]
    InvalidLimits(String),

    #[error("no positive y* reaches the junction b (last residual {0})")]
    NoYStar(f64),

    #[error("sigma(y) = {sigma} <= 0 at y = {y}")]
    SigmaVanishes { y: f64, sigma: f64 },

    #[error("matching iterate left the feasible region: {0}")]
    InfeasibleState(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian (condition estimate {condition:.3e})")]
    SingularJacobian { condition: f64 },

    #[error("boundary data are not electroneutral: z1*l1 + z2*l2 = {left}, z1*r1 + z2*r2 = {right}")]
    NonNeutralBoundary { left: f64, right: f64 },

    #[error("valences must satisfy z1 = -z2 (got z1 = {z1}, z2 = {z2})")]
    ValenceMismatch { z1: f64, z2: f64 },

    #[error("{what} has constant sign on [{lo}, {hi}]")]
    NoBracket { what: String, lo: f64, hi: f64 },

    #[error("mesh too coarse: largest jump {jump:.3e} at x = {x}")]
    MeshTooCoarse { x: f64, jump: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
