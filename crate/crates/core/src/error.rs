use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("too close to an exceptional point: band gap {gap:.3e}")]
    EpTooClose { gap: f64 },
    #[error("eigenvalues do not form two degenerate pairs (pair splitting {splitting:.3e})")]
    NonDegenerate { splitting: f64 },
    #[error("closed-form eigenvectors are undefined here: {0}")]
    DegenerateFormula(&'static str),
    #[error("point lies on the exceptional hypersphere: band gap {gap:.3e}")]
    OnEhs { gap: f64 },
    #[error("frame is not biorthogonal: defect {defect:.3e}")]
    FrameMismatch { defect: f64 },
    #[error("frame overlap is rank deficient: smallest singular value {sigma_min:.3e}")]
    SingularOverlap { sigma_min: f64 },
    #[error("radius {r} is within 1e-3 of kappa {kappa}")]
    TransitionPoint { r: f64, kappa: f64 },
    #[error("second Chern number not converged: quantization defect {defect:.4}")]
    NotConverged { defect: f64 },
    #[error("loop crosses the exceptional hypersphere at s = {s:.6}: gap {gap:.3e}")]
    EhsCrossing { s: f64, gap: f64 },
    #[error("holonomy did not converge: last step-halving difference {diff:.3e}")]
    NoConvergence { diff: f64 },
    #[error("ambiguous branch continuation at step {step}: displacement {displacement:.3e} vs gap {gap:.3e}")]
    AmbiguousContinuation { step: usize, displacement: f64, gap: f64 },
    #[error("Fock cutoff too small: top-level population {population:.3e} at t = {t}")]
    CutoffTooSmall { population: f64, t: f64 },
    #[error("integrator step rejected at t = {t}: {reason}")]
    StepRejected { t: f64, reason: &'static str },
    #[error("state has no weight inside the working subspace")]
    EmptySupport,
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
    #[error("ambiguous matrix logarithm: eigenvalue phase {phase:.4} near pi")]
    AmbiguousLog { phase: f64 },
    #[error("mapping residual {residual:.3e} exceeds bound {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
