use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes of the individual
/// stages; numerical failures carry enough context to be reported machine-readably.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    // boundary
    #[error("potential is not Morse: |V0''({y:.6})| = {hess:.3e} <= {tol:.1e}")]
    NotMorse { y: f64, hess: f64, tol: f64 },
    #[error("did not converge: {0}")]
    NoConvergence(String),

    // classical
    #[error("lambda = {lambda} is within {tol:.1e} of the critical value {cv}")]
    CriticalEnergy { lambda: f64, cv: f64, tol: f64 },
    #[error("energy drift {drift:.3e} exceeds 10x energy_tol = {tol:.1e}")]
    EnergyDrift { drift: f64, tol: f64 },
    #[error("operation requires a saddle or sink/source radial point, got {0}")]
    WrongKind(String),
    #[error("flow-out trajectory exhausted max_time without capture")]
    UnresolvedConnection,

    // legendrian
    #[error("phase jet obstructed at order {order}: |1 - k r| = {gap:.3e} below tolerance")]
    ResonantObstruction { order: usize, gap: f64 },
    #[error("Legendre curve folds at y = {y:.6} (|dy/dt| = {dy:.3e} below fold_tol)")]
    FoldDetected { y: f64, dy: f64 },
    #[error("expansion is not defined at a center radial point for this operation")]
    NotCenter,

    // eigenfunction models
    #[error("series tail {tail:.3e} exceeds series_tol {tol:.1e} at truncation order {order}")]
    TailTooLarge { tail: f64, tol: f64, order: usize },
    #[error("sink is resonant (1/r1 = {n}); the resonant constant c is required")]
    MissingResonantC { n: u32 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("saddle series hits a resonant exponent alpha = {alpha:.6} at term {term}")]
    ResonantExponent { alpha: f64, term: usize },
    #[error("transport characteristic leaves the y-window (y = {y:.6} at t = {t:.3e})")]
    CharacteristicEscape { y: f64, t: f64 },
    #[error("grid resolves fewer than {required} points per oscillation (min {got:.2})")]
    UnresolvedOscillation { got: f64, required: f64 },

    // pairing / S-matrix
    #[error("pairing arguments carry different energies: {0} vs {1}")]
    MixedEnergy(f64, f64),
    #[error("diagonal pairing entry {index} is {value:.3e}, below biorth_tol")]
    SingularDiagonal { index: usize, value: f64 },
    #[error("field does not match the expected modal form: {0}")]
    FormMismatch(String),

    // oracle
    #[error("solver failed to converge: residual {residual:.3e} after {iters} iterations")]
    SolverStalled { residual: f64, iters: usize },
    #[error("requested measurement needs {needed:.2} decades of x, only {got:.2} usable")]
    InsufficientRange { needed: f64, got: f64 },
    #[error("epsilon continuation does not settle: {0}")]
    NoLimit(String),
    #[error("grid resolution error: {0}")]
    ResolutionError(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
