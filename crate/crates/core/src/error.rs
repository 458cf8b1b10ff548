use thiserror::Error;

/// Errors surfaced by the library operations.
///
/// Every fallible contract in the crate maps onto one of these variants so
/// that the CLI can translate failures into exit codes uniformly
/// (configuration problems vs. assertion failures).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series argument |x| = {x} exceeds the safety threshold {threshold}; use the Bessel-oracle path")]
    SeriesOverflow { x: f64, threshold: f64 },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("assignment instance too large: m = {m} exceeds cap {cap}")]
    InstanceTooLarge { m: usize, cap: usize },

    #[error("integration failure: estimates disagree by {disagreement:.3e}, beyond reported tolerance {tolerance:.3e}")]
    IntegrationFailure { disagreement: f64, tolerance: f64 },

    #[error("assumption violated: {inequality} has margin {margin:.6e} at witness x = {witness:?}")]
    AssumptionViolated {
        inequality: String,
        margin: f64,
        witness: Vec<f64>,
    },

    #[error("degenerate constants: chi = c1 * B^k = 0 makes J identically 1 and theta = 0; choose B > 0")]
    DegenerateConstants,

    #[error("nesting budget exceeded: outer {outer} x inner {inner} = {} > cost cap {cap}", outer * inner)]
    NestingBudget {
        outer: usize,
        inner: usize,
        cap: usize,
    },

    #[error("trajectory left the stability box (|X| = {norm:.3e} > {bound:.3e} at step {step}); reduce dt")]
    StepSize { norm: f64, bound: f64, step: usize },

    #[error("tail budget: T_max = {t_max} gives tail bound {tail:.3e} > requested tolerance {tolerance:.3e}")]
    TailBudget {
        t_max: f64,
        tail: f64,
        tolerance: f64,
    },

    #[error("bound violated: {check} at t = {t} (seed {seed}): {detail}")]
    BoundViolated {
        check: String,
        t: f64,
        seed: u64,
        detail: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
