//! Numerical laboratory for the critical mean-field O(N) model.
//!
//! The crate provides, at desk scale:
//!
//! - [`specfun`]: the Bessel-type series U_nu and the conditional-moment
//!   functions f_N, g_N with certified truncation.
//! - [`spin`]: O(N) spin configurations, magnetization observables, and the
//!   exact single-site heat-bath (Glauber) chain.
//! - [`limit_laws`]: exact samplers and integrators for the quartic limit
//!   law mu ~ exp(-a_N |x|^4) and the standard Gaussian.
//! - [`transport`]: empirical Wasserstein-1 distances (exact assignment,
//!   sorted 1D, sliced).
//! - [`pair`]: exchangeable-pair conditional moments, the remainders R1 and
//!   R2, and the rate experiments over n.
//! - [`constants`]: potential specifications, numeric curvature-assumption
//!   checks, and the explicit ergodicity constant chain.
//! - [`langevin`]: the overdamped Langevin SDE with its variation processes,
//!   Elworthy-Li derivative estimators, and the decay/Stein/ergodicity
//!   checks.
//! - [`runner`]: experiment orchestration, configuration, seeding, and
//!   reproducible CSV/JSON artifacts.
//!
//! All samplers take explicit seeds and produce identical output regardless
//! of thread count; parallelism is over independent cells only (see
//! [`parallel`]).

pub mod constants;
pub mod error;
pub mod langevin;
pub mod limit_laws;
pub mod linalg;
pub mod pair;
pub mod parallel;
pub mod quad;
pub mod rng;
pub mod runner;
pub mod specfun;
pub mod spin;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
