//! Representative sample weighting.
//!
//! Chooses weights `w` on the probability simplex so that the weighted expectations `f = Fw`
//! of a set of functions are close to desired values, while keeping `w` regular:
//!
//! ```text
//! minimize   ℓ(f, f_des) + λ r(w)
//! subject to f = Fw,  w ≥ 0,  1ᵀw = 1
//! ```
//!
//! The general solver is consensus ADMM ([`admm`]); maximum-entropy problems over partitioned
//! Boolean features can also be solved exactly by raking ([`raking`]).

pub mod admm;
pub mod analysis;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod model;
pub mod prox;
pub mod raking;
pub mod sampling;

pub use admm::{objective_value, solve, AdmmSolver, IterateState};
pub use error::{Error, Result};
pub use model::{
    validate_problem, Block, BlockLayout, BooleanInit, LossSpec, RegularizerSpec, SampleMatrix,
    Solution, SolverConfig, Status, Violation, WeightingProblem,
};
