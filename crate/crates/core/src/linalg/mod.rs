//! Numerical kernels shared by the proximal operators and the ADMM solver.

mod csc;
mod lambert;
mod ldl;
mod projection;

pub use csc::CscMatrix;
pub use lambert::{lambert_w, lambert_w_of_exp};
pub use ldl::{kkt_factorize, kkt_solve, KktFactor, LdlFactor};
pub use projection::{project_simplex, project_topk, top_k_indices};
