//! Chance-constrained programming: scenario certificates, deterministic
//! reformulations, a small LP/MILP/SOC solver, and Monte Carlo validation.

pub mod certificates;
pub mod lp_format;
pub mod model;
pub mod par;
pub mod program;
pub mod reformulate;
pub mod rng;
mod serde_inf;
pub mod solver;
pub mod special;
pub mod validate;
