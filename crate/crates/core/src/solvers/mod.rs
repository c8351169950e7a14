//! Time stepping for `u_t = A u`: explicit Euler, implicit Euler and
//! multiplicative operator splitting, plus the steady-state driver.

mod evolve;
pub mod krylov;
mod schemes;
pub mod tridiagonal;

pub use evolve::{evolve, evolve_with, EvolveReport, IterationRecord};
pub use schemes::{
    stable_timestep, step_explicit, step_implicit, step_mos, Scheme, SchemeConfig, SplitOrder,
    Stepper,
};
pub use tridiagonal::{solve_tridiagonal, FactoredLines};
