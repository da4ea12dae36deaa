//! Deterministic numerical kernels shared by the physics modules.

pub mod diff;
pub mod ode;
pub mod quad;
pub mod root;

pub use ode::{
    rk_integrate, rk_integrate_observed, Controls, Flow, OdeError, OdeRun, OdeState, Sampling,
    Stepping,
};
pub use quad::{quad_adaptive, quad_breakpoints, quad_semi_infinite, QuadError, QuadResult};
pub use root::{bisect, try_bisect, BisectError, Bisection, Side};
