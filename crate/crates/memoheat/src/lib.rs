//! Modal solver and verification toolkit for the one-dimensional heat
//! equation with memory,
//!
//! ```text
//! θ_t(x,t) = ∫₀ᵗ k(t−s) θ_xx(x,s) ds + f(x,t),   x ∈ (0,π),  t > 0,
//! ```
//!
//! with Dirichlet boundary conditions, initial data θ(x,0) = ξ(x), and a
//! memory kernel that is a finite sum of decaying exponentials
//! k(t) = Σ aₖ e^{−bₖ t}.
//!
//! Expanding in the sine basis φₙ = √(2/π) sin(nx) decouples the problem
//! into one linear integro-differential equation per mode, which this crate
//! solves by two independent time-domain schemes (an implicit-trapezoidal
//! ODE reformulation and a product-integration Volterra scheme). On the
//! Laplace side it evaluates the characteristic function Gₙ(z) = z + n²K(z),
//! its zero set (the spectrum), weighted vertical-line norms, and the
//! damped-wave comparison symbol Dₙ = 1/Gₙ − 1/G⁰ₙ. The `verify` module
//! turns the relevant boundedness, equivalence, and decay estimates into
//! numerical checks with structured pass/fail reports.

pub mod error;
pub mod kernel;
pub mod laplace;
pub mod modes;
pub mod output;
pub mod scenario;
pub mod spaces;
pub mod spectrum;
pub mod verify;

pub mod cli;

pub use num_complex;

pub use error::{Error, Result};
pub use kernel::{Kernel, KernelMoments};
pub use modes::{Field, Forcing, Method, ModeTrajectory, TimeGrid};
pub use scenario::{load_scenario, Scenario};

/// Tool version stamped into every emitted file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
