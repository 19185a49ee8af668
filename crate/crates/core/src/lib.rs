//! Semiclassical single-well Schrödinger operators on an interval.
//!
//! `semiwell` computes Dirichlet eigenpairs of
//! `P_eps = -eps² d²/dx² + V(x) + q_eps(x)` on `[0, L]` and measures how they
//! compare with their semiclassical predictions:
//!
//! * [`agmon`]: the Agmon distance to the classically allowed region, which
//!   sets the exponential decay rate `e^{-d(x)/eps}` of eigenfunctions;
//! * [`measure`]: limits of `|ψ|² dx` and of the Neumann traces `eps ψ'` at the
//!   walls, plus Husimi phase-space densities;
//! * [`bounds`]: effective exponents in the two-sided Agmon estimates and
//!   pointwise checks of the energy-density Gronwall inequalities.
//!
//! ```
//! use semiwell::{Potential, eigensolve::{self, Grid, Window}};
//!
//! let well = Potential::parse("(x-1)^2", 2.0)?;
//! let op = eigensolve::assemble(&well, None, 0.02, &Grid::new(2.0, 4000)?)?;
//! let low = eigensolve::eigenvalues_in_window(&op, Window::Count(2))?;
//! // Harmonic approximation eps (2k + 1).
//! assert!((low[0] - 0.02).abs() < 2e-4);
//! assert!((low[1] - 0.06).abs() < 6e-4);
//! # Ok::<(), semiwell::Error>(())
//! ```

pub mod agmon;
pub mod bounds;
pub mod config;
pub mod eigensolve;
pub mod error;
pub mod expr;
pub mod measure;
pub mod potential;
pub mod quadrature;
pub mod run;
pub mod tolerances;
pub mod trend;

pub use agmon::{agmon_distance, agmon_profile, AgmonProfile};
pub use eigensolve::{Eigenpair, Grid, TridiagonalOperator};
pub use error::{Error, Result};
pub use expr::Expr;
pub use potential::{Perturbation, Potential, TurningPoints, WellCertificate};

/// Chapters of the guide in `book/`, compiled here so their code blocks run
/// as doctests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    pub mod potentials {}
    #[doc = include_str!("../../../book/src/agmon.md")]
    pub mod agmon {}
    #[doc = include_str!("../../../book/src/eigensolve.md")]
    pub mod eigensolve {}
    #[doc = include_str!("../../../book/src/measures.md")]
    pub mod measures {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    pub mod bounds {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
