//! Numerical tolerances shared across modules.

/// Root tolerance for turning points, scaled by `max(1, |E|)`.
pub const ROOT_REL: f64 = 1e-12;

pub fn tol_root(energy: f64) -> f64 {
    ROOT_REL * energy.abs().max(1.0)
}

/// Location tolerance for the well bottom.
pub const TOL_MIN: f64 = 1e-10;

/// Slack allowed on the sign pattern of `V'`.
pub const TOL_SIGN: f64 = 1e-10;

/// Points in the single-well validation scan.
pub const VALIDATION_GRID: usize = 4096;

/// Absolute accuracy of Agmon-distance quadrature.
pub const TOL_QUAD: f64 = 1e-10;

/// Smallest panel in the geometric refinement toward a turning point, relative to `L`.
pub const MIN_PANEL_REL: f64 = 1e-14;

/// Absolute accuracy of the singular (inverse square root) quadratures.
pub const TOL_SING: f64 = 1e-9;

/// Slack for log-space inequality checks.
pub const TOL_EXP: f64 = 1e-6;

/// Relative eigen-residual that stops inverse iteration.
pub const EIG_RESIDUAL_REL: f64 = 1e-12;

/// Iteration cap for inverse iteration.
pub const MAX_INVERSE_ITERATIONS: usize = 100;

/// Eigenvalue tolerance `1e-12 (|E| + 4 eps^2 / h^2)`.
pub fn tol_eig(energy: f64, eps: f64, spacing: f64) -> f64 {
    1e-12 * (energy.abs() + 4.0 * eps * eps / (spacing * spacing))
}

/// Floor below which `‖ψ‖_{L²(U)}` counts as a failed geometric-control check.
pub const C_FLOOR: f64 = 1e-3;

/// Errors below this are treated as converged when checking monotone trends.
pub const TREND_NOISE_FLOOR: f64 = 1e-12;

/// Allowed growth factor between consecutive schedule points in trend checks.
pub const TREND_SLACK: f64 = 1.5;

/// Husimi tube width constant: `eta = HUSIMI_TUBE * sqrt(eps) * (1 + |E|)`.
pub const HUSIMI_TUBE: f64 = 5.0;
