//! Dirichlet eigenpairs of `P_eps = -eps^2 d^2/dx^2 + V + q_eps` on `[0, L]`.
//!
//! The operator is discretized with the 3-point Laplacian on a uniform grid,
//! eigenvalues are located by Sturm-count bisection, and eigenvectors come
//! from inverse iteration through a twisted factorization so that the
//! exponentially small tails keep their relative accuracy. [`shooting`]
//! provides an independent Prüfer-phase oracle.

mod operator;
pub mod shooting;
mod sturm;

pub use operator::{assemble, Grid, GridCheck, TridiagonalOperator};
pub use shooting::shooting_eigenvalue;
pub use sturm::{eigenpair, eigenvalues_in_window, residual, sturm_count, Eigenpair, Window};

use crate::error::Result;
use crate::potential::{Perturbation, Potential};

/// Eigenvalue `k` computed on grids with `n` and `2n + 1` interior points,
/// combined by Richardson extrapolation `(4 E_{h/2} - E_h) / 3`.
pub fn richardson_eigenvalues(
    potential: &Potential,
    perturbation: Option<&Perturbation>,
    eps: f64,
    n_interior: usize,
    count: usize,
) -> Result<Vec<f64>> {
    let coarse = assemble(potential, perturbation, eps, &Grid::new(potential.length(), n_interior)?)?;
    let fine = assemble(
        potential,
        perturbation,
        eps,
        &Grid::new(potential.length(), 2 * n_interior + 1)?,
    )?;
    let ec = eigenvalues_in_window(&coarse, Window::Count(count))?;
    let ef = eigenvalues_in_window(&fine, Window::Count(count))?;
    Ok(ec
        .iter()
        .zip(&ef)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect())
}

/// Interior grid size from the resolution rule
/// `n = ceil(20 L sqrt(E_max - E0 + 1) / eps)`.
pub fn auto_grid_size(length: f64, energy_span: f64, eps: f64) -> usize {
    (20.0 * length * (energy_span.max(0.0) + 1.0).sqrt() / eps).ceil() as usize
}

/// Maximum interior size accepted by the automatic grid policy.
pub const MAX_AUTO_GRID: usize = 2_000_000;

/// How the grid is chosen at each eps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPolicy {
    Fixed(usize),
    /// Resolution rule for energies up to `energy_max`, times `factor`.
    Auto { energy_max: f64, factor: f64 },
}

impl GridPolicy {
    pub fn interior_size(&self, potential: &Potential, eps: f64) -> Result<usize> {
        match *self {
            GridPolicy::Fixed(n) => Ok(n),
            GridPolicy::Auto { energy_max, factor } => {
                let span = energy_max.max(potential.max_value()) - potential.ground_energy();
                let n = (factor * auto_grid_size(potential.length(), span, eps) as f64).ceil() as usize;
                if n > MAX_AUTO_GRID {
                    return Err(crate::Error::Precondition(format!(
                        "automatic grid at eps = {eps} needs {n} points, above the cap {MAX_AUTO_GRID}"
                    )));
                }
                Ok(n.max(32))
            }
        }
    }

    pub fn grid(&self, potential: &Potential, eps: f64) -> Result<Grid> {
        Grid::new(potential.length(), self.interior_size(potential, eps)?)
    }
}

/// Which eigenpair to follow along a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeSelector {
    /// Zero-based index in the spectrum.
    Index(usize),
    /// Eigenvalue closest to the given energy.
    Nearest(f64),
}

/// Assembles the operator at `eps` and returns the selected eigenpair.
pub fn solve_mode(
    potential: &Potential,
    perturbation: Option<&Perturbation>,
    eps: f64,
    policy: &GridPolicy,
    selector: ModeSelector,
) -> Result<(TridiagonalOperator, Eigenpair)> {
    let op = assemble(potential, perturbation, eps, &policy.grid(potential, eps)?)?;
    let energy = match selector {
        ModeSelector::Index(k) => *eigenvalues_in_window(&op, Window::Count(k + 1))?
            .last()
            .ok_or(crate::Error::WindowEmpty { lo: f64::NEG_INFINITY, hi: f64::INFINITY })?,
        ModeSelector::Nearest(target) => nearest_eigenvalue(&op, target)?,
    };
    let pair = eigenpair(&op, energy)?;
    Ok((op, pair))
}

fn nearest_eigenvalue(op: &TridiagonalOperator, target: f64) -> Result<f64> {
    let (glo, ghi) = op.gershgorin();
    let mut delta = 4.0 * op.eps * (target.abs() + 1.0).sqrt();
    loop {
        let (lo, hi) = (target - delta, target + delta);
        match eigenvalues_in_window(op, Window::Range(lo, hi)) {
            Ok(found) => {
                return Ok(found
                    .into_iter()
                    .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
                    .unwrap())
            }
            Err(crate::Error::WindowEmpty { .. }) if lo > glo || hi < ghi => delta *= 2.0,
            Err(e) => return Err(e),
        }
    }
}
