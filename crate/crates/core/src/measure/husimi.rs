//! Husimi densities `H(x, ξ) = |<ψ, g_{x,ξ}>|² / (2π eps)` with Gaussian
//! coherent states `g_{x,ξ}(y) = (π eps)^{-1/4} exp(-(y-x)²/(2 eps) + i ξ y / eps)`.
//! `ψ` is extended by zero outside `[0, L]`.

use rayon::prelude::*;

use crate::eigensolve::Eigenpair;
use crate::error::{Error, Result};
use crate::potential::Potential;

/// Coherent states are truncated beyond this many standard widths.
const WINDOW_WIDTHS: f64 = 9.0;

#[derive(Debug, Clone)]
pub struct HusimiField {
    pub eps: f64,
    pub energy: f64,
    pub xs: Vec<f64>,
    pub xis: Vec<f64>,
    /// Row-major, `values[j * xis.len() + k] = H(xs[j], xis[k])`, renormalized
    /// to unit discrete mass.
    pub values: Vec<f64>,
    /// Discrete mass before renormalization.
    pub raw_mass: f64,
    /// Coherent-state width `sqrt(eps)`.
    pub sigma: f64,
}

fn trapezoid_weights(n: usize, step: f64) -> Vec<f64> {
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * step } else { step })
        .collect()
}

/// Husimi field on `nx` uniform points of `[0, L]` times `nxi` uniform points
/// of `[-xi_max, xi_max]`. `xi_max` defaults to `sqrt(max(E - E0, 0)) + 6 sqrt(eps)`.
pub fn husimi(
    pair: &Eigenpair,
    potential: &Potential,
    nx: usize,
    nxi: usize,
    xi_max: Option<f64>,
) -> Result<HusimiField> {
    let eps = pair.eps;
    let sigma = eps.sqrt();
    let span = (pair.energy - potential.ground_energy()).max(0.0);
    let xi_max = xi_max.unwrap_or(span.sqrt() + 6.0 * sigma);
    let needed = span + 4.0 * eps;
    if xi_max * xi_max < needed {
        return Err(Error::PhaseWindowTooSmall {
            xi_sq: xi_max * xi_max,
            needed,
        });
    }
    if nx < 2 || nxi < 2 {
        return Err(Error::Precondition("Husimi grid needs at least 2x2 points".into()));
    }
    let length = potential.length();
    let dx = length / (nx - 1) as f64;
    let dxi = 2.0 * xi_max / (nxi - 1) as f64;
    let xs: Vec<f64> = (0..nx).map(|j| j as f64 * dx).collect();
    let xis: Vec<f64> = (0..nxi).map(|k| -xi_max + k as f64 * dxi).collect();

    let h = pair.grid.spacing;
    let nodes = pair.nodes();
    let norm = (std::f64::consts::PI * eps).powf(-0.25);
    let reach = WINDOW_WIDTHS * sigma;

    let values: Vec<f64> = xs
        .par_iter()
        .flat_map_iter(|&x| {
            let first = nodes.partition_point(|&y| y < x - reach);
            let last = nodes.partition_point(|&y| y <= x + reach);
            let weights: Vec<f64> = (first..last)
                .map(|i| {
                    let d = nodes[i] - x;
                    h * pair.psi[i] * norm * (-d * d / (2.0 * eps)).exp()
                })
                .collect();
            let y0 = nodes.get(first).copied().unwrap_or(0.0);
            xis.iter()
                .map(|&xi| {
                    // <ψ, g> = Σ w_i exp(-i ξ y_i / eps), phase advanced by rotation.
                    let (mut s, mut c) = (-xi * y0 / eps).sin_cos();
                    let (ds, dc) = (-xi * h / eps).sin_cos();
                    let (mut re, mut im) = (0.0, 0.0);
                    for &w in &weights {
                        re += w * c;
                        im += w * s;
                        let nc = c * dc - s * ds;
                        s = s * dc + c * ds;
                        c = nc;
                    }
                    (re * re + im * im) / (2.0 * std::f64::consts::PI * eps)
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let wx = trapezoid_weights(nx, dx);
    let wxi = trapezoid_weights(nxi, dxi);
    let raw_mass: f64 = values
        .chunks(nxi)
        .zip(&wx)
        .map(|(row, a)| a * row.iter().zip(&wxi).map(|(v, b)| v * b).sum::<f64>())
        .sum();
    let values = values.into_iter().map(|v| v / raw_mass).collect();
    Ok(HusimiField {
        eps,
        energy: pair.energy,
        xs,
        xis,
        values,
        raw_mass,
        sigma,
    })
}

impl HusimiField {
    fn weights(&self) -> (Vec<f64>, Vec<f64>) {
        let dx = self.xs[1] - self.xs[0];
        let dxi = self.xis[1] - self.xis[0];
        (
            trapezoid_weights(self.xs.len(), dx),
            trapezoid_weights(self.xis.len(), dxi),
        )
    }

    #[inline]
    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.xis.len() + k]
    }

    /// Mass of cells with `pred(x, ξ)`.
    pub fn mass_where(&self, pred: impl Fn(f64, f64) -> bool) -> f64 {
        let (wx, wxi) = self.weights();
        let mut total = 0.0;
        for (j, &x) in self.xs.iter().enumerate() {
            for (k, &xi) in self.xis.iter().enumerate() {
                if pred(x, xi) {
                    total += wx[j] * wxi[k] * self.at(j, k);
                }
            }
        }
        total
    }

    /// Mass within `|ξ² + V(x) - E| ≤ eta`.
    pub fn tube_mass(&self, potential: &Potential, eta: f64) -> f64 {
        let e = self.energy;
        self.mass_where(|x, xi| (xi * xi + potential.value(x) - e).abs() <= eta)
    }

    /// Fraction of mass with `ξ > 0`, counting `ξ = 0` half.
    pub fn positive_branch_fraction(&self) -> f64 {
        let positive = self.mass_where(|_, xi| xi > 0.0);
        let zero = self.mass_where(|_, xi| xi == 0.0);
        positive + 0.5 * zero
    }

    /// `∫ H(x, ξ) dξ` at each `x`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let (_, wxi) = self.weights();
        self.values
            .chunks(self.xis.len())
            .map(|row| row.iter().zip(&wxi).map(|(v, w)| v * w).sum())
            .collect()
    }

    /// `L¹` distance between the x-marginal and `|ψ|²` convolved with the
    /// Gaussian `(π eps)^{-1/2} exp(-d²/eps)`, computed directly in position space.
    pub fn marginal_l1_distance(&self, pair: &Eigenpair) -> f64 {
        let smoothed = smoothed_density(pair, &self.xs);
        let marginal = self.x_marginal();
        let (wx, _) = self.weights();
        marginal
            .iter()
            .zip(&smoothed)
            .zip(&wx)
            .map(|((m, s), w)| w * (m - s).abs())
            .sum()
    }
}

/// `|ψ|² * (π eps)^{-1/2} exp(-d²/eps)` at the points `xs`.
pub fn smoothed_density(pair: &Eigenpair, xs: &[f64]) -> Vec<f64> {
    let eps = pair.eps;
    let h = pair.grid.spacing;
    let nodes = pair.nodes();
    let norm = 1.0 / (std::f64::consts::PI * eps).sqrt();
    xs.iter()
        .map(|&x| {
            nodes
                .iter()
                .zip(&pair.psi)
                .map(|(&y, &p)| h * p * p * norm * (-(y - x) * (y - x) / eps).exp())
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::{solve_mode, GridPolicy, ModeSelector};

    #[test]
    fn window_too_small() {
        let p = Potential::parse("(x-1)^2", 2.0).unwrap();
        let policy = GridPolicy::Auto { energy_max: 1.0, factor: 1.0 };
        let (_, pair) = solve_mode(&p, None, 0.05, &policy, ModeSelector::Index(3)).unwrap();
        assert!(matches!(
            husimi(&pair, &p, 20, 20, Some(0.1)),
            Err(Error::PhaseWindowTooSmall { .. })
        ));
    }

    #[test]
    fn ground_state_mass_and_symmetry() {
        let p = Potential::parse("(x-1)^2", 2.0).unwrap();
        let policy = GridPolicy::Auto { energy_max: 1.0, factor: 1.0 };
        let (_, pair) = solve_mode(&p, None, 0.05, &policy, ModeSelector::Index(0)).unwrap();
        let field = husimi(&pair, &p, 81, 81, None).unwrap();
        assert!(field.values.iter().all(|&v| v >= 0.0));
        assert!((0.95..=1.05).contains(&field.raw_mass), "{}", field.raw_mass);
        assert!((field.positive_branch_fraction() - 0.5).abs() < 1e-9);
    }
}
