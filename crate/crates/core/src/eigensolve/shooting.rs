//! Prüfer-phase shooting, an eigenvalue oracle independent of the matrix
//! discretization.
//!
//! With `u = ψ`, `p = eps ψ'` and a scale `s > 0`, the angle
//! `θ = atan2(s u, p)` obeys
//!
//! ```text
//! θ' = (s cos²θ + (E - W(x)) sin²θ / s) / eps,   θ(0) = 0,
//! ```
//!
//! where `W = V + q_eps`. `θ` only crosses multiples of `π` upward, so the
//! `k`-th Dirichlet eigenvalue is the unique `E` with `θ(L) = (k + 1) π`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::potential::{perturbation_value, Perturbation, Potential};

/// Local error per unit length accepted by the step-doubling controller.
const STEP_TOL: f64 = 1e-11;
const MAX_REFINEMENTS: usize = 200;

struct Prufer<'a> {
    w: &'a dyn Fn(f64) -> f64,
    eps: f64,
    length: f64,
    scale: f64,
}

impl Prufer<'_> {
    #[inline]
    fn rhs(&self, x: f64, theta: f64, energy: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        (self.scale * c * c + (energy - (self.w)(x)) * s * s / self.scale) / self.eps
    }

    fn rk4(&self, x: f64, theta: f64, h: f64, energy: f64) -> f64 {
        let k1 = self.rhs(x, theta, energy);
        let k2 = self.rhs(x + 0.5 * h, theta + 0.5 * h * k1, energy);
        let k3 = self.rhs(x + 0.5 * h, theta + 0.5 * h * k2, energy);
        let k4 = self.rhs(x + h, theta + h * k3, energy);
        theta + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// `θ(L; E)` by classical RK4 with step doubling and local extrapolation.
    fn end_phase(&self, energy: f64) -> Result<f64> {
        let min_step = 1e-15 * self.length;
        let mut x = 0.0;
        let mut theta = 0.0;
        let mut h = self.eps / (4.0 * (self.scale + (energy.abs() + 1.0) / self.scale));
        while x < self.length {
            if x + h > self.length {
                h = self.length - x;
            }
            let mut tries = 0;
            loop {
                let full = self.rk4(x, theta, h, energy);
                let half = self.rk4(x, theta, 0.5 * h, energy);
                let two_half = self.rk4(x + 0.5 * h, half, 0.5 * h, energy);
                let err = (two_half - full).abs() / 15.0;
                let allowed = (STEP_TOL * h).max(64.0 * f64::EPSILON * (1.0 + theta.abs()));
                if err <= allowed || h <= min_step {
                    if h <= min_step && err > allowed {
                        return Err(Error::PhaseOverflow { x, min_step });
                    }
                    theta = two_half + (two_half - full) / 15.0;
                    x += h;
                    let grow = if err == 0.0 { 2.0 } else { 0.9 * (allowed / err).powf(0.2) };
                    h *= grow.clamp(0.2, 2.0);
                    break;
                }
                h *= (0.9 * (allowed / err).powf(0.25)).clamp(0.1, 0.5);
                tries += 1;
                if tries > MAX_REFINEMENTS {
                    return Err(Error::PhaseOverflow { x, min_step });
                }
            }
        }
        Ok(theta)
    }
}

/// Outcome of a shooting solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingEigenvalue {
    pub energy: f64,
    pub end_phase: f64,
    /// Interior zeros of the shot solution, read from `θ(L)` at the lower bracket.
    pub nodes: usize,
}

/// `k`-th Dirichlet eigenvalue (zero-based) of `-eps² d² + V + q_eps` on `[0, L]`.
pub fn shooting_eigenvalue(
    potential: &Potential,
    perturbation: Option<&Perturbation>,
    eps: f64,
    k: usize,
) -> Result<ShootingEigenvalue> {
    let w = |x: f64| potential.value(x) + perturbation_value(perturbation, eps, x);
    shoot_with(&w, potential.length(), eps, k)
}

/// Shooting for an arbitrary continuous `W` on `[0, length]`.
pub fn shoot_with(
    w: &dyn Fn(f64) -> f64,
    length: f64,
    eps: f64,
    k: usize,
) -> Result<ShootingEigenvalue> {
    if !(eps > 0.0) {
        return Err(Error::NonPositiveEps(eps));
    }
    let n_scan = 4096;
    let samples: Vec<f64> = (0..n_scan)
        .map(|i| w(length * i as f64 / (n_scan - 1) as f64))
        .collect();
    let w_min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let w_max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let target = (k + 1) as f64 * PI;

    // Dirichlet box comparison: E_k <= max W + eps² ((k+1) π / L)².
    let mut hi = w_max + (eps * target / length).powi(2) + 1e-3 * (w_max - w_min + 1.0);
    let mut lo = w_min - 1e-3 * (w_max - w_min + 1.0);
    let energy_scale = |e: f64| (e - w_min).max(0.0) + 1.0;
    let phase = |e: f64| {
        let p = Prufer {
            w,
            eps,
            length,
            scale: energy_scale(e).sqrt(),
        };
        p.end_phase(e)
    };
    let mut f_lo = phase(lo)? - target;
    let mut f_hi = phase(hi)? - target;
    let mut grow = 0;
    while f_hi < 0.0 {
        hi += (hi - lo).max(1.0);
        f_hi = phase(hi)? - target;
        grow += 1;
        if grow > 60 {
            return Err(Error::Precondition(format!("cannot bracket eigenvalue {k}")));
        }
    }
    if f_lo > 0.0 {
        return Err(Error::Precondition(format!("lower bracket for eigenvalue {k} too high")));
    }

    // Illinois-safeguarded bisection on θ(L; E) - (k+1)π.
    let mut side = 0i8;
    let mut energy = 0.5 * (lo + hi);
    for it in 0..200 {
        let candidate = if it % 4 == 3 {
            0.5 * (lo + hi)
        } else {
            (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        };
        energy = if candidate > lo && candidate < hi { candidate } else { 0.5 * (lo + hi) };
        let f = phase(energy)? - target;
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = energy;
            f_lo = f;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = energy;
            f_hi = f;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        if hi - lo <= 1e-10 * energy.abs().max(eps * eps) {
            energy = 0.5 * (lo + hi);
            break;
        }
    }
    let end_phase = phase(energy)?;
    // Just below the eigenvalue θ(L) lies in (kπ, (k+1)π); at it, the phase near
    // a decaying wall is too sensitive to read off.
    let nodes = (phase(lo)? / PI).floor().max(0.0) as usize;
    Ok(ShootingEigenvalue {
        energy,
        end_phase,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_laplacian() {
        for k in 0..4 {
            let r = shoot_with(&|_| 0.0, PI, 1.0, k).unwrap();
            let exact = ((k + 1) * (k + 1)) as f64;
            assert!((r.energy - exact).abs() < 1e-9 * exact, "k={k}: {}", r.energy);
            assert_eq!(r.nodes, k);
        }
    }

    #[test]
    fn harmonic_well() {
        let p = Potential::parse("(x-1)^2", 2.0).unwrap();
        for k in 0..3 {
            let r = shooting_eigenvalue(&p, None, 0.02, k).unwrap();
            let harmonic = 0.02 * (2 * k + 1) as f64;
            assert!((r.energy - harmonic).abs() < 1e-9, "k={k}: {}", r.energy);
            assert_eq!(r.nodes, k);
        }
    }
}
