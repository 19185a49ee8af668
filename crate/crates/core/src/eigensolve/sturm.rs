use rayon::prelude::*;

use super::operator::{Grid, TridiagonalOperator};
use crate::error::{Error, Result};
use crate::tolerances::{tol_eig, EIG_RESIDUAL_REL, MAX_INVERSE_ITERATIONS};

const PIVOT_GUARD: f64 = 1e-280;

/// Number of eigenvalues of `op` strictly below `lambda`, from the signs of
/// the `LDL^T` pivots of `op - lambda`.
pub fn sturm_count(op: &TridiagonalOperator, lambda: f64) -> usize {
    let e2 = op.off_diagonal * op.off_diagonal;
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in op.diagonal.iter().enumerate() {
        q = if i == 0 { d - lambda } else { d - lambda - e2 / q };
        if q.abs() < PIVOT_GUARD {
            q = -PIVOT_GUARD;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    Range(f64, f64),
    Count(usize),
}

/// Eigenvalue with zero-based index `j`, bisected until the bracket stops
/// shrinking in floating point.
fn bisect_index(op: &TridiagonalOperator, j: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(op, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues in a window (ascending, each exactly once), or the `k`
/// lowest.
pub fn eigenvalues_in_window(op: &TridiagonalOperator, window: Window) -> Result<Vec<f64>> {
    let (glo, ghi) = op.gershgorin();
    let (glo, ghi) = (glo - 1e-12 * glo.abs().max(1.0), ghi + 1e-12 * ghi.abs().max(1.0));
    let (first, last, lo, hi) = match window {
        Window::Range(lo, hi) => {
            if !(lo < hi) {
                return Err(Error::WindowEmpty { lo, hi });
            }
            let first = sturm_count(op, lo);
            let last = sturm_count(op, hi);
            if last == first {
                return Err(Error::WindowEmpty { lo, hi });
            }
            (first, last, lo.max(glo), hi.min(ghi))
        }
        Window::Count(k) => {
            if k == 0 {
                return Err(Error::WindowEmpty { lo: glo, hi: glo });
            }
            (0, k.min(op.len()), glo, ghi)
        }
    };
    Ok((first..last)
        .into_par_iter()
        .map(|j| bisect_index(op, j, lo, hi))
        .collect())
}

/// One Dirichlet eigenpair on the grid, normalized in the trapezoid `L^2`
/// norm with `ψ'(0) > 0`.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub eps: f64,
    pub energy: f64,
    /// Zero-based position in the discrete spectrum.
    pub index: usize,
    pub grid: Grid,
    /// Samples at all nodes including `ψ(0) = ψ(L) = 0`.
    pub psi: Vec<f64>,
    pub dpsi0: f64,
    pub dpsi_l: f64,
    pub residual_norm: f64,
    pub l2_norm: f64,
}

impl Eigenpair {
    pub fn nodes(&self) -> Vec<f64> {
        self.grid.nodes_with_walls()
    }

    /// Interior sign changes.
    pub fn node_count(&self) -> usize {
        let mut count = 0;
        let mut last = 0.0f64;
        for &v in &self.psi[1..self.psi.len() - 1] {
            if v != 0.0 {
                if last != 0.0 && (v > 0.0) != (last > 0.0) {
                    count += 1;
                }
                last = v;
            }
        }
        count
    }

    /// Trapezoid `∫ f(x) |ψ(x)|² dx`.
    pub fn moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.grid.spacing;
        (1..=self.grid.n_interior)
            .map(|i| f(self.grid.node(i)) * self.psi[i] * self.psi[i])
            .sum::<f64>()
            * h
    }

    /// Trapezoid `‖ψ‖²` restricted to grid nodes in `[a, b]`, with
    /// half weights on the first and last included node.
    pub fn mass_in(&self, a: f64, b: f64) -> f64 {
        let h = self.grid.spacing;
        let idx: Vec<usize> = (0..self.psi.len())
            .filter(|&i| {
                let x = self.grid.node(i);
                x >= a && x <= b
            })
            .collect();
        match idx.len() {
            0 => 0.0,
            1 => 0.0,
            _ => {
                let inner: f64 = idx.iter().map(|&i| self.psi[i] * self.psi[i]).sum();
                let ends = self.psi[idx[0]].powi(2) + self.psi[*idx.last().unwrap()].powi(2);
                h * (inner - 0.5 * ends)
            }
        }
    }
}

struct Twisted {
    z: Vec<f64>,
    gamma: f64,
}

/// Solves `(T - sigma) z = gamma e_k` with `z_k = 1`, choosing the twist `k`
/// that minimizes `|gamma_k|`.
fn twisted_solve(op: &TridiagonalOperator, sigma: f64) -> Twisted {
    let n = op.len();
    let e = op.off_diagonal;
    let e2 = e * e;
    let guard = |q: f64| if q.abs() < PIVOT_GUARD { -PIVOT_GUARD } else { q };
    let mut dp = vec![0.0; n];
    let mut dm = vec![0.0; n];
    dp[0] = guard(op.diagonal[0] - sigma);
    for i in 1..n {
        dp[i] = guard(op.diagonal[i] - sigma - e2 / dp[i - 1]);
    }
    dm[n - 1] = guard(op.diagonal[n - 1] - sigma);
    for i in (0..n - 1).rev() {
        dm[i] = guard(op.diagonal[i] - sigma - e2 / dm[i + 1]);
    }
    let (k, gamma) = (0..n)
        .map(|k| (k, dp[k] + dm[k] - (op.diagonal[k] - sigma)))
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap();
    let mut z = vec![0.0; n];
    z[k] = 1.0;
    for i in (0..k).rev() {
        z[i] = -e * z[i + 1] / dp[i];
    }
    for i in k + 1..n {
        z[i] = -e * z[i - 1] / dm[i];
    }
    Twisted { z, gamma }
}

/// Inverse iteration from `energy_approx`, each step a twisted solve followed
/// by a Rayleigh-quotient shift update.
pub fn eigenpair(op: &TridiagonalOperator, energy_approx: f64) -> Result<Eigenpair> {
    let scale = op.norm_scale();
    let tol = tol_eig(energy_approx, op.eps, op.grid.spacing);
    let below = sturm_count(op, energy_approx - 10.0 * tol);
    let above = sturm_count(op, energy_approx + 10.0 * tol);
    if above > below + 1 {
        return Err(Error::DegenerateCluster(energy_approx));
    }

    let mut sigma = energy_approx;
    let mut converged = None;
    for _ in 0..MAX_INVERSE_ITERATIONS {
        let Twisted { z, gamma } = twisted_solve(op, sigma);
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rayleigh = sigma + gamma / (norm * norm);
        if (gamma / norm).abs() <= EIG_RESIDUAL_REL * scale {
            converged = Some((z, rayleigh));
            break;
        }
        if rayleigh == sigma {
            // Shift cannot move further in floating point.
            converged = Some((z, rayleigh));
            break;
        }
        sigma = rayleigh;
    }
    let Some((z, energy)) = converged else {
        return Err(Error::NoConvergence(MAX_INVERSE_ITERATIONS));
    };

    let grid = op.grid;
    let h = grid.spacing;
    let n = grid.n_interior;
    let sum_sq: f64 = z.iter().map(|v| v * v).sum();
    let norm = (h * sum_sq).sqrt();
    let mut psi = Vec::with_capacity(n + 2);
    psi.push(0.0);
    psi.extend(z.iter().map(|v| v / norm));
    psi.push(0.0);
    let mut dpsi0 = (4.0 * psi[1] - psi[2]) / (2.0 * h);
    let sign = if dpsi0 != 0.0 {
        dpsi0.signum()
    } else {
        psi.iter().copied().find(|v| *v != 0.0).map_or(1.0, f64::signum)
    };
    if sign < 0.0 {
        psi.iter_mut().for_each(|v| *v = -*v);
        dpsi0 = -dpsi0;
    }
    let dpsi_l = -(4.0 * psi[n] - psi[n - 1]) / (2.0 * h);
    let l2_norm = (h * psi.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let index = sturm_count(op, energy - 10.0 * tol.max(1e-13 * scale));

    let mut pair = Eigenpair {
        eps: op.eps,
        energy,
        index,
        grid,
        psi,
        dpsi0,
        dpsi_l,
        residual_norm: 0.0,
        l2_norm,
    };
    pair.residual_norm = residual(&pair, op);
    Ok(pair)
}

/// Discrete `L^2` norm of `(T - E) ψ`.
pub fn residual(pair: &Eigenpair, op: &TridiagonalOperator) -> f64 {
    let n = op.len();
    let interior = &pair.psi[1..=n];
    let t_psi = op.apply(interior);
    let sum: f64 = t_psi
        .iter()
        .zip(interior)
        .map(|(t, p)| (t - pair.energy * p).powi(2))
        .sum();
    (op.grid.spacing * sum).sqrt()
}
