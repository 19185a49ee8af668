use crate::error::{Error, Result};
use crate::potential::{perturbation_value, Perturbation, Potential};

/// Uniform grid with `n_interior` unknowns; nodes `x_i = i h`, `i = 1..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n_interior: usize,
    pub spacing: f64,
    pub length: f64,
}

impl Grid {
    pub fn new(length: f64, n_interior: usize) -> Result<Self> {
        if n_interior < 32 {
            return Err(Error::GridTooSmall(n_interior));
        }
        if !(length > 0.0) {
            return Err(Error::DegenerateDomain(length));
        }
        Ok(Self {
            n_interior,
            spacing: length / (n_interior + 1) as f64,
            length,
        })
    }

    /// Interior node `i` in `1..=n_interior`; `0` and `n + 1` are the walls.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_interior + 1 {
            self.length
        } else {
            i as f64 * self.spacing
        }
    }

    /// All nodes including both walls.
    pub fn nodes_with_walls(&self) -> Vec<f64> {
        (0..=self.n_interior + 1).map(|i| self.node(i)).collect()
    }
}

/// How well the grid resolves the oscillation scale `eps / sqrt(max V - E0 + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridCheck {
    Resolved,
    /// Spacing above `eps / (10 sqrt(max V - E0 + 1))` but below `eps / 2`.
    Marginal,
}

/// Symmetric tridiagonal discretization of `P_eps` with Dirichlet rows removed.
#[derive(Debug, Clone)]
pub struct TridiagonalOperator {
    pub eps: f64,
    pub grid: Grid,
    pub diagonal: Vec<f64>,
    pub off_diagonal: f64,
    /// `V + q_eps` at the interior nodes.
    pub potential: Vec<f64>,
    pub resolution: GridCheck,
}

pub fn assemble(
    potential: &Potential,
    perturbation: Option<&Perturbation>,
    eps: f64,
    grid: &Grid,
) -> Result<TridiagonalOperator> {
    let span = potential.max_value() - potential.ground_energy();
    let fine = eps / (10.0 * (span + 1.0).sqrt());
    let mut op = TridiagonalOperator::from_fn(eps, grid, |x| {
        potential.value(x) + perturbation_value(perturbation, eps, x)
    })?;
    if grid.spacing > fine {
        op.resolution = GridCheck::Marginal;
    }
    Ok(op)
}

impl TridiagonalOperator {
    /// Operator for an arbitrary sampled potential; skips single-well checks.
    pub fn from_fn(eps: f64, grid: &Grid, v: impl Fn(f64) -> f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::NonPositiveEps(eps));
        }
        if grid.spacing > 0.5 * eps {
            return Err(Error::GridTooCoarse {
                eps,
                spacing: grid.spacing,
                limit: 0.5 * eps,
            });
        }
        let kinetic = eps * eps / (grid.spacing * grid.spacing);
        let potential: Vec<f64> = (1..=grid.n_interior).map(|i| v(grid.node(i))).collect();
        let diagonal = potential.iter().map(|&p| 2.0 * kinetic + p).collect();
        Ok(Self {
            eps,
            grid: *grid,
            diagonal,
            off_diagonal: -kinetic,
            potential,
            resolution: GridCheck::Resolved,
        })
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// Interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let e = self.off_diagonal.abs();
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, &d) in self.diagonal.iter().enumerate() {
            let r = if i == 0 || i == n - 1 { e } else { 2.0 * e };
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        (lo, hi)
    }

    /// Scale of the matrix, `max |d_i| + 2 |e|`.
    pub fn norm_scale(&self) -> f64 {
        self.diagonal.iter().fold(0.0f64, |m, d| m.max(d.abs())) + 2.0 * self.off_diagonal.abs()
    }

    /// `y = T x` on the interior unknowns.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let e = self.off_diagonal;
        (0..n)
            .map(|i| {
                let mut y = self.diagonal[i] * x[i];
                if i > 0 {
                    y += e * x[i - 1];
                }
                if i + 1 < n {
                    y += e * x[i + 1];
                }
                y
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing_and_walls() {
        let g = Grid::new(2.0, 99).unwrap();
        assert_eq!(g.spacing, 0.02);
        assert_eq!(g.node(100), 2.0);
        assert!(((g.n_interior + 1) as f64 * g.spacing - 2.0).abs() < 1e-15);
        assert!(matches!(Grid::new(2.0, 10), Err(Error::GridTooSmall(10))));
    }

    #[test]
    fn gershgorin_contains_floor() {
        let p = Potential::parse("(x-1)^2", 2.0).unwrap();
        let op = assemble(&p, None, 0.02, &Grid::new(2.0, 4000).unwrap()).unwrap();
        let (lo, hi) = op.gershgorin();
        let vmin = op.potential.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(lo <= vmin && lo >= -1e-12);
        let vmax = op.potential.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi <= vmax + 4.0 * op.off_diagonal.abs() + 1e-9);
        assert!(hi >= vmax);
    }

    #[test]
    fn resolution_levels() {
        let p = Potential::parse("(x-1)^2", 2.0).unwrap();
        // h = 1e-4 resolves eps = 0.02.
        let n = (2.0f64 / 1e-4).round() as usize - 1;
        let op = assemble(&p, None, 0.02, &Grid::new(2.0, n).unwrap()).unwrap();
        assert_eq!(op.resolution, GridCheck::Resolved);
        let op = assemble(&p, None, 0.02, &Grid::new(2.0, 300).unwrap()).unwrap();
        assert_eq!(op.resolution, GridCheck::Marginal);
        assert!(matches!(
            assemble(&p, None, 0.02, &Grid::new(2.0, 40).unwrap()),
            Err(Error::GridTooCoarse { .. })
        ));
        assert!(matches!(
            assemble(&p, None, 0.0, &Grid::new(2.0, 40).unwrap()),
            Err(Error::NonPositiveEps(_))
        ));
    }
}
