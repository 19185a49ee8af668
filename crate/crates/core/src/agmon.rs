//! Agmon distance `d_{A,E}(x) = |∫_{K_E}^x sqrt((V - E)_+)|` to the classically
//! allowed region, pointwise and as cumulative profiles.
//!
//! Energies below the ground energy use the ground energy, so the distance is
//! continuous in `E` and vanishes at the well bottom.

use crate::error::{Error, Result};
use crate::potential::{Potential, TurningPoints};
use crate::quadrature::{adaptive, toward_endpoint};
use crate::tolerances::{MIN_PANEL_REL, TOL_QUAD};

fn clamp_energy(potential: &Potential, energy: f64) -> f64 {
    energy.max(potential.ground_energy())
}

fn integrand(potential: &Potential, energy: f64) -> impl Fn(f64) -> f64 + '_ {
    move |s| (potential.value(s) - energy).max(0.0).sqrt()
}

/// `d_{A,E}(x)`.
pub fn agmon_distance(potential: &Potential, energy: f64, x: f64) -> Result<f64> {
    let length = potential.length();
    if !(0.0..=length).contains(&x) {
        return Err(Error::OutOfDomain { x, length });
    }
    let energy = clamp_energy(potential, energy);
    let tp = potential.turning_points(energy)?;
    Ok(distance_from_turning(potential, &tp, x))
}

fn distance_from_turning(potential: &Potential, tp: &TurningPoints, x: f64) -> f64 {
    let f = integrand(potential, tp.energy);
    let min_width = MIN_PANEL_REL * potential.length();
    if x > tp.x_plus {
        toward_endpoint(&f, tp.x_plus, x, tp.x_plus, TOL_QUAD, min_width)
    } else if x < tp.x_minus {
        toward_endpoint(&f, x, tp.x_minus, tp.x_minus, TOL_QUAD, min_width)
    } else {
        0.0
    }
}

/// Agmon distance sampled on an ordered grid of `[0, L]`.
#[derive(Debug, Clone)]
pub struct AgmonProfile {
    pub energy: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub turning: TurningPoints,
}

/// Profile on `n_grid` uniform points including both endpoints.
pub fn agmon_profile(potential: &Potential, energy: f64, n_grid: usize) -> Result<AgmonProfile> {
    if n_grid < 64 {
        return Err(Error::ProfileGridTooSmall(n_grid));
    }
    let length = potential.length();
    let grid: Vec<f64> = (0..n_grid)
        .map(|i| length * i as f64 / (n_grid - 1) as f64)
        .collect();
    AgmonProfile::on_grid(potential, energy, grid)
}

impl AgmonProfile {
    /// Cumulative quadrature outward from each turning point over an arbitrary
    /// ascending grid inside `[0, L]`.
    pub fn on_grid(potential: &Potential, energy: f64, grid: Vec<f64>) -> Result<Self> {
        let length = potential.length();
        if let Some(&x) = grid.iter().find(|&&x| !(0.0..=length).contains(&x)) {
            return Err(Error::OutOfDomain { x, length });
        }
        let energy = clamp_energy(potential, energy);
        let tp = potential.turning_points(energy)?;
        let f = integrand(potential, energy);
        let min_width = MIN_PANEL_REL * length;
        let mut values = vec![0.0; grid.len()];

        // Right of x_+, marching up.
        let mut last = tp.x_plus;
        let mut acc = 0.0;
        for (i, &x) in grid.iter().enumerate() {
            if x <= tp.x_plus {
                continue;
            }
            acc += if last == tp.x_plus {
                toward_endpoint(&f, tp.x_plus, x, tp.x_plus, TOL_QUAD, min_width)
            } else {
                adaptive(&f, last, x, TOL_QUAD * 1e-3)
            };
            values[i] = acc;
            last = x;
        }
        // Left of x_-, marching down.
        let mut last = tp.x_minus;
        let mut acc = 0.0;
        for (i, &x) in grid.iter().enumerate().rev() {
            if x >= tp.x_minus {
                continue;
            }
            acc += if last == tp.x_minus {
                toward_endpoint(&f, x, tp.x_minus, tp.x_minus, TOL_QUAD, min_width)
            } else {
                adaptive(&f, x, last, TOL_QUAD * 1e-3)
            };
            values[i] = acc;
            last = x;
        }
        Ok(Self {
            energy,
            grid,
            values,
            turning: tp,
        })
    }

    /// Value at an arbitrary `x`, continuing the integral from the nearest grid
    /// point on the same side of `K_E` rather than interpolating.
    pub fn value_at(&self, potential: &Potential, x: f64) -> f64 {
        let tp = &self.turning;
        let f = integrand(potential, self.energy);
        if x > tp.x_plus {
            let j = self.grid.partition_point(|&g| g <= x);
            if j > 0 && self.grid[j - 1] > tp.x_plus {
                return self.values[j - 1] + adaptive(&f, self.grid[j - 1], x, TOL_QUAD * 1e-3);
            }
        } else if x < tp.x_minus {
            let j = self.grid.partition_point(|&g| g < x);
            if j < self.grid.len() && self.grid[j] < tp.x_minus {
                return self.values[j] + adaptive(&f, x, self.grid[j], TOL_QUAD * 1e-3);
            }
        }
        distance_from_turning(potential, tp, x)
    }

    /// `d_{A,E}(U) = min over grid points of U`, or the exact value at the
    /// endpoint nearest `K_E` when no grid point falls in `U`.
    pub fn min_over(&self, potential: &Potential, a: f64, b: f64) -> f64 {
        let tp = &self.turning;
        if b >= tp.x_minus && a <= tp.x_plus {
            return 0.0;
        }
        // U lies on one side of K_E; d is monotone there.
        if a > tp.x_plus {
            self.value_at(potential, a)
        } else {
            self.value_at(potential, b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> Potential {
        Potential::parse("(x-1)^2", 2.0).unwrap()
    }

    /// Antiderivative of sqrt(u^2 - a^2) for u >= a.
    fn closed_form(u: f64, a: f64) -> f64 {
        let r = (u * u - a * a).max(0.0).sqrt();
        0.5 * u * r - 0.5 * a * a * (u + r).ln()
    }

    /// Midpoint-rule oracle with a million panels.
    fn brute(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let n = 1_000_000;
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn ground_energy_distance() {
        let p = p1();
        assert!((agmon_distance(&p, 0.0, 0.0).unwrap() - 0.5).abs() < 1e-10);
        assert!((agmon_distance(&p, 0.0, 2.0).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn vanishes_inside_allowed_region() {
        assert_eq!(agmon_distance(&p1(), 0.25, 1.2).unwrap(), 0.0);
    }

    #[test]
    fn excited_energy_distance_matches_closed_form() {
        let p = p1();
        let expected = closed_form(1.0, 0.5) - closed_form(0.5, 0.5);
        let oracle = brute(|s| ((s - 1.0) * (s - 1.0) - 0.25).max(0.0).sqrt(), 1.5, 2.0);
        assert!((expected - oracle).abs() < 1e-8);
        assert!((expected - 0.2684).abs() < 1e-4, "{expected}");
        let d = agmon_distance(&p, 0.25, 2.0).unwrap();
        assert!((d - expected).abs() < 1e-10, "{d} vs {expected}");
    }

    #[test]
    fn out_of_domain() {
        assert!(matches!(
            agmon_distance(&p1(), 0.0, 2.5),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(matches!(
            agmon_profile(&p1(), 0.0, 10),
            Err(Error::ProfileGridTooSmall(10))
        ));
    }

    #[test]
    fn profile_at_high_energy_is_zero() {
        let prof = agmon_profile(&p1(), 1.0, 101).unwrap();
        assert!(prof.values.iter().all(|&v| v == 0.0));
        let prof = agmon_profile(&p1(), 3.0, 64).unwrap();
        assert!(prof.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ground_profile_is_half_square() {
        let prof = agmon_profile(&p1(), 0.0, 201).unwrap();
        for (&x, &d) in prof.grid.iter().zip(&prof.values) {
            assert!((d - 0.5 * (x - 1.0) * (x - 1.0)).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn below_ground_uses_ground_energy() {
        let a = agmon_profile(&p1(), -1.0, 128).unwrap();
        let b = agmon_profile(&p1(), 0.0, 128).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.energy, b.energy);
    }

    #[test]
    fn profile_matches_pointwise() {
        let p = Potential::parse("(x-0.7)^2", 2.0).unwrap();
        for &e in &[0.0, 0.1, 0.3, 0.49, 0.8, 2.0] {
            let prof = agmon_profile(&p, e, 257).unwrap();
            for (&x, &d) in prof.grid.iter().zip(&prof.values) {
                let direct = agmon_distance(&p, e, x).unwrap();
                assert!((d - direct).abs() <= 2.0 * TOL_QUAD, "E={e} x={x}: {d} vs {direct}");
            }
        }
    }

    #[test]
    fn quadrature_order() {
        // Single 16-point panel vs halved panels on the smooth ground-energy case.
        let f = |s: f64| (s - 1.0).abs() * (1.0 + 0.3 * (3.0 * s).sin());
        let exact = adaptive(&f, 1.0, 2.0, 1e-15);
        let mut prev = f64::INFINITY;
        for k in 0..4 {
            let n = 1usize << k;
            let w = 1.0 / n as f64;
            let approx: f64 = (0..n)
                .map(|i| crate::quadrature::gl_panel(&f, 1.0 + i as f64 * w, 1.0 + (i + 1) as f64 * w))
                .sum();
            let err = (approx - exact).abs();
            if err > 1e-13 && prev.is_finite() {
                assert!(prev / err >= 8.0, "halving gave ratio {}", prev / err);
            }
            prev = err;
        }
    }
}
