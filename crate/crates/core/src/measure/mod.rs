//! Limit measures of eigenfunction densities and boundary traces.
//!
//! For eigenpairs with `E(eps) → E*` the densities `|ψ|² dx` converge weakly to
//!
//! * `C* 1_{(x_-, x_+)} dx / sqrt(E* - V)` when `E0 < E* < ∞`, with `C*`
//!   normalizing the total mass to one;
//! * `δ_{x0}` when `E* = E0`;
//! * `dx / L` when `E* = ∞`.
//!
//! The wall traces satisfy `|eps ψ'(0)|² → 2 C* sqrt(E* - V(0)) 1_{V(0) < E*}`
//! (interior) and `E⁻¹ |eps ψ'(0)|² → 2 / L` (high energy), symmetrically at `L`.

mod husimi;
mod test_functions;

pub use husimi::{husimi, HusimiField};
pub use test_functions::{basket, TestFunction, INDICATOR_WIDTH};

use rayon::prelude::*;

use crate::eigensolve::{solve_mode, GridPolicy, ModeSelector};
use crate::error::{Error, Result};
use crate::potential::{Perturbation, Potential, TurningPoints};
use crate::quadrature::adaptive;
use crate::tolerances::{tol_root, TOL_SING};
use crate::trend::decreasing_tail;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `E0 < E* < ∞`.
    Interior,
    /// `E* = E0`.
    Ground,
    /// `E* = ∞`.
    HighEnergy,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Interior => "interior",
            Regime::Ground => "ground",
            Regime::HighEnergy => "high",
        }
    }
}

/// Predicted limit measure.
#[derive(Debug, Clone)]
pub struct MeasureSpec {
    pub regime: Regime,
    pub e_star: f64,
    /// Normalization `C*`; only for the interior regime.
    pub c_star: Option<f64>,
    pub turning: Option<TurningPoints>,
    pub x0: f64,
    pub length: f64,
}

/// `∫_{x_-}^{x_+} g(x) / sqrt(E - V(x)) dx`, with the substitution
/// `x = x_± ∓ t²` at genuine turning points so the integrand stays bounded.
pub fn inverse_sqrt_integral(
    potential: &Potential,
    tp: &TurningPoints,
    g: &impl Fn(f64) -> f64,
) -> f64 {
    let energy = tp.energy;
    let length = potential.length();
    let split = potential.x0().clamp(tp.x_minus, tp.x_plus);
    let weight = |x: f64| (energy - potential.value(x)).max(f64::MIN_POSITIVE).sqrt();
    let mut total = 0.0;
    // Left half.
    if tp.x_minus > 0.0 {
        let base = tp.x_minus;
        let f = |t: f64| {
            let x = base + t * t;
            2.0 * t * g(x) / weight(x)
        };
        total += adaptive(&f, 0.0, (split - base).max(0.0).sqrt(), 0.5 * TOL_SING);
    } else {
        total += adaptive(&|x| g(x) / weight(x), 0.0, split, 0.5 * TOL_SING);
    }
    // Right half.
    if tp.x_plus < length {
        let base = tp.x_plus;
        let f = |t: f64| {
            let x = base - t * t;
            2.0 * t * g(x) / weight(x)
        };
        total += adaptive(&f, 0.0, (base - split).max(0.0).sqrt(), 0.5 * TOL_SING);
    } else {
        total += adaptive(&|x| g(x) / weight(x), split, length, 0.5 * TOL_SING);
    }
    total
}

/// Limit measure for `E* ∈ [E0, ∞]`; `f64::INFINITY` selects the high-energy
/// regime.
pub fn limit_measure(potential: &Potential, e_star: f64) -> Result<MeasureSpec> {
    let e0 = potential.ground_energy();
    let base = MeasureSpec {
        regime: Regime::HighEnergy,
        e_star,
        c_star: None,
        turning: None,
        x0: potential.x0(),
        length: potential.length(),
    };
    if e_star == f64::INFINITY {
        return Ok(base);
    }
    if e_star.is_nan() || e_star < e0 - tol_root(e_star) {
        return Err(Error::EnergyBelowGround {
            energy: e_star,
            ground: e0,
        });
    }
    if e_star <= e0 + tol_root(e_star) {
        return Ok(MeasureSpec {
            regime: Regime::Ground,
            ..base
        });
    }
    let tp = potential.turning_points(e_star)?;
    let mass = inverse_sqrt_integral(potential, &tp, &|_| 1.0);
    Ok(MeasureSpec {
        regime: Regime::Interior,
        c_star: Some(1.0 / mass),
        turning: Some(tp),
        ..base
    })
}

/// `∫ φ d𝔪`.
pub fn predicted_moment(spec: &MeasureSpec, potential: &Potential, phi: &TestFunction) -> f64 {
    let length = spec.length;
    match spec.regime {
        Regime::Ground => phi.eval(spec.x0, length),
        Regime::HighEnergy => adaptive(&|x| phi.eval(x, length), 0.0, length, TOL_SING) / length,
        Regime::Interior => {
            let tp = spec.turning.expect("interior spec carries turning points");
            spec.c_star.unwrap() * inverse_sqrt_integral(potential, &tp, &|x| phi.eval(x, length))
        }
    }
}

/// Predicted limits of the wall traces. Interior: `(|eps ψ'(0)|², |eps ψ'(L)|²)`;
/// high energy: the same divided by `E`.
pub fn predicted_boundary_traces(spec: &MeasureSpec, potential: &Potential) -> Result<(f64, f64)> {
    match spec.regime {
        Regime::Ground => Err(Error::GroundRegimeHasNoTraceLimit),
        Regime::HighEnergy => Ok((2.0 / spec.length, 2.0 / spec.length)),
        Regime::Interior => {
            let c = spec.c_star.unwrap();
            let trace = |v: f64| {
                if v < spec.e_star {
                    2.0 * c * (spec.e_star - v).sqrt()
                } else {
                    0.0
                }
            };
            Ok((
                trace(potential.value(0.0)),
                trace(potential.value(potential.length())),
            ))
        }
    }
}

/// How the eigenvalue is chosen at each eps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegimeTarget {
    /// Track the ground state.
    Ground,
    /// Eigenvalue nearest `E*`.
    Interior(f64),
    /// Eigenvalue nearest a fixed large target energy.
    High { target_energy: f64 },
}

impl RegimeTarget {
    /// Default high-energy target `50 max V`, at least 50.
    pub fn high_default(potential: &Potential) -> Self {
        RegimeTarget::High {
            target_energy: 50.0 * potential.max_value().abs().max(1.0),
        }
    }

    /// Largest energy the grid must resolve.
    pub fn energy_max(&self, potential: &Potential) -> f64 {
        match *self {
            RegimeTarget::Ground => potential.max_value(),
            RegimeTarget::Interior(e) => e.max(potential.max_value()),
            RegimeTarget::High { target_energy } => target_energy.max(potential.max_value()),
        }
    }

    pub fn selector(&self) -> ModeSelector {
        match *self {
            RegimeTarget::Ground => ModeSelector::Index(0),
            RegimeTarget::Interior(e) => ModeSelector::Nearest(e),
            RegimeTarget::High { target_energy } => ModeSelector::Nearest(target_energy),
        }
    }

    /// `policy` with its automatic energy range widened to this target.
    pub fn grid_policy(&self, potential: &Potential, policy: GridPolicy) -> GridPolicy {
        match policy {
            GridPolicy::Auto { factor, .. } => GridPolicy::Auto {
                energy_max: self.energy_max(potential),
                factor,
            },
            fixed => fixed,
        }
    }

    fn e_star(&self, potential: &Potential) -> f64 {
        match *self {
            RegimeTarget::Ground => potential.ground_energy(),
            RegimeTarget::Interior(e) => e,
            RegimeTarget::High { .. } => f64::INFINITY,
        }
    }
}

/// One schedule point of a [`MeasureReport`].
#[derive(Debug, Clone)]
pub struct MeasureRow {
    pub eps: f64,
    pub energy: f64,
    pub index: usize,
    pub empirical: Vec<f64>,
    /// `|eps ψ'(0)|²`, divided by `E` in the high-energy regime.
    pub trace0: f64,
    pub trace_l: f64,
}

#[derive(Debug, Clone)]
pub struct MeasureReport {
    pub spec: MeasureSpec,
    pub test_functions: Vec<TestFunction>,
    pub predicted: Vec<f64>,
    /// `None` in the ground regime, where no trace limit is stated.
    pub predicted_traces: Option<(f64, f64)>,
    pub rows: Vec<MeasureRow>,
    /// High-energy only: distance between the finite-energy interior
    /// prediction at the last schedule point and `2/L`.
    pub high_energy_gap: Option<f64>,
}

impl MeasureReport {
    pub fn schedule(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.eps, r.energy)).collect()
    }

    /// `|empirical - predicted|` of test function `j` along the schedule.
    pub fn moment_errors(&self, j: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| (r.empirical[j] - self.predicted[j]).abs())
            .collect()
    }

    pub fn trace0_errors(&self) -> Option<Vec<f64>> {
        let (t0, _) = self.predicted_traces?;
        Some(self.rows.iter().map(|r| (r.trace0 - t0).abs()).collect())
    }

    pub fn trace_l_errors(&self) -> Option<Vec<f64>> {
        let (_, tl) = self.predicted_traces?;
        Some(self.rows.iter().map(|r| (r.trace_l - tl).abs()).collect())
    }

    /// Final error below `tol` and no growth beyond the slack over the last
    /// three schedule points.
    pub fn moment_verdict(&self, j: usize, tol: f64) -> bool {
        let errs = self.moment_errors(j);
        errs.last().is_some_and(|&e| e <= tol) && decreasing_tail(&errs, 3)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.test_functions.iter().position(|f| f.name() == name)
    }
}

/// Empirical moments and traces of the tracked eigenpair at each eps,
/// against the predicted limit measure.
pub fn measure_convergence_report(
    potential: &Potential,
    perturbation: Option<&Perturbation>,
    target: RegimeTarget,
    schedule: &[f64],
    test_functions: &[TestFunction],
    policy: GridPolicy,
) -> Result<MeasureReport> {
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("eps schedule must be strictly decreasing".into()));
    }
    let spec = limit_measure(potential, target.e_star(potential))?;
    let predicted: Vec<f64> = test_functions
        .iter()
        .map(|phi| predicted_moment(&spec, potential, phi))
        .collect();
    let predicted_traces = match predicted_boundary_traces(&spec, potential) {
        Ok(t) => Some(t),
        Err(Error::GroundRegimeHasNoTraceLimit) => None,
        Err(e) => return Err(e),
    };
    let policy = target.grid_policy(potential, policy);
    let length = potential.length();
    let rows = schedule
        .par_iter()
        .map(|&eps| {
            let (_, pair) = solve_mode(potential, perturbation, eps, &policy, target.selector())?;
            let scale = if spec.regime == Regime::HighEnergy { 1.0 / pair.energy } else { 1.0 };
            Ok(MeasureRow {
                eps,
                energy: pair.energy,
                index: pair.index,
                empirical: test_functions
                    .iter()
                    .map(|phi| pair.moment(|x| phi.eval(x, length)))
                    .collect(),
                trace0: scale * (eps * pair.dpsi0).powi(2),
                trace_l: scale * (eps * pair.dpsi_l).powi(2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let high_energy_gap = match (spec.regime, rows.last()) {
        (Regime::HighEnergy, Some(last)) => {
            let finite = limit_measure(potential, last.energy)?;
            let (t0, _) = predicted_boundary_traces(&finite, potential)?;
            Some((t0 / last.energy - 2.0 / length).abs())
        }
        _ => None,
    };
    Ok(MeasureReport {
        spec,
        test_functions: test_functions.to_vec(),
        predicted,
        predicted_traces,
        rows,
        high_energy_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p1() -> Potential {
        Potential::parse("(x-1)^2", 2.0).unwrap()
    }

    /// Midpoint sum with endpoint clipping for ∫ dx / sqrt(E - V).
    fn clipped_trapezoid(p: &Potential, a: f64, b: f64, e: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n)
            .map(|i| {
                let x = a + (i as f64 + 0.5) * h;
                1.0 / (e - p.value(x)).max(1e-300).sqrt()
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn arcsine_normalization() {
        let spec = limit_measure(&p1(), 0.25).unwrap();
        assert_eq!(spec.regime, Regime::Interior);
        assert!((spec.c_star.unwrap() - 1.0 / PI).abs() < 1e-9);
    }

    #[test]
    fn regimes() {
        let p = p1();
        let g = limit_measure(&p, 0.0).unwrap();
        assert_eq!(g.regime, Regime::Ground);
        assert_eq!(g.x0, p.x0());
        let h = limit_measure(&p, f64::INFINITY).unwrap();
        assert_eq!(h.regime, Regime::HighEnergy);
        assert!(matches!(
            limit_measure(&p, -0.1),
            Err(Error::EnergyBelowGround { .. })
        ));
    }

    #[test]
    fn predicted_moments() {
        let p = p1();
        let g = limit_measure(&p, 0.0).unwrap();
        assert!((predicted_moment(&g, &p, &TestFunction::X) - 1.0).abs() < 1e-9);
        let h = limit_measure(&p, f64::INFINITY).unwrap();
        assert!((predicted_moment(&h, &p, &TestFunction::X) - 1.0).abs() < 1e-12);
        for e in [0.05, 0.25, 0.9, 1.0, 2.0, 7.0] {
            let s = limit_measure(&p, e).unwrap();
            assert!((predicted_moment(&s, &p, &TestFunction::One) - 1.0).abs() < TOL_SING);
            // Odd about x0.
            let odd = TestFunction::Custom {
                name: "odd".into(),
                expr: crate::Expr::parse("x - 1").unwrap(),
            };
            assert!(predicted_moment(&s, &p, &odd).abs() < 1e-9);
        }
    }

    #[test]
    fn indicator_moment_matches_arcsine() {
        let p = p1();
        let s = limit_measure(&p, 0.25).unwrap();
        let m = predicted_moment(&s, &p, &TestFunction::indicator(0.9, 1.1));
        let closed = 2.0 * (0.2f64).asin() / PI;
        assert!((closed - 0.1282).abs() < 1e-4);
        // Smoothing width 0.01 moves the value by O(width²).
        assert!((m - closed).abs() < 1e-3, "{m} vs {closed}");
    }

    #[test]
    fn boundary_trace_predictions() {
        let p = p1();
        let below = limit_measure(&p, 0.25).unwrap();
        assert_eq!(predicted_boundary_traces(&below, &p).unwrap(), (0.0, 0.0));
        let above = limit_measure(&p, 2.0).unwrap();
        let c2 = 1.0 / clipped_trapezoid(&p, 0.0, 2.0, 2.0, 10_000_000);
        assert!((above.c_star.unwrap() - c2).abs() < 1e-8);
        assert!((above.c_star.unwrap() - 2.0 / PI).abs() < 1e-9);
        let (t0, tl) = predicted_boundary_traces(&above, &p).unwrap();
        assert!((t0 - 2.0 * c2).abs() < 1e-8 && (tl - t0).abs() < 1e-12);
        let high = limit_measure(&p, f64::INFINITY).unwrap();
        assert_eq!(predicted_boundary_traces(&high, &p).unwrap(), (1.0, 1.0));
        let ground = limit_measure(&p, 0.0).unwrap();
        assert!(matches!(
            predicted_boundary_traces(&ground, &p),
            Err(Error::GroundRegimeHasNoTraceLimit)
        ));
    }

    #[test]
    fn asymmetric_well_normalization_against_brute_force() {
        let p = Potential::parse("(x-0.7)^2 + 0.2*x^3", 2.0).unwrap();
        let e = 0.6;
        let s = limit_measure(&p, e).unwrap();
        let tp = s.turning.unwrap();
        let brute = clipped_trapezoid(&p, tp.x_minus, tp.x_plus, e, 4_000_000);
        // Midpoint sums converge like sqrt(h) at inverse-square-root ends.
        assert!((1.0 / s.c_star.unwrap() - brute).abs() < 2e-3 * brute);
    }
}
