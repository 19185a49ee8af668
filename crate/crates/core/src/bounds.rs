//! Agmon-type upper and lower bounds on eigenfunctions, measured as
//! effective exponents along an eps-schedule, and the two Gronwall-type
//! lemmas checked as literal inequalities on computed eigenpairs.
//!
//! With `d = d_{A,E}` and `s = eps / sqrt(|E| + 1)`:
//!
//! * `delta_upper = eps log(‖e^{d/eps} ψ‖ + s ‖e^{d/eps} ψ'‖)`
//! * `delta_lower_U = -eps log ‖ψ‖_{L²(U)} - d(U)`
//! * `delta_upper_0 = eps log(s |ψ'(0)|) + d(0)`, `delta_lower_0 = -delta_upper_0`
//!
//! and likewise at `L`. Every exponent is evaluated in log space.

use rayon::prelude::*;

use crate::agmon::{agmon_distance, AgmonProfile};
use crate::eigensolve::{solve_mode, Eigenpair, GridPolicy};
use crate::error::{Error, Result};
use crate::measure::RegimeTarget;
use crate::potential::{perturbation_sup, Perturbation, Potential};
use crate::quadrature::adaptive;
use crate::tolerances::{C_FLOOR, TOL_EXP, TOL_QUAD, VALIDATION_GRID};
use crate::trend::decreasing_tail;

/// Pair scans use every `THINNING`-th grid node.
pub const THINNING: usize = 8;

/// `ℰ = eps² |ψ'|² + |ψ|²` and `ℰ⁺ = eps² |ψ'|² + (V - E) |ψ|²` on the eigen-grid.
#[derive(Debug, Clone)]
pub struct EnergyDensities {
    pub grid: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub script_e: Vec<f64>,
    pub script_e_plus: Vec<f64>,
    pub eps: f64,
    pub energy: f64,
}

/// Centered differences inside, the eigenpair's one-sided wall derivatives at
/// the ends.
pub fn energy_densities(pair: &Eigenpair, potential: &Potential) -> EnergyDensities {
    let grid = pair.nodes();
    let n = grid.len();
    let h = pair.grid.spacing;
    let psi = &pair.psi;
    let mut dpsi = vec![0.0; n];
    dpsi[0] = pair.dpsi0;
    dpsi[n - 1] = pair.dpsi_l;
    for i in 1..n - 1 {
        dpsi[i] = (psi[i + 1] - psi[i - 1]) / (2.0 * h);
    }
    let eps2 = pair.eps * pair.eps;
    let script_e = (0..n).map(|i| eps2 * dpsi[i] * dpsi[i] + psi[i] * psi[i]).collect();
    let script_e_plus = (0..n)
        .map(|i| eps2 * dpsi[i] * dpsi[i] + (potential.value(grid[i]) - pair.energy) * psi[i] * psi[i])
        .collect();
    EnergyDensities {
        grid,
        dpsi,
        script_e,
        script_e_plus,
        eps: pair.eps,
        energy: pair.energy,
    }
}

/// `log Σ exp(t)`, ignoring `-∞` terms.
pub fn log_sum_exp(terms: impl IntoIterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.into_iter().filter(|t| *t > f64::NEG_INFINITY).collect();
    let Some(max) = terms.iter().copied().reduce(f64::max) else {
        return f64::NEG_INFINITY;
    };
    if max == f64::INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn log_add(a: f64, b: f64) -> f64 {
    log_sum_exp([a, b])
}

/// Upper-bound exponents of an eigenpair against its Agmon profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperExponents {
    pub delta_upper: f64,
    pub delta_upper_0: f64,
    pub delta_upper_l: f64,
}

/// `profile` must be sampled on the eigenpair's nodes.
pub fn agmon_upper_report(pair: &Eigenpair, densities: &EnergyDensities, profile: &AgmonProfile) -> Result<UpperExponents> {
    check_profile(pair, profile)?;
    let eps = pair.eps;
    let h = pair.grid.spacing;
    let n = pair.psi.len();
    let log_weight = |i: usize| if i == 0 || i == n - 1 { (0.5 * h).ln() } else { h.ln() };
    let log_sq = |v: f64| 2.0 * v.abs().ln();
    let weighted_norm = |values: &[f64]| {
        0.5 * log_sum_exp((0..n).map(|i| log_weight(i) + 2.0 * profile.values[i] / eps + log_sq(values[i])))
    };
    let log_scale = (eps / (pair.energy.abs() + 1.0).sqrt()).ln();
    let log_psi = weighted_norm(&pair.psi);
    let log_dpsi = weighted_norm(&densities.dpsi);
    let wall = |d: f64, dpsi: f64| eps * (log_scale + dpsi.abs().ln()) + d;
    Ok(UpperExponents {
        delta_upper: eps * log_add(log_psi, log_scale + log_dpsi),
        delta_upper_0: wall(profile.values[0], pair.dpsi0),
        delta_upper_l: wall(profile.values[n - 1], pair.dpsi_l),
    })
}

fn check_profile(pair: &Eigenpair, profile: &AgmonProfile) -> Result<()> {
    if profile.grid.len() != pair.psi.len() {
        return Err(Error::Precondition(format!(
            "Agmon profile has {} points, eigenpair has {}",
            profile.grid.len(),
            pair.psi.len()
        )));
    }
    Ok(())
}

/// Where the lower bound is observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Window(f64, f64),
    LeftWall,
    RightWall,
}

impl Observation {
    pub fn label(&self) -> String {
        match self {
            Observation::Window(a, b) => format!("U=[{a};{b}]"),
            Observation::LeftWall => "x=0".into(),
            Observation::RightWall => "x=L".into(),
        }
    }
}

/// `delta_lower` for the given observation.
pub fn lower_bound_report(
    pair: &Eigenpair,
    potential: &Potential,
    profile: &AgmonProfile,
    observation: Observation,
) -> Result<f64> {
    check_profile(pair, profile)?;
    let eps = pair.eps;
    let log_scale = (eps / (pair.energy.abs() + 1.0).sqrt()).ln();
    let n = pair.psi.len();
    match observation {
        Observation::Window(a, b) => {
            let length = potential.length();
            if !(a < b) || a < 0.0 || b > length {
                return Err(Error::EmptyObservationWindow(a, b));
            }
            let inside = pair.nodes().iter().filter(|&&x| x >= a && x <= b).count();
            let mass = pair.mass_in(a, b);
            if inside < 2 || !(mass > 0.0) {
                return Err(Error::EmptyObservationWindow(a, b));
            }
            Ok(-eps * 0.5 * mass.ln() - profile.min_over(potential, a, b))
        }
        Observation::LeftWall => Ok(-eps * (log_scale + pair.dpsi0.abs().ln()) - profile.values[0]),
        Observation::RightWall => Ok(-eps * (log_scale + pair.dpsi_l.abs().ln()) - profile.values[n - 1]),
    }
}

/// Worst slack of a pairwise inequality over a thinned grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCheck {
    pub ok: bool,
    /// Minimum of right-hand side minus left-hand side, in log units.
    pub margin: f64,
    pub pairs: usize,
    /// Pairs skipped because a density underflowed to zero.
    pub skipped: usize,
}

fn thinned(n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).step_by(THINNING).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx
}

/// Sup of `|f|` on each cell `[x_k, x_{k+1}]` from a uniform scan.
fn cell_sups(points: &[f64], f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    points
        .par_windows(2)
        .map(|w| {
            let m = VALIDATION_GRID;
            (0..m)
                .map(|j| f(w[0] + (w[1] - w[0]) * j as f64 / (m - 1) as f64).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

fn scan_pairs(
    idx: &[usize],
    log_density: &[f64],
    bound: impl Fn(usize, usize) -> Option<f64> + Sync,
) -> PairCheck {
    let (margin, pairs, skipped) = (0..idx.len())
        .into_par_iter()
        .map(|a| {
            let mut worst = f64::INFINITY;
            let (mut pairs, mut skipped) = (0, 0);
            for b in a..idx.len() {
                let Some(rhs) = bound(a, b) else { continue };
                let (la, lb) = (log_density[idx[a]], log_density[idx[b]]);
                if !la.is_finite() || !lb.is_finite() {
                    skipped += 1;
                    continue;
                }
                pairs += 1;
                worst = worst.min(rhs - (la - lb).abs());
            }
            (worst, pairs, skipped)
        })
        .reduce(
            || (f64::INFINITY, 0, 0),
            |x, y| (x.0.min(y.0), x.1 + y.1, x.2 + y.2),
        );
    PairCheck {
        ok: margin >= -TOL_EXP,
        margin,
        pairs,
        skipped,
    }
}

/// Tunneling inequality for `ℰ⁺` on `{V - E > α²}`:
/// `|log ℰ⁺(x) - log ℰ⁺(y)| ≤ (2/eps) |∫_x^y sqrt(V - E)| + ‖V'‖ L / α² + ‖q‖ L / (α eps)`
/// for thinned grid points in the same connected component.
pub fn tunneling_check(
    pair: &Eigenpair,
    densities: &EnergyDensities,
    potential: &Potential,
    perturbation: Option<&Perturbation>,
    alpha: f64,
) -> Result<PairCheck> {
    let eps = pair.eps;
    let energy = pair.energy;
    let length = potential.length();
    let threshold = alpha * alpha;
    let grid = &densities.grid;
    let forbidden: Vec<bool> = grid.iter().map(|&x| potential.value(x) - energy > threshold).collect();
    if !forbidden.iter().any(|&f| f) {
        return Err(Error::EmptyForbiddenRegion(alpha));
    }
    let constant =
        potential.slope_sup() * length / threshold + perturbation_sup(perturbation, eps) * length / (alpha * eps);
    let log_density: Vec<f64> = densities.script_e_plus.iter().map(|v| v.ln()).collect();
    let idx = thinned(grid.len());

    // Component labels on the full grid, then prefix integrals along thinned points.
    let mut component = vec![usize::MAX; grid.len()];
    let mut label = 0;
    for i in 0..grid.len() {
        if forbidden[i] {
            if i > 0 && forbidden[i - 1] {
                component[i] = component[i - 1];
            } else {
                label += 1;
                component[i] = label;
            }
        }
    }
    let root = |x: f64| (potential.value(x) - energy).max(0.0).sqrt();
    let mut action = vec![0.0; idx.len()];
    for k in 1..idx.len() {
        action[k] = action[k - 1] + adaptive(&root, grid[idx[k - 1]], grid[idx[k]], TOL_QUAD * 1e-3);
    }
    Ok(scan_pairs(&idx, &log_density, |a, b| {
        let (ca, cb) = (component[idx[a]], component[idx[b]]);
        (ca != usize::MAX && ca == cb).then(|| 2.0 / eps * (action[b] - action[a]).abs() + constant)
    }))
}

/// Rough Gronwall inequality for `ℰ`:
/// `|log ℰ(x) - log ℰ(y)| ≤ |x - y| (‖V - E + 1‖_{L∞(I_{x,y})} + ‖q‖) / eps`
/// over all thinned grid pairs.
pub fn rough_gronwall_check(
    pair: &Eigenpair,
    densities: &EnergyDensities,
    potential: &Potential,
    perturbation: Option<&Perturbation>,
) -> PairCheck {
    let eps = pair.eps;
    let energy = pair.energy;
    let grid = &densities.grid;
    let q_sup = perturbation_sup(perturbation, eps);
    let log_density: Vec<f64> = densities.script_e.iter().map(|v| v.ln()).collect();
    let idx = thinned(grid.len());
    let points: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
    let sups = cell_sups(&points, |x| potential.value(x) - energy + 1.0);
    // Sparse table for range maxima over cells.
    let mut table = vec![sups];
    while 2 * (1 << (table.len() - 1)) <= table[0].len() {
        let prev = table.last().unwrap();
        let half = 1 << (table.len() - 1);
        let next: Vec<f64> = (0..prev.len() - half).map(|i| prev[i].max(prev[i + half])).collect();
        table.push(next);
    }
    let range_max = |a: usize, b: usize| {
        // cells a..b (exclusive), b > a
        let level = (usize::BITS - 1 - (b - a).leading_zeros()) as usize;
        table[level][a].max(table[level][b - (1 << level)])
    };
    scan_pairs(&idx, &log_density, |a, b| {
        if a == b {
            return Some(0.0);
        }
        Some((points[b] - points[a]) * (range_max(a, b) + q_sup) / eps)
    })
}

/// One schedule point of a [`BoundsReport`].
#[derive(Debug, Clone)]
pub struct BoundsRow {
    pub eps: f64,
    pub energy: f64,
    pub index: usize,
    pub upper: UpperExponents,
    pub delta_lower: f64,
    /// `None` when `{V - E > α²}` is empty.
    pub tunneling: Option<PairCheck>,
    pub gronwall: PairCheck,
}

impl BoundsRow {
    pub fn tunneling_ok(&self) -> bool {
        self.tunneling.map_or(true, |t| t.ok)
    }

    pub fn gronwall_ok(&self) -> bool {
        self.gronwall.ok
    }

    pub fn passes(&self) -> bool {
        self.delta_lower >= -TOL_EXP && self.upper.delta_upper >= -TOL_EXP && self.tunneling_ok() && self.gronwall_ok()
    }
}

#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub observation: Observation,
    pub alpha: f64,
    pub rows: Vec<BoundsRow>,
}

impl BoundsReport {
    pub fn delta_upper(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.upper.delta_upper).collect()
    }

    pub fn delta_lower(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.delta_lower).collect()
    }

    /// Every row passes and both exponents trend down over the last three points.
    pub fn verdict(&self) -> bool {
        self.rows.iter().all(BoundsRow::passes)
            && decreasing_tail(&self.delta_upper(), 3)
            && decreasing_tail(&self.delta_lower(), 3)
    }
}

/// Runs the upper, lower and lemma checks for one eigenpair.
pub fn bounds_row(
    pair: &Eigenpair,
    potential: &Potential,
    perturbation: Option<&Perturbation>,
    observation: Observation,
    alpha: f64,
) -> Result<BoundsRow> {
    let densities = energy_densities(pair, potential);
    let profile = AgmonProfile::on_grid(potential, pair.energy, pair.nodes())?;
    let upper = agmon_upper_report(pair, &densities, &profile)?;
    let delta_lower = lower_bound_report(pair, potential, &profile, observation)?;
    let tunneling = match tunneling_check(pair, &densities, potential, perturbation, alpha) {
        Ok(t) => Some(t),
        Err(Error::EmptyForbiddenRegion(_)) => None,
        Err(e) => return Err(e),
    };
    let gronwall = rough_gronwall_check(pair, &densities, potential, perturbation);
    Ok(BoundsRow {
        eps: pair.eps,
        energy: pair.energy,
        index: pair.index,
        upper,
        delta_lower,
        tunneling,
        gronwall,
    })
}

/// Bounds along a strictly decreasing schedule.
pub fn bounds_report(
    potential: &Potential,
    perturbation: Option<&Perturbation>,
    target: RegimeTarget,
    schedule: &[f64],
    observation: Observation,
    alpha: f64,
    policy: GridPolicy,
) -> Result<BoundsReport> {
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("eps schedule must be strictly decreasing".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!("alpha must be positive, got {alpha}")));
    }
    let policy = target.grid_policy(potential, policy);
    let rows = schedule
        .iter()
        .map(|&eps| {
            let (_, pair) = solve_mode(potential, perturbation, eps, &policy, target.selector())?;
            bounds_row(&pair, potential, perturbation, observation, alpha)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsReport {
        observation,
        alpha,
        rows,
    })
}

/// `-eps log ℰ(x)^{1/2}` against `d_{A,E0}(x)` at `count` points of the
/// forbidden region `{V > E}`, split between the two sides in proportion to
/// their length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    pub x: f64,
    pub rate: f64,
    pub agmon: f64,
}

pub fn decay_samples(pair: &Eigenpair, potential: &Potential, count: usize) -> Result<Vec<DecaySample>> {
    let densities = energy_densities(pair, potential);
    let tp = potential.turning_points(pair.energy.max(potential.ground_energy()))?;
    let length = potential.length();
    let (left, right) = (tp.x_minus, length - tp.x_plus);
    if left + right <= 0.0 || count == 0 {
        return Ok(Vec::new());
    }
    let n_left = ((count as f64) * left / (left + right)).round() as usize;
    let n_right = count - n_left;
    let mut xs: Vec<f64> = (0..n_left).map(|j| left * j as f64 / n_left as f64).collect();
    xs.extend((0..n_right).map(|j| length - right * j as f64 / n_right as f64));
    let h = pair.grid.spacing;
    let last = densities.grid.len() - 1;
    xs.into_iter()
        .map(|x| {
            let i = ((x / h).round() as usize).min(last);
            let node = densities.grid[i];
            Ok(DecaySample {
                x: node,
                rate: -pair.eps * 0.5 * densities.script_e[i].ln(),
                agmon: agmon_distance(potential, potential.ground_energy(), node)?,
            })
        })
        .collect()
}

/// Outcome of a geometric-control check.
#[derive(Debug, Clone)]
pub struct GeometricControl {
    /// `(eps, E, observed quantity)` per schedule point.
    pub values: Vec<(f64, f64, f64)>,
    pub minimum: f64,
    pub ok: bool,
}

/// Along the schedule, `‖ψ‖_{L²(U)}` for a window, or `eps |ψ'| / sqrt(|E| + 1)`
/// at a wall, with PASS when the minimum stays above the floor. The selected
/// energies must sit above `V` at the window center (or at the wall) up to
/// `‖q‖_∞`.
pub fn geometric_control_check(
    potential: &Potential,
    perturbation: Option<&Perturbation>,
    schedule: &[f64],
    observation: Observation,
    target: RegimeTarget,
    policy: GridPolicy,
) -> Result<GeometricControl> {
    let policy = target.grid_policy(potential, policy);
    let reference = match observation {
        Observation::Window(a, b) => {
            if !(a < b) {
                return Err(Error::EmptyObservationWindow(a, b));
            }
            potential.value(0.5 * (a + b))
        }
        Observation::LeftWall => potential.value(0.0),
        Observation::RightWall => potential.value(potential.length()),
    };
    let values = schedule
        .iter()
        .map(|&eps| {
            let (_, pair) = solve_mode(potential, perturbation, eps, &policy, target.selector())?;
            let lambda = perturbation_sup(perturbation, eps);
            let wall = !matches!(observation, Observation::Window(..));
            let admissible = if wall {
                pair.energy > reference
            } else {
                pair.energy >= reference - lambda
            };
            if !admissible {
                return Err(Error::Precondition(format!(
                    "energy {} at eps = {eps} lies below V = {reference} at the observation point; \
                     forbidden-region windows belong to the lower-bound report",
                    pair.energy
                )));
            }
            let scale = eps / (pair.energy.abs() + 1.0).sqrt();
            let value = match observation {
                Observation::Window(a, b) => pair.mass_in(a, b).sqrt(),
                Observation::LeftWall => scale * pair.dpsi0.abs(),
                Observation::RightWall => scale * pair.dpsi_l.abs(),
            };
            Ok((eps, pair.energy, value))
        })
        .collect::<Result<Vec<_>>>()?;
    let minimum = values.iter().map(|v| v.2).fold(f64::INFINITY, f64::min);
    Ok(GeometricControl {
        values,
        minimum,
        ok: minimum >= C_FLOOR,
    })
}
