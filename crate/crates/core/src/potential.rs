//! Single-well potentials `V` on `[0, L]`, perturbations `q_eps`, and turning
//! points of the classically allowed region `K_E = [x_-(E), x_+(E)]`.
//!
//! `V` is required to be strictly decreasing on `[0, x0]` and strictly
//! increasing on `[x0, L]` with `x0` interior. Derivatives come from symbolic
//! differentiation of the expression, so the sign checks see no
//! finite-difference noise.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::tolerances::{tol_root, TOL_MIN, TOL_SIGN, VALIDATION_GRID};

/// Result of checking the single-well sign pattern of `V'`.
#[derive(Debug, Clone, PartialEq)]
pub struct WellCertificate {
    pub x0: f64,
    pub e0: f64,
    pub v_max: f64,
    /// Largest `V'` sampled on `[0, x0)`; negative for a valid well.
    pub left_max_slope: f64,
    /// Smallest `V'` sampled on `(x0, L]`; positive for a valid well.
    pub right_min_slope: f64,
    pub grid_size: usize,
}

#[derive(Debug, Clone)]
pub struct Potential {
    expr: Expr,
    slope: Expr,
    length: f64,
    cert: WellCertificate,
}

/// Checks that `expr` is a single well on `[0, length]` and locates its bottom.
pub fn validate_single_well(expr: &Expr, length: f64, grid_size: usize) -> Result<WellCertificate> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::DegenerateDomain(length));
    }
    if grid_size < 16 {
        return Err(Error::ValidationGridTooSmall(grid_size));
    }
    if expr.depends_on_eps() {
        return Err(Error::NotSingleWell(
            "V must not depend on eps; put eps-dependent terms in the perturbation".into(),
        ));
    }
    let slope = expr.derivative();
    let v = |x: f64| expr.eval(x, 0.0);
    let dv = |x: f64| slope.eval(x, 0.0);
    let step = length / (grid_size - 1) as f64;
    let xs: Vec<f64> = (0..grid_size).map(|i| i as f64 * step).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| v(x)).collect();
    if let Some(i) = vals.iter().position(|y| !y.is_finite()) {
        return Err(Error::NotSingleWell(format!("V is not finite at x = {}", xs[i])));
    }
    let imin = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if imin == 0 || imin == grid_size - 1 {
        return Err(Error::NotSingleWell(format!(
            "minimum of V on the validation grid sits at the boundary x = {}",
            xs[imin]
        )));
    }

    let (mut a, mut b) = (xs[imin - 1], xs[imin + 1]);
    golden_section(&v, &mut a, &mut b, TOL_MIN);
    let mut x0 = 0.5 * (a + b);
    // Polish on the sign change of V' when the bracket holds one.
    let (mut lo, mut hi) = (xs[imin - 1], xs[imin + 1]);
    if dv(lo) < 0.0 && dv(hi) > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if dv(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let polished = 0.5 * (lo + hi);
        if (polished - x0).abs() <= 10.0 * TOL_MIN.max((b - a).abs()) || v(polished) <= v(x0) {
            x0 = polished;
        }
    }
    if !(x0 > 0.0 && x0 < length) {
        return Err(Error::NotSingleWell(format!("well bottom {x0} is not interior")));
    }

    let mut left_max_slope = f64::NEG_INFINITY;
    let mut right_min_slope = f64::INFINITY;
    for &x in &xs {
        let s = dv(x);
        if !s.is_finite() {
            return Err(Error::NotSingleWell(format!("V' is not finite at x = {x}")));
        }
        if x < x0 {
            left_max_slope = left_max_slope.max(s);
            if s > TOL_SIGN {
                return Err(Error::NotSingleWell(format!(
                    "V' = {s:e} > 0 at x = {x} left of the well bottom {x0}"
                )));
            }
        } else if x > x0 {
            right_min_slope = right_min_slope.min(s);
            if s < -TOL_SIGN {
                return Err(Error::NotSingleWell(format!(
                    "V' = {s:e} < 0 at x = {x} right of the well bottom {x0}"
                )));
            }
        }
    }
    let e0 = v(x0);
    Ok(WellCertificate {
        x0,
        e0,
        v_max: v(0.0).max(v(length)),
        left_max_slope,
        right_min_slope,
        grid_size,
    })
}

fn golden_section(f: &impl Fn(f64) -> f64, a: &mut f64, b: &mut f64, tol: f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = *b - inv_phi * (*b - *a);
    let mut d = *a + inv_phi * (*b - *a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (*b - *a).abs() > tol {
        if fc <= fd {
            *b = d;
            d = c;
            fd = fc;
            c = *b - inv_phi * (*b - *a);
            fc = f(c);
        } else {
            *a = c;
            c = d;
            fc = fd;
            d = *a + inv_phi * (*b - *a);
            fd = f(d);
        }
    }
}

impl Potential {
    /// Parses `V` and validates it on the default 4096-point grid.
    pub fn parse(src: &str, length: f64) -> Result<Self> {
        Self::new(Expr::parse(src)?, length)
    }

    pub fn new(expr: Expr, length: f64) -> Result<Self> {
        let cert = validate_single_well(&expr, length, VALIDATION_GRID)?;
        let slope = expr.derivative();
        Ok(Self {
            expr,
            slope,
            length,
            cert,
        })
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.expr.eval(x, 0.0)
    }

    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        self.slope.eval(x, 0.0)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn x0(&self) -> f64 {
        self.cert.x0
    }

    pub fn ground_energy(&self) -> f64 {
        self.cert.e0
    }

    /// `max V = max(V(0), V(L))` for a single well.
    pub fn max_value(&self) -> f64 {
        self.cert.v_max
    }

    pub fn certificate(&self) -> &WellCertificate {
        &self.cert
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Sup of `|f|` over a uniform scan of `[a, b]`.
    pub(crate) fn scan_sup(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let n = VALIDATION_GRID;
        (0..n)
            .map(|i| f(a + (b - a) * i as f64 / (n - 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// `‖V'‖_∞` on `[0, L]`.
    pub fn slope_sup(&self) -> f64 {
        Self::scan_sup(0.0, self.length, |x| self.slope(x))
    }

    /// Turning points `x_±(E)` with the clamping convention at the walls.
    pub fn turning_points(&self, energy: f64) -> Result<TurningPoints> {
        let e0 = self.ground_energy();
        let tol = tol_root(energy);
        if energy < e0 - tol {
            return Err(Error::EnergyBelowGround { energy, ground: e0 });
        }
        let x0 = self.x0();
        if energy <= e0 {
            return Ok(TurningPoints {
                x_minus: x0,
                x_plus: x0,
                energy,
            });
        }
        let x_minus = if energy >= self.value(0.0) {
            0.0
        } else {
            self.bisect_level(0.0, x0, energy, true)
        };
        let x_plus = if energy >= self.value(self.length) {
            self.length
        } else {
            self.bisect_level(x0, self.length, energy, false)
        };
        Ok(TurningPoints {
            x_minus,
            x_plus,
            energy,
        })
    }

    /// Solves `V(x) = E` on a monotone branch.
    fn bisect_level(&self, mut lo: f64, mut hi: f64, energy: f64, decreasing: bool) -> f64 {
        // On the decreasing branch V(lo) > E >= V(hi); on the increasing one V(lo) <= E < V(hi).
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let above = self.value(mid) > energy;
            if above == decreasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (self.value(lo) - energy).abs() <= (self.value(hi) - energy).abs() {
            lo
        } else {
            hi
        }
    }
}

/// Endpoints of `K_E`. `x_minus = 0` iff `E >= V(0)`, `x_plus = L` iff `E >= V(L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    pub x_minus: f64,
    pub x_plus: f64,
    pub energy: f64,
}

impl TurningPoints {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_minus && x <= self.x_plus
    }
}

/// Perturbation `q(eps, x)` with `‖q_eps‖_∞ → 0`.
#[derive(Debug, Clone)]
pub struct Perturbation {
    expr: Expr,
    slope: Expr,
    length: f64,
}

impl Perturbation {
    pub fn parse(src: &str, length: f64) -> Result<Self> {
        Ok(Self::new(Expr::parse(src)?, length))
    }

    pub fn new(expr: Expr, length: f64) -> Self {
        let slope = expr.derivative();
        Self {
            expr,
            slope,
            length,
        }
    }

    #[inline]
    pub fn value(&self, eps: f64, x: f64) -> f64 {
        self.expr.eval(x, eps)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn sup_norm_bound(&self, eps: f64) -> f64 {
        Potential::scan_sup(0.0, self.length, |x| self.value(eps, x))
    }

    /// `‖q‖_∞ + ‖q'‖_∞`.
    pub fn c1_norm_bound(&self, eps: f64) -> f64 {
        self.sup_norm_bound(eps) + Potential::scan_sup(0.0, self.length, |x| self.slope.eval(x, eps))
    }

    /// Checks that the sup norm shrinks from the largest to the smallest
    /// schedule value.
    pub fn check_schedule(&self, schedule: &[f64]) -> Result<()> {
        let (Some(&first), Some(&last)) = (schedule.first(), schedule.last()) else {
            return Ok(());
        };
        let (big, small) = if first >= last { (first, last) } else { (last, first) };
        let (qb, qs) = (self.sup_norm_bound(big), self.sup_norm_bound(small));
        if qs > 0.0 && qs >= qb {
            return Err(Error::Precondition(format!(
                "perturbation does not shrink along the schedule: ‖q‖ = {qb:e} at eps = {big}, {qs:e} at eps = {small}"
            )));
        }
        Ok(())
    }
}

/// `q(eps, x)` or zero.
#[inline]
pub fn perturbation_value(q: Option<&Perturbation>, eps: f64, x: f64) -> f64 {
    q.map_or(0.0, |q| q.value(eps, x))
}

pub fn perturbation_sup(q: Option<&Perturbation>, eps: f64) -> f64 {
    q.map_or(0.0, |q| q.sup_norm_bound(eps))
}
