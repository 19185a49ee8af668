//! Composite Gauss–Legendre quadrature with adaptive bisection and geometric
//! refinement toward an endpoint where the integrand is only Hölder.

use std::sync::OnceLock;

pub const GL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// One 16-point panel on `[a, b]`.
pub fn gl_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(&t, &w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

/// Adaptive bisection: a panel is accepted when it agrees with its two halves.
pub fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = gl_panel(f, a, m);
        let right = gl_panel(f, m, b);
        let refined = left + right;
        if depth >= 48 || (refined - whole).abs() <= tol || m <= a || m >= b {
            return refined;
        }
        recurse(f, a, m, left, 0.5 * tol, depth + 1) + recurse(f, m, b, right, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = gl_panel(f, a, b);
    recurse(f, a, b, whole, tol, 0)
}

/// Integral over `[a, b]` (either order) with panels halving geometrically
/// toward `singular`, which must be `a` or `b`, down to width `min_width`.
/// Each geometric panel is integrated adaptively.
pub fn toward_endpoint(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    singular: f64,
    tol: f64,
    min_width: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let sign = if b >= a { 1.0 } else { -1.0 };
    let (lo, hi) = if b >= a { (a, b) } else { (b, a) };
    let at_lo = (singular - lo).abs() <= (singular - hi).abs();
    let width = hi - lo;
    let mut breaks = Vec::new();
    let mut w = width;
    while w > min_width {
        breaks.push(w);
        w *= 0.5;
    }
    let levels = breaks.len().max(1);
    let panel_tol = tol / (levels as f64 + 1.0);
    let mut total = 0.0;
    // Panels [w/2, w] measured from the singular end, plus the innermost [0, w_min].
    for &w in &breaks {
        let (p, q) = if at_lo { (lo + 0.5 * w, lo + w) } else { (hi - w, hi - 0.5 * w) };
        total += adaptive(f, p, q, panel_tol);
    }
    let last = breaks.last().map_or(width, |w| 0.5 * w);
    let (p, q) = if at_lo { (lo, lo + last) } else { (hi - last, hi) };
    total += gl_panel(f, p, q);
    sign * total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_weights() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        // Exact for polynomials up to degree 31.
        let integral: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(30)).sum();
        assert!((integral - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_integrals() {
        let v = adaptive(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-13);
        let v = adaptive(&|x: f64| (-x * x).exp(), -6.0, 6.0, 1e-13);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn square_root_endpoint() {
        // ∫_0^1 sqrt(x) dx = 2/3, singular derivative at 0.
        let v = toward_endpoint(&|x: f64| x.sqrt(), 0.0, 1.0, 0.0, 1e-12, 1e-14);
        assert!((v - 2.0 / 3.0).abs() < 1e-12, "{v}");
        // Reversed orientation, singular at the upper end.
        let v = toward_endpoint(&|x: f64| (1.0 - x).sqrt(), 1.0, 0.0, 1.0, 1e-12, 1e-14);
        assert!((v + 2.0 / 3.0).abs() < 1e-12, "{v}");
    }
}
