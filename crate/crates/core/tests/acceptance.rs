//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the terminal; exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use semiwell::bounds::{bounds_report, decay_samples, energy_densities, rough_gronwall_check, tunneling_check, Observation};
use semiwell::config::ExperimentConfig;
use semiwell::eigensolve::{
    assemble, eigenpair, eigenvalues_in_window, richardson_eigenvalues, shooting_eigenvalue, solve_mode, GridPolicy,
    ModeSelector, Window,
};
use semiwell::measure::{husimi, limit_measure, measure_convergence_report, RegimeTarget, TestFunction};
use semiwell::run::run_in;
use semiwell::trend::decreasing_tail;
use semiwell::{Error, Perturbation, Potential};

const SCHEDULE: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome, Error> {
    Ok(Outcome { pass, detail })
}

fn p1() -> Potential {
    Potential::parse("(x-1)^2", 2.0).unwrap()
}

fn potentials() -> Vec<(&'static str, Potential, Option<Perturbation>)> {
    vec![
        ("P1", p1(), None),
        ("P2", Potential::parse("(x-0.7)^2", 2.0).unwrap(), None),
        ("P3", p1(), Some(Perturbation::parse("eps*sin(5*x)", 2.0).unwrap())),
    ]
}

fn auto(energy_max: f64) -> GridPolicy {
    GridPolicy::Auto { energy_max, factor: 1.0 }
}

/// Midpoint rule for `∫_a^b f`, with `n` cells.
fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

fn oracle_equivalence() -> Result<Outcome, Error> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut nodes_ok = true;
    for (_, p, q) in potentials() {
        for eps in [0.1, 0.05, 0.02] {
            let n = GridPolicy::Auto { energy_max: 1.0, factor: 2.0 }.interior_size(&p, eps)?;
            let matrix = richardson_eigenvalues(&p, q.as_ref(), eps, n, 10)?;
            for (k, &e) in matrix.iter().enumerate() {
                let s = shooting_eigenvalue(&p, q.as_ref(), eps, k)?;
                nodes_ok &= s.nodes == k;
                worst = worst.max((s.energy - e).abs() / e.abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && secs <= 60.0 && nodes_ok,
        format!("max relative difference {worst:.2e} (<= 1e-6), {secs:.1} s (<= 60 s), shooting node counts match"),
    )
}

fn harmonic() -> Result<Outcome, Error> {
    let p = p1();
    let eps = 0.02;
    let op = assemble(&p, None, eps, &auto(1.0).grid(&p, eps)?)?;
    let e = eigenvalues_in_window(&op, Window::Count(4))?;
    let worst = (0..4)
        .map(|k| (e[k] - eps * (2 * k + 1) as f64).abs() / (eps * (2 * k + 1) as f64))
        .fold(0.0, f64::max);
    outcome(worst <= 0.01, format!("max relative deviation from eps(2k+1): {worst:.2e} (<= 1e-2)"))
}

fn normalization() -> Result<Outcome, Error> {
    let spec = limit_measure(&p1(), 0.25)?;
    let c = spec.c_star.unwrap();
    // ∫ dx / sqrt(1/4 - (x-1)²) over (1/2, 3/2): x = 1 + sin(t)/2 turns it into ∫ dt over (-π/2, π/2).
    // A midpoint sum on a clipped interval converges to the same value from below.
    let clipped = midpoint(|x| 1.0 / (0.25 - (x - 1.0).powi(2)).sqrt(), 0.5 + 1e-12, 1.5 - 1e-12, 2_000_000);
    assert!((clipped - PI).abs() < 1e-2);
    let oracle = 1.0 / PI;
    let err = (c - oracle).abs();
    outcome(err <= 1e-8, format!("C* = {c:.12}, 1/π = {oracle:.12}, |diff| = {err:.2e} (<= 1e-8)"))
}

fn ground_measure() -> Result<Outcome, Error> {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for (name, p, q) in [potentials().remove(0), potentials().remove(2)] {
        let report = measure_convergence_report(&p, q.as_ref(), RegimeTarget::Ground, &SCHEDULE, &[TestFunction::X], auto(1.0))?;
        let errs = report.moment_errors(0);
        // φ(x0) = x0 = 1 for both wells.
        assert_eq!(report.predicted[0], p.x0());
        let last = *errs.last().unwrap();
        let ok = (p.x0() - 1.0).abs() < 1e-9 && last <= 0.02 && decreasing_tail(&errs, 3);
        pass &= ok;
        details.push(format!("{name} errors {}", fmt_list(&errs)));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 120.0;
    outcome(pass, format!("{}; {secs:.1} s", details.join("; ")))
}

fn interior_measure() -> Result<Outcome, Error> {
    let p = p1();
    // Arcsine law with C* = 1/π: ∫_{0.9}^{1.1} dx / (π sqrt(1/4 - (x-1)²)) = 2 asin(0.2) / π.
    let closed = 2.0 * (0.2f64).asin() / PI;
    let schedule = [0.1, 0.05, 0.025, 0.0125, 0.00625];
    let phi = TestFunction::indicator(0.9, 1.1);
    let report = measure_convergence_report(&p, None, RegimeTarget::Interior(0.25), &schedule, &[phi], auto(1.0))?;
    let last = report.rows.last().unwrap().empirical[0];
    let rel = (last - closed).abs() / closed;
    outcome(
        rel <= 0.05,
        format!("closed form {closed:.5}, empirical at eps = 0.00625: {last:.5}, relative error {rel:.2e} (<= 5e-2)"),
    )
}

fn boundary_traces() -> Result<Outcome, Error> {
    let p = p1();
    // C_2 = 1 / ∫_0^2 dx / sqrt(2 - (x-1)²) = 1 / (2 asin(1/√2)) = 2/π; trace = 2 C_2 sqrt(2 - V(0)).
    let c2 = 1.0 / (2.0 * (1.0 / 2f64.sqrt()).asin());
    let quadrature = midpoint(|x| 1.0 / (2.0 - (x - 1.0).powi(2)).sqrt(), 0.0, 2.0, 1_000_000);
    assert!((1.0 / quadrature - c2).abs() < 1e-9);
    let expected = 2.0 * c2 * (2.0 - 1.0f64).sqrt();
    let hyperbolic = measure_convergence_report(&p, None, RegimeTarget::Interior(2.0), &SCHEDULE, &[TestFunction::One], auto(1.0))?;
    let t_hyp = hyperbolic.rows.last().unwrap().trace0;
    let rel_hyp = (t_hyp - expected).abs() / expected;
    let elliptic = measure_convergence_report(&p, None, RegimeTarget::Interior(0.25), &SCHEDULE, &[TestFunction::One], auto(1.0))?;
    let t_ell = elliptic.rows.last().unwrap().trace0;
    let high = measure_convergence_report(&p, None, RegimeTarget::high_default(&p), &SCHEDULE, &[TestFunction::One], auto(1.0))?;
    let t_high = high.rows.last().unwrap().trace0;
    let rel_high = (t_high - 2.0 / 2.0).abs();
    outcome(
        rel_hyp <= 0.05 && t_ell <= 1e-4 && rel_high <= 0.05,
        format!(
            "E*=2: {t_hyp:.4} vs 4/π = {expected:.4} (rel {rel_hyp:.2e}); E*=0.25: {t_ell:.2e} (<= 1e-4); \
             high E = {:.1}: E^-1 trace {t_high:.4} vs 2/L = 1 (rel {rel_high:.2e})",
            high.rows.last().unwrap().energy
        ),
    )
}

fn agmon_sandwich() -> Result<Outcome, Error> {
    let p = p1();
    let mut pass = true;
    let mut details = Vec::new();
    for obs in [Observation::Window(1.8, 2.0), Observation::LeftWall] {
        let r = bounds_report(&p, None, RegimeTarget::Ground, &SCHEDULE, obs, 0.3, auto(1.0))?;
        let (up, low) = (r.delta_upper(), r.delta_lower());
        let ok = up.iter().chain(&low).all(|&d| d >= -1e-6) && decreasing_tail(&up, 3) && decreasing_tail(&low, 3);
        pass &= ok;
        details.push(format!("{} upper {} lower {}", obs.label(), fmt_list(&up), fmt_list(&low)));
    }
    let (_, pair) = solve_mode(&p, None, 0.0125, &auto(1.0), ModeSelector::Index(0))?;
    let samples = decay_samples(&pair, &p, 10)?;
    // d_{A,E0}(x) = (x-1)²/2 for the harmonic well.
    let worst = samples
        .iter()
        .map(|s| (s.rate - (s.x - 1.0).powi(2) / 2.0).abs())
        .fold(0.0, f64::max);
    pass &= samples.len() == 10 && worst <= 0.05;
    details.push(format!("pointwise |rate - d| <= {worst:.3e} at 10 points (<= 0.05)"));
    outcome(pass, details.join("; "))
}

fn lemmas() -> Result<Outcome, Error> {
    let start = Instant::now();
    let (mut pairs, mut tunneling_pairs) = (0, 0);
    let (mut worst_t, mut worst_g) = (f64::INFINITY, f64::INFINITY);
    let mut skipped = 0;
    for (_, p, q) in potentials() {
        for eps in SCHEDULE {
            let op = assemble(&p, q.as_ref(), eps, &auto(1.0).grid(&p, eps)?)?;
            for e in eigenvalues_in_window(&op, Window::Count(10))? {
                let pair = eigenpair(&op, e)?;
                if pair.residual_norm > 1e-10 * (pair.energy.abs() + 1.0) {
                    continue;
                }
                pairs += 1;
                let d = energy_densities(&pair, &p);
                let g = rough_gronwall_check(&pair, &d, &p, q.as_ref());
                worst_g = worst_g.min(g.margin);
                skipped += g.skipped;
                match tunneling_check(&pair, &d, &p, q.as_ref(), 0.3) {
                    Ok(t) => {
                        tunneling_pairs += 1;
                        worst_t = worst_t.min(t.margin);
                        skipped += t.skipped;
                    }
                    Err(Error::EmptyForbiddenRegion(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_t >= -1e-6 && worst_g >= -1e-6 && skipped == 0 && secs <= 120.0,
        format!(
            "{pairs} eigenpairs ({tunneling_pairs} with a forbidden region): worst tunneling margin {worst_t:.3e}, \
             worst Gronwall margin {worst_g:.3e}, {skipped} skipped pairs, {secs:.1} s"
        ),
    )
}

fn husimi_diagnostics() -> Result<Outcome, Error> {
    let p = p1();
    let (_, pair) = solve_mode(&p, None, 0.02, &auto(1.0), ModeSelector::Nearest(0.25))?;
    let field = husimi(&pair, &p, 201, 201, None)?;
    let eta = 5.0 * 0.02f64.sqrt() * (1.0 + pair.energy.abs());
    let tube = field.tube_mass(&p, eta);
    let branch = field.positive_branch_fraction();
    let l1 = field.marginal_l1_distance(&pair);
    outcome(
        tube >= 0.9 && (branch - 0.5).abs() <= 0.05 && l1 <= 0.1,
        format!("E = {:.4}: tube mass {tube:.4} (>= 0.9), branch {branch:.4} (0.5 ± 0.05), L1 {l1:.2e} (<= 0.1)", pair.energy),
    )
}

fn determinism() -> Result<Outcome, Error> {
    let text = "[potential]\nV = (x-1)^2\nL = 2\n[schedule]\neps = 0.1, 0.05, 0.025, 0.0125\n[windows]\nU = 1.8, 2.0\n\
                [output]\nsteps = spectrum, eigen, agmon, measure, husimi, bounds, report\n";
    let config = ExperimentConfig::parse(text)?;
    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    let ma = run_in(&config, a.path())?;
    let mb = run_in(&config, b.path())?;
    let mut same = ma.outputs.len() == 7 && ma.outputs.len() == mb.outputs.len();
    for (fa, fb) in ma.outputs.iter().zip(&mb.outputs) {
        let bytes_a = std::fs::read(a.path().join(&fa.file))?;
        let bytes_b = std::fs::read(b.path().join(&fb.file))?;
        same &= bytes_a == bytes_b && fa.sha256 == fb.sha256;
    }
    outcome(same, format!("{} CSV files byte-identical across two runs", ma.outputs.len()))
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome, Error>); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("harmonic asymptotics", harmonic),
        ("normalization constant", normalization),
        ("ground-regime measure", ground_measure),
        ("interior-regime measure", interior_measure),
        ("boundary traces", boundary_traces),
        ("Agmon sandwich", agmon_sandwich),
        ("lemma inequalities", lemmas),
        ("Husimi diagnostics", husimi_diagnostics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
