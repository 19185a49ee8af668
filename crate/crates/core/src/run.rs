//! Config-driven runs: each step writes one CSV into the output directory and
//! the run ends with `manifest.json` listing the config, timings, verdicts and
//! SHA-256 digests of every output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::agmon::{agmon_distance, agmon_profile};
use crate::bounds::{bounds_report, geometric_control_check, BoundsReport, Observation};
use crate::config::{ExperimentConfig, Resolved, Step};
use crate::eigensolve::{
    assemble, eigenpair, eigenvalues_in_window, richardson_eigenvalues, shooting_eigenvalue, solve_mode, Eigenpair,
    GridPolicy, ModeSelector, Window,
};
use crate::error::Result;
use crate::measure::{basket, husimi, measure_convergence_report, RegimeTarget};
use crate::tolerances::{HUSIMI_TUBE, TOL_EXP, TOL_QUAD, TREND_SLACK};
use crate::trend::decreasing_tail;

/// Environment variable that replaces the configured output directory.
pub const OUT_DIR_ENV: &str = "SEMIWELL_OUT_DIR";

/// Relative tolerance on nonzero trace limits.
pub const TRACE_REL: f64 = 0.05;
/// Bound on traces whose limit is zero.
pub const TRACE_ZERO: f64 = 1e-4;
/// Relative agreement required between the matrix solver and shooting.
pub const ORACLE_REL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepTiming {
    pub step: String,
    pub seconds: f64,
}

/// A named check with its observed value and threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub step: String,
    pub check: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: String,
    pub output_dir: String,
    pub timings: Vec<StepTiming>,
    pub outputs: Vec<OutputFile>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

/// Output directory after the environment override.
pub fn output_dir(config: &ExperimentConfig) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| config.output_dir.clone())
}

/// Runs every configured step into [`output_dir`].
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    run_in(config, &output_dir(config))
}

pub fn run_in(config: &ExperimentConfig, dir: &Path) -> Result<RunManifest> {
    let resolved = config.resolve()?;
    fs::create_dir_all(dir)?;
    let mut ctx = Context {
        config,
        r: &resolved,
        verdicts: Vec::new(),
    };
    let mut timings = Vec::new();
    let mut outputs = Vec::new();
    for &step in &config.steps {
        let start = Instant::now();
        let csv = match step {
            Step::Spectrum => ctx.spectrum()?,
            Step::Eigen => ctx.eigen()?,
            Step::Agmon => ctx.agmon()?,
            Step::Measure => ctx.measure()?,
            Step::Husimi => ctx.husimi()?,
            Step::Bounds => ctx.bounds()?,
            Step::Report => ctx.report()?,
        };
        let file = format!("{}.csv", step.name());
        fs::write(dir.join(&file), csv.as_bytes())?;
        outputs.push(OutputFile {
            file,
            sha256: hex_digest(csv.as_bytes()),
            bytes: csv.len() as u64,
        });
        timings.push(StepTiming {
            step: step.name().into(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let passed = ctx.verdicts.iter().all(|v| v.pass);
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.to_text(),
        output_dir: dir.display().to_string(),
        timings,
        outputs,
        verdicts: ctx.verdicts,
        passed,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv(header.join(",") + "\n")
    }

    fn row(&mut self, fields: &[String]) {
        self.0.push_str(&fields.join(","));
        self.0.push('\n');
    }
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    r: &'a Resolved,
    verdicts: Vec<Verdict>,
}

impl<'a> Context<'a> {
    fn verdict(&mut self, step: Step, check: impl Into<String>, value: f64, threshold: f64, pass: bool) {
        self.verdicts.push(Verdict {
            step: step.name().into(),
            check: check.into(),
            value,
            threshold,
            pass,
        });
    }

    fn q(&self) -> Option<&crate::potential::Perturbation> {
        self.r.perturbation.as_ref()
    }

    fn selector(&self) -> ModeSelector {
        match self.config.mode_index {
            Some(k) => ModeSelector::Index(k),
            None => self.r.target.selector(),
        }
    }

    fn single_pair(&self) -> Result<Eigenpair> {
        let eps = self.config.single_eps();
        let (_, pair) = solve_mode(&self.r.potential, self.q(), eps, &self.r.policy, self.selector())?;
        Ok(pair)
    }

    fn regime_energy(&self) -> f64 {
        match self.r.target {
            RegimeTarget::Ground => self.r.potential.ground_energy(),
            RegimeTarget::Interior(e) => e,
            RegimeTarget::High { target_energy } => target_energy,
        }
    }

    fn spectrum(&mut self) -> Result<String> {
        let eps = self.config.single_eps();
        let grid = self.r.policy.grid(&self.r.potential, eps)?;
        let op = assemble(&self.r.potential, self.q(), eps, &grid)?;
        let window = match self.config.spectrum_window {
            Some((lo, hi)) => Window::Range(lo, hi),
            None => Window::Count(self.config.spectrum_count),
        };
        let energies = eigenvalues_in_window(&op, window)?;
        let pairs = energies
            .par_iter()
            .map(|&e| eigenpair(&op, e))
            .collect::<Result<Vec<_>>>()?;
        let mut csv = Csv::new(&["k", "E", "residual", "dpsi0", "dpsiL"]);
        let mut worst = 0.0f64;
        for p in &pairs {
            worst = worst.max(p.residual_norm / (p.energy.abs() + 1.0));
            csv.row(&[p.index.to_string(), num(p.energy), num(p.residual_norm), num(p.dpsi0), num(p.dpsi_l)]);
        }
        self.verdict(Step::Spectrum, "residual/(|E|+1)", worst, 1e-10, worst <= 1e-10);
        Ok(csv.0)
    }

    fn eigen(&mut self) -> Result<String> {
        let pair = self.single_pair()?;
        let mut csv = Csv::new(&["x", "psi"]);
        for (x, v) in pair.nodes().into_iter().zip(&pair.psi) {
            csv.row(&[num(x), num(*v)]);
        }
        let ok = pair.residual_norm <= 1e-10 * (pair.energy.abs() + 1.0);
        self.verdict(Step::Eigen, "residual", pair.residual_norm, 1e-10 * (pair.energy.abs() + 1.0), ok);
        Ok(csv.0)
    }

    fn agmon(&mut self) -> Result<String> {
        let energy = self.config.agmon_energy.unwrap_or_else(|| self.regime_energy());
        let profile = agmon_profile(&self.r.potential, energy, self.config.agmon_points)?;
        let mut csv = Csv::new(&["x", "E", "d_A"]);
        for (x, d) in profile.grid.iter().zip(&profile.values) {
            csv.row(&[num(*x), num(energy), num(*d)]);
        }
        Ok(csv.0)
    }

    fn measure(&mut self) -> Result<String> {
        let p = &self.r.potential;
        let phis = basket(&self.config.phi, p.length())?;
        let report = measure_convergence_report(p, self.q(), self.r.target, &self.config.schedule, &phis, self.r.policy)?;
        let (t0, tl) = report.predicted_traces.unwrap_or((0.0, 0.0));
        let mut csv = Csv::new(&[
            "eps",
            "E",
            "phi_name",
            "empirical",
            "predicted",
            "abs_err",
            "trace0_emp",
            "trace0_pred",
            "traceL_emp",
            "traceL_pred",
        ]);
        for row in &report.rows {
            for (j, phi) in phis.iter().enumerate() {
                csv.row(&[
                    num(row.eps),
                    num(row.energy),
                    phi.name(),
                    num(row.empirical[j]),
                    num(report.predicted[j]),
                    num((row.empirical[j] - report.predicted[j]).abs()),
                    num(row.trace0),
                    num(t0),
                    num(row.trace_l),
                    num(tl),
                ]);
            }
        }
        let tol = self.config.measure_tol;
        for (j, phi) in phis.iter().enumerate() {
            let last = *report.moment_errors(j).last().unwrap_or(&f64::NAN);
            let ok = report.moment_verdict(j, tol);
            self.verdict(Step::Measure, format!("moment {}", phi.name()), last, tol, ok);
        }
        if let (Some(e0), Some(el)) = (report.trace0_errors(), report.trace_l_errors()) {
            for (label, errs, pred) in [("trace 0", e0, t0), ("trace L", el, tl)] {
                let last = *errs.last().unwrap_or(&f64::NAN);
                let threshold = if pred == 0.0 { TRACE_ZERO } else { TRACE_REL * pred.abs() };
                self.verdict(Step::Measure, label, last, threshold, last <= threshold);
            }
        }
        Ok(csv.0)
    }

    fn husimi(&mut self) -> Result<String> {
        let pair = self.single_pair()?;
        let p = &self.r.potential;
        let field = husimi(&pair, p, self.config.husimi_nx, self.config.husimi_nxi, None)?;
        let mut csv = Csv::new(&["x", "xi", "H"]);
        for (j, &x) in field.xs.iter().enumerate() {
            for (k, &xi) in field.xis.iter().enumerate() {
                csv.row(&[num(x), num(xi), num(field.at(j, k))]);
            }
        }
        let eta = HUSIMI_TUBE * pair.eps.sqrt() * (1.0 + pair.energy.abs());
        let tube = field.tube_mass(p, eta);
        let branch = field.positive_branch_fraction();
        let l1 = field.marginal_l1_distance(&pair);
        self.verdict(Step::Husimi, "tube mass", tube, 0.9, tube >= 0.9);
        self.verdict(Step::Husimi, "|branch fraction - 1/2|", (branch - 0.5).abs(), 0.05, (branch - 0.5).abs() <= 0.05);
        self.verdict(Step::Husimi, "x-marginal L1", l1, 0.1, l1 <= 0.1);
        Ok(csv.0)
    }

    fn bounds_for(&self, observation: Observation) -> Result<BoundsReport> {
        bounds_report(
            &self.r.potential,
            self.q(),
            self.r.target,
            &self.config.schedule,
            observation,
            self.config.alpha,
            self.r.policy,
        )
    }

    fn bounds_verdicts(&mut self, step: Step, report: &BoundsReport) {
        let label = report.observation.label();
        let lower = report.delta_lower();
        let upper = report.delta_upper();
        let min_lower = lower.iter().copied().fold(f64::INFINITY, f64::min);
        self.verdict(step, format!("min delta_lower {label}"), min_lower, -TOL_EXP, min_lower >= -TOL_EXP);
        let tail_l = decreasing_tail(&lower, 3);
        let tail_u = decreasing_tail(&upper, 3);
        self.verdict(step, format!("delta_lower {label} decreasing"), *lower.last().unwrap_or(&f64::NAN), TREND_SLACK, tail_l);
        self.verdict(step, format!("delta_upper {label} decreasing"), *upper.last().unwrap_or(&f64::NAN), TREND_SLACK, tail_u);
        let tun = report
            .rows
            .iter()
            .filter_map(|r| r.tunneling.map(|t| t.margin))
            .fold(f64::INFINITY, f64::min);
        if tun.is_finite() {
            self.verdict(step, "tunneling margin", tun, -TOL_EXP, tun >= -TOL_EXP);
        }
        let gr = report.rows.iter().map(|r| r.gronwall.margin).fold(f64::INFINITY, f64::min);
        self.verdict(step, "gronwall margin", gr, -TOL_EXP, gr >= -TOL_EXP);
    }

    fn bounds(&mut self) -> Result<String> {
        let report = self.bounds_for(self.r.observation)?;
        let mut csv = Csv::new(&["eps", "E", "delta_upper", "delta_lower", "tunneling_margin", "gronwall_margin", "verdict"]);
        for row in &report.rows {
            csv.row(&[
                num(row.eps),
                num(row.energy),
                num(row.upper.delta_upper),
                num(row.delta_lower),
                num(row.tunneling.map_or(f64::NAN, |t| t.margin)),
                num(row.gronwall.margin),
                pass_word(row.passes()).into(),
            ]);
        }
        self.bounds_verdicts(Step::Bounds, &report);
        Ok(csv.0)
    }

    /// Full battery: oracle agreement, Agmon profile consistency at seeded
    /// random points, limit measures and traces, both Agmon bounds at the
    /// configured observation and at the nearer wall, geometric control
    /// around the well bottom, and Husimi diagnostics.
    fn report(&mut self) -> Result<String> {
        let start = self.verdicts.len();
        let r: &'a Resolved = self.r;
        let p = &r.potential;
        let q = r.perturbation.as_ref();

        let eps_max = self.config.schedule[0];
        let modes = 5;
        let n = GridPolicy::Auto {
            energy_max: p.max_value(),
            factor: 2.0,
        }
        .interior_size(p, eps_max)?;
        let matrix = richardson_eigenvalues(p, q, eps_max, n, modes)?;
        let worst = (0..modes)
            .into_par_iter()
            .map(|k| {
                let s = shooting_eigenvalue(p, q, eps_max, k)?;
                Ok((s.energy - matrix[k]).abs() / matrix[k].abs().max(f64::MIN_POSITIVE))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        self.verdict(Step::Report, format!("oracle rel diff eps={eps_max}"), worst, ORACLE_REL, worst <= ORACLE_REL);

        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let e0 = p.ground_energy();
        let mut agmon_worst = 0.0f64;
        for _ in 0..8 {
            let energy = rng.gen_range(e0..=p.max_value() + 1.0);
            let profile = agmon_profile(p, energy, 256)?;
            for _ in 0..8 {
                let x = rng.gen_range(0.0..=p.length());
                agmon_worst = agmon_worst.max((profile.value_at(p, x) - agmon_distance(p, energy, x)?).abs());
            }
        }
        self.verdict(Step::Report, "agmon profile vs pointwise", agmon_worst, 3.0 * TOL_QUAD, agmon_worst <= 3.0 * TOL_QUAD);

        self.measure()?;
        let configured = self.bounds_for(self.r.observation)?;
        self.bounds_verdicts(Step::Report, &configured);
        let wall = if p.x0() <= 0.5 * p.length() {
            Observation::RightWall
        } else {
            Observation::LeftWall
        };
        if wall != self.r.observation {
            let at_wall = self.bounds_for(wall)?;
            self.bounds_verdicts(Step::Report, &at_wall);
        }
        let half = 0.05 * p.length();
        let around = Observation::Window((p.x0() - half).max(0.0), (p.x0() + half).min(p.length()));
        match geometric_control_check(p, q, &self.config.schedule, around, self.r.target, self.r.policy) {
            Ok(g) => self.verdict(
                Step::Report,
                format!("geometric control {}", around.label()),
                g.minimum,
                crate::tolerances::C_FLOOR,
                g.ok,
            ),
            Err(crate::Error::Precondition(_)) => {}
            Err(e) => return Err(e),
        }
        self.husimi()?;

        let mut csv = Csv::new(&["step", "check", "value", "threshold", "verdict"]);
        let rows: Vec<Verdict> = self.verdicts[start..].to_vec();
        for v in &rows {
            csv.row(&[
                v.step.clone(),
                v.check.replace(',', ";"),
                num(v.value),
                num(v.threshold),
                pass_word(v.pass).into(),
            ]);
        }
        for v in &mut self.verdicts[start..] {
            v.step = Step::Report.name().into();
        }
        Ok(csv.0)
    }
}

/// Human-readable verdict table.
pub fn verdict_table(verdicts: &[Verdict]) -> String {
    let mut out = String::new();
    for v in verdicts {
        let _ = writeln!(
            out,
            "{:<5} {:<9} {:<40} value={:<12.5e} threshold={:.3e}",
            pass_word(v.pass),
            v.step,
            v.check,
            v.value,
            v.threshold
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, 12345.678901234567] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            hex_digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
