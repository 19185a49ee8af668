//! Experiment configuration: flat `key = value` lines grouped under
//! `[section]` headers. `#` starts a comment.
//!
//! ```text
//! [potential]
//! V = (x-1)^2
//! L = 2
//! q = eps*sin(5*x)
//!
//! [schedule]
//! eps = 0.1, 0.05, 0.025, 0.0125
//!
//! [regime]
//! target = ground
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::bounds::Observation;
use crate::eigensolve::GridPolicy;
use crate::error::{Error, Result};
use crate::measure::RegimeTarget;
use crate::potential::{Perturbation, Potential};

/// Pipeline steps of a run, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Step {
    Spectrum,
    Eigen,
    Agmon,
    Measure,
    Husimi,
    Bounds,
    Report,
}

impl Step {
    pub const ALL: [Step; 7] = [
        Step::Spectrum,
        Step::Eigen,
        Step::Agmon,
        Step::Measure,
        Step::Husimi,
        Step::Bounds,
        Step::Report,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Step::Spectrum => "spectrum",
            Step::Eigen => "eigen",
            Step::Agmon => "agmon",
            Step::Measure => "measure",
            Step::Husimi => "husimi",
            Step::Bounds => "bounds",
            Step::Report => "report",
        }
    }

    pub fn parse(s: &str) -> Option<Step> {
        Step::ALL.into_iter().find(|step| step.name() == s.trim())
    }
}

/// How the regime target is written in a config or on the command line:
/// `ground`, `interior=E`, `high`, or `high=E`.
pub fn parse_regime(src: &str, potential: &Potential) -> Result<RegimeTarget> {
    let src = src.trim();
    let (head, value) = match src.split_once('=') {
        Some((h, v)) => (h.trim(), Some(v.trim())),
        None => (src, None),
    };
    let number = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::config("regime", format!("bad energy '{v}' in '{src}'")))
    };
    match (head, value) {
        ("ground", None) => Ok(RegimeTarget::Ground),
        ("interior", Some(v)) => {
            let e = number(v)?;
            if !(e > potential.ground_energy()) {
                return Err(Error::config(
                    "regime",
                    format!("interior target {e} must exceed the ground energy {}", potential.ground_energy()),
                ));
            }
            Ok(RegimeTarget::Interior(e))
        }
        ("high", None) => Ok(RegimeTarget::high_default(potential)),
        ("high", Some(v)) => Ok(RegimeTarget::High {
            target_energy: number(v)?,
        }),
        _ => Err(Error::config(
            "regime",
            format!("expected ground, interior=E, high or high=E, got '{src}'"),
        )),
    }
}

/// Parses `a,b` into a window, or `0` / `L` into a wall.
pub fn parse_observation(window: Option<&str>, boundary: Option<&str>) -> Result<Observation> {
    match (window, boundary) {
        (Some(_), Some(_)) => Err(Error::config("windows", "give either a window U or a boundary, not both")),
        (Some(w), None) => {
            let parts = parse_list(w).map_err(|m| Error::config("windows.U", m))?;
            match parts[..] {
                [a, b] => Ok(Observation::Window(a, b)),
                _ => Err(Error::config("windows.U", format!("expected 'a, b', got '{w}'"))),
            }
        }
        (None, Some(b)) => match b.trim() {
            "0" => Ok(Observation::LeftWall),
            "L" | "l" => Ok(Observation::RightWall),
            other => Err(Error::config("windows.boundary", format!("expected 0 or L, got '{other}'"))),
        },
        (None, None) => Err(Error::config("windows", "no observation window or boundary given")),
    }
}

fn parse_list(src: &str) -> std::result::Result<Vec<f64>, String> {
    src.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("'{}' is not a number", t.trim())))
        .collect()
}

/// Geometric schedule `eps_max, eps_max r, ..., eps_max r^{count-1}`.
pub fn geometric_schedule(eps_max: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| eps_max * ratio.powi(i as i32)).collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub potential_src: String,
    pub length: f64,
    pub perturbation_src: Option<String>,
    pub schedule: Vec<f64>,
    pub regime_src: String,
    pub window: Option<String>,
    pub boundary: Option<String>,
    pub alpha: f64,
    pub grid: GridSpec,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub steps: Vec<Step>,
    /// Modes listed by the spectrum step.
    pub spectrum_count: usize,
    /// Optional spectrum window `[lo, hi]`, overriding the count.
    pub spectrum_window: Option<(f64, f64)>,
    /// eps for single-eps steps; defaults to the smallest schedule value.
    pub eps: Option<f64>,
    /// Mode index for single-eps steps; defaults to the regime's selection.
    pub mode_index: Option<usize>,
    /// Energy of the agmon step; defaults to the regime energy.
    pub agmon_energy: Option<f64>,
    pub agmon_points: usize,
    pub phi: String,
    pub measure_tol: f64,
    pub husimi_nx: usize,
    pub husimi_nxi: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Auto { factor: f64 },
    Fixed(usize),
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            potential_src: "(x-1)^2".into(),
            length: 2.0,
            perturbation_src: None,
            schedule: vec![0.1, 0.05, 0.025, 0.0125],
            regime_src: "ground".into(),
            window: None,
            boundary: None,
            alpha: 0.3,
            grid: GridSpec::Auto { factor: 1.0 },
            output_dir: PathBuf::from("semiwell-out"),
            seed: 0,
            steps: vec![Step::Spectrum, Step::Eigen, Step::Agmon, Step::Measure, Step::Bounds],
            spectrum_count: 10,
            spectrum_window: None,
            eps: None,
            mode_index: None,
            agmon_energy: None,
            agmon_points: 1024,
            phi: "standard".into(),
            measure_tol: 0.05,
            husimi_nx: 201,
            husimi_nxi: 201,
        }
    }
}

/// Built objects of a validated configuration.
pub struct Resolved {
    pub potential: Potential,
    pub perturbation: Option<Perturbation>,
    pub target: RegimeTarget,
    pub observation: Observation,
    pub policy: GridPolicy,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        let mut section = String::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(Error::config(format!("line {line_no}"), format!("unterminated section header '{line}'")));
                };
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!("line {line_no}"), format!("expected key = value, got '{line}'")));
            };
            let full = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            if let Some((_, first)) = entries.get(&full) {
                return Err(Error::config(
                    format!("line {line_no}"),
                    format!("'{full}' already set on line {first}"),
                ));
            }
            entries.insert(full, (value.trim().to_string(), line_no));
        }
        let mut reader = Reader { entries };
        let config = reader.build()?;
        reader.reject_unknown()?;
        Ok(config)
    }

    /// Canonical text form, parseable by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Builds the potential, perturbation, target and grid policy, and checks
    /// the schedule against the grid resolution rule.
    pub fn resolve(&self) -> Result<Resolved> {
        let potential = Potential::parse(&self.potential_src, self.length)
            .map_err(|e| Error::config("potential.V", e.to_string()))?;
        let perturbation = self
            .perturbation_src
            .as_deref()
            .map(|q| Perturbation::parse(q, self.length))
            .transpose()
            .map_err(|e| Error::config("potential.q", e.to_string()))?;
        validate_schedule(&self.schedule)?;
        if let Some(q) = &perturbation {
            q.check_schedule(&self.schedule)
                .map_err(|e| Error::config("potential.q", e.to_string()))?;
        }
        let target = parse_regime(&self.regime_src, &potential)?;
        let observation = match (self.window.as_deref(), self.boundary.as_deref()) {
            (None, None) => default_observation(&potential),
            (w, b) => parse_observation(w, b)?,
        };
        if !(self.alpha > 0.0) {
            return Err(Error::config("windows.alpha", format!("alpha must be positive, got {}", self.alpha)));
        }
        let policy = match self.grid {
            GridSpec::Auto { factor } => {
                if !(factor >= 1.0) {
                    return Err(Error::config("grid.factor", format!("factor must be at least 1, got {factor}")));
                }
                GridPolicy::Auto {
                    energy_max: target.energy_max(&potential),
                    factor,
                }
            }
            GridSpec::Fixed(n) => GridPolicy::Fixed(n),
        };
        for &eps in self.eps.iter().chain(&self.schedule) {
            check_resolution(&potential, &target, policy, eps)?;
        }
        Ok(Resolved {
            potential,
            perturbation,
            target,
            observation,
            policy,
        })
    }

    /// eps used by single-eps steps.
    pub fn single_eps(&self) -> f64 {
        self.eps
            .unwrap_or_else(|| self.schedule.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

/// Window at the far side of the longer forbidden stretch: the last tenth of
/// `[0, L]` on that side.
fn default_observation(potential: &Potential) -> Observation {
    let length = potential.length();
    if potential.x0() <= 0.5 * length {
        Observation::Window(0.9 * length, length)
    } else {
        Observation::Window(0.0, 0.1 * length)
    }
}

fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::config("schedule", "empty eps schedule"));
    }
    if let Some(&bad) = schedule.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::config("schedule", format!("eps = {bad} is not positive")));
    }
    if let Some(w) = schedule.windows(2).find(|w| w[1] >= w[0]) {
        return Err(Error::config(
            "schedule",
            format!("schedule must be strictly decreasing: eps = {} follows {}", w[1], w[0]),
        ));
    }
    Ok(())
}

/// Fixed grids must satisfy `h ≤ eps / (10 sqrt(max V - E0 + 1))`; automatic
/// grids must stay under the size cap.
fn check_resolution(potential: &Potential, target: &RegimeTarget, policy: GridPolicy, eps: f64) -> Result<()> {
    match policy {
        GridPolicy::Fixed(n) => {
            let h = potential.length() / (n + 1) as f64;
            let limit = eps / (10.0 * (potential.max_value() - potential.ground_energy() + 1.0).sqrt());
            if h > limit {
                return Err(Error::config(
                    "grid.n",
                    format!(
                        "n = {n} gives spacing {h:e} above the resolution limit {limit:e} at eps = {eps}; \
                         raise n or use the automatic grid"
                    ),
                ));
            }
            Ok(())
        }
        auto => auto
            .interior_size(potential, eps)
            .map(|_| ())
            .map_err(|e| Error::config("grid", format!("at eps = {eps} ({} target): {e}", target_name(target)))),
    }
}

fn target_name(target: &RegimeTarget) -> &'static str {
    match target {
        RegimeTarget::Ground => "ground",
        RegimeTarget::Interior(_) => "interior",
        RegimeTarget::High { .. } => "high",
    }
}

struct Reader {
    entries: BTreeMap<String, (String, usize)>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|(v, _)| v)
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::config(format!("line {line} ({key})"), format!("expected {what}, got '{v}'"))),
        }
    }

    fn build(&mut self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        let (v, _) = self
            .take("potential.V")
            .ok_or_else(|| Error::config("potential.V", "missing potential"))?;
        c.potential_src = v;
        c.length = self
            .parsed("potential.L", "a number")?
            .ok_or_else(|| Error::config("potential.L", "missing domain length"))?;
        c.perturbation_src = self.string("potential.q").filter(|q| !q.is_empty() && q != "none");

        let list = self.take("schedule.eps");
        let eps_max: Option<f64> = self.parsed("schedule.eps_max", "a number")?;
        let ratio: Option<f64> = self.parsed("schedule.ratio", "a number")?;
        let count: Option<usize> = self.parsed("schedule.count", "a count")?;
        c.schedule = match (list, eps_max, ratio, count) {
            (Some((v, line)), None, None, None) => {
                parse_list(&v).map_err(|m| Error::config(format!("line {line} (schedule.eps)"), m))?
            }
            (None, Some(m), Some(r), Some(n)) => {
                if !(r > 0.0 && r < 1.0) {
                    return Err(Error::config("schedule.ratio", format!("ratio must lie in (0, 1), got {r}")));
                }
                geometric_schedule(m, r, n)
            }
            (None, None, None, None) => c.schedule,
            _ => {
                return Err(Error::config(
                    "schedule",
                    "give either eps = list or all of eps_max, ratio, count",
                ))
            }
        };

        if let Some(t) = self.string("regime.target") {
            c.regime_src = t;
        }
        c.window = self.string("windows.U");
        c.boundary = self.string("windows.boundary");
        if let Some(a) = self.parsed("windows.alpha", "a number")? {
            c.alpha = a;
        }

        let policy = self.string("grid.policy");
        let n: Option<usize> = self.parsed("grid.n", "a count")?;
        let factor: Option<f64> = self.parsed("grid.factor", "a number")?;
        c.grid = match (policy.as_deref(), n) {
            (Some("fixed") | None, Some(n)) => GridSpec::Fixed(n),
            (Some("fixed"), None) => return Err(Error::config("grid.n", "fixed grid policy needs n")),
            (Some("auto") | None, None) => GridSpec::Auto {
                factor: factor.unwrap_or(1.0),
            },
            (Some("auto"), Some(_)) => return Err(Error::config("grid.n", "n conflicts with policy = auto")),
            (Some(other), _) => {
                return Err(Error::config("grid.policy", format!("expected auto or fixed, got '{other}'")))
            }
        };

        if let Some(dir) = self.string("output.dir") {
            c.output_dir = PathBuf::from(dir);
        }
        if let Some(seed) = self.parsed("output.seed", "an unsigned integer")? {
            c.seed = seed;
        }
        if let Some((v, line)) = self.take("output.steps") {
            let mut steps = v
                .split(',')
                .map(|s| {
                    Step::parse(s)
                        .ok_or_else(|| Error::config(format!("line {line} (output.steps)"), format!("unknown step '{}'", s.trim())))
                })
                .collect::<Result<Vec<_>>>()?;
            steps.sort();
            steps.dedup();
            c.steps = steps;
        }

        if let Some(k) = self.parsed("spectrum.count", "a count")? {
            c.spectrum_count = k;
        }
        if let Some((v, line)) = self.take("spectrum.window") {
            let parts = parse_list(&v).map_err(|m| Error::config(format!("line {line} (spectrum.window)"), m))?;
            match parts[..] {
                [lo, hi] if lo < hi => c.spectrum_window = Some((lo, hi)),
                _ => {
                    return Err(Error::config(
                        format!("line {line} (spectrum.window)"),
                        format!("expected 'lo, hi' with lo < hi, got '{v}'"),
                    ))
                }
            }
        }
        c.eps = self.parsed("single.eps", "a number")?;
        c.mode_index = self.parsed("single.k", "a mode index")?;
        c.agmon_energy = self.parsed("agmon.E", "a number")?;
        if let Some(n) = self.parsed("agmon.n", "a count")? {
            c.agmon_points = n;
        }
        if let Some(phi) = self.string("measure.phi") {
            c.phi = phi;
        }
        if let Some(t) = self.parsed("measure.tol", "a number")? {
            c.measure_tol = t;
        }
        if let Some(n) = self.parsed("husimi.nx", "a count")? {
            c.husimi_nx = n;
        }
        if let Some(n) = self.parsed("husimi.nxi", "a count")? {
            c.husimi_nxi = n;
        }
        Ok(c)
    }

    fn reject_unknown(&self) -> Result<()> {
        match self.entries.iter().next() {
            Some((key, (_, line))) => Err(Error::config(format!("line {line}"), format!("unknown key '{key}'"))),
            None => Ok(()),
        }
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[potential]")?;
        writeln!(f, "V = {}", self.potential_src)?;
        writeln!(f, "L = {:?}", self.length)?;
        if let Some(q) = &self.perturbation_src {
            writeln!(f, "q = {q}")?;
        }
        writeln!(f, "\n[schedule]\neps = {}", join(&self.schedule))?;
        writeln!(f, "\n[regime]\ntarget = {}", self.regime_src)?;
        writeln!(f, "\n[windows]")?;
        if let Some(u) = &self.window {
            writeln!(f, "U = {u}")?;
        }
        if let Some(b) = &self.boundary {
            writeln!(f, "boundary = {b}")?;
        }
        writeln!(f, "alpha = {:?}", self.alpha)?;
        writeln!(f, "\n[grid]")?;
        match self.grid {
            GridSpec::Auto { factor } => writeln!(f, "policy = auto\nfactor = {factor:?}")?,
            GridSpec::Fixed(n) => writeln!(f, "policy = fixed\nn = {n}")?,
        }
        if self.eps.is_some() || self.mode_index.is_some() {
            writeln!(f, "\n[single]")?;
        }
        if let Some(eps) = self.eps {
            writeln!(f, "eps = {eps:?}")?;
        }
        if let Some(k) = self.mode_index {
            writeln!(f, "k = {k}")?;
        }
        writeln!(f, "\n[spectrum]\ncount = {}", self.spectrum_count)?;
        if let Some((lo, hi)) = self.spectrum_window {
            writeln!(f, "window = {lo:?}, {hi:?}")?;
        }
        writeln!(f, "\n[agmon]\nn = {}", self.agmon_points)?;
        if let Some(e) = self.agmon_energy {
            writeln!(f, "E = {e:?}")?;
        }
        writeln!(f, "\n[measure]\nphi = {}\ntol = {:?}", self.phi, self.measure_tol)?;
        writeln!(f, "\n[husimi]\nnx = {}\nnxi = {}", self.husimi_nx, self.husimi_nxi)?;
        writeln!(f, "\n[output]\ndir = {}\nseed = {}", self.output_dir.display(), self.seed)?;
        let steps: Vec<&str> = self.steps.iter().map(Step::name).collect();
        writeln!(f, "steps = {}", steps.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[potential]\nV = (x-1)^2\nL = 2\n\n[schedule]\neps = 0.1, 0.05, 0.025, 0.0125\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.schedule, vec![0.1, 0.05, 0.025, 0.0125]);
        assert_eq!(c.steps.len(), 5);
        assert!(c.resolve().is_ok());
        assert_eq!(c.single_eps(), 0.0125);
    }

    #[test]
    fn round_trips_through_text() {
        let mut c = ExperimentConfig::parse(MINIMAL).unwrap();
        c.perturbation_src = Some("eps*sin(5*x)".into());
        c.window = Some("1.8, 2.0".into());
        let again = ExperimentConfig::parse(&c.to_text()).unwrap();
        assert_eq!(again.to_text(), c.to_text());
    }

    #[test]
    fn geometric_schedule_from_keys() {
        let c = ExperimentConfig::parse("[potential]\nV = (x-1)^2\nL = 2\n[schedule]\neps_max = 0.1\nratio = 0.5\ncount = 3\n").unwrap();
        assert_eq!(c.schedule, vec![0.1, 0.05, 0.025]);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let err = ExperimentConfig::parse("[potential]\nV = (x-1)^2\nL = two\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = ExperimentConfig::parse("[potential]\nV = (x-1)^2\nL = 2\nwat = 1\n").unwrap_err();
        assert!(err.to_string().contains("unknown key 'potential.wat'"), "{err}");
        let err = ExperimentConfig::parse("[potential]\nV = (x-1)^2\nL = 2\nL = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
    }

    #[test]
    fn schedule_must_decrease() {
        let c = ExperimentConfig::parse("[potential]\nV = (x-1)^2\nL = 2\n[schedule]\neps = 0.1, 0.2\n").unwrap();
        let err = c.resolve().err().unwrap();
        assert!(err.to_string().contains("strictly decreasing"), "{err}");
    }

    #[test]
    fn grid_rule_names_offending_eps() {
        let c = ExperimentConfig::parse(
            "[potential]\nV = (x-1)^2\nL = 2\n[schedule]\neps = 0.1, 0.05, 0.01\n[grid]\nn = 1000\n",
        )
        .unwrap();
        let err = c.resolve().err().unwrap().to_string();
        assert!(err.contains("eps = 0.01"), "{err}");
    }

    #[test]
    fn regimes_and_observations() {
        let p = Potential::parse("(x-1)^2", 2.0).unwrap();
        assert_eq!(parse_regime("ground", &p).unwrap(), RegimeTarget::Ground);
        assert_eq!(parse_regime("interior=0.25", &p).unwrap(), RegimeTarget::Interior(0.25));
        assert!(matches!(parse_regime("high", &p).unwrap(), RegimeTarget::High { target_energy } if target_energy == 50.0));
        assert!(parse_regime("interior=-1", &p).is_err());
        assert_eq!(parse_observation(Some("1.8,2"), None).unwrap(), Observation::Window(1.8, 2.0));
        assert_eq!(parse_observation(None, Some("L")).unwrap(), Observation::RightWall);
        assert!(parse_observation(Some("1,2"), Some("0")).is_err());
    }
}
