//! Seeded verification campaigns: every inequality of the N-function and
//! approximation theory bound to a numeric check with a machine-readable
//! report.
//!
//! Inequalities with explicit constants are asserted as stated, up to a
//! relative slack. Where only the existence of constants is known, checks
//! assert positivity, finiteness and stability of empirical envelopes under
//! doubling of the stitch points.

mod operator;
mod sampler;
mod scalar;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::ApproxChain;
use crate::config::{OneOrMany, RunConfig, TOOL_VERSION};
use crate::error::{Error, Result};

pub use sampler::SamplerConfig;

/// Registered checks and their anchors.
pub const CHECKS: &[(&str, &str)] = &[
    ("eq_E", "power-function-balance-bounds"),
    ("basic", "n-function-basic-bounds"),
    ("delta2", "balanced-delta2-bound"),
    ("young", "young-type-inequalities"),
    ("conj_balanced", "complementary-balance"),
    ("giusti", "shifted-average-equivalence"),
    ("hammer", "three-way-monotonicity-equivalence"),
    ("hammer_R1_Q0", "monotonicity-equivalence-at-zero"),
    ("UAm", "stitched-a-bounds"),
    ("cor_UAm", "stitched-potential-bounds"),
    ("ast", "mixed-growth-supremum"),
    ("UA_smallp", "subquadratic-stitch-a-bounds"),
    ("cor_UA", "subquadratic-stitch-potential-bounds"),
    ("eq12", "stitch-preserves-balance"),
    ("stitch", "c2-stitch-continuity"),
    ("pFA", "chain-rule-equivalence"),
    ("trans", "perturbed-potential-transfer"),
    ("growth", "stitched-growth-bound"),
];

pub fn anchor(name: &str) -> Option<&'static str> {
    CHECKS.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}

/// The `(p, delta, chain)` a check ran against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetInfo {
    pub p: f64,
    pub delta: f64,
    pub q: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
}

impl TargetInfo {
    pub fn of(chain: &ApproxChain) -> Self {
        Self {
            p: chain.p(),
            delta: chain.delta(),
            q: chain.exponents(),
            a: chain.thresholds(),
        }
    }
}

/// Outcome of one check.
///
/// Every assertion is an inequality `lhs <= rhs`; `worst_ratio` is the
/// largest `1 + (lhs - rhs) / |rhs|` seen and
/// `worst_violation = max(0, worst_ratio - 1)`. The check passes iff
/// `worst_violation <= slack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub anchor: String,
    pub target: Option<TargetInfo>,
    pub samples_run: usize,
    pub worst_ratio: f64,
    pub worst_violation: f64,
    pub slack: f64,
    pub worst_case: Option<String>,
    pub witness: BTreeMap<String, f64>,
    pub details: BTreeMap<String, f64>,
    pub passed: bool,
    pub skipped: bool,
    pub note: Option<String>,
    #[serde(skip)]
    pub elapsed_ms: f64,
}

impl CheckReport {
    /// `"<name> <anchor> <worst> <PASS|FAIL>"`.
    pub fn summary_line(&self) -> String {
        let verdict = if self.skipped {
            "SKIP"
        } else if self.passed {
            "PASS"
        } else {
            "FAIL"
        };
        format!(
            "{} {} {:.6e} {}",
            self.check_name, self.anchor, self.worst_violation, verdict
        )
    }

    fn skipped(name: &str, target: Option<TargetInfo>, reason: String) -> Self {
        Self {
            check_name: name.to_string(),
            anchor: anchor(name).unwrap_or("chain-construction").to_string(),
            target,
            samples_run: 0,
            worst_ratio: 0.0,
            worst_violation: 0.0,
            slack: 0.0,
            worst_case: None,
            witness: BTreeMap::new(),
            details: BTreeMap::new(),
            passed: true,
            skipped: true,
            note: Some(reason),
            elapsed_ms: 0.0,
        }
    }

    fn failed(name: &str, target: Option<TargetInfo>, reason: String) -> Self {
        Self {
            passed: false,
            skipped: false,
            worst_ratio: f64::INFINITY,
            worst_violation: f64::INFINITY,
            ..Self::skipped(name, target, reason)
        }
    }
}

/// Running worst case over the inequalities of one check.
#[derive(Debug, Clone)]
pub(crate) struct Tally {
    worst_ratio: f64,
    worst_case: Option<String>,
    witness: BTreeMap<String, f64>,
    pub samples: usize,
    pub details: BTreeMap<String, f64>,
    note: Option<String>,
}

/// `1 + (lhs - rhs) / |rhs|`, with non-finite inputs counted as failures.
pub(crate) fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs.is_nan() || rhs.is_nan() {
        return f64::INFINITY;
    }
    if rhs == 0.0 {
        return if lhs <= 0.0 { 0.0 } else { f64::INFINITY };
    }
    if rhs.is_infinite() {
        return if rhs > 0.0 && lhs.is_finite() {
            0.0
        } else {
            f64::INFINITY
        };
    }
    1.0 + (lhs - rhs) / rhs.abs()
}

impl Tally {
    pub fn new() -> Self {
        Self {
            worst_ratio: f64::NEG_INFINITY,
            worst_case: None,
            witness: BTreeMap::new(),
            samples: 0,
            details: BTreeMap::new(),
            note: None,
        }
    }

    /// Records the assertion `lhs <= rhs`.
    pub fn le(&mut self, case: &str, lhs: f64, rhs: f64, witness: &[(&str, f64)]) {
        let r = ratio(lhs, rhs);
        if r > self.worst_ratio || (r.is_infinite() && self.worst_ratio.is_infinite() && self.worst_case.is_none()) {
            self.worst_ratio = r;
            self.worst_case = Some(case.to_string());
            self.witness = witness.iter().map(|(k, v)| (k.to_string(), *v)).collect();
            self.witness.insert("lhs".into(), lhs);
            self.witness.insert("rhs".into(), rhs);
        }
    }

    /// Records an assertion that failed outright.
    pub fn fail(&mut self, case: &str, witness: &[(&str, f64)]) {
        if self.worst_ratio < f64::INFINITY {
            self.worst_ratio = f64::INFINITY;
            self.worst_case = Some(case.to_string());
            self.witness = witness.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        }
    }

    pub fn detail(&mut self, key: impl Into<String>, value: f64) {
        self.details.insert(key.into(), value);
    }
    fn finish(self, name: &str, target: Option<TargetInfo>, slack: f64) -> CheckReport {
        let worst_ratio = if self.worst_ratio == f64::NEG_INFINITY {
            0.0
        } else {
            self.worst_ratio
        };
        let worst_violation = (worst_ratio - 1.0).max(0.0);
        CheckReport {
            check_name: name.to_string(),
            anchor: anchor(name).unwrap_or_default().to_string(),
            target,
            samples_run: self.samples,
            worst_ratio,
            worst_violation,
            slack,
            worst_case: self.worst_case,
            witness: self.witness,
            details: self.details,
            passed: worst_violation <= slack,
            skipped: false,
            note: self.note,
            elapsed_ms: 0.0,
        }
    }
}

/// Inputs shared by all checks.
pub(crate) struct Ctx<'a> {
    pub chain: &'a ApproxChain,
    pub sampler: &'a SamplerConfig,
    pub slack: f64,
}

fn inapplicable(check: &str, reason: &str) -> Error {
    Error::Inapplicable {
        check: check.to_string(),
        reason: reason.to_string(),
    }
}

pub(crate) fn require_stages(check: &str, chain: &ApproxChain) -> Result<()> {
    if chain.is_empty() {
        return Err(inapplicable(check, "needs a chain with at least one stage"));
    }
    Ok(())
}

pub(crate) fn require_superquadratic(check: &str, chain: &ApproxChain) -> Result<()> {
    require_stages(check, chain)?;
    if chain.p() <= 2.0 {
        return Err(inapplicable(check, "stated for p > 2"));
    }
    if !(chain.delta() > 0.0) {
        return Err(inapplicable(check, "stated for delta > 0"));
    }
    Ok(())
}

pub(crate) fn require_subquadratic(check: &str, chain: &ApproxChain) -> Result<()> {
    require_stages(check, chain)?;
    if chain.p() > 2.0 {
        return Err(inapplicable(check, "stated for p <= 2"));
    }
    if !(chain.delta() > 0.0) {
        return Err(inapplicable(check, "stated for delta > 0"));
    }
    Ok(())
}

/// Runs one registered check against `chain` (whose base is the N-function
/// under test). Inapplicable combinations return [`Error::Inapplicable`].
pub fn run_check(name: &str, chain: &ApproxChain, sampler: &SamplerConfig, slack: f64) -> Result<CheckReport> {
    if anchor(name).is_none() {
        return Err(Error::UnknownCheck(name.to_string()));
    }
    if !(slack >= 0.0) {
        return Err(Error::Parameter(format!("slack must be >= 0, got {slack}")));
    }
    sampler.validate()?;
    let ctx = Ctx { chain, sampler, slack };
    let start = Instant::now();
    let tally = match name {
        "eq_E" => scalar::eq_e(&ctx),
        "basic" => scalar::basic(&ctx),
        "delta2" => scalar::delta2(&ctx),
        "young" => scalar::young(&ctx),
        "conj_balanced" => scalar::conj_balanced(&ctx),
        "UAm" => scalar::uam(&ctx),
        "cor_UAm" => scalar::cor_uam(&ctx),
        "ast" => scalar::ast(&ctx),
        "UA_smallp" => scalar::ua_smallp(&ctx),
        "cor_UA" => scalar::cor_ua(&ctx),
        "eq12" => scalar::eq12(&ctx),
        "stitch" => scalar::stitch(&ctx),
        "trans" => scalar::trans(&ctx),
        "giusti" => operator::giusti(&ctx),
        "hammer" => operator::hammer(&ctx),
        "hammer_R1_Q0" => operator::hammer_r1_q0(&ctx),
        "pFA" => operator::pfa(&ctx),
        "growth" => operator::growth(&ctx),
        _ => unreachable!("registered check without implementation"),
    }?;
    let mut report = tally.finish(name, Some(TargetInfo::of(chain)), slack);
    report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Reports of a verification campaign.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub reports: Vec<CheckReport>,
    pub config_error: bool,
}

impl SuiteOutcome {
    /// 0 when every check passed, 1 on a check failure, 2 when a chain could
    /// not be built from the configuration.
    pub fn exit_code(&self) -> i32 {
        if self.config_error {
            2
        } else if self.reports.iter().any(|r| !r.passed) {
            1
        } else {
            0
        }
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.reports.iter().map(CheckReport::summary_line).collect()
    }

    /// Report document: tool version, configuration echo and the reports.
    /// Timings are excluded so that reruns are byte-identical.
    pub fn document(&self, config: &RunConfig, sampler: &SamplerConfig) -> serde_json::Value {
        serde_json::json!({
            "tool_version": TOOL_VERSION,
            "config": config,
            "sampler": sampler,
            "reports": self.reports,
        })
    }

    pub fn timings(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.reports
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "check_name": r.check_name,
                        "target": r.target,
                        "elapsed_ms": r.elapsed_ms,
                    })
                })
                .collect(),
        )
    }
}

/// Default campaign: `p in {1.5, 2, 3, 5, 7}`, `delta in {0.1, 1}`.
pub fn default_suite_config() -> RunConfig {
    RunConfig {
        p: Some(OneOrMany::Many(vec![1.5, 2.0, 3.0, 5.0, 7.0])),
        delta: Some(OneOrMany::Many(vec![0.1, 1.0])),
        ..RunConfig::default()
    }
}

/// Runs the configured checks (all registered checks when `checks` is
/// absent) for every configured `(p, delta)`. Missing `p` or `delta` fall
/// back to the default campaign values.
pub fn run_suite(config: &RunConfig, sampler: &SamplerConfig) -> Result<SuiteOutcome> {
    let defaults = default_suite_config();
    let ps = if config.p.is_some() {
        config.p_values()
    } else {
        defaults.p_values()
    };
    let deltas = if config.delta.is_some() {
        config.delta_values()
    } else {
        defaults.delta_values()
    };
    let names: Vec<String> = match &config.checks {
        Some(list) => list.clone(),
        None => CHECKS.iter().map(|(n, _)| n.to_string()).collect(),
    };
    for n in &names {
        if anchor(n).is_none() {
            return Err(Error::UnknownCheck(n.clone()));
        }
    }
    let slack = config.slack();

    let mut jobs = Vec::new();
    let mut reports_by_target: Vec<Vec<CheckReport>> = Vec::new();
    let mut config_error = false;
    for &p in &ps {
        for &delta in &deltas {
            match config.build_chain(p, delta) {
                Ok(chain) => {
                    let slot = reports_by_target.len();
                    reports_by_target.push(Vec::new());
                    for n in &names {
                        jobs.push((slot, chain.clone(), n.clone()));
                    }
                }
                Err(e) => {
                    config_error = true;
                    let target = TargetInfo {
                        p,
                        delta,
                        q: Vec::new(),
                        a: Vec::new(),
                    };
                    reports_by_target.push(vec![CheckReport::failed("chain_build", Some(target), e.to_string())]);
                }
            }
        }
    }

    let results: Vec<(usize, CheckReport)> = jobs
        .par_iter()
        .map(|(slot, chain, name)| {
            let report = match run_check(name, chain, sampler, slack) {
                Ok(r) => r,
                Err(Error::Inapplicable { reason, .. }) => {
                    CheckReport::skipped(name, Some(TargetInfo::of(chain)), reason)
                }
                Err(e) => CheckReport::failed(name, Some(TargetInfo::of(chain)), e.to_string()),
            };
            (*slot, report)
        })
        .collect();
    for (slot, report) in results {
        reports_by_target[slot].push(report);
    }
    Ok(SuiteOutcome {
        reports: reports_by_target.into_iter().flatten().collect(),
        config_error,
    })
}

/// Reads a configuration file and runs its campaign; `seed` overrides the
/// configured seed.
pub fn run_suite_file(path: &Path, seed: Option<u64>) -> Result<(RunConfig, SamplerConfig, SuiteOutcome)> {
    let config = RunConfig::from_file(path)?;
    let sampler = SamplerConfig::from_run_config(&config, seed)?;
    let outcome = run_suite(&config, &sampler)?;
    Ok((config, sampler, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{chain_build, special_chain};

    fn small() -> SamplerConfig {
        SamplerConfig::new(42, 2000)
    }

    #[test]
    fn ratio_semantics() {
        assert_eq!(ratio(1.0, 2.0), 0.5);
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert_eq!(ratio(1.0, 0.0), f64::INFINITY);
        assert_eq!(ratio(f64::NAN, 1.0), f64::INFINITY);
        assert!((ratio(-1.0, -2.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn unknown_check() {
        let c = ApproxChain::identity(3.0, 1.0).unwrap();
        assert!(matches!(
            run_check("nope", &c, &small(), 0.0),
            Err(Error::UnknownCheck(_))
        ));
    }

    #[test]
    fn eq_e_example() {
        let c = ApproxChain::identity(3.0, 1.0).unwrap();
        let r = run_check("eq_E", &c, &small(), 1e-12).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.samples_run, 10_000);
    }

    #[test]
    fn r1_at_zero_example() {
        let c = special_chain(5.0, 1.0, 2.0, 1.0).unwrap();
        let r = run_check("hammer_R1_Q0", &c, &small(), 1e-12).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn subquadratic_example() {
        let c = chain_build(1.5, 1.0, &[2.0], &[4.0]).unwrap();
        let r = run_check("UA_smallp", &c, &small(), 1e-10).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(matches!(
            run_check("UAm", &c, &small(), 1e-10),
            Err(Error::Inapplicable { .. })
        ));
    }

    #[test]
    fn empty_and_broken_suites() {
        let cfg = RunConfig {
            checks: Some(Vec::new()),
            ..default_suite_config()
        };
        let out = run_suite(&cfg, &small()).unwrap();
        assert!(out.reports.is_empty());
        assert_eq!(out.exit_code(), 0);

        let cfg = RunConfig::from_json(
            r#"{"p": 5, "delta": 1, "chain": {"q": [3, 2], "A": [0.5, 2]}, "checks": ["stitch"]}"#,
        )
        .unwrap();
        let out = run_suite(&cfg, &small()).unwrap();
        assert_eq!(out.exit_code(), 2);
        assert_eq!(out.reports.len(), 1);
        assert!(!out.reports[0].passed);
    }
}
