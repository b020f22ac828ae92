//! The verification campaign end to end at a reduced sample count.

use pdlab::config::RunConfig;
use pdlab::verify::{run_suite, SamplerConfig, CHECKS};

#[test]
fn explicit_constant_checks_pass_on_default_targets() {
    let cfg = RunConfig::from_json(
        r#"{"p": [1.5, 2, 3, 5, 7], "delta": [0.1, 1],
            "checks": ["eq_E", "basic", "delta2", "young", "UAm", "cor_UAm", "ast",
                       "UA_smallp", "cor_UA", "eq12", "stitch", "trans", "growth", "hammer_R1_Q0"]}"#,
    )
    .unwrap();
    let out = run_suite(&cfg, &SamplerConfig::new(7, 2000)).unwrap();
    let failed: Vec<String> = out
        .reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.summary_line())
        .collect();
    assert!(failed.is_empty(), "{failed:#?}");
    assert_eq!(out.exit_code(), 0);
}

#[test]
fn envelope_checks_report_positive_bounded_envelopes() {
    let cfg = RunConfig::from_json(r#"{"p": [3, 5], "delta": 1, "checks": ["giusti", "pFA"]}"#).unwrap();
    let out = run_suite(&cfg, &SamplerConfig::new(3, 2000)).unwrap();
    for r in &out.reports {
        assert!(r.passed, "{}", r.summary_line());
        assert!(r.details["max_envelope_shift"].is_finite());
    }
}

#[test]
fn reports_are_deterministic_and_anchored() {
    let cfg = RunConfig::from_json(r#"{"p": 3, "delta": 1, "checks": ["hammer_R1_Q0", "young"]}"#).unwrap();
    let s = SamplerConfig::new(42, 500);
    let a = run_suite(&cfg, &s).unwrap().document(&cfg, &s);
    let b = run_suite(&cfg, &s).unwrap().document(&cfg, &s);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    for r in a["reports"].as_array().unwrap() {
        let name = r["check_name"].as_str().unwrap();
        let anchor = CHECKS.iter().find(|(n, _)| *n == name).unwrap().1;
        assert_eq!(r["anchor"], anchor);
    }
}
