//! (A,q)-approximations and multiple approximation chains of `omega_{p,delta}`.
//!
//! Level `n` of a chain agrees with level `n-1` below the stitch point `A_n`
//! and continues above it by the branch `alpha2 t^q + alpha1 t + alpha0`,
//! matched to second order at `A_n`. Level 0 is the base function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfunc::{PdNFunction, ScalarNFunction};
use crate::quad::log_grid;

/// Largest admissible drop between consecutive exponents of a chain. Beyond
/// it the stitched operators lose the integrability needed to pass to the
/// limit `A_n -> inf` one level at a time.
pub const MAX_EXPONENT_GAP: f64 = 7.0 / 3.0;

/// One stitched branch `alpha2 t^q + alpha1 t + alpha0` on `[A, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageCoefficients {
    pub q: f64,
    #[serde(rename = "A")]
    pub threshold: f64,
    pub alpha2: f64,
    pub alpha1: f64,
    pub alpha0: f64,
}

impl StageCoefficients {
    pub fn value(&self, t: f64) -> f64 {
        self.alpha2 * t.powf(self.q) + self.alpha1 * t + self.alpha0
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.q * self.alpha2 * t.powf(self.q - 1.0) + self.alpha1
    }

    pub fn d2(&self, t: f64) -> f64 {
        self.q * (self.q - 1.0) * self.alpha2 * t.powf(self.q - 2.0)
    }
}

/// Coefficients of the `(A, q)` branch matching `(value, d1, d2)` at `A`.
pub fn aq_coefficients(value_a: f64, d1_a: f64, d2_a: f64, a: f64, q: f64) -> Result<StageCoefficients> {
    if !(a >= 1.0) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "stitch point A must be finite and >= 1, got {a}"
        )));
    }
    if !(q >= 2.0) || !q.is_finite() {
        return Err(Error::Domain(format!(
            "stage exponent q must be finite and >= 2, got {q}"
        )));
    }
    if !(d2_a > 0.0) || !d2_a.is_finite() {
        return Err(Error::Domain(format!(
            "second derivative at A must be positive, got {d2_a}"
        )));
    }
    Ok(StageCoefficients {
        q,
        threshold: a,
        alpha2: d2_a / (q * (q - 1.0) * a.powf(q - 2.0)),
        alpha1: d1_a - d2_a * a / (q - 1.0),
        alpha0: value_a - d1_a * a + d2_a * a * a / q,
    })
}

const HAT_A_LO: f64 = 1e-8;
const HAT_A_HI: f64 = 1e12;
const HAT_A_SAMPLES: usize = 4001;

/// Smallest `A` beyond which `d1(t) / (d2(t) t) <= 1 / (q_next - 1)` holds,
/// i.e. beyond which an `(A, q_next)` branch keeps `a = d1 / t`
/// non-decreasing. Zero if the condition holds on the whole search range.
pub fn hat_a<D1, D2>(d1: D1, d2: D2, q_next: f64) -> Result<f64>
where
    D1: Fn(f64) -> f64,
    D2: Fn(f64) -> f64,
{
    if !(q_next >= 2.0) {
        return Err(Error::Domain(format!("q_next must be >= 2, got {q_next}")));
    }
    let bound = 1.0 / (q_next - 1.0);
    // NaN ratios count as violations.
    let holds = |t: f64| d1(t) / (d2(t) * t) <= bound;
    let grid = log_grid(HAT_A_LO, HAT_A_HI, HAT_A_SAMPLES);
    let last_bad = match grid.iter().rposition(|&t| !holds(t)) {
        None => return Ok(0.0),
        Some(i) => i,
    };
    if last_bad + 1 == grid.len() {
        return Err(Error::Search(format!(
            "monotonicity condition for q = {q_next} still fails at A = {HAT_A_HI:e}"
        )));
    }
    let (mut lo, mut hi) = (grid[last_bad], grid[last_bad + 1]);
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Value and derivatives of one chain level at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainValues {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub a: f64,
}

/// A threshold raised by [`special_chain`] to satisfy the constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBump {
    pub stage: usize,
    pub requested: f64,
    pub used: f64,
}

/// Multiple approximation chain of `omega_{p,delta}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxChain {
    base: PdNFunction,
    stages: Vec<StageCoefficients>,
    hat_a: Vec<f64>,
    bumps: Vec<ThresholdBump>,
}

fn invalid(index: usize, reason: String) -> Error {
    Error::Validation { index, reason }
}

impl ApproxChain {
    /// The chain with no stages: every level is the base function.
    pub fn identity(p: f64, delta: f64) -> Result<Self> {
        Ok(Self {
            base: PdNFunction::new(p, delta)?,
            stages: Vec::new(),
            hat_a: Vec::new(),
            bumps: Vec::new(),
        })
    }

    pub fn base(&self) -> PdNFunction {
        self.base
    }

    pub fn p(&self) -> f64 {
        self.base.p()
    }

    pub fn delta(&self) -> f64 {
        self.base.delta()
    }

    /// Number of stitched stages `N`.
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stages(&self) -> &[StageCoefficients] {
        &self.stages
    }

    /// Computed thresholds `hat A_n`, one per stage.
    pub fn hat_a(&self) -> &[f64] {
        &self.hat_a
    }

    pub fn bumps(&self) -> &[ThresholdBump] {
        &self.bumps
    }

    /// Growth exponent of level `n`: `q_0 = p`.
    pub fn q(&self, n: usize) -> f64 {
        if n == 0 {
            self.p()
        } else {
            self.stages[n - 1].q
        }
    }

    /// Stitch point `A_n` for `n >= 1`.
    pub fn threshold(&self, n: usize) -> f64 {
        self.stages[n - 1].threshold
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.threshold).collect()
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.q).collect()
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n > self.stages.len() {
            return Err(Error::Index {
                requested: n,
                available: self.stages.len(),
            });
        }
        Ok(())
    }

    /// Index of the active branch of level `n` at `t`: 0 for the base,
    /// `k` for stage `k`. Branches own half-open intervals `[A_k, A_{k+1})`.
    fn branch(&self, n: usize, t: f64) -> usize {
        self.stages[..n].iter().take_while(|s| t >= s.threshold).count()
    }

    fn values_unchecked(&self, n: usize, t: f64) -> ChainValues {
        match self.branch(n, t) {
            0 => ChainValues {
                value: self.base.value(t),
                d1: self.base.d1(t),
                d2: self.base.d2(t),
                a: self.base.a(t),
            },
            k => {
                let s = &self.stages[k - 1];
                let d1 = s.d1(t);
                ChainValues {
                    value: s.value(t),
                    d1,
                    d2: s.d2(t),
                    a: d1 / t,
                }
            }
        }
    }

    /// `(omega^n, (omega^n)', (omega^n)'', a^n)` at `t`.
    pub fn eval(&self, n: usize, t: f64) -> Result<ChainValues> {
        self.check_level(n)?;
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("chain argument must be >= 0, got {t}")));
        }
        Ok(self.values_unchecked(n, t))
    }

    /// Level `n` as a scalar N-function.
    pub fn level(&self, n: usize) -> Result<ChainLevel<'_>> {
        self.check_level(n)?;
        Ok(ChainLevel { chain: self, n })
    }

    /// The top level `N`.
    pub fn top(&self) -> ChainLevel<'_> {
        ChainLevel {
            chain: self,
            n: self.stages.len(),
        }
    }

    /// Relative mismatch `|left - right| / (1 + |left|)` of value, d1, d2
    /// between the two branches meeting at each `A_n`.
    pub fn stitch_mismatch(&self) -> Vec<[f64; 3]> {
        (1..=self.stages.len())
            .map(|n| {
                let a = self.threshold(n);
                let left = self.values_unchecked(n - 1, a);
                let s = &self.stages[n - 1];
                let rel = |l: f64, r: f64| (l - r).abs() / (1.0 + l.abs());
                [
                    rel(left.value, s.value(a)),
                    rel(left.d1, s.d1(a)),
                    rel(left.d2, s.d2(a)),
                ]
            })
            .collect()
    }

    /// The same chain rebuilt with every threshold multiplied by `factor`.
    pub fn with_scaled_thresholds(&self, factor: f64) -> Result<Self> {
        let a: Vec<f64> = self.thresholds().iter().map(|x| x * factor).collect();
        chain_build(self.p(), self.delta(), &self.exponents(), &a)
    }

    pub fn to_document(&self) -> ChainDocument {
        ChainDocument {
            p: self.p(),
            delta: self.delta(),
            stages: self.stages.clone(),
        }
    }

    /// Rebuilds a chain from its document, re-running validation and
    /// checking the stored coefficients against the recomputed ones.
    pub fn from_document(doc: &ChainDocument) -> Result<Self> {
        let q: Vec<f64> = doc.stages.iter().map(|s| s.q).collect();
        let a: Vec<f64> = doc.stages.iter().map(|s| s.threshold).collect();
        let chain = chain_build(doc.p, doc.delta, &q, &a)?;
        for (i, (stored, fresh)) in doc.stages.iter().zip(chain.stages.iter()).enumerate() {
            let pairs = [
                (stored.alpha2, fresh.alpha2),
                (stored.alpha1, fresh.alpha1),
                (stored.alpha0, fresh.alpha0),
            ];
            if pairs.iter().any(|(x, y)| (x - y).abs() > 1e-9 * (1.0 + y.abs())) {
                return Err(Error::Parse(format!(
                    "stored coefficients of stage {} disagree with the recomputed ones",
                    i + 1
                )));
            }
        }
        Ok(chain)
    }
}

/// Serialized form of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDocument {
    pub p: f64,
    pub delta: f64,
    pub stages: Vec<StageCoefficients>,
}

impl Serialize for ApproxChain {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_document().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ApproxChain {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = ChainDocument::deserialize(deserializer)?;
        ApproxChain::from_document(&doc).map_err(serde::de::Error::custom)
    }
}

/// Borrowed view of one chain level.
#[derive(Debug, Clone, Copy)]
pub struct ChainLevel<'a> {
    chain: &'a ApproxChain,
    n: usize,
}

impl ChainLevel<'_> {
    pub fn index(&self) -> usize {
        self.n
    }

    pub fn eval(&self, t: f64) -> ChainValues {
        self.chain.values_unchecked(self.n, t)
    }
}

impl ScalarNFunction for ChainLevel<'_> {
    fn value(&self, t: f64) -> f64 {
        self.eval(t).value
    }
    fn d1(&self, t: f64) -> f64 {
        self.eval(t).d1
    }
    fn d2(&self, t: f64) -> f64 {
        self.eval(t).d2
    }
    fn a(&self, t: f64) -> f64 {
        self.eval(t).a
    }
    fn name(&self) -> String {
        format!("omega^{} of {}", self.n, self.chain.base.name())
    }
}

fn check_exponents(p: f64, q: &[f64]) -> Result<()> {
    if p <= 2.0 {
        if q.len() != 1 || q[0] != 2.0 {
            return Err(invalid(
                1,
                format!("for p = {p} <= 2 the chain must be a single stage with q = 2, got {q:?}"),
            ));
        }
        return Ok(());
    }
    let mut prev = p;
    for (i, &qn) in q.iter().enumerate() {
        if !(qn >= 2.0) {
            return Err(invalid(i + 1, format!("exponent q = {qn} is below 2")));
        }
        if !(qn < prev) {
            return Err(invalid(
                i + 1,
                format!("exponents must decrease strictly from p: q = {qn} follows {prev}"),
            ));
        }
        if !(prev - qn < MAX_EXPONENT_GAP) {
            return Err(invalid(
                i + 1,
                format!("exponent gap {prev} - {qn} = {} is not below 7/3", prev - qn),
            ));
        }
        prev = qn;
    }
    Ok(())
}

/// Threshold `hat A_n` for appending a stage with exponent `q` to `chain`.
fn next_hat_a(chain: &ApproxChain, q: f64) -> Result<f64> {
    if chain.p() <= 2.0 {
        // Below quadratic growth the stitched a is non-increasing by design.
        return Ok(0.0);
    }
    let level = chain.top();
    hat_a(|t| level.d1(t), |t| level.d2(t), q)
}

fn push_stage(chain: &mut ApproxChain, q: f64, a: f64, hat: f64) -> Result<()> {
    let v = chain.top().eval(a);
    let stage = aq_coefficients(v.value, v.d1, v.d2, a, q)?;
    chain.stages.push(stage);
    chain.hat_a.push(hat);
    Ok(())
}

/// Builds and validates a chain with exponents `q` and stitch points `a`.
pub fn chain_build(p: f64, delta: f64, q: &[f64], a: &[f64]) -> Result<ApproxChain> {
    let mut chain = ApproxChain::identity(p, delta)?;
    if q.len() != a.len() {
        return Err(invalid(0, format!("{} exponents but {} thresholds", q.len(), a.len())));
    }
    if q.is_empty() {
        return Err(invalid(0, "a chain needs at least one stage".into()));
    }
    check_exponents(p, q)?;
    for (i, (&qn, &an)) in q.iter().zip(a.iter()).enumerate() {
        let index = i + 1;
        if !an.is_finite() {
            return Err(invalid(index, format!("threshold A = {an} is not finite")));
        }
        if i > 0 && !(an >= a[i - 1] + 1.0) {
            return Err(invalid(
                index,
                format!("thresholds must satisfy A_(n+1) >= A_n + 1: {an} after {}", a[i - 1]),
            ));
        }
        let hat = next_hat_a(&chain, qn)?;
        let floor = delta.max(hat).max(1.0);
        if !(an >= floor) {
            return Err(invalid(
                index,
                format!("threshold A = {an} is below max(delta, hat A, 1) = max({delta}, {hat}, 1)"),
            ));
        }
        push_stage(&mut chain, qn, an, hat)?;
    }
    Ok(chain)
}

/// Number of stages and exponents of the special chain for `p > 2`:
/// `N = ceil((p-2)/2)`, `q_n = p - 2n` for `n < N`, `q_N = 2`.
pub fn special_exponents(p: f64) -> Result<Vec<f64>> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(Error::Domain(format!("special chains need p > 2, got {p}")));
    }
    let n = ((p - 2.0) / 2.0).ceil() as usize;
    Ok((1..=n).map(|k| if k < n { p - 2.0 * k as f64 } else { 2.0 }).collect())
}

/// Smallest admissible first threshold `max(delta, hat A_1, 1)` of the
/// special chain for `p > 2`; `max(delta, 1)` for `p <= 2`.
pub fn minimal_first_threshold(p: f64, delta: f64) -> Result<f64> {
    let base = ApproxChain::identity(p, delta)?;
    if p <= 2.0 {
        return Ok(delta.max(1.0));
    }
    let q1 = special_exponents(p)?[0];
    Ok(delta.max(next_hat_a(&base, q1)?).max(1.0))
}

/// Special chain with `A_n = A1 + (n-1) spacing`. Later thresholds that fall
/// below their constraints are raised and recorded in [`ApproxChain::bumps`];
/// an invalid `A1` is an error.
pub fn special_chain(p: f64, delta: f64, a1: f64, spacing: f64) -> Result<ApproxChain> {
    let q = special_exponents(p)?;
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("special chains need delta > 0, got {delta}")));
    }
    if !(spacing >= 1.0) || !spacing.is_finite() {
        return Err(Error::Domain(format!("threshold spacing must be >= 1, got {spacing}")));
    }
    let mut chain = ApproxChain::identity(p, delta)?;
    let mut prev_a = f64::NEG_INFINITY;
    for (i, &qn) in q.iter().enumerate() {
        let index = i + 1;
        let requested = a1 + i as f64 * spacing;
        let hat = next_hat_a(&chain, qn)?;
        let floor = delta.max(hat).max(1.0).max(prev_a + 1.0);
        let used = if i == 0 {
            if !(requested >= floor) || !requested.is_finite() {
                return Err(invalid(
                    index,
                    format!("threshold A = {requested} is below max(delta, hat A, 1) = max({delta}, {hat}, 1)"),
                ));
            }
            requested
        } else if requested < floor {
            chain.bumps.push(ThresholdBump {
                stage: index,
                requested,
                used: floor,
            });
            floor
        } else {
            requested
        };
        push_stage(&mut chain, qn, used, hat)?;
        prev_a = used;
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn aq_coefficient_example() {
        let s = aq_coefficients(14.0 / 3.0, 6.0, 5.0, 2.0, 2.0).unwrap();
        assert_relative_eq!(s.alpha2, 2.5, max_relative = 1e-15);
        assert_relative_eq!(s.alpha1, -4.0, max_relative = 1e-15);
        assert_relative_eq!(s.alpha0, 8.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(s.value(2.0), 14.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(s.d1(2.0), 6.0, max_relative = 1e-14);
        assert_relative_eq!(s.d2(2.0), 5.0, max_relative = 1e-14);
    }

    #[test]
    fn aq_linear_term_cancels() {
        let s = aq_coefficients(1.0, 6.0, 3.0, 2.0, 2.0).unwrap();
        assert_eq!(s.alpha1, 0.0);
        let s = aq_coefficients(1.0, 2.0, 7.0, 3.0, 4.5).unwrap();
        assert_relative_eq!(s.d2(3.0), 7.0, max_relative = 1e-14);
    }

    #[test]
    fn aq_rejects_bad_parameters() {
        assert!(aq_coefficients(1.0, 1.0, 1.0, 0.5, 2.0).is_err());
        assert!(aq_coefficients(1.0, 1.0, 1.0, 2.0, 1.5).is_err());
        assert!(aq_coefficients(1.0, 1.0, 0.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn hat_a_examples() {
        let w31 = PdNFunction::new(3.0, 1.0).unwrap();
        assert_eq!(hat_a(|t| w31.d1(t), |t| w31.d2(t), 2.0).unwrap(), 0.0);
        let w51 = PdNFunction::new(5.0, 1.0).unwrap();
        let h = hat_a(|t| w51.d1(t), |t| w51.d2(t), 3.0).unwrap();
        assert!((h - 0.5).abs() <= 1e-9, "{h}");
        let w40 = PdNFunction::new(4.0, 0.0).unwrap();
        assert_eq!(hat_a(|t| w40.d1(t), |t| w40.d2(t), 3.0).unwrap(), 0.0);
        // a linear d1 never satisfies the condition for q > 2
        assert!(matches!(hat_a(|t| t, |_| 1.0, 3.0), Err(Error::Search(_))));
    }

    #[test]
    fn chain_examples() {
        let c = chain_build(5.0, 1.0, &[3.0, 2.0], &[2.0, 3.0]).unwrap();
        assert_eq!(c.len(), 2);
        assert_relative_eq!(c.eval(2, 1.0).unwrap().a, 8.0, max_relative = 1e-15);
        assert!(matches!(
            chain_build(3.0, 1.0, &[2.0], &[0.5]),
            Err(Error::Validation { index: 1, .. })
        ));
        let c = chain_build(7.0, 0.1, &[5.0, 3.0, 2.0], &[2.0, 3.5, 5.0]).unwrap();
        assert!(c.stitch_mismatch().iter().flatten().all(|m| *m <= 1e-9));
        assert!(matches!(
            c.eval(4, 1.0),
            Err(Error::Index {
                requested: 4,
                available: 3
            })
        ));
    }

    #[test]
    fn chain_constraint_violations() {
        let bad = |q: &[f64], a: &[f64]| chain_build(5.0, 1.0, q, a).unwrap_err();
        assert!(matches!(
            bad(&[3.0, 2.0], &[2.0, 2.5]),
            Error::Validation { index: 2, .. }
        ));
        assert!(matches!(
            bad(&[4.0, 4.5], &[2.0, 3.0]),
            Error::Validation { index: 2, .. }
        ));
        assert!(matches!(bad(&[2.0], &[2.0]), Error::Validation { index: 1, .. }));
        assert!(matches!(
            bad(&[3.0, 1.5], &[2.0, 3.0]),
            Error::Validation { index: 2, .. }
        ));
        assert!(matches!(
            chain_build(5.0, 4.0, &[3.0, 2.0], &[2.0, 5.0]),
            Err(Error::Validation { index: 1, .. })
        ));
        assert!(matches!(
            chain_build(1.5, 1.0, &[2.0, 2.0], &[1.0, 2.0]),
            Err(Error::Validation { index: 1, .. })
        ));
        assert!(chain_build(1.5, 1.0, &[2.0], &[4.0]).is_ok());
    }

    #[test]
    fn stage_one_branch() {
        let c = chain_build(3.0, 1.0, &[2.0], &[2.0]).unwrap();
        for t in [2.0, 3.0, 10.0, 1e4] {
            assert_relative_eq!(c.eval(1, t).unwrap().a, 5.0 - 4.0 / t, max_relative = 1e-13);
        }
        assert_relative_eq!(c.eval(1, 2.0).unwrap().a, 3.0, max_relative = 1e-15);
        assert_eq!(c.eval(1, 1e3).unwrap().d2, 5.0);
    }

    #[test]
    fn identity_region() {
        let c = special_chain(7.0, 0.1, 2.0, 1.0).unwrap();
        let base = c.base();
        for t in [0.0, 1e-3, 0.5, 1.999] {
            let v = c.eval(3, t).unwrap();
            assert_eq!(v.value, base.value(t));
            assert_eq!(v.d1, base.d1(t));
            assert_eq!(v.d2, base.d2(t));
            assert_eq!(v.a, base.a(t));
        }
    }

    #[test]
    fn special_exponent_examples() {
        assert_eq!(special_exponents(3.0).unwrap(), vec![2.0]);
        assert_eq!(special_exponents(5.0).unwrap(), vec![3.0, 2.0]);
        assert_eq!(special_exponents(8.0).unwrap(), vec![6.0, 4.0, 2.0]);
        assert_eq!(special_exponents(4.5).unwrap(), vec![2.5, 2.0]);
    }

    #[test]
    fn special_chain_bumps_and_rejects() {
        let c = special_chain(5.0, 10.0, 10.0, 1.0).unwrap();
        assert_eq!(c.thresholds(), vec![10.0, 11.0]);
        assert!(c.bumps().is_empty());
        assert!(special_chain(5.0, 10.0, 5.0, 1.0).is_err());
        assert!(special_chain(5.0, 1.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = special_chain(7.0, 1.0, 2.0, 1.5).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"A\":") && s.contains("\"alpha2\":"));
        let back: ApproxChain = serde_json::from_str(&s).unwrap();
        assert_eq!(back.stages(), c.stages());
        let mut doc: ChainDocument = serde_json::from_str(&s).unwrap();
        doc.stages[0].alpha2 *= 1.01;
        let tampered = serde_json::to_string(&doc).unwrap();
        assert!(serde_json::from_str::<ApproxChain>(&tampered).is_err());
    }
}
