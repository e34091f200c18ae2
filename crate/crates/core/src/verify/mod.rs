//! Claim registry, sampling harness, residual statistics and reports.
//!
//! A [`Claim`] names a function family on a group (or a flat model space),
//! an assertion about it and a sampling budget. [`run_claim`] draws points
//! from a per-claim random stream, applies the singular-set guard, evaluates
//! the operators and turns the per-point residuals into a [`ClaimReport`]
//! whose verdict can be recomputed from its own fields.

mod probes;
mod registry;
mod report;

use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcs::PairConstraints;
use crate::groups::GroupKind;

pub use registry::{find_claim, registry};
pub use report::render_text;

pub const DEFAULT_SEED: u64 = 0x6269_6861_726d;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-7;
/// `|τ^j f(p)|` above this counts as nonvanishing at `p`.
pub const NONVANISHING_FLOOR: f64 = 1e-3;
/// Fraction of accepted points that must be nonvanishing.
pub const NONVANISHING_FRACTION: f64 = 0.9;
/// Default lower bound on `|Q(p)|` for quotients.
pub const DEFAULT_GUARD: f64 = 0.3;
/// Environment variable overriding the default suite seed.
pub const SEED_ENV: &str = "BIHARM_SEED";

const MAX_ATTEMPTS_PER_SAMPLE: usize = 50;

/// Suite seed from `BIHARM_SEED`, falling back to [`DEFAULT_SEED`].
pub fn seed_from_env() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidClaim(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-claim seed derived from the suite seed and the claim id, so a claim
/// reproduces on its own regardless of which other claims run.
pub fn claim_seed(suite_seed: u64, id: &str) -> u64 {
    splitmix64(suite_seed ^ fnv1a(id))
}

/// Where a claim lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Group(GroupKind),
    /// ℝ² with the planar variables `z, z̄`.
    Plane,
    /// ℝ⁴ ⊃ S³ via the radial projection.
    Sphere,
    /// ℝ⁴₁ ⊃ H³ via the radial projection.
    Hyperbolic,
}

impl Domain {
    pub fn label(&self, n: usize) -> String {
        match self {
            Domain::Group(k) => k.label(n),
            Domain::Plane => "R^2".into(),
            Domain::Sphere => "S^3".into(),
            Domain::Hyperbolic => "H^3".into(),
        }
    }

    pub fn group(&self) -> Option<GroupKind> {
        match self {
            Domain::Group(k) => Some(*k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assertion {
    /// Each function of the family satisfies `τ(f) = λ f`, or an explicit
    /// conformality relation holds.
    Eigenfunction,
    Harmonic,
    /// Proper r-harmonic: `τ^r f = 0` and `τ^{r-1} f` nonvanishing.
    ProperHarmonic(usize),
    /// `τ^r f` is nonvanishing.
    Nonzero(usize),
    BackendAgree,
    ClosedFormAgree,
}

impl Assertion {
    pub const PROPER_BIHARMONIC: Assertion = Assertion::ProperHarmonic(2);

    pub fn needs_nonvanishing(&self) -> bool {
        matches!(self, Assertion::ProperHarmonic(_) | Assertion::Nonzero(_))
    }

    /// Whether the residual tolerance enters the verdict.
    pub fn uses_tolerance(&self) -> bool {
        !matches!(self, Assertion::Nonzero(_))
    }

    /// Highest iterate of `τ` needed to check the assertion.
    pub fn depth(&self) -> usize {
        match self {
            Assertion::Harmonic => 1,
            Assertion::ProperHarmonic(r) | Assertion::Nonzero(r) => *r,
            _ => 1,
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Eigenfunction => f.write_str("eigenfunction"),
            Assertion::Harmonic => f.write_str("harmonic"),
            Assertion::ProperHarmonic(2) => f.write_str("proper-biharmonic"),
            Assertion::ProperHarmonic(r) => write!(f, "proper-{r}-harmonic"),
            Assertion::Nonzero(r) => write!(f, "nonzero(tau^{r})"),
            Assertion::BackendAgree => f.write_str("backend-agree"),
            Assertion::ClosedFormAgree => f.write_str("closed-form-agree"),
        }
    }
}

/// Which 2×2 index sets a minor quotient shares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinorBranch {
    SameRows,
    SameCols,
    Distinct,
}

/// Function family used by a backend-agreement claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFamily {
    Coefficient,
    Quotient,
    MinorQuotient,
    PrincipalMinor,
}

impl TestFamily {
    pub fn slug(&self) -> &'static str {
        match self {
            TestFamily::Coefficient => "coefficient",
            TestFamily::Quotient => "quotient",
            TestFamily::MinorQuotient => "minor-quotient",
            TestFamily::PrincipalMinor => "principal-minor",
        }
    }
}

/// What a claim evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Matrix coefficients: eigenvalue relation and/or every pairwise
    /// conformality relation.
    Lemma { eigen: bool, kappa: bool },
    /// Linear quotients `P/Q` with random parameters.
    LinearQuotient {
        same_column: bool,
        constraints: PairConstraints,
        /// Sp(n) only: use both the `z` and `w` blocks.
        mixed: bool,
    },
    /// `z11/z22` on U(2).
    QuotientExample,
    /// `τ` and `τ²` of a quotient on SU(n) agree in the su(n) and u(n) frames.
    CircleInvariance,
    /// Leading minors `d_k` for every `k ≤ n`.
    PrincipalMinorEigen,
    MinorQuotient(MinorBranch),
    /// `(z11 z22 − z12 z21)/(z33 z44 − z34 z43)`.
    MinorExample,
    /// Random `k×k` minor quotients; reported, never asserted.
    ExploreMinors { k: usize, disjoint: bool },
    /// `Δ^r f_n` against its closed form for every `r ≤ r_max`.
    PlanarClosedForm { r_max: u32 },
    /// `Δ^{n+1} f_n = 0` and `Δ^n f_n ≠ 0`.
    PlanarProper,
    /// `(p·x)/(q·x)` through the radial projection.
    Radial { pq_zero: bool },
    /// The first-column quotient on SO(4) and its dual on SO₀(1,3).
    Duality,
    /// `τ(f*) = −(τ f)*` pointwise.
    DualityIdentity,
    /// Frame backend against the coefficient formulas for `τ^order`.
    Backend { order: usize, family: TestFamily },
    ProductRule,
    QuotientRule,
    BasisIndependence,
    /// `z11/z22` on SU(2) against `(x1 + i x2)/(x1 − i x2)` on S³.
    Su2Identification,
}

impl Family {
    /// Whether the family can be evaluated on `kind` (used by group overrides).
    pub fn supports(&self, kind: GroupKind) -> bool {
        use GroupKind::*;
        match self {
            Family::Lemma { .. } => kind != Lorentz,
            Family::LinearQuotient { mixed, .. } => kind != Lorentz && (!*mixed || kind == Sp),
            Family::Backend { order: 1, family } => {
                kind == U || (kind == SO && matches!(family, TestFamily::Coefficient | TestFamily::Quotient))
            }
            Family::Backend { .. } => kind == U,
            Family::ProductRule | Family::QuotientRule | Family::BasisIndependence => true,
            Family::CircleInvariance => kind == SU,
            Family::Duality | Family::DualityIdentity => kind == Lorentz,
            Family::Su2Identification => kind == SU,
            Family::QuotientExample
            | Family::PrincipalMinorEigen
            | Family::MinorQuotient(_)
            | Family::MinorExample
            | Family::ExploreMinors { .. } => kind == U,
            Family::PlanarClosedForm { .. } | Family::PlanarProper | Family::Radial { .. } => false,
        }
    }
}

/// One checkable statement.
#[derive(Debug, Clone)]
pub struct Claim {
    pub id: String,
    pub domain: Domain,
    /// Group size, or the exponent `n` of `f_n` for planar claims.
    pub n: usize,
    pub family: Family,
    pub assertion: Assertion,
    pub samples: usize,
    pub tol: f64,
    /// Part of the claim is an exact (rational) identity.
    pub exact: bool,
    /// Lower bound on denominator moduli at accepted points.
    pub guard: f64,
    /// Number of random parameter sets, cycled over the sample points.
    pub draws: usize,
    pub seed: u64,
    pub citation: String,
    pub advisory: bool,
}

/// Per-run adjustments to registry claims.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub n: Option<usize>,
    pub group: Option<GroupKind>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

impl Claim {
    /// Applies `o` and derives the per-claim seed from the suite seed.
    pub fn with_overrides(&self, o: &Overrides, default_seed: u64) -> Result<Claim> {
        let mut c = self.clone();
        if let Some(kind) = o.group {
            if c.domain != Domain::Group(kind) {
                if c.domain.group().is_none() || !c.family.supports(kind) {
                    return Err(Error::InvalidClaim(format!(
                        "claim {} cannot run on group {}",
                        c.id,
                        kind.slug()
                    )));
                }
                c.domain = Domain::Group(kind);
            }
        }
        if let Some(n) = o.n {
            c.n = n;
        }
        if let Some(s) = o.samples {
            if s == 0 {
                return Err(Error::InvalidClaim("samples must be positive".into()));
            }
            c.samples = s;
        }
        if let Some(t) = o.tol {
            if t.is_nan() || t <= 0.0 || !t.is_finite() {
                return Err(Error::InvalidClaim(format!("tolerance {t} must be positive")));
            }
            c.tol = t;
        }
        if c.family == Family::PlanarProper {
            c.assertion = Assertion::ProperHarmonic(c.n + 1);
        }
        if let Domain::Group(kind) = c.domain {
            kind.validate(c.n)
                .map_err(|e| Error::InvalidClaim(format!("claim {}: {e}", c.id)))?;
        }
        c.seed = claim_seed(o.seed.unwrap_or(default_seed), &c.id);
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Advisory,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Advisory => "advisory",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub requested: usize,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max: f64,
    pub median: f64,
}

/// The thresholds the verdict was computed against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tolerance: f64,
    pub tolerance_applies: bool,
    pub exact: bool,
    pub nonvanishing_floor: Option<f64>,
    pub nonvanishing_min_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub claim: String,
    pub group: String,
    pub n: usize,
    pub assertion: String,
    pub params: serde_json::Value,
    pub samples: SampleCounts,
    pub residuals: ResidualStats,
    pub nonvanishing_fraction: Option<f64>,
    /// Points at which an exact identity failed (exact claims only).
    pub exact_failures: Option<usize>,
    pub thresholds: Thresholds,
    pub verdict: Verdict,
    pub advisory: bool,
    pub seed: u64,
    pub citation: String,
    pub rejections: Vec<String>,
    pub error: Option<String>,
    pub wall_time: f64,
}

impl ClaimReport {
    /// Whether the recorded statistics meet the recorded thresholds.
    pub fn statistics_pass(&self) -> bool {
        let t = &self.thresholds;
        self.error.is_none()
            && self.samples.accepted == self.samples.requested
            && (!t.tolerance_applies || self.residuals.max <= t.tolerance)
            && self.exact_failures.unwrap_or(0) == 0
            && match (t.nonvanishing_min_fraction, self.nonvanishing_fraction) {
                (Some(min), Some(frac)) => frac >= min,
                (Some(_), None) => false,
                (None, _) => true,
            }
    }

    /// The verdict implied by the other fields.
    pub fn derived_verdict(&self) -> Verdict {
        if self.advisory {
            Verdict::Advisory
        } else if self.statistics_pass() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Pretty JSON with the wall time zeroed, for byte comparisons.
    pub fn to_json_without_time(&self) -> String {
        let mut r = self.clone();
        r.wall_time = 0.0;
        serde_json::to_string_pretty(&r).expect("report serializes")
    }
}

/// Result of probing one sample point.
pub(crate) enum Outcome {
    Accept(Sample),
    Reject(String),
}

pub(crate) struct Sample {
    pub residual: f64,
    pub witness: Option<f64>,
    pub exact_ok: Option<bool>,
}

impl Sample {
    pub fn plain(residual: f64) -> Self {
        Sample {
            residual,
            witness: None,
            exact_ok: None,
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn base_report(c: &Claim) -> ClaimReport {
    let needs = c.assertion.needs_nonvanishing();
    ClaimReport {
        claim: c.id.clone(),
        group: c.domain.label(c.n),
        n: c.n,
        assertion: c.assertion.to_string(),
        params: serde_json::Value::Null,
        samples: SampleCounts {
            requested: c.samples,
            accepted: 0,
            rejected: 0,
        },
        residuals: ResidualStats { max: 0.0, median: 0.0 },
        nonvanishing_fraction: None,
        exact_failures: c.exact.then_some(0),
        thresholds: Thresholds {
            tolerance: c.tol,
            tolerance_applies: c.assertion.uses_tolerance(),
            exact: c.exact,
            nonvanishing_floor: needs.then_some(NONVANISHING_FLOOR),
            nonvanishing_min_fraction: needs.then_some(NONVANISHING_FRACTION),
        },
        verdict: Verdict::Fail,
        advisory: c.advisory,
        seed: c.seed,
        citation: c.citation.clone(),
        rejections: Vec::new(),
        error: None,
        wall_time: 0.0,
    }
}

/// Runs one (already overridden) claim. Deterministic given `claim.seed`.
pub fn run_claim(claim: &Claim) -> Result<ClaimReport> {
    let start = Instant::now();
    let mut report = base_report(claim);
    let mut rng = ChaCha8Rng::seed_from_u64(claim.seed);
    let mut prepared = probes::prepare(claim, &mut rng)?;
    report.params = prepared.params.take();

    let mut residuals = Vec::with_capacity(claim.samples);
    let mut nonvanishing = 0usize;
    let mut exact_failures = 0usize;
    let mut attempts = 0usize;
    while residuals.len() < claim.samples && attempts < claim.samples * MAX_ATTEMPTS_PER_SAMPLE {
        attempts += 1;
        let index = residuals.len();
        let outcome = match prepared.probe(index, &mut rng) {
            Ok(o) => o,
            Err(Error::SingularPoint { denominator }) => {
                Outcome::Reject(format!("denominator {denominator} vanishes on a frame curve"))
            }
            Err(e) => {
                report.error = Some(e.to_string());
                break;
            }
        };
        match outcome {
            Outcome::Accept(s) => {
                if s.witness.is_some_and(|w| w > NONVANISHING_FLOOR) {
                    nonvanishing += 1;
                }
                if s.exact_ok == Some(false) {
                    exact_failures += 1;
                }
                residuals.push(s.residual);
            }
            Outcome::Reject(reason) => {
                report.rejections.push(format!("sample {index}: {reason}"));
            }
        }
    }

    let accepted = residuals.len();
    report.samples.accepted = accepted;
    report.samples.rejected = report.rejections.len();
    report.residuals.max = residuals.iter().copied().fold(0.0, f64::max);
    report.residuals.median = median(&mut residuals);
    if claim.assertion.needs_nonvanishing() && accepted > 0 {
        report.nonvanishing_fraction = Some(nonvanishing as f64 / accepted as f64);
    }
    if claim.exact {
        report.exact_failures = Some(exact_failures);
    }
    report.verdict = report.derived_verdict();
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

fn glob_regex(pattern: &str) -> Result<Regex> {
    let alts: Vec<String> = pattern
        .split(',')
        .map(|p| {
            let body: String = p
                .trim()
                .chars()
                .map(|ch| match ch {
                    '*' => ".*".to_string(),
                    '?' => ".".to_string(),
                    c => regex::escape(&c.to_string()),
                })
                .collect();
            format!("(?:{body})")
        })
        .collect();
    Regex::new(&format!("^(?:{})$", alts.join("|")))
        .map_err(|e| Error::InvalidClaim(format!("bad claim pattern {pattern:?}: {e}")))
}

/// Registry claims whose id matches `pattern` (`*`/`?` globs, comma-separated
/// alternatives). With a group override, claims on other groups are kept only
/// if their family can run on that group.
pub fn select_claims(pattern: &str, overrides: &Overrides) -> Result<Vec<Claim>> {
    let re = glob_regex(pattern)?;
    Ok(registry()
        .into_iter()
        .filter(|c| re.is_match(&c.id))
        .filter(|c| match overrides.group {
            None => true,
            Some(k) => c.domain == Domain::Group(k) || (c.domain.group().is_some() && c.family.supports(k)),
        })
        .collect())
}

/// Runs every matching claim in parallel. Claims that cannot be prepared
/// produce a failing report carrying the error.
pub fn run_suite(pattern: &str, overrides: &Overrides, default_seed: u64) -> Result<Vec<ClaimReport>> {
    let claims = select_claims(pattern, overrides)?;
    Ok(claims
        .par_iter()
        .map(|c| {
            let prepared = c.with_overrides(overrides, default_seed);
            match prepared.and_then(|c| run_claim(&c)) {
                Ok(r) => r,
                Err(e) => {
                    let mut r = base_report(c);
                    r.seed = claim_seed(overrides.seed.unwrap_or(default_seed), &c.id);
                    if let Some(n) = overrides.n {
                        r.n = n;
                        r.group = c.domain.label(n);
                    }
                    r.error = Some(e.to_string());
                    r.verdict = r.derived_verdict();
                    r
                }
            }
        })
        .collect())
}

/// True when every non-advisory report passed.
pub fn all_passed(reports: &[ClaimReport]) -> bool {
    reports.iter().all(|r| r.advisory || r.verdict == Verdict::Pass)
}

/// Residuals of `τ` and `τ²` for random `k×k` minor quotients on U(n) with
/// disjoint row and column sets. Never asserted.
pub fn explore_minors(k: usize, n: usize, samples: usize, seed: u64) -> Result<ClaimReport> {
    if k < 2 || n < 2 * k {
        return Err(Error::UnsatisfiableConstraints(format!(
            "{k}x{k} minors with disjoint index sets need n >= {}, got {n}",
            2 * k
        )));
    }
    let mut claim = registry::explore_claim(k, n);
    claim.samples = samples.max(1);
    claim.seed = seed;
    run_claim(&claim)
}
