//! Jamming detection by state-dependent visibility.
//!
//! The legitimate imagers know the two states `ρ₁, ρ₂` they alternate between
//! and therefore the visibility `V = |P₁ − P₂| / (P₁ + P₂)` they should see.
//! Intercept-resend jamming mixes a common intruder state into both arms and
//! lowers that visibility. The drop is tested with a Gaussian likelihood
//! ratio test whose separation is `d = √M (V₀ − V₁) / σ`.
//!
//! [`minimax`] holds the worst-case analysis, where the imagers pick the
//! analyzer angles and the intruder picks the state that hides best.

use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::polarization::{self, AnalyzerConfig, PolarizationState};

pub mod minimax;

pub use minimax::{
    detection_curve, inner_minimum, single_photon_inner, single_photon_worst_case, worst_case_d, CurvePoint,
    CurveValue, InnerMinimum, SearchSettings, SinglePhotonWitness, WorstCase,
};

/// Gaussian noise on measured visibilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma: f64,
    trials: u32,
}

impl NoiseModel {
    pub fn new(sigma: f64, trials: u32) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid(format!("noise sigma must be positive, got {sigma}")));
        }
        if trials == 0 {
            return Err(invalid("number of trials must be at least 1"));
        }
        Ok(Self { sigma, trials })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn trials(&self) -> u32 {
        self.trials
    }
}

/// Likelihood-ratio threshold and prior of the intrusion hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestParams {
    lambda: f64,
    prior: f64,
}

impl Default for TestParams {
    fn default() -> Self {
        Self { lambda: 1.0, prior: 0.5 }
    }
}

impl TestParams {
    pub fn new(lambda: f64, prior: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid(format!("threshold lambda must be positive, got {lambda}")));
        }
        if !(prior > 0.0 && prior < 1.0) {
            return Err(invalid(format!("prior must lie in (0, 1), got {prior}")));
        }
        Ok(Self { lambda, prior })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    /// `ln λ / d`, taken as 0 whenever `λ = 1` (including `d = 0`).
    fn offset(&self, d: f64) -> f64 {
        let ln = self.lambda.ln();
        if ln == 0.0 {
            0.0
        } else if d == 0.0 {
            ln.signum() * f64::INFINITY
        } else {
            ln / d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    NoIntrusion,
    Intrusion,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::NoIntrusion => "no-intrusion",
            Verdict::Intrusion => "intrusion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionReport {
    pub v_expected: f64,
    pub v_observed: f64,
    pub d: f64,
    pub verdict: Verdict,
    pub p_detect: f64,
    pub p_false_alarm: f64,
}

/// Legitimate pair, intruder state, intercept fraction and analyzers.
#[derive(Debug, Clone)]
pub struct JammingScenario {
    pub rho1: PolarizationState,
    pub rho2: PolarizationState,
    pub rho_e: PolarizationState,
    pub r: f64,
    pub config: AnalyzerConfig,
}

impl JammingScenario {
    pub fn new(
        rho1: PolarizationState,
        rho2: PolarizationState,
        rho_e: PolarizationState,
        r: f64,
        config: AnalyzerConfig,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(invalid(format!("intercept fraction must be in [0, 1], got {r}")));
        }
        let n = config.arity();
        if [&rho1, &rho2, &rho_e].iter().any(|s| s.photons() != n) {
            return Err(invalid("scenario states must match the analyzer arity"));
        }
        Ok(Self { rho1, rho2, rho_e, r, config })
    }

    /// `(P₁, P₂, P_E)` at the scenario's analyzers.
    pub fn probabilities(&self) -> Result<[f64; 3]> {
        Ok([
            polarization::detection_probability(&self.rho1, &self.config)?,
            polarization::detection_probability(&self.rho2, &self.config)?,
            polarization::detection_probability(&self.rho_e, &self.config)?,
        ])
    }

    /// `(P₁′, P₂′)` of the jammed states `(1 − r)ρⱼ + r ρᴱ`.
    pub fn jammed_probabilities(&self) -> Result<[f64; 2]> {
        let j1 = polarization::mix(&self.rho1, &self.rho_e, self.r)?;
        let j2 = polarization::mix(&self.rho2, &self.rho_e, self.r)?;
        Ok([
            polarization::detection_probability(&j1, &self.config)?,
            polarization::detection_probability(&j2, &self.config)?,
        ])
    }
}

/// State-dependent visibility `|p1 − p2| / (p1 + p2)`; zero when both vanish.
pub fn visibility(p1: f64, p2: f64) -> Result<f64> {
    for p in [p1, p2] {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("probability must be in [0, 1], got {p}")));
        }
    }
    Ok(contrast(p1, p2))
}

/// The same contrast for arbitrary non-negative intensities (counts, rates).
pub(crate) fn contrast(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s > 0.0 {
        (a - b).abs() / s
    } else {
        0.0
    }
}

/// Visibility between `|H⟩` and `|V⟩` after a fraction `r` of both is replaced
/// by an intruder state whose analyzer overlap is `overlap`.
///
/// The intruder adds `r·overlap` to both detection probabilities, so it shows
/// up twice in their sum: `V′ = (1 − r)·V / (1 − r + 2r·overlap)`.
pub fn jammed_visibility_single_photon(v_clean: f64, r: f64, overlap: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(invalid(format!("intercept fraction must be in [0, 1], got {r}")));
    }
    if !(0.0..=1.0).contains(&overlap) {
        return Err(invalid(format!("overlap must be in [0, 1], got {overlap}")));
    }
    let denom = 1.0 - r + 2.0 * r * overlap;
    if denom <= 0.0 {
        return Err(Error::DegenerateChannel);
    }
    Ok((1.0 - r) * v_clean / denom)
}

/// `√M (v1 − v0) / σ`, sign preserved.
pub fn d_statistic(v0: f64, v1: f64, noise: &NoiseModel) -> f64 {
    (noise.trials as f64).sqrt() * (v1 - v0) / noise.sigma
}

/// Log-likelihood ratio test.
///
/// `observations` are visibility samples referenced to the no-intrusion mean,
/// i.e. the measured drop `V_expected − V_measured`, so that they average 0
/// under H₀ and `V₀ − V₁` under H₁. Each is normalized by `σ√M` and the sum
/// compared against `ln λ / d + d / 2`. A sum exactly at the threshold is
/// flagged as an intrusion.
pub fn decide(observations: &[f64], noise: &NoiseModel, params: &TestParams, d: f64) -> Result<Verdict> {
    if observations.is_empty() {
        return Err(invalid("decide needs at least one observation"));
    }
    if d == 0.0 && params.lambda != 1.0 {
        return Err(Error::UndefinedThreshold);
    }
    let scale = noise.sigma * (noise.trials as f64).sqrt();
    let statistic: f64 = observations.iter().map(|s| s / scale).sum();
    let threshold = params.offset(d) + d / 2.0;
    Ok(if statistic < threshold { Verdict::NoIntrusion } else { Verdict::Intrusion })
}

/// Test one measured visibility against the design separation between
/// `v_expected` (no intruder) and `v_alternative` (the intrusion to catch).
pub fn analyze_visibility(
    v_expected: f64,
    v_alternative: f64,
    v_observed: f64,
    noise: &NoiseModel,
    params: &TestParams,
) -> Result<DetectionReport> {
    for v in [v_expected, v_alternative, v_observed] {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(format!("visibility must be in [0, 1], got {v}")));
        }
    }
    if v_alternative > v_expected {
        return Err(invalid("the alternative visibility must not exceed the expected one"));
    }
    let d = d_statistic(v_alternative, v_expected, noise);
    let verdict = decide(&[v_expected - v_observed], noise, params, d)?;
    Ok(DetectionReport {
        v_expected,
        v_observed,
        d,
        verdict,
        p_detect: detection_probability(d, params),
        p_false_alarm: false_alarm_probability(d, params),
    })
}

/// Upper Gaussian tail `Q(x) = ½ erfc(x / √2)`.
pub fn gaussian_tail(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else if x == f64::NEG_INFINITY {
        1.0
    } else {
        0.5 * erfc(x / std::f64::consts::SQRT_2)
    }
}

/// Probability of flagging an intrusion that is present: `Q(ln λ / d − d/2)`.
pub fn detection_probability(d: f64, params: &TestParams) -> f64 {
    gaussian_tail(params.offset(d) - d / 2.0).clamp(0.0, 1.0)
}

/// Probability of flagging an intrusion that is absent: `Q(ln λ / d + d/2)`.
pub fn false_alarm_probability(d: f64, params: &TestParams) -> f64 {
    gaussian_tail(params.offset(d) + d / 2.0).clamp(0.0, 1.0)
}

/// Level of jamming: the larger of the two visibilities between each
/// legitimate image and its jammed counterpart.
pub fn jamming_level(scenario: &JammingScenario) -> Result<f64> {
    let [p1, p2, _] = scenario.probabilities()?;
    let [q1, q2] = scenario.jammed_probabilities()?;
    Ok(visibility(p1, q1)?.max(visibility(p2, q2)?))
}

/// Separation between clean and jammed visibility for one fixed scenario,
/// in units of the visibility noise.
pub fn evaluate_d_fixed(scenario: &JammingScenario, noise: &NoiseModel) -> Result<f64> {
    let [p1, p2, _] = scenario.probabilities()?;
    let [q1, q2] = scenario.jammed_probabilities()?;
    Ok(d_statistic(visibility(q1, q2)?, visibility(p1, p2)?, noise))
}
