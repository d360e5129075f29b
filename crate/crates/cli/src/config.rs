//! Experiment configuration.
//!
//! Every field has a default, so an empty file describes the reference
//! scenario: legitimate states ψ₁/ψ₂ at analyzer angles π/4, an intruder
//! resending ω₁ for half the photons, σ = 0.1, one trial, 10⁵ photons and
//! 10⁴ dark counts per image on a 34×34 grid.

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use ghostshield::detection::{NoiseModel, SearchSettings, TestParams};
use ghostshield::ghostsim::{IlluminationProfile, RegionKind, Scene};
use ghostshield::polarization::{bell_diagonal_state, AnalyzerConfig, BellDiagonalParams, NamedState, PolarizationState};
use ghostshield::{pnm, raster::Raster};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: OutputSection,
    pub analyzer: AnalyzerSection,
    pub noise: NoiseSection,
    pub test: TestSection,
    pub search: SearchSection,
    pub pairs: Vec<PairSpec>,
    pub intruder: IntruderSection,
    pub curve: CurveSection,
    pub worst_case: WorstCaseSection,
    pub scene: SceneSection,
    pub simulate: SimulateSection,
    pub analyze: AnalyzeSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let pair = |name: &str, a: NamedState, b: NamedState| PairSpec {
            name: name.into(),
            first: StateSpec::Named(a.name().into()),
            second: StateSpec::Named(b.name().into()),
        };
        Self {
            seed: 1,
            output: OutputSection::default(),
            analyzer: AnalyzerSection::default(),
            noise: NoiseSection::default(),
            test: TestSection::default(),
            search: SearchSection::default(),
            pairs: vec![
                pair("psi1-psi2", NamedState::Psi1, NamedState::Psi2),
                pair("psi1-omega1", NamedState::Psi1, NamedState::Omega1),
                pair("omega1-omega2", NamedState::Omega1, NamedState::Omega2),
            ],
            intruder: IntruderSection::default(),
            curve: CurveSection::default(),
            worst_case: WorstCaseSection::default(),
            scene: SceneSection::default(),
            simulate: SimulateSection::default(),
            analyze: AnalyzeSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Also write PNG copies of every graymap.
    pub png: bool,
    pub pgm_encoding: PgmEncoding,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), png: false, pgm_encoding: PgmEncoding::Plain }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PgmEncoding {
    Plain,
    Raw,
}

/// Analyzer angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzerSection {
    pub theta1: f64,
    pub theta2: f64,
}

impl Default for AnalyzerSection {
    fn default() -> Self {
        Self { theta1: FRAC_PI_4, theta2: FRAC_PI_4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma: f64,
    pub trials: u32,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { sigma: 0.1, trials: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestSection {
    pub lambda: f64,
    pub prior: f64,
}

impl Default for TestSection {
    fn default() -> Self {
        Self { lambda: 1.0, prior: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub mu_points: usize,
    pub theta_points: usize,
    pub level_band: f64,
    pub refine_tol: f64,
    pub max_refine_evals: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for SearchSection {
    fn default() -> Self {
        let s = SearchSettings::default();
        Self {
            mu_points: s.mu_points,
            theta_points: s.theta_points,
            level_band: s.level_band,
            refine_tol: s.refine_tol,
            max_refine_evals: s.max_refine_evals,
            r_min: s.r_bounds.0,
            r_max: s.r_bounds.1,
        }
    }
}

/// A canonical state by name, or a Bell-diagonal correlation triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Bell { mu_x: f64, mu_y: f64, mu_z: f64 },
}

impl StateSpec {
    pub fn build(&self) -> CliResult<PolarizationState> {
        match self {
            StateSpec::Named(name) => NamedState::from_name(name)
                .map(|s| s.state())
                .ok_or_else(|| CliError::Usage(format!("unknown state {name:?}; expected psi1, psi2, omega1 or omega2"))),
            &StateSpec::Bell { mu_x, mu_y, mu_z } => {
                Ok(bell_diagonal_state(&BellDiagonalParams::new(mu_x, mu_y, mu_z)?)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub name: String,
    pub first: StateSpec,
    pub second: StateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntruderSection {
    pub state: StateSpec,
    pub r: f64,
    /// Brightness multiplier of the false image in each of the two settings.
    pub false_gain: [f64; 2],
}

impl Default for IntruderSection {
    fn default() -> Self {
        Self { state: StateSpec::Named("omega1".into()), r: 0.5, false_gain: [1.0, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSection {
    pub levels: Vec<f64>,
}

impl Default for CurveSection {
    fn default() -> Self {
        Self { levels: (1..=20).map(|k| k as f64 / 20.0).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorstCaseMode {
    /// Bell-diagonal intruder against a configured two-photon pair.
    Pair,
    /// Pure single-photon intruder against `|H⟩, |V⟩`.
    SinglePhoton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorstCaseSection {
    pub mode: WorstCaseMode,
    pub pair: String,
    /// When false the intruder is free to choose any level.
    pub constrained: bool,
    pub target_level: f64,
    /// Intercept fraction for the single-photon mode.
    pub r: f64,
}

impl Default for WorstCaseSection {
    fn default() -> Self {
        Self { mode: WorstCaseMode::Pair, pair: "psi1-psi2".into(), constrained: true, target_level: 0.1, r: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Illumination {
    Objects,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSection {
    pub width: usize,
    pub height: usize,
    pub photons: f64,
    pub dark_total: f64,
    pub illumination: Illumination,
    /// Optional plain-bitmap masks replacing the built-in glyphs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask_true: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask_false: Option<PathBuf>,
}

impl Default for SceneSection {
    fn default() -> Self {
        use ghostshield::ghostsim::{DEFAULT_DARK_TOTAL, DEFAULT_PHOTONS, DEFAULT_SIDE};
        Self {
            width: DEFAULT_SIDE,
            height: DEFAULT_SIDE,
            photons: DEFAULT_PHOTONS,
            dark_total: DEFAULT_DARK_TOTAL,
            illumination: Illumination::Objects,
            mask_true: None,
            mask_false: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub pair: String,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { pair: "psi1-psi2".into() }
    }
}

/// `unit`, `estimate`, or a fixed number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Fixed(f64),
    Mode(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    /// Visibility expected without an intruder.
    pub expected_visibility: f64,
    /// Visibility under the intrusion the test is designed to catch.
    pub alternative_visibility: f64,
    /// `overlap`, `true-only`, `false-only`, `object-free`, or a bitmap path.
    pub region: String,
    pub weight: WeightSpec,
    pub weight_region: String,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        Self {
            expected_visibility: 1.0,
            alternative_visibility: 0.5,
            region: "overlap".into(),
            weight: WeightSpec::Mode("unit".into()),
            weight_region: "false-only".into(),
        }
    }
}

impl ExperimentConfig {
    /// Parse a config file. Relative mask paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.scene.mask_true, &mut cfg.scene.mask_false].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        for region in [&mut cfg.analyze.region, &mut cfg.analyze.weight_region] {
            if region_kind(region).is_none() && Path::new(region.as_str()).is_relative() {
                *region = base.join(region.as_str()).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Check everything that can be checked without running a command.
    pub fn validate(&self) -> CliResult<()> {
        self.analyzer_config()?;
        self.noise()?;
        self.test_params()?;
        self.search_settings().validate()?;
        if self.pairs.is_empty() {
            return Err(CliError::Usage("at least one state pair is required".into()));
        }
        for p in &self.pairs {
            p.first.build()?;
            p.second.build()?;
        }
        if self.pairs.iter().enumerate().any(|(i, p)| self.pairs[..i].iter().any(|q| q.name == p.name)) {
            return Err(CliError::Usage("pair names must be unique".into()));
        }
        self.pair(&self.simulate.pair)?;
        if self.worst_case.mode == WorstCaseMode::Pair {
            self.pair(&self.worst_case.pair)?;
        }
        self.intruder.state.build()?;
        if !(0.0..=1.0).contains(&self.intruder.r) || !(0.0..=1.0).contains(&self.worst_case.r) {
            return Err(CliError::Usage("intercept fractions must be in [0, 1]".into()));
        }
        for m in [&self.scene.mask_true, &self.scene.mask_false].into_iter().flatten() {
            if !m.is_file() {
                return Err(CliError::io(m, std::io::Error::new(std::io::ErrorKind::NotFound, "mask file not found")));
            }
        }
        for region in [&self.analyze.region, &self.analyze.weight_region] {
            if region_kind(region).is_none() && !Path::new(region).is_file() {
                return Err(CliError::io(region, std::io::Error::new(std::io::ErrorKind::NotFound, "region file not found")));
            }
        }
        self.weight_mode()?;
        Ok(())
    }

    pub fn analyzer_config(&self) -> CliResult<AnalyzerConfig> {
        Ok(AnalyzerConfig::pair(self.analyzer.theta1, self.analyzer.theta2)?)
    }

    pub fn noise(&self) -> CliResult<NoiseModel> {
        Ok(NoiseModel::new(self.noise.sigma, self.noise.trials)?)
    }

    pub fn test_params(&self) -> CliResult<TestParams> {
        Ok(TestParams::new(self.test.lambda, self.test.prior)?)
    }

    pub fn search_settings(&self) -> SearchSettings {
        let s = &self.search;
        SearchSettings {
            mu_points: s.mu_points,
            theta_points: s.theta_points,
            level_band: s.level_band,
            refine_tol: s.refine_tol,
            max_refine_evals: s.max_refine_evals,
            r_bounds: (s.r_min, s.r_max),
            root_tol: SearchSettings::default().root_tol,
        }
    }

    pub fn pair(&self, name: &str) -> CliResult<(PolarizationState, PolarizationState)> {
        let p = self
            .pairs
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| CliError::Usage(format!("no state pair named {name:?}")))?;
        Ok((p.first.build()?, p.second.build()?))
    }

    pub fn scene(&self) -> CliResult<Scene> {
        let s = &self.scene;
        let profile = match s.illumination {
            Illumination::Objects => IlluminationProfile::Objects,
            Illumination::Full => IlluminationProfile::Full,
        };
        match (&s.mask_true, &s.mask_false) {
            (None, None) => Ok(Scene::glyphs(s.width, s.height, profile, s.photons, s.dark_total)?),
            (Some(t), Some(f)) => {
                let (t, f) = (read_mask(t)?, read_mask(f)?);
                Ok(Scene::with_profile(t, f, profile, s.photons, s.dark_total)?)
            }
            _ => Err(CliError::Usage("mask_true and mask_false must be given together".into())),
        }
    }

    pub fn weight_mode(&self) -> CliResult<Weight> {
        match &self.analyze.weight {
            &WeightSpec::Fixed(w) if w.is_finite() && w >= 0.0 => Ok(Weight::Fixed(w)),
            WeightSpec::Fixed(w) => Err(CliError::Usage(format!("recovery weight must be non-negative, got {w}"))),
            WeightSpec::Mode(m) if m == "unit" => Ok(Weight::Fixed(1.0)),
            WeightSpec::Mode(m) if m == "estimate" => Ok(Weight::Estimate),
            WeightSpec::Mode(m) => Err(CliError::Usage(format!("unknown weight mode {m:?}; expected unit, estimate or a number"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Fixed(f64),
    Estimate,
}

pub fn region_kind(name: &str) -> Option<RegionKind> {
    match name {
        "overlap" => Some(RegionKind::Overlap),
        "true-only" => Some(RegionKind::TrueOnly),
        "false-only" => Some(RegionKind::FalseOnly),
        "object-free" => Some(RegionKind::ObjectFree),
        _ => None,
    }
}

/// Pixel indices of a named scene region or of the set pixels of a bitmap.
pub fn resolve_region(spec: &str, scene: &Scene) -> CliResult<Vec<usize>> {
    match region_kind(spec) {
        Some(kind) => Ok(scene.region(kind)),
        None => {
            let mask = read_mask(Path::new(spec))?;
            if mask.shape() != scene.shape() {
                return Err(ghostshield::Error::ShapeMismatch { left: mask.shape(), right: scene.shape() }.into());
            }
            Ok(mask.indices())
        }
    }
}

pub fn read_mask(path: &Path) -> CliResult<Raster<bool>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    pnm::read_pbm(std::io::BufReader::new(file)).map_err(|source| CliError::Input { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_reference_scenario() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
        assert_eq!(cfg.scene().unwrap().pixels(), 1156);
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.pairs.push(PairSpec {
            name: "custom".into(),
            first: StateSpec::Bell { mu_x: 0.1, mu_y: 0.0, mu_z: -0.1 },
            second: StateSpec::Named("psi2".into()),
        });
        cfg.analyze.weight = WeightSpec::Fixed(1.5);
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_states() {
        assert!(ExperimentConfig::from_toml("sede = 3").is_err());
        let cfg = ExperimentConfig::from_toml("[simulate]\npair = \"nope\"").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
        let cfg = ExperimentConfig::from_toml("[intruder]\nstate = \"phi\"").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_toml("[analyze]\nweight = \"heavy\"").unwrap();
        assert!(cfg.validate().is_err());
    }
}
