//! Coincidence ghost imaging with an intercept-resend intruder.
//!
//! Each pixel of an image counts coincidences between a bucket click and a
//! camera click. Legitimate pairs only register where the true object
//! transmits; intercepted photons are resent by the intruder and register
//! where its false object transmits, with the intruder state's analyzer
//! probability. Dark counts form a uniform Poisson background.
//!
//! Because the false term does not depend on which legitimate state was sent,
//! the absolute difference of the two images cancels it in expectation:
//!
//! ```
//! use ghostshield::ghostsim::{expected_counts, Intrusion, Scene};
//! use ghostshield::polarization::{canonical_states, AnalyzerConfig};
//!
//! let s = canonical_states();
//! let scene = Scene::default();
//! let config = AnalyzerConfig::pair(std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4)?;
//! let jam = Intrusion::new(s.omega1.clone(), 0.5)?;
//! let e1 = expected_counts(&scene, &s.psi1, &jam, &config)?;
//! let e2 = expected_counts(&scene, &s.psi2, &jam, &config)?;
//! let diff: Vec<f64> = e1.as_slice().iter().zip(e2.as_slice()).map(|(a, b)| (a - b).abs()).collect();
//! for (i, d) in diff.iter().enumerate() {
//!     let expected = 0.5 * scene.photons() * scene.illumination().as_slice()[i] * 0.5;
//!     let on_true = scene.mask_true().as_slice()[i];
//!     assert!((d - if on_true { expected } else { 0.0 }).abs() < 1e-12);
//! }
//! # Ok::<(), ghostshield::Error>(())
//! ```

mod scene;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

pub use scene::{lambda_glyph, t_glyph, IlluminationProfile, RegionKind, Scene, DEFAULT_DARK_TOTAL, DEFAULT_PHOTONS, DEFAULT_SIDE};

use crate::detection::contrast;
use crate::error::{invalid, Error, Result};
use crate::polarization::{detection_probability, AnalyzerConfig, PolarizationState};
use crate::raster::Raster;

/// The intruder's resent state and intercept fraction.
#[derive(Debug, Clone)]
pub struct Intrusion {
    rho_e: PolarizationState,
    r: f64,
}

impl Intrusion {
    pub fn new(rho_e: PolarizationState, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(invalid(format!("intercept fraction must be in [0, 1], got {r}")));
        }
        Ok(Self { rho_e, r })
    }

    /// No interception. The resent state is irrelevant and set to white noise.
    pub fn none() -> Self {
        Self { rho_e: PolarizationState::maximally_mixed(2), r: 0.0 }
    }

    pub fn state(&self) -> &PolarizationState {
        &self.rho_e
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

/// Provenance of a sampled image.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ImageMeta {
    pub scene_digest: Option<String>,
    pub seed: Option<u64>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountImage {
    counts: Raster<u64>,
    pub meta: ImageMeta,
}

impl CountImage {
    pub fn new(counts: Raster<u64>, meta: ImageMeta) -> Self {
        Self { counts, meta }
    }

    pub fn counts(&self) -> &Raster<u64> {
        &self.counts
    }

    pub fn shape(&self) -> (usize, usize) {
        self.counts.shape()
    }

    pub fn to_f64(&self) -> Raster<f64> {
        self.counts.map(|&c| c as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// `|c₁ − w·c₂|` per pixel, not re-quantized.
    pub image: Raster<f64>,
    pub weight_used: f64,
}

/// Summary statistics of one image over the scene's regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageMetrics {
    /// Object-free mean of the clean reference image.
    pub mean_dark_per_pixel: f64,
    /// Object-free mean of this image.
    pub noise_level: f64,
    /// Mean over pixels only the true object covers.
    pub signal_mean: f64,
    pub snr: f64,
    /// Mean over pixels only the false object covers.
    pub residual_false_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationMetrics {
    pub clean: ImageMetrics,
    pub recovered: ImageMetrics,
}

/// Expected coincidences per pixel for the legitimate state `legit`.
pub fn expected_counts(
    scene: &Scene,
    legit: &PolarizationState,
    intrusion: &Intrusion,
    config: &AnalyzerConfig,
) -> Result<Raster<f64>> {
    expected_counts_scaled(scene, legit, intrusion, config, 1.0)
}

/// As [`expected_counts`], with the false-image term multiplied by
/// `false_gain`. A gain that differs between the two settings models an
/// intruder whose brightness drifts over time.
pub fn expected_counts_scaled(
    scene: &Scene,
    legit: &PolarizationState,
    intrusion: &Intrusion,
    config: &AnalyzerConfig,
    false_gain: f64,
) -> Result<Raster<f64>> {
    if config.arity() != 2 {
        return Err(invalid(format!("imaging needs two analyzer angles, got {}", config.arity())));
    }
    if !(false_gain.is_finite() && false_gain >= 0.0) {
        return Err(invalid("false-image gain must be non-negative"));
    }
    let p = detection_probability(legit, config)?;
    let pe = detection_probability(&intrusion.rho_e, config)?;
    let r = intrusion.r;
    let n = scene.photons();
    let dark = scene.dark_per_pixel();
    let t = scene.mask_true().as_slice();
    let f = scene.mask_false().as_slice();
    let values = scene
        .illumination()
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &lit)| {
            let legit_term = if t[i] { (1.0 - r) * p } else { 0.0 };
            let false_term = if f[i] { false_gain * r * pe } else { 0.0 };
            n * lit * (legit_term + false_term) + dark
        })
        .collect();
    Raster::from_vec(scene.width(), scene.height(), values)
}

// Stream tags keep the images of one run statistically independent.
const TAG_SAMPLE: u64 = 0;
const TAG_FIRST: u64 = 1;
const TAG_SECOND: u64 = 2;
const TAG_CLEAN: u64 = 3;

fn pixel_rng(seed: u64, tag: u64, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index as u64);
    rng
}

fn sample_tagged(expected: &Raster<f64>, seed: u64, tag: u64, meta: ImageMeta) -> Result<CountImage> {
    if let Some(bad) = expected.as_slice().iter().find(|&&m| !(m.is_finite() && m >= 0.0)) {
        return Err(invalid(format!("expected counts must be finite and non-negative, got {bad}")));
    }
    let counts: Vec<u64> = expected
        .as_slice()
        .par_iter()
        .enumerate()
        .map(|(i, &mean)| {
            if mean == 0.0 {
                return 0;
            }
            let dist = Poisson::new(mean).expect("positive finite mean");
            dist.sample(&mut pixel_rng(seed, tag, i)) as u64
        })
        .collect();
    Ok(CountImage::new(Raster::from_vec(expected.width(), expected.height(), counts)?, meta))
}

/// Independent Poisson draw per pixel. Each pixel has its own random stream
/// keyed by `(seed, pixel index)`, so the result does not depend on
/// evaluation order or thread count.
pub fn sample_counts(expected: &Raster<f64>, seed: u64) -> Result<CountImage> {
    let meta = ImageMeta { scene_digest: None, seed: Some(seed), label: "sample".into() };
    sample_tagged(expected, seed, TAG_SAMPLE, meta)
}

/// The two jammed images, one per legitimate state, with independent noise.
pub fn simulate_pair(
    scene: &Scene,
    rho1: &PolarizationState,
    rho2: &PolarizationState,
    intrusion: &Intrusion,
    config: &AnalyzerConfig,
    seed: u64,
) -> Result<(CountImage, CountImage)> {
    simulate_pair_varying(scene, rho1, rho2, intrusion, [1.0, 1.0], config, seed)
}

/// [`simulate_pair`] with a separate false-image gain for each setting.
pub fn simulate_pair_varying(
    scene: &Scene,
    rho1: &PolarizationState,
    rho2: &PolarizationState,
    intrusion: &Intrusion,
    false_gain: [f64; 2],
    config: &AnalyzerConfig,
    seed: u64,
) -> Result<(CountImage, CountImage)> {
    let digest = scene.digest();
    let meta = |label: &str| ImageMeta { scene_digest: Some(digest.clone()), seed: Some(seed), label: label.into() };
    let e1 = expected_counts_scaled(scene, rho1, intrusion, config, false_gain[0])?;
    let e2 = expected_counts_scaled(scene, rho2, intrusion, config, false_gain[1])?;
    Ok((sample_tagged(&e1, seed, TAG_FIRST, meta("jammed-1"))?, sample_tagged(&e2, seed, TAG_SECOND, meta("jammed-2"))?))
}

/// Image for `legit` with no intruder present.
pub fn simulate_clean(scene: &Scene, legit: &PolarizationState, config: &AnalyzerConfig, seed: u64) -> Result<CountImage> {
    let e = expected_counts(scene, legit, &Intrusion::none(), config)?;
    let meta = ImageMeta { scene_digest: Some(scene.digest()), seed: Some(seed), label: "clean".into() };
    sample_tagged(&e, seed, TAG_CLEAN, meta)
}

/// `|c₁ − weight·c₂|` per pixel.
pub fn recover(img1: &CountImage, img2: &CountImage, weight: f64) -> Result<RecoveryResult> {
    img1.counts.ensure_same_shape(&img2.counts)?;
    if !(weight.is_finite() && weight >= 0.0) {
        return Err(invalid(format!("recovery weight must be non-negative, got {weight}")));
    }
    let values = img1
        .counts
        .as_slice()
        .iter()
        .zip(img2.counts.as_slice())
        .map(|(&a, &b)| (a as f64 - weight * b as f64).abs())
        .collect();
    Ok(RecoveryResult { image: Raster::from_vec(img1.counts.width(), img1.counts.height(), values)?, weight_used: weight })
}

fn region_sums(img1: &CountImage, img2: &CountImage, region: &[usize]) -> Result<(f64, f64)> {
    img1.counts.ensure_same_shape(&img2.counts)?;
    if region.is_empty() {
        return Err(Error::DegenerateRegion("empty region".into()));
    }
    let (a, b) = (img1.counts.as_slice(), img2.counts.as_slice());
    let mut sums = (0.0, 0.0);
    for &i in region {
        if i >= a.len() {
            return Err(invalid(format!("region pixel {i} outside a {}-pixel image", a.len())));
        }
        sums.0 += a[i] as f64;
        sums.1 += b[i] as f64;
    }
    Ok(sums)
}

/// Ratio of mean counts over a region that only the false object covers.
pub fn estimate_weight(img1: &CountImage, img2: &CountImage, region: &[usize]) -> Result<f64> {
    let (s1, s2) = region_sums(img1, img2, region)?;
    if s2 == 0.0 {
        return Err(Error::DegenerateRegion("second image has no counts in the weight region".into()));
    }
    Ok(s1 / s2)
}

/// Visibility of the region sums of two images; 0 when both are empty.
pub fn measure_region_visibility(img1: &CountImage, img2: &CountImage, region: &[usize]) -> Result<f64> {
    let (s1, s2) = region_sums(img1, img2, region)?;
    Ok(contrast(s1, s2))
}

fn region_mean(image: &Raster<f64>, region: &[usize], what: &str) -> Result<f64> {
    if region.is_empty() {
        return Err(Error::DegenerateRegion(format!("{what} region is empty")));
    }
    let v = image.as_slice();
    Ok(region.iter().map(|&i| v[i]).sum::<f64>() / region.len() as f64)
}

/// Metrics of `image`, with `dark_mean` taken from a clean reference.
pub fn image_metrics(image: &Raster<f64>, dark_mean: f64, scene: &Scene) -> Result<ImageMetrics> {
    image.ensure_same_shape(scene.mask_true())?;
    let noise_level = region_mean(image, &scene.region(RegionKind::ObjectFree), "object-free")?;
    let signal_mean = region_mean(image, &scene.region(RegionKind::TrueOnly), "true-only")?;
    let residual_false_mean = region_mean(image, &scene.region(RegionKind::FalseOnly), "false-only")?;
    let snr = if noise_level > 0.0 { signal_mean / noise_level } else { f64::INFINITY };
    Ok(ImageMetrics { mean_dark_per_pixel: dark_mean, noise_level, signal_mean, snr, residual_false_mean })
}

/// Metrics of the clean reference and of the recovered image.
pub fn compute_metrics(clean: &CountImage, recovered: &RecoveryResult, scene: &Scene) -> Result<SimulationMetrics> {
    let clean_img = clean.to_f64();
    let dark = region_mean(&clean_img, &scene.region(RegionKind::ObjectFree), "object-free")?;
    Ok(SimulationMetrics {
        clean: image_metrics(&clean_img, dark, scene)?,
        recovered: image_metrics(&recovered.image, dark, scene)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::canonical_states;
    use std::f64::consts::FRAC_PI_4;

    fn diag() -> AnalyzerConfig {
        AnalyzerConfig::pair(FRAC_PI_4, FRAC_PI_4).unwrap()
    }

    fn uniform_full(photons: f64, dark: f64) -> Scene {
        let m = Raster::filled(4, 4, true);
        Scene::new(m.clone(), Raster::filled(4, 4, false), Raster::filled(4, 4, 1.0 / 16.0), photons, dark).unwrap()
    }

    #[test]
    fn expected_counts_examples() {
        let s = canonical_states();
        let scene = uniform_full(1600.0, 0.0);
        let e = expected_counts(&scene, &s.psi1, &Intrusion::none(), &diag()).unwrap();
        assert!(e.as_slice().iter().all(|&v| (v - 1600.0 * 0.5 / 16.0).abs() < 1e-12));

        let all_in = Intrusion::new(s.omega1.clone(), 1.0).unwrap();
        let e = expected_counts(&scene, &s.psi1, &all_in, &diag()).unwrap();
        assert!(e.as_slice().iter().all(|&v| v == 0.0));

        let fig = Scene::default();
        let jam = Intrusion::new(s.omega1.clone(), 0.5).unwrap();
        let e = expected_counts(&fig, &s.psi1, &jam, &diag()).unwrap();
        let lit = fig.illumination().as_slice();
        let dark = fig.dark_per_pixel();
        let i = fig.region(RegionKind::TrueOnly)[0];
        assert!((e.as_slice()[i] - (fig.photons() * lit[i] * 0.25 + dark)).abs() < 1e-9);
        let i = fig.region(RegionKind::FalseOnly)[0];
        assert!((e.as_slice()[i] - (fig.photons() * lit[i] * 0.125 + dark)).abs() < 1e-9);
    }

    #[test]
    fn single_angle_is_rejected() {
        let s = canonical_states();
        let cfg = AnalyzerConfig::single(0.2).unwrap();
        assert!(matches!(
            expected_counts(&Scene::default(), &s.psi1, &Intrusion::none(), &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn sampling_basics() {
        let zero = Raster::filled(5, 5, 0.0);
        assert!(sample_counts(&zero, 9).unwrap().counts().as_slice().iter().all(|&c| c == 0));
        let m = Raster::filled(8, 8, 8.7);
        assert_eq!(sample_counts(&m, 3).unwrap(), sample_counts(&m, 3).unwrap());
        assert_ne!(sample_counts(&m, 3).unwrap(), sample_counts(&m, 4).unwrap());
        assert!(sample_counts(&Raster::filled(2, 2, -1.0), 0).is_err());
    }

    #[test]
    fn blocked_state_leaves_only_dark_counts() {
        let s = canonical_states();
        let scene = Scene::default();
        let (_, j2) = simulate_pair(&scene, &s.psi1, &s.psi2, &Intrusion::none(), &diag(), 1).unwrap();
        let e = expected_counts(&scene, &s.psi2, &Intrusion::none(), &diag()).unwrap();
        assert!(e.as_slice().iter().all(|&v| (v - scene.dark_per_pixel()).abs() < 1e-12));
        assert_eq!(j2.meta.label, "jammed-2");
    }

    #[test]
    fn recovery_examples() {
        let a = CountImage::new(Raster::from_vec(2, 1, vec![5, 1]).unwrap(), ImageMeta::default());
        let b = CountImage::new(Raster::from_vec(2, 1, vec![3, 4]).unwrap(), ImageMeta::default());
        assert_eq!(recover(&a, &b, 1.0).unwrap().image.as_slice(), &[2.0, 3.0]);
        assert!(recover(&a, &a, 1.0).unwrap().image.as_slice().iter().all(|&v| v == 0.0));
        let c = CountImage::new(Raster::filled(1, 2, 0), ImageMeta::default());
        assert!(matches!(recover(&a, &c, 1.0), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn weight_and_visibility_examples() {
        let a = CountImage::new(Raster::from_vec(3, 1, vec![4, 6, 0]).unwrap(), ImageMeta::default());
        let b = CountImage::new(Raster::from_vec(3, 1, vec![2, 3, 0]).unwrap(), ImageMeta::default());
        assert_eq!(estimate_weight(&a, &a, &[0, 1]).unwrap(), 1.0);
        assert_eq!(estimate_weight(&a, &b, &[0, 1]).unwrap(), 2.0);
        assert!(matches!(estimate_weight(&a, &b, &[2]), Err(Error::DegenerateRegion(_))));
        assert!(matches!(estimate_weight(&a, &b, &[]), Err(Error::DegenerateRegion(_))));
        let z = CountImage::new(Raster::filled(3, 1, 0), ImageMeta::default());
        assert_eq!(measure_region_visibility(&a, &z, &[0, 1]).unwrap(), 1.0);
        assert_eq!(measure_region_visibility(&z, &z, &[0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn metrics_on_expectation_maps() {
        let s = canonical_states();
        let scene = Scene::default();
        let clean = expected_counts(&scene, &s.psi1, &Intrusion::none(), &diag()).unwrap();
        let dark = scene.dark_per_pixel();
        let m = image_metrics(&clean, dark, &scene).unwrap();
        assert!((m.noise_level - dark).abs() < 1e-12);
        assert!((m.mean_dark_per_pixel - 8.65).abs() < 0.01);
        assert!(m.snr > 1.0);
    }
}
