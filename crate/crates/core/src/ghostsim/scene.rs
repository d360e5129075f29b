use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::raster::Raster;

/// Default grid side. 34² = 1156 pixels puts 10⁴ dark counts at about 8.65
/// per pixel.
pub const DEFAULT_SIDE: usize = 34;
pub const DEFAULT_PHOTONS: f64 = 1e5;
pub const DEFAULT_DARK_TOTAL: f64 = 1e4;

/// Pixel classes used for metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    /// Transmitting only in the true (Λ) object.
    TrueOnly,
    /// Transmitting only in the intruder's false (T) object.
    FalseOnly,
    /// Both objects overlap.
    Overlap,
    /// Neither object.
    ObjectFree,
}

/// How the photon budget is spread over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IlluminationProfile {
    /// Uniform over the union of both objects, zero elsewhere.
    #[default]
    Objects,
    /// Uniform over every pixel.
    Full,
}

/// Imaging geometry, photon budget and background.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    mask_true: Raster<bool>,
    mask_false: Raster<bool>,
    illumination: Raster<f64>,
    photons: f64,
    dark_total: f64,
}

impl Scene {
    pub fn new(
        mask_true: Raster<bool>,
        mask_false: Raster<bool>,
        illumination: Raster<f64>,
        photons: f64,
        dark_total: f64,
    ) -> Result<Self> {
        mask_true.ensure_same_shape(&mask_false)?;
        mask_true.ensure_same_shape(&illumination)?;
        if illumination.as_slice().iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(invalid("illumination must be finite and non-negative"));
        }
        let total: f64 = illumination.as_slice().iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("illumination must sum to 1, got {total}")));
        }
        if !(photons.is_finite() && photons >= 0.0) {
            return Err(invalid("photon budget must be non-negative"));
        }
        if !(dark_total.is_finite() && dark_total >= 0.0) {
            return Err(invalid("dark count total must be non-negative"));
        }
        Ok(Self { mask_true, mask_false, illumination, photons, dark_total })
    }

    /// Masks with a profile-derived illumination.
    pub fn with_profile(
        mask_true: Raster<bool>,
        mask_false: Raster<bool>,
        profile: IlluminationProfile,
        photons: f64,
        dark_total: f64,
    ) -> Result<Self> {
        mask_true.ensure_same_shape(&mask_false)?;
        let lit = match profile {
            IlluminationProfile::Full => Raster::filled(mask_true.width(), mask_true.height(), true),
            IlluminationProfile::Objects => {
                let (w, h) = mask_true.shape();
                Raster::from_fn(w, h, |x, y| *mask_true.get(x, y) || *mask_false.get(x, y))
            }
        };
        let n = lit.count();
        if n == 0 {
            return Err(Error::DegenerateRegion("nothing to illuminate".into()));
        }
        let illumination = lit.map(|&b| if b { 1.0 / n as f64 } else { 0.0 });
        Self::new(mask_true, mask_false, illumination, photons, dark_total)
    }

    /// Λ and T glyphs on a `width × height` grid.
    pub fn glyphs(width: usize, height: usize, profile: IlluminationProfile, photons: f64, dark_total: f64) -> Result<Self> {
        if width < 8 || height < 8 {
            return Err(invalid("glyph scenes need at least 8x8 pixels"));
        }
        Self::with_profile(lambda_glyph(width, height), t_glyph(width, height), profile, photons, dark_total)
    }

    pub fn width(&self) -> usize {
        self.mask_true.width()
    }

    pub fn height(&self) -> usize {
        self.mask_true.height()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mask_true.shape()
    }

    pub fn pixels(&self) -> usize {
        self.mask_true.len()
    }

    pub fn mask_true(&self) -> &Raster<bool> {
        &self.mask_true
    }

    pub fn mask_false(&self) -> &Raster<bool> {
        &self.mask_false
    }

    pub fn illumination(&self) -> &Raster<f64> {
        &self.illumination
    }

    pub fn photons(&self) -> f64 {
        self.photons
    }

    pub fn dark_total(&self) -> f64 {
        self.dark_total
    }

    /// Expected dark counts on every pixel.
    pub fn dark_per_pixel(&self) -> f64 {
        self.dark_total / self.pixels() as f64
    }

    pub fn region_mask(&self, kind: RegionKind) -> Raster<bool> {
        let (w, h) = self.shape();
        Raster::from_fn(w, h, |x, y| {
            let (t, f) = (*self.mask_true.get(x, y), *self.mask_false.get(x, y));
            match kind {
                RegionKind::TrueOnly => t && !f,
                RegionKind::FalseOnly => f && !t,
                RegionKind::Overlap => t && f,
                RegionKind::ObjectFree => !t && !f,
            }
        })
    }

    /// Pixel indices of a region, in storage order.
    pub fn region(&self, kind: RegionKind) -> Vec<usize> {
        self.region_mask(kind).indices()
    }

    /// SHA-256 over dimensions, masks, illumination bits and rates.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.width() as u64).to_le_bytes());
        h.update((self.height() as u64).to_le_bytes());
        for m in [&self.mask_true, &self.mask_false] {
            h.update(m.as_slice().iter().map(|&b| b as u8).collect::<Vec<_>>());
        }
        for v in self.illumination.as_slice() {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(self.photons.to_bits().to_le_bytes());
        h.update(self.dark_total.to_bits().to_le_bytes());
        hex::encode(h.finalize())
    }
}

impl Default for Scene {
    fn default() -> Self {
        Self::glyphs(DEFAULT_SIDE, DEFAULT_SIDE, IlluminationProfile::Objects, DEFAULT_PHOTONS, DEFAULT_DARK_TOTAL)
            .expect("default scene is valid")
    }
}

// Glyphs are drawn in unit coordinates (pixel centres) so they scale with the
// grid. Both sit in the central region and cross near the top.

fn unit(x: usize, y: usize, w: usize, h: usize) -> (f64, f64) {
    ((x as f64 + 0.5) / w as f64, (y as f64 + 0.5) / h as f64)
}

/// Inverted V with its apex near the top centre.
pub fn lambda_glyph(width: usize, height: usize) -> Raster<bool> {
    const TOP: f64 = 8.0 / 34.0;
    const BOTTOM: f64 = 28.0 / 34.0;
    const SLOPE: f64 = 0.45;
    let half = 1.5 / width as f64;
    Raster::from_fn(width, height, |x, y| {
        let (u, v) = unit(x, y, width, height);
        if !(TOP..BOTTOM).contains(&v) {
            return false;
        }
        let spread = (v - TOP) * SLOPE;
        (u - (0.5 - spread)).abs() < half || (u - (0.5 + spread)).abs() < half
    })
}

/// Block T: a bar across the top and a centred stem.
pub fn t_glyph(width: usize, height: usize) -> Raster<bool> {
    Raster::from_fn(width, height, |x, y| {
        let (u, v) = unit(x, y, width, height);
        let bar = (8.0 / 34.0..12.0 / 34.0).contains(&v) && (7.0 / 34.0..27.0 / 34.0).contains(&u);
        let stem = (12.0 / 34.0..28.0 / 34.0).contains(&v) && (15.0 / 34.0..19.0 / 34.0).contains(&u);
        bar || stem
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_regions_are_populated() {
        let s = Scene::default();
        assert_eq!(s.pixels(), 1156);
        assert!((s.dark_per_pixel() - 8.650519).abs() < 1e-6);
        let sizes: Vec<usize> = [RegionKind::TrueOnly, RegionKind::FalseOnly, RegionKind::Overlap, RegionKind::ObjectFree]
            .iter()
            .map(|&k| s.region(k).len())
            .collect();
        assert!(sizes.iter().all(|&n| n >= 10), "{sizes:?}");
        assert_eq!(sizes.iter().sum::<usize>(), 1156);
        let lit: f64 = s.illumination().as_slice().iter().sum();
        assert!((lit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let m = Raster::filled(4, 4, false);
        let bad = Raster::filled(4, 4, 0.1);
        assert!(Scene::new(m.clone(), m.clone(), bad, 1.0, 0.0).is_err());
        let ok = Raster::filled(4, 4, 1.0 / 16.0);
        assert!(Scene::new(m.clone(), m.clone(), ok.clone(), -1.0, 0.0).is_err());
        assert!(Scene::new(m.clone(), Raster::filled(3, 4, false), ok, 1.0, 0.0).is_err());
        assert!(matches!(
            Scene::with_profile(m.clone(), m, IlluminationProfile::Objects, 1.0, 0.0),
            Err(Error::DegenerateRegion(_))
        ));
    }

    #[test]
    fn digest_tracks_content() {
        let a = Scene::default();
        let b = Scene::glyphs(34, 34, IlluminationProfile::Full, DEFAULT_PHOTONS, DEFAULT_DARK_TOTAL).unwrap();
        assert_eq!(a.digest(), Scene::default().digest());
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
