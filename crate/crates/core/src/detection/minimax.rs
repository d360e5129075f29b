//! Worst-case separation between clean and jammed visibility.
//!
//! For fixed analyzer angles the intruder chooses a Bell-diagonal state
//! `(μx, μy, μz)` and an intercept fraction `r` that make the visibility drop
//! `V(ρ₁, ρ₂) − V(ρ₁′, ρ₂′)` as small as possible. The imagers then choose the
//! angles that make that minimum as large as possible. When a target level of
//! jamming is given, the intruder is restricted to scenarios whose level lies
//! within `±level_band` of the target.
//!
//! Two monotonicity facts shape the search. For fixed angles and intruder
//! state both the level of jamming and the visibility drop are non-decreasing
//! in `r`, so the intruder's best `r` is the smallest one that reaches the
//! lower edge of the band; it is found by bisection. And `μy` never enters a
//! coincidence probability, so the intruder only has to search the square
//! `|μx|, |μz| ≤ 1/4` (the shadow of the positivity tetrahedron).
//!
//! Both nested levels use a coarse grid followed by Nelder–Mead refinement
//! from the best cell. Grid evaluation is parallel; the reduction keeps the
//! first best point in grid order, so results do not depend on thread count.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{contrast, detection_probability, false_alarm_probability, jammed_visibility_single_photon};
use super::{NoiseModel, TestParams};
use crate::error::{invalid, Error, Result};
use crate::optimize::{linspace, nelder_mead, NelderMeadOptions};
use crate::polarization::{self, AnalyzerConfig, BellDiagonalParams, PolarizationState, PureQubit};

/// Resolution and tolerances of the nested search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    /// Grid points per `μ` axis over `[−1/4, 1/4]`, clipped to the tetrahedron.
    pub mu_points: usize,
    /// Grid points per analyzer angle over `[0, π]`.
    pub theta_points: usize,
    /// Half-width of the accepted band around a target jamming level.
    pub level_band: f64,
    /// Objective tolerance of the Nelder–Mead refinements.
    pub refine_tol: f64,
    pub max_refine_evals: usize,
    /// Range of intercept fractions available to the intruder.
    pub r_bounds: (f64, f64),
    /// Bracket width at which the bisection on `r` stops.
    pub root_tol: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            mu_points: 17,
            theta_points: 33,
            level_band: 0.01,
            refine_tol: 1e-6,
            max_refine_evals: 400,
            r_bounds: (0.0, 1.0),
            root_tol: 1e-13,
        }
    }
}

impl SearchSettings {
    pub fn validate(&self) -> Result<()> {
        if self.mu_points < 8 || self.theta_points < 8 {
            return Err(invalid("search grids need at least 8 points per axis"));
        }
        if !(self.level_band.is_finite() && self.level_band >= 0.0) {
            return Err(invalid("level band must be a non-negative number"));
        }
        if !(self.refine_tol > 0.0 && self.root_tol > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        let (lo, hi) = self.r_bounds;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(invalid(format!("intercept bounds must satisfy 0 <= lo <= hi <= 1, got {lo}..{hi}")));
        }
        Ok(())
    }

    fn nm(&self) -> NelderMeadOptions {
        NelderMeadOptions { ftol: self.refine_tol, xtol: self.refine_tol, max_evals: self.max_refine_evals }
    }
}

/// The intruder's best response at fixed analyzer angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerMinimum {
    /// Visibility drop `V(ρ₁, ρ₂) − V(ρ₁′, ρ₂′)`.
    pub gap: f64,
    pub intruder: BellDiagonalParams,
    pub r: f64,
    pub level: f64,
    pub v_clean: f64,
    pub v_jammed: f64,
}

/// Result of the full min–max search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    /// `gap · √M / σ`.
    pub d: f64,
    pub gap: f64,
    /// Maximizing analyzer angles, reduced to `[0, π)`.
    pub thetas: [f64; 2],
    pub intruder: BellDiagonalParams,
    pub r: f64,
    pub level: f64,
    pub v_clean: f64,
    pub v_jammed: f64,
    pub target_level: Option<f64>,
    pub settings: SearchSettings,
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    p1: f64,
    p2: f64,
    ss: f64,
    cc: f64,
}

impl Geometry {
    fn new(rho1: &PolarizationState, rho2: &PolarizationState, t1: f64, t2: f64) -> Result<Self> {
        let cfg = AnalyzerConfig::pair(t1, t2)?;
        let (s1, c1) = (2.0 * t1).sin_cos();
        let (s2, c2) = (2.0 * t2).sin_cos();
        Ok(Self {
            p1: polarization::detection_probability(rho1, &cfg)?,
            p2: polarization::detection_probability(rho2, &cfg)?,
            ss: s1 * s2,
            cc: c1 * c2,
        })
    }

    fn intruder_probability(&self, mu_x: f64, mu_z: f64) -> f64 {
        (0.25 + mu_x * self.ss + mu_z * self.cc).clamp(0.0, 1.0)
    }

    fn jammed(&self, pe: f64, r: f64) -> (f64, f64) {
        ((1.0 - r) * self.p1 + r * pe, (1.0 - r) * self.p2 + r * pe)
    }

    fn level(&self, pe: f64, r: f64) -> f64 {
        let (q1, q2) = self.jammed(pe, r);
        contrast(self.p1, q1).max(contrast(self.p2, q2))
    }

    fn gap(&self, pe: f64, r: f64) -> f64 {
        let (q1, q2) = self.jammed(pe, r);
        contrast(self.p1, self.p2) - contrast(q1, q2)
    }

    /// Smallest admissible `r` for an intruder probability `pe`.
    fn best_r(&self, pe: f64, target: Option<f64>, s: &SearchSettings) -> Option<f64> {
        let (lo, hi) = s.r_bounds;
        let Some(level) = target else { return Some(lo) };
        let (lower, upper) = (level - s.level_band, level + s.level_band);
        let at_lo = self.level(pe, lo);
        if at_lo >= lower {
            return (at_lo <= upper).then_some(lo);
        }
        if self.level(pe, hi) < lower {
            return None;
        }
        let (mut a, mut b) = (lo, hi);
        while b - a > s.root_tol {
            let m = 0.5 * (a + b);
            if self.level(pe, m) >= lower {
                b = m;
            } else {
                a = m;
            }
        }
        (self.level(pe, b) <= upper).then_some(b)
    }

    fn objective(&self, mu_x: f64, mu_z: f64, target: Option<f64>, s: &SearchSettings) -> Option<(f64, f64)> {
        let pe = self.intruder_probability(mu_x, mu_z);
        self.best_r(pe, target, s).map(|r| (self.gap(pe, r), r))
    }
}

/// `(μx, μz)` cells of the tetrahedron grid. Several grid points share a
/// shadow; only the first in `(x, y, z)` order is kept.
fn intruder_grid(points: usize) -> Vec<(f64, f64)> {
    let axis = linspace(-0.25, 0.25, points);
    let mut out = Vec::new();
    for &mx in &axis {
        for &mz in &axis {
            if axis.iter().any(|&my| BellDiagonalParams { mu_x: mx, mu_y: my, mu_z: mz }.is_positive()) {
                out.push((mx, mz));
            }
        }
    }
    out
}

fn clamp_square(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(-0.25, 0.25);
    }
}

fn witness_params(mu_x: f64, mu_z: f64) -> BellDiagonalParams {
    let (lo, hi) = BellDiagonalParams::mu_y_range(mu_x, mu_z).unwrap_or((0.0, 0.0));
    BellDiagonalParams { mu_x, mu_y: 0.5 * (lo + hi), mu_z }
}

fn inner_at(geo: &Geometry, grid: &[(f64, f64)], target: Option<f64>, s: &SearchSettings) -> Option<InnerMinimum> {
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for &(mx, mz) in grid {
        if let Some((gap, r)) = geo.objective(mx, mz, target, s) {
            if best.map_or(true, |b| gap < b.0) {
                best = Some((gap, mx, mz, r));
            }
        }
    }
    let (mut gap, mut mx, mut mz, mut r) = best?;

    let step = 0.5 / (s.mu_points - 1) as f64;
    let refined = nelder_mead(
        |x| geo.objective(x[0], x[1], target, s).map_or(f64::INFINITY, |(g, _)| g),
        clamp_square,
        &[mx, mz],
        &[step, step],
        s.nm(),
    );
    if refined.value < gap {
        if let Some((g, rr)) = geo.objective(refined.x[0], refined.x[1], target, s) {
            (gap, mx, mz, r) = (g, refined.x[0], refined.x[1], rr);
        }
    }

    let pe = geo.intruder_probability(mx, mz);
    let (q1, q2) = geo.jammed(pe, r);
    Some(InnerMinimum {
        gap,
        intruder: witness_params(mx, mz),
        r,
        level: geo.level(pe, r),
        v_clean: contrast(geo.p1, geo.p2),
        v_jammed: contrast(q1, q2),
    })
}

/// The intruder's best response at the given analyzer angles, or `None` when
/// no admissible scenario reaches the target level.
pub fn inner_minimum(
    rho1: &PolarizationState,
    rho2: &PolarizationState,
    thetas: [f64; 2],
    target_level: Option<f64>,
    search: &SearchSettings,
) -> Result<Option<InnerMinimum>> {
    search.validate()?;
    check_pair(rho1, rho2)?;
    let geo = Geometry::new(rho1, rho2, thetas[0], thetas[1])?;
    Ok(inner_at(&geo, &intruder_grid(search.mu_points), target_level, search))
}

fn check_pair(rho1: &PolarizationState, rho2: &PolarizationState) -> Result<()> {
    if rho1.photons() != 2 || rho2.photons() != 2 {
        return Err(invalid("worst-case search needs two-photon states"));
    }
    Ok(())
}

/// Max over analyzer angles of the intruder's minimum visibility drop, in
/// units of the visibility noise.
pub fn worst_case_d(
    rho1: &PolarizationState,
    rho2: &PolarizationState,
    target_level: Option<f64>,
    noise: &NoiseModel,
    search: &SearchSettings,
) -> Result<WorstCase> {
    search.validate()?;
    check_pair(rho1, rho2)?;
    if let Some(l) = target_level {
        if !(0.0..=1.0).contains(&l) {
            return Err(invalid(format!("target level must be in [0, 1], got {l}")));
        }
    }
    let grid = intruder_grid(search.mu_points);
    let thetas = linspace(0.0, PI, search.theta_points);
    let n = thetas.len();

    let cells: Vec<Option<InnerMinimum>> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let geo = Geometry::new(rho1, rho2, thetas[idx / n], thetas[idx % n])?;
            Ok(inner_at(&geo, &grid, target_level, search))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, InnerMinimum)> = None;
    for (idx, cell) in cells.into_iter().enumerate() {
        if let Some(inner) = cell {
            if best.map_or(true, |(_, b)| inner.gap > b.gap) {
                best = Some((idx, inner));
            }
        }
    }
    let Some((idx, mut inner)) = best else {
        return Err(Error::InfeasibleLevel { level: target_level.unwrap_or(0.0), band: search.level_band });
    };
    let mut angles = [thetas[idx / n], thetas[idx % n]];

    let step = PI / (n - 1) as f64;
    let refined = nelder_mead(
        |x| match Geometry::new(rho1, rho2, x[0], x[1]) {
            Ok(geo) => inner_at(&geo, &grid, target_level, search).map_or(f64::INFINITY, |m| -m.gap),
            Err(_) => f64::INFINITY,
        },
        |_| {},
        &angles,
        &[step, step],
        search.nm(),
    );
    if -refined.value > inner.gap {
        let geo = Geometry::new(rho1, rho2, refined.x[0], refined.x[1])?;
        if let Some(better) = inner_at(&geo, &grid, target_level, search) {
            if better.gap > inner.gap {
                inner = better;
                angles = [refined.x[0], refined.x[1]];
            }
        }
    }

    let scale = (noise.trials() as f64).sqrt() / noise.sigma();
    Ok(WorstCase {
        d: inner.gap * scale,
        gap: inner.gap,
        thetas: angles.map(polarization::normalize_angle),
        intruder: inner.intruder,
        r: inner.r,
        level: inner.level,
        v_clean: inner.v_clean,
        v_jammed: inner.v_jammed,
        target_level,
        settings: *search,
    })
}

/// Intruder's best pure single-photon state against the pair `|H⟩, |V⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePhotonWitness {
    pub theta: f64,
    pub r: f64,
    pub intruder: PureQubit,
    /// `⟨a(θ)|ρᴱ|a(θ)⟩`
    pub overlap: f64,
    pub v_clean: f64,
    pub v_jammed: f64,
    pub gap: f64,
}

fn single_photon_overlap(theta: f64, alpha: f64, beta: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    let re = ct * ca + st * sa * beta.cos();
    let im = st * sa * beta.sin();
    (re * re + im * im).clamp(0.0, 1.0)
}

/// Minimize the visibility drop over pure intruder states `(α, β)` at a
/// single analyzer angle and fixed intercept fraction.
pub fn single_photon_inner(theta: f64, r: f64, search: &SearchSettings) -> Result<SinglePhotonWitness> {
    search.validate()?;
    if !(0.0..=1.0).contains(&r) {
        return Err(invalid(format!("intercept fraction must be in [0, 1], got {r}")));
    }
    let cfg = AnalyzerConfig::single(theta)?;
    let h = PureQubit::new(0.0, 0.0).density();
    let v = PureQubit::new(PI / 2.0, 0.0).density();
    let v_clean = contrast(
        polarization::detection_probability(&h, &cfg)?,
        polarization::detection_probability(&v, &cfg)?,
    );
    let gap = |alpha: f64, beta: f64| {
        let o = single_photon_overlap(theta, alpha, beta);
        jammed_visibility_single_photon(v_clean, r, o).map_or(f64::INFINITY, |vj| v_clean - vj)
    };

    let alphas = linspace(0.0, PI, search.theta_points);
    let betas = linspace(0.0, 2.0 * PI, search.mu_points);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &a in &alphas {
        for &b in &betas {
            let g = gap(a, b);
            if g < best.0 {
                best = (g, a, b);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::DegenerateChannel);
    }
    let steps = [PI / (search.theta_points - 1) as f64, 2.0 * PI / (search.mu_points - 1) as f64];
    let m = nelder_mead(|x| gap(x[0], x[1]), |_| {}, &[best.1, best.2], &steps, search.nm());
    if m.value < best.0 {
        best = (m.value, m.x[0], m.x[1]);
    }
    let (g, alpha, beta) = best;
    Ok(SinglePhotonWitness {
        theta: cfg.thetas()[0],
        r,
        intruder: PureQubit::new(alpha, beta),
        overlap: single_photon_overlap(theta, alpha, beta),
        v_clean,
        v_jammed: v_clean - g,
        gap: g,
    })
}

/// Worst case of the single-photon game over a grid of analyzer angles.
/// Returns `d` and the witness at the maximizing angle.
pub fn single_photon_worst_case(r: f64, noise: &NoiseModel, search: &SearchSettings) -> Result<(f64, SinglePhotonWitness)> {
    let thetas = linspace(0.0, PI, search.theta_points);
    let witnesses = thetas
        .par_iter()
        .map(|&t| single_photon_inner(t, r, search))
        .collect::<Result<Vec<_>>>()?;
    let mut best = witnesses[0];
    for w in &witnesses[1..] {
        if w.gap > best.gap {
            best = *w;
        }
    }
    Ok((best.gap * (noise.trials() as f64).sqrt() / noise.sigma(), best))
}

/// Detection and false-alarm probability at one jamming level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveValue {
    pub d: f64,
    pub p_detect: f64,
    pub p_false_alarm: f64,
    pub worst: WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub level: f64,
    /// `None` when no intruder scenario reaches this level.
    pub value: Option<CurveValue>,
}

/// Worst-case detection and false-alarm probabilities along a list of
/// jamming levels.
pub fn detection_curve(
    pair: (&PolarizationState, &PolarizationState),
    levels: &[f64],
    noise: &NoiseModel,
    params: &TestParams,
    search: &SearchSettings,
) -> Result<Vec<CurvePoint>> {
    if levels.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("jamming levels must be sorted"));
    }
    if levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(invalid("jamming levels must lie in [0, 1]"));
    }
    levels
        .iter()
        .map(|&level| match worst_case_d(pair.0, pair.1, Some(level), noise, search) {
            Ok(worst) => Ok(CurvePoint {
                level,
                value: Some(CurveValue {
                    d: worst.d,
                    p_detect: detection_probability(worst.d, params),
                    p_false_alarm: false_alarm_probability(worst.d, params),
                    worst,
                }),
            }),
            Err(Error::InfeasibleLevel { .. }) => Ok(CurvePoint { level, value: None }),
            Err(e) => Err(e),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::canonical_states;
    use std::f64::consts::FRAC_PI_4;

    fn noise() -> NoiseModel {
        NoiseModel::new(0.1, 1).unwrap()
    }

    fn quick() -> SearchSettings {
        SearchSettings { mu_points: 9, theta_points: 9, ..Default::default() }
    }

    #[test]
    fn grid_covers_square() {
        // the shadow of the tetrahedron is the whole square
        assert_eq!(intruder_grid(17).len(), 17 * 17);
    }

    #[test]
    fn settings_validation() {
        assert!(SearchSettings { mu_points: 7, ..Default::default() }.validate().is_err());
        assert!(SearchSettings { r_bounds: (0.5, 0.2), ..Default::default() }.validate().is_err());
        assert!(SearchSettings::default().validate().is_ok());
    }

    #[test]
    fn no_interception_means_no_separation() {
        let s = canonical_states();
        let search = SearchSettings { r_bounds: (0.0, 0.0), ..quick() };
        let w = worst_case_d(&s.psi1, &s.psi2, None, &noise(), &search).unwrap();
        assert_eq!(w.d, 0.0);
        let w = worst_case_d(&s.psi1, &s.psi2, None, &noise(), &quick()).unwrap();
        assert_eq!(w.d, 0.0);
        assert_eq!(w.r, 0.0);
    }

    #[test]
    fn level_zero_gives_zero() {
        let s = canonical_states();
        let w = worst_case_d(&s.omega1, &s.omega2, Some(0.0), &noise(), &quick()).unwrap();
        assert_eq!(w.d, 0.0);
    }

    #[test]
    fn infeasible_when_r_capped() {
        let s = canonical_states();
        let search = SearchSettings { r_bounds: (0.0, 0.0), ..quick() };
        let err = worst_case_d(&s.psi1, &s.psi2, Some(0.5), &noise(), &search);
        assert!(matches!(err, Err(Error::InfeasibleLevel { .. })));
    }

    #[test]
    fn inner_respects_band() {
        let s = canonical_states();
        let m = inner_minimum(&s.psi1, &s.omega1, [0.3, 1.2], Some(0.2), &SearchSettings::default())
            .unwrap()
            .unwrap();
        assert!((m.level - 0.2).abs() <= 0.01 + 1e-12, "{m:?}");
        assert!(m.intruder.is_positive());
        assert!(m.gap >= 0.0);
    }

    #[test]
    fn single_photon_orthogonal_witness() {
        let w = single_photon_inner(0.3, 0.5, &SearchSettings::default()).unwrap();
        assert!(w.gap < 1e-6, "{w:?}");
        assert!(w.overlap < 1e-5);
        let at_diag = single_photon_inner(FRAC_PI_4, 0.5, &SearchSettings::default()).unwrap();
        assert!(at_diag.v_clean < 1e-15);
    }

    #[test]
    fn curve_rejects_unsorted_levels() {
        let s = canonical_states();
        let res = detection_curve((&s.psi1, &s.psi2), &[0.2, 0.1], &noise(), &TestParams::default(), &quick());
        assert!(res.is_err());
    }
}
