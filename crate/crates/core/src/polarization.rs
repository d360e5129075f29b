//! Polarization states, analyzers and detection probabilities.
//!
//! States are dense density matrices over `n` photons in the horizontal /
//! vertical basis. The computational basis is ordered with the first photon
//! as the most significant bit, so for two photons the order is
//! `(HH, HV, VH, VV)` and `H` is the first basis vector of each factor.
//!
//! An analyzer at angle `θ` transmits `|a(θ)⟩ = cos θ |H⟩ + sin θ |V⟩`. The
//! probability of an `n`-fold detection behind analyzers `θ₁ … θₙ` is
//! `⟨a(θ₁)…a(θₙ)| ρ |a(θ₁)…a(θₙ)⟩`.
//!
//! Two-photon states whose single-photon marginals are maximally mixed are
//! handled through [`BellDiagonalParams`], the triple `(μx, μy, μz)` of
//! `ρ = I/4 + μx σx⊗σx + μy σy⊗σy + μz σz⊗σz`. For that family the
//! coincidence probability has the closed form
//! [`coincidence_probability_bd`], which never depends on `μy`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, BellLabel, Error, Result};

/// Tolerance on Hermiticity and unit trace.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Most negative eigenvalue still accepted as round-off.
pub const EIGEN_TOL: f64 = -1e-10;
/// Largest imaginary part tolerated in a detection amplitude.
pub const IMAG_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Transmission axis of a linear polarizer at `theta` radians from horizontal.
pub fn analyzer_vector(theta: f64) -> Result<[f64; 2]> {
    if !theta.is_finite() {
        return Err(invalid(format!("analyzer angle must be finite, got {theta}")));
    }
    Ok([theta.cos(), theta.sin()])
}

/// Reduce an angle to `[0, π)`, the period of a polarizer.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// One analyzer angle per photon.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzerConfig {
    thetas: Vec<f64>,
}

impl AnalyzerConfig {
    pub fn new(thetas: impl IntoIterator<Item = f64>) -> Result<Self> {
        let thetas = thetas
            .into_iter()
            .map(|t| {
                if t.is_finite() {
                    Ok(normalize_angle(t))
                } else {
                    Err(invalid(format!("analyzer angle must be finite, got {t}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if thetas.is_empty() {
            return Err(invalid("analyzer configuration needs at least one angle"));
        }
        Ok(Self { thetas })
    }

    pub fn single(theta: f64) -> Result<Self> {
        Self::new([theta])
    }

    pub fn pair(theta1: f64, theta2: f64) -> Result<Self> {
        Self::new([theta1, theta2])
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn arity(&self) -> usize {
        self.thetas.len()
    }

    /// The product vector `|a(θ₁)⟩ ⊗ … ⊗ |a(θₙ)⟩` in the computational basis.
    pub fn product_vector(&self) -> DVector<f64> {
        let n = self.thetas.len();
        let axes: Vec<[f64; 2]> = self.thetas.iter().map(|t| [t.cos(), t.sin()]).collect();
        DVector::from_fn(1 << n, |idx, _| {
            axes.iter().enumerate().fold(1.0, |acc, (k, a)| {
                let bit = (idx >> (n - 1 - k)) & 1;
                acc * a[bit]
            })
        })
    }
}

/// `cos α |H⟩ + e^{iβ} sin α |V⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureQubit {
    pub alpha: f64,
    pub beta: f64,
}

impl PureQubit {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [
            Complex64::new(self.alpha.cos(), 0.0),
            Complex64::from_polar(self.alpha.sin(), self.beta),
        ]
    }

    pub fn density(&self) -> PolarizationState {
        let [h, v] = self.amplitudes();
        let psi = DVector::from_vec(vec![h, v]);
        PolarizationState::from_pure(&psi).expect("a unit qubit is a valid state")
    }
}

/// A validated `n`-photon polarization density matrix.
///
/// Hermitian and trace one to [`HERMITIAN_TOL`], eigenvalues at least
/// [`EIGEN_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationState {
    rho: DMatrix<Complex64>,
    photons: usize,
}

impl PolarizationState {
    /// Validate `rho` and wrap it. The dimension must be a power of two.
    pub fn from_density(rho: DMatrix<Complex64>) -> Result<Self> {
        let dim = rho.nrows();
        if dim != rho.ncols() || dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "density matrix must be square with power-of-two dimension, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        let herm_err = (&rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm_err:e})")));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > HERMITIAN_TOL || trace.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let min_eig = rho.clone().symmetric_eigen().eigenvalues.min();
        if min_eig < EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        let photons = dim.trailing_zeros() as usize;
        Ok(Self { rho, photons })
    }

    /// Projector onto a normalized pure state vector.
    pub fn from_pure(psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("state vector has norm {norm}")));
        }
        Self::from_density(psi * psi.adjoint())
    }

    pub fn maximally_mixed(photons: usize) -> Self {
        let dim = 1usize << photons;
        Self {
            rho: DMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0),
            photons,
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.rho.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `Tr(ρ O)`, real part.
    pub fn expectation(&self, observable: &DMatrix<Complex64>) -> f64 {
        (&self.rho * observable).trace().re
    }

    /// Marginal state of photon `keep` (0-based) for a two-photon state.
    pub fn reduced(&self, keep: usize) -> Result<PolarizationState> {
        if self.photons != 2 || keep > 1 {
            return Err(invalid("reduced() is defined for photon 0 or 1 of a two-photon state"));
        }
        let mut out = DMatrix::from_element(2, 2, ZERO);
        for a in 0..2 {
            for b in 0..2 {
                for t in 0..2 {
                    let (i, j) = if keep == 0 { (2 * a + t, 2 * b + t) } else { (2 * t + a, 2 * t + b) };
                    out[(a, b)] += self.rho[(i, j)];
                }
            }
        }
        Ok(Self { rho: out, photons: 1 })
    }

    /// `⟨ψ|ρ|ψ⟩` for a pure state vector of matching dimension.
    pub fn overlap(&self, psi: &DVector<Complex64>) -> f64 {
        (psi.adjoint() * &self.rho * psi)[(0, 0)].re
    }
}

/// Probability of an all-photon detection behind the analyzers in `config`.
///
/// Errors when the number of angles differs from the photon number, or when
/// the sandwich has an imaginary part of at least [`IMAG_TOL`].
pub fn detection_probability(state: &PolarizationState, config: &AnalyzerConfig) -> Result<f64> {
    if config.arity() != state.photons() {
        return Err(invalid(format!(
            "analyzer arity {} does not match photon number {}",
            config.arity(),
            state.photons()
        )));
    }
    let v = config.product_vector();
    let rho = state.matrix();
    let mut amp = ZERO;
    for i in 0..v.len() {
        if v[i] == 0.0 {
            continue;
        }
        for j in 0..v.len() {
            amp += rho[(i, j)] * (v[i] * v[j]);
        }
    }
    if amp.im.abs() >= IMAG_TOL {
        return Err(Error::CorruptedState { imaginary: amp.im });
    }
    Ok(amp.re.clamp(0.0, 1.0))
}

/// Pauli matrices in the `(H, V)` basis.
pub fn pauli(axis: Axis) -> DMatrix<Complex64> {
    match axis {
        Axis::X => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Axis::Y => DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Axis::Z => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// `σ ⊗ σ` for one axis.
pub fn correlator(axis: Axis) -> DMatrix<Complex64> {
    let s = pauli(axis);
    s.kronecker(&s)
}

/// Correlation triple of a Bell-diagonal two-photon state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonalParams {
    pub mu_x: f64,
    pub mu_y: f64,
    pub mu_z: f64,
}

impl BellDiagonalParams {
    /// Validated constructor; fails outside the positivity tetrahedron.
    pub fn new(mu_x: f64, mu_y: f64, mu_z: f64) -> Result<Self> {
        let p = Self { mu_x, mu_y, mu_z };
        if !(mu_x.is_finite() && mu_y.is_finite() && mu_z.is_finite()) {
            return Err(invalid("Bell-diagonal parameters must be finite"));
        }
        if let Some((label, value)) = p
            .eigenvalues()
            .into_iter()
            .find(|&(_, v)| v < EIGEN_TOL)
        {
            return Err(Error::NotPositive { label, value });
        }
        Ok(p)
    }

    /// Eigenvalues of the state, each paired with its Bell eigenvector.
    pub fn eigenvalues(&self) -> [(BellLabel, f64); 4] {
        let Self { mu_x: x, mu_y: y, mu_z: z } = *self;
        [
            (BellLabel::PhiPlus, 0.25 + x - y + z),
            (BellLabel::PhiMinus, 0.25 - x + y + z),
            (BellLabel::PsiPlus, 0.25 + x + y - z),
            (BellLabel::PsiMinus, 0.25 - x - y - z),
        ]
    }

    pub fn is_positive(&self) -> bool {
        self.eigenvalues().iter().all(|&(_, v)| v >= EIGEN_TOL)
    }

    /// Interval of `μy` that keeps `(μx, ·, μz)` positive. Non-empty exactly
    /// when `|μx|, |μz| ≤ 1/4`.
    pub fn mu_y_range(mu_x: f64, mu_z: f64) -> Option<(f64, f64)> {
        let lo = (mu_x - mu_z).abs() - 0.25;
        let hi = 0.25 - (mu_x + mu_z).abs();
        (lo <= hi + 1e-15).then_some((lo, hi.max(lo)))
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.mu_x, self.mu_y, self.mu_z]
    }
}

/// `I/4 + μx σx⊗σx + μy σy⊗σy + μz σz⊗σz`.
pub fn bell_diagonal_state(params: &BellDiagonalParams) -> Result<PolarizationState> {
    let p = BellDiagonalParams::new(params.mu_x, params.mu_y, params.mu_z)?;
    let mut rho = DMatrix::<Complex64>::identity(4, 4) * Complex64::new(0.25, 0.0);
    for (axis, mu) in Axis::ALL.into_iter().zip(p.as_array()) {
        rho += correlator(axis) * Complex64::new(mu, 0.0);
    }
    PolarizationState::from_density(rho)
}

/// Closed-form coincidence probability for a Bell-diagonal state.
pub fn coincidence_probability_bd(params: &BellDiagonalParams, theta1: f64, theta2: f64) -> f64 {
    let (s1, c1) = (2.0 * theta1).sin_cos();
    let (s2, c2) = (2.0 * theta2).sin_cos();
    0.25 + params.mu_x * s1 * s2 + params.mu_z * c1 * c2
}

/// `(1 − r)·legit + r·intruder`.
pub fn mix(legit: &PolarizationState, intruder: &PolarizationState, r: f64) -> Result<PolarizationState> {
    if !(0.0..=1.0).contains(&r) {
        return Err(invalid(format!("mixing fraction must be in [0, 1], got {r}")));
    }
    if legit.dim() != intruder.dim() {
        return Err(invalid("cannot mix states of different photon number"));
    }
    let rho = legit.matrix() * Complex64::new(1.0 - r, 0.0) + intruder.matrix() * Complex64::new(r, 0.0);
    PolarizationState::from_density(rho)
}

/// The four reference states used by the legitimate imagers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedState {
    /// `(|HH⟩ + |VV⟩)/√2`
    Psi1,
    /// `(|HH⟩ − |VV⟩)/√2`
    Psi2,
    /// `½(|HH⟩⟨HH| + |VV⟩⟨VV|)`
    Omega1,
    /// `½(|DD⟩⟨DD| + |AA⟩⟨AA|)` with diagonal / antidiagonal photons.
    Omega2,
}

impl NamedState {
    pub const ALL: [NamedState; 4] = [NamedState::Psi1, NamedState::Psi2, NamedState::Omega1, NamedState::Omega2];

    pub fn name(&self) -> &'static str {
        match self {
            NamedState::Psi1 => "psi1",
            NamedState::Psi2 => "psi2",
            NamedState::Omega1 => "omega1",
            NamedState::Omega2 => "omega2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name().eq_ignore_ascii_case(name))
    }

    pub fn state(&self) -> PolarizationState {
        let c = |x: f64| Complex64::new(x, 0.0);
        let h = FRAC_1_SQRT_2;
        match self {
            NamedState::Psi1 => {
                PolarizationState::from_pure(&DVector::from_vec(vec![c(h), ZERO, ZERO, c(h)]))
            }
            NamedState::Psi2 => {
                PolarizationState::from_pure(&DVector::from_vec(vec![c(h), ZERO, ZERO, c(-h)]))
            }
            NamedState::Omega1 => {
                let mut rho = DMatrix::from_element(4, 4, ZERO);
                rho[(0, 0)] = c(0.5);
                rho[(3, 3)] = c(0.5);
                PolarizationState::from_density(rho)
            }
            NamedState::Omega2 => {
                let dd = DVector::from_vec(vec![c(0.5), c(0.5), c(0.5), c(0.5)]);
                let aa = DVector::from_vec(vec![c(0.5), c(-0.5), c(-0.5), c(0.5)]);
                let rho = (&dd * dd.adjoint() + &aa * aa.adjoint()) * c(0.5);
                PolarizationState::from_density(rho)
            }
        }
        .expect("reference states are valid")
    }
}

/// The canonical states `ψ₁, ψ₂, ω₁, ω₂`.
#[derive(Debug, Clone)]
pub struct CanonicalStates {
    pub psi1: PolarizationState,
    pub psi2: PolarizationState,
    pub omega1: PolarizationState,
    pub omega2: PolarizationState,
}

pub fn canonical_states() -> CanonicalStates {
    CanonicalStates {
        psi1: NamedState::Psi1.state(),
        psi2: NamedState::Psi2.state(),
        omega1: NamedState::Omega1.state(),
        omega2: NamedState::Omega2.state(),
    }
}

/// Two-photon correlations `μk = Tr(ρ σk⊗σk)/4` and the single-photon Bloch
/// vectors left over. Both Bloch vectors vanish for Bell-diagonal states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlations {
    pub mu: [f64; 3],
    pub bloch_first: [f64; 3],
    pub bloch_second: [f64; 3],
}

impl Correlations {
    /// Largest magnitude among the local Bloch components.
    pub fn local_residual(&self) -> f64 {
        self.bloch_first
            .iter()
            .chain(self.bloch_second.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn params(&self) -> Result<BellDiagonalParams> {
        BellDiagonalParams::new(self.mu[0], self.mu[1], self.mu[2])
    }
}

pub fn extract_correlations(state: &PolarizationState) -> Result<Correlations> {
    if state.photons() != 2 {
        return Err(invalid("correlation extraction needs a two-photon state"));
    }
    let id = DMatrix::<Complex64>::identity(2, 2);
    let mut out = Correlations { mu: [0.0; 3], bloch_first: [0.0; 3], bloch_second: [0.0; 3] };
    for (k, axis) in Axis::ALL.into_iter().enumerate() {
        let s = pauli(axis);
        out.mu[k] = state.expectation(&s.kronecker(&s)) / 4.0;
        out.bloch_first[k] = state.expectation(&s.kronecker(&id));
        out.bloch_second[k] = state.expectation(&id.kronecker(&s));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn h_state() -> PolarizationState {
        PureQubit::new(0.0, 0.0).density()
    }

    #[test]
    fn analyzer_axes() {
        assert_eq!(analyzer_vector(0.0).unwrap(), [1.0, 0.0]);
        let v = analyzer_vector(PI / 2.0).unwrap();
        assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-15);
        let d = analyzer_vector(FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(d[0], 0.70711, epsilon = 1e-5);
        assert_abs_diff_eq!(d[1], 0.70711, epsilon = 1e-5);
        assert!(analyzer_vector(f64::NAN).is_err());
        assert!(analyzer_vector(f64::INFINITY).is_err());
    }

    #[test]
    fn angles_reduce_to_half_turn() {
        let c = AnalyzerConfig::new([PI + 0.3, -0.2, 2.0 * PI]).unwrap();
        assert_abs_diff_eq!(c.thetas()[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(c.thetas()[1], PI - 0.2, epsilon = 1e-12);
        assert!(c.thetas()[2] < PI);
        assert!(AnalyzerConfig::new([]).is_err());
        assert!(AnalyzerConfig::new([f64::NAN]).is_err());
        assert_eq!(normalize_angle(-1e-18), 0.0);
    }

    #[test]
    fn single_photon_probabilities() {
        let h = h_state();
        assert_abs_diff_eq!(detection_probability(&h, &AnalyzerConfig::single(0.0).unwrap()).unwrap(), 1.0);
        assert_abs_diff_eq!(
            detection_probability(&h, &AnalyzerConfig::single(FRAC_PI_4).unwrap()).unwrap(),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let err = detection_probability(&h_state(), &AnalyzerConfig::pair(0.0, 0.0).unwrap());
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn imaginary_sandwich_is_corruption() {
        // Skew part smuggled in past validation.
        let mut rho = DMatrix::from_element(2, 2, ZERO);
        rho[(0, 0)] = Complex64::new(0.5, 0.0);
        rho[(1, 1)] = Complex64::new(0.5, 0.0);
        rho[(0, 1)] = Complex64::new(0.0, 0.3);
        rho[(1, 0)] = Complex64::new(0.0, 0.3);
        let bad = PolarizationState { rho, photons: 1 };
        let res = detection_probability(&bad, &AnalyzerConfig::single(FRAC_PI_4).unwrap());
        assert!(matches!(res, Err(Error::CorruptedState { .. })));
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let nonherm = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(PolarizationState::from_density(nonherm).is_err());
        let bad_trace = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(0.6)]);
        assert!(PolarizationState::from_density(bad_trace).is_err());
        let negative = DMatrix::from_row_slice(2, 2, &[c(1.2), c(0.0), c(0.0), c(-0.2)]);
        assert!(PolarizationState::from_density(negative).is_err());
        let three = DMatrix::from_element(3, 3, c(1.0 / 3.0));
        assert!(PolarizationState::from_density(three).is_err());
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn bell_diagonal_constructor() {
        let mixed = bell_diagonal_state(&BellDiagonalParams::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(
            (mixed.matrix() - PolarizationState::maximally_mixed(2).matrix()).norm(),
            0.0,
            epsilon = 1e-15
        );
        let w1 = bell_diagonal_state(&BellDiagonalParams::new(0.0, 0.0, 0.25).unwrap()).unwrap();
        assert_abs_diff_eq!((w1.matrix() - NamedState::Omega1.state().matrix()).norm(), 0.0, epsilon = 1e-15);
        let w2 = bell_diagonal_state(&BellDiagonalParams::new(0.25, 0.0, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!((w2.matrix() - NamedState::Omega2.state().matrix()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn positivity_error_names_eigenvalue() {
        match BellDiagonalParams::new(0.25, 0.25, 0.25) {
            Err(Error::NotPositive { label, value }) => {
                assert_eq!(label, BellLabel::PsiMinus);
                assert_abs_diff_eq!(value, -0.5, epsilon = 1e-15);
            }
            other => panic!("expected NotPositive, got {other:?}"),
        }
    }

    #[test]
    fn closed_form_examples() {
        let bd = |x, y, z| BellDiagonalParams::new(x, y, z).unwrap();
        assert_abs_diff_eq!(coincidence_probability_bd(&bd(0.25, -0.25, 0.25), FRAC_PI_4, FRAC_PI_4), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(coincidence_probability_bd(&bd(0.0, 0.0, 0.0), 0.3, 1.1), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(coincidence_probability_bd(&bd(-0.25, 0.25, 0.25), FRAC_PI_4, FRAC_PI_4), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn mixing_bounds() {
        let s = canonical_states();
        assert!(mix(&s.psi1, &s.omega1, -0.1).is_err());
        assert!(mix(&s.psi1, &s.omega1, 1.1).is_err());
        assert_eq!(mix(&s.psi1, &s.omega1, 0.0).unwrap().matrix(), s.psi1.matrix());
        assert_eq!(mix(&s.psi1, &s.omega1, 1.0).unwrap().matrix(), s.omega1.matrix());
        let m = mix(&s.psi1, &s.omega1, 0.5).unwrap();
        let cfg = AnalyzerConfig::pair(FRAC_PI_4, FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(detection_probability(&m, &cfg).unwrap(), 0.375, epsilon = 1e-15);
        assert!(mix(&s.psi1, &h_state(), 0.5).is_err());
    }

    #[test]
    fn canonical_state_facts() {
        let s = canonical_states();
        let r = s.psi1.reduced(0).unwrap();
        assert_abs_diff_eq!((r.matrix() - PolarizationState::maximally_mixed(1).matrix()).norm(), 0.0, epsilon = 1e-15);
        let r2 = s.psi1.reduced(1).unwrap();
        assert_abs_diff_eq!((r2.matrix() - PolarizationState::maximally_mixed(1).matrix()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((s.psi1.matrix() * s.psi2.matrix()).trace().norm(), 0.0, epsilon = 1e-15);
        for st in [&s.psi1, &s.psi2] {
            assert_abs_diff_eq!(st.purity(), 1.0, epsilon = 1e-12);
        }
        for st in [&s.omega1, &s.omega2] {
            assert_abs_diff_eq!(st.purity(), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn correlation_extraction() {
        let s = canonical_states();
        let mixed = extract_correlations(&PolarizationState::maximally_mixed(2)).unwrap();
        assert_eq!(mixed.mu, [0.0; 3]);
        assert_eq!(mixed.local_residual(), 0.0);
        let w1 = extract_correlations(&s.omega1).unwrap();
        assert_abs_diff_eq!(w1.mu[2], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(w1.mu[0], 0.0, epsilon = 1e-15);
        let w2 = extract_correlations(&s.omega2).unwrap();
        for (got, want) in w2.mu.iter().zip([0.25, 0.0, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        // Direct trace gives μy = −1/4 for ψ₁; the σy⊗σy sign is a convention.
        let p1 = extract_correlations(&s.psi1).unwrap();
        for (got, want) in p1.mu.iter().zip([0.25, -0.25, 0.25]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let p2 = extract_correlations(&s.psi2).unwrap();
        for (got, want) in p2.mu.iter().zip([-0.25, 0.25, 0.25]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let h = extract_correlations(&h_state());
        assert!(h.is_err());
    }

    #[test]
    fn mu_y_range_matches_tetrahedron() {
        assert_eq!(BellDiagonalParams::mu_y_range(0.25, 0.25), Some((-0.25, -0.25)));
        assert_eq!(BellDiagonalParams::mu_y_range(0.0, 0.0), Some((-0.25, 0.25)));
        assert!(BellDiagonalParams::mu_y_range(0.3, 0.0).is_none());
    }
}
