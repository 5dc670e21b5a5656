//! N-mode Gaussian states in the covariance-matrix picture.
//!
//! Conventions: quadratures are ordered mode-major `(x₁, p₁, …, x_N, p_N)`
//! with `x = a + a†`, `p = -i(a - a†)`, so the vacuum covariance matrix is
//! the identity and `[r_i, r_j] = 2iΩ_ij`. The displacement vector stores
//! `(Re⟨a_j⟩, Im⟨a_j⟩)` per mode, which makes `‖α‖²` the coherent photon
//! number.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Tolerance on `σ = σᵀ`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Symplectic eigenvalues may dip this far below one.
pub const PHYSICALITY_TOL: f64 = 1e-10;
/// Tolerance on `S Ω Sᵀ = Ω`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// How a temperature is mapped onto the thermal fluctuation parameter `ν`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuConvention {
    /// `ν = coth(1/(2T))`, the standard Bose–Einstein relation `ν = 2n̄ + 1`.
    #[default]
    CothHalf,
    /// `ν = coth(1/T)`.
    CothFull,
}

impl NuConvention {
    pub fn label(self) -> &'static str {
        match self {
            NuConvention::CothHalf => "coth-half: nu = coth(1/(2T))",
            NuConvention::CothFull => "coth-full: nu = coth(1/T)",
        }
    }

    fn argument(self, temperature: f64) -> f64 {
        match self {
            NuConvention::CothHalf => 1.0 / (2.0 * temperature),
            NuConvention::CothFull => 1.0 / temperature,
        }
    }

    /// Inverse map; `ν = 1` gives `T = 0`.
    pub fn temperature_from_nu(self, nu: f64) -> Result<f64> {
        if !(nu >= 1.0) {
            return Err(Error::Unphysical(format!("nu = {nu} < 1")));
        }
        if nu == 1.0 {
            return Ok(0.0);
        }
        let x = (1.0 / nu).atanh();
        Ok(match self {
            NuConvention::CothHalf => 1.0 / (2.0 * x),
            NuConvention::CothFull => 1.0 / x,
        })
    }
}

/// Thermal fluctuation level of the passive reference state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThermalSpec {
    Temperature {
        temperature: f64,
        convention: NuConvention,
    },
    Nu(f64),
}

impl ThermalSpec {
    pub fn temperature(temperature: f64) -> Self {
        ThermalSpec::Temperature {
            temperature,
            convention: NuConvention::default(),
        }
    }

    pub fn nu(self) -> Result<f64> {
        nu_from_temperature(self)
    }
}

pub fn nu_from_temperature(spec: ThermalSpec) -> Result<f64> {
    match spec {
        ThermalSpec::Nu(nu) => {
            if nu >= 1.0 - PHYSICALITY_TOL {
                Ok(nu.max(1.0))
            } else {
                Err(Error::Unphysical(format!("nu = {nu} < 1")))
            }
        }
        ThermalSpec::Temperature {
            temperature,
            convention,
        } => {
            if !(temperature > 0.0) || !temperature.is_finite() {
                return Err(Error::Domain(format!(
                    "temperature must be positive and finite, got {temperature}"
                )));
            }
            // tanh saturates to exactly 1 for large arguments, giving ν = 1.
            Ok(1.0 / convention.argument(temperature).tanh())
        }
    }
}

/// Mean photon number `N₀ = (ν - 1)/2` of a thermal mode.
pub fn thermal_occupation(nu: f64) -> Result<f64> {
    if !(nu >= 1.0 - PHYSICALITY_TOL) {
        return Err(Error::Unphysical(format!("nu = {nu} < 1")));
    }
    Ok(((nu - 1.0) / 2.0).max(0.0))
}

/// Maps anti-squeezing `z > 1` onto the canonical range `z ∈ (0, 1]` by
/// rotating the orientation a quarter turn. `φ` is wrapped into `[0, 2π)`.
pub fn canonical_squeezing(z: f64, phi: f64) -> Result<(f64, f64)> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("squeezing z must be positive, got {z}")));
    }
    let (z, phi) = if z > 1.0 { (1.0 / z, phi + PI / 2.0) } else { (z, phi) };
    Ok((z, phi.rem_euclid(2.0 * PI)))
}

/// Rotation `[[cos φ, sin φ], [-sin φ, cos φ]]` acting on one mode's
/// quadratures; this is the action of the phase shifter `e^{-iφ a†a}`.
pub fn rotation(phi: f64) -> Matrix2<f64> {
    let (s, c) = phi.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// Covariance block `ν R(φ) diag(z, 1/z) R(φ)ᵀ` of a squeezed, rotated thermal mode.
pub fn single_mode_covariance(nu: f64, z: f64, phi: f64) -> Result<Matrix2<f64>> {
    if !(nu >= 1.0 - PHYSICALITY_TOL) {
        return Err(Error::Unphysical(format!("nu = {nu} < 1")));
    }
    if !(z > 0.0 && z <= 1.0) {
        return Err(Error::Domain(format!("squeezing z = {z} outside (0, 1]")));
    }
    let (s, c) = phi.sin_cos();
    let inv = 1.0 / z;
    let off = (1.0 - z * z) / (2.0 * z) * (2.0 * phi).sin();
    Ok(nu * Matrix2::new(
        z * c * c + inv * s * s,
        off,
        off,
        z * s * s + inv * c * c,
    ))
}

/// Displacement that yields identical photon statistics once the orientation
/// `φ` of the squeezing is set to zero.
pub fn absorb_phase(phi: f64, alpha: [f64; 2]) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c * alpha[0] - s * alpha[1], s * alpha[0] + c * alpha[1]]
}

/// Standard symplectic form `⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for j in 0..n_modes {
        omega[(2 * j, 2 * j + 1)] = 1.0;
        omega[(2 * j + 1, 2 * j)] = -1.0;
    }
    omega
}

pub fn is_symplectic(s: &DMatrix<f64>, tol: f64) -> bool {
    if !s.is_square() || !s.nrows().is_multiple_of(2) {
        return false;
    }
    let omega = symplectic_form(s.nrows() / 2);
    let residual = s * &omega * s.transpose() - &omega;
    residual.amax() <= tol
}

fn check_mode(mode: usize, n_modes: usize) -> Result<()> {
    if mode >= n_modes {
        Err(Error::ModeOutOfRange {
            index: mode,
            n_modes,
        })
    } else {
        Ok(())
    }
}

/// Beam splitter with transmissivity `cos²θ` mixing modes `i` and `j`:
/// `a_i → cos θ a_i + sin θ a_j`, `a_j → -sin θ a_i + cos θ a_j`.
pub fn beam_splitter(n_modes: usize, theta: f64, i: usize, j: usize) -> Result<DMatrix<f64>> {
    check_mode(i, n_modes)?;
    check_mode(j, n_modes)?;
    if i == j {
        return Err(Error::Domain("beam splitter needs two distinct modes".into()));
    }
    let (s, c) = theta.sin_cos();
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for q in 0..2 {
        let (a, b) = (2 * i + q, 2 * j + q);
        m[(a, a)] = c;
        m[(a, b)] = s;
        m[(b, a)] = -s;
        m[(b, b)] = c;
    }
    Ok(m)
}

pub fn phase_shifter(n_modes: usize, phi: f64, mode: usize) -> Result<DMatrix<f64>> {
    check_mode(mode, n_modes)?;
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    let r = rotation(phi);
    m.view_mut((2 * mode, 2 * mode), (2, 2)).copy_from(&r);
    Ok(m)
}

/// Single-mode squeezer `x → √z x`, `p → p/√z` with `z ∈ (0, 1]`.
pub fn squeezer(n_modes: usize, z: f64, mode: usize) -> Result<DMatrix<f64>> {
    check_mode(mode, n_modes)?;
    if !(z > 0.0 && z <= 1.0) {
        return Err(Error::Domain(format!("squeezing z = {z} outside (0, 1]")));
    }
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    m[(2 * mode, 2 * mode)] = z.sqrt();
    m[(2 * mode + 1, 2 * mode + 1)] = 1.0 / z.sqrt();
    Ok(m)
}

/// Gaussian state: displacement `α` (length `2N`) and covariance `σ` (`2N × 2N`).
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    alpha: DVector<f64>,
    sigma: DMatrix<f64>,
}

impl GaussianState {
    /// Validates shape, symmetry and the uncertainty principle.
    pub fn new(alpha: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() || sigma.nrows() == 0 || !sigma.nrows().is_multiple_of(2) {
            return Err(Error::Contract(format!(
                "covariance must be 2N x 2N, got {} x {}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if alpha.len() != sigma.nrows() {
            return Err(Error::Contract(format!(
                "displacement length {} does not match covariance size {}",
                alpha.len(),
                sigma.nrows()
            )));
        }
        let asym = (&sigma - sigma.transpose()).amax();
        if asym > SYMMETRY_TOL * sigma.amax().max(1.0) {
            return Err(Error::Unphysical(format!("covariance not symmetric ({asym:e})")));
        }
        let sigma = (&sigma + sigma.transpose()) * 0.5;
        let state = GaussianState {
            n_modes: sigma.nrows() / 2,
            alpha,
            sigma,
        };
        let nus = state.symplectic_eigenvalues()?;
        if let Some(bad) = nus.iter().find(|&&nu| nu < 1.0 - PHYSICALITY_TOL) {
            return Err(Error::Unphysical(format!("symplectic eigenvalue {bad} < 1")));
        }
        Ok(state)
    }

    pub(crate) fn from_parts_unchecked(alpha: DVector<f64>, sigma: DMatrix<f64>) -> Self {
        GaussianState {
            n_modes: sigma.nrows() / 2,
            alpha,
            sigma,
        }
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self::from_parts_unchecked(
            DVector::zeros(2 * n_modes),
            DMatrix::identity(2 * n_modes, 2 * n_modes),
        )
    }

    pub fn thermal(n_modes: usize, nu: f64) -> Result<Self> {
        thermal_occupation(nu)?;
        Ok(Self::from_parts_unchecked(
            DVector::zeros(2 * n_modes),
            DMatrix::identity(2 * n_modes, 2 * n_modes) * nu.max(1.0),
        ))
    }

    /// Thermal mode, squeezed by `z`, rotated by `φ`, then displaced by `α`.
    /// Anti-squeezing `z > 1` is canonicalized first.
    pub fn single_mode(nu: f64, z: f64, phi: f64, alpha: [f64; 2]) -> Result<Self> {
        let (z, phi) = canonical_squeezing(z, phi)?;
        let block = single_mode_covariance(nu, z, phi)?;
        let sigma = DMatrix::from_iterator(2, 2, block.iter().copied());
        Ok(Self::from_parts_unchecked(
            DVector::from_row_slice(&alpha),
            sigma,
        ))
    }

    /// Tensor product (direct sum of covariance blocks).
    pub fn product(parts: &[GaussianState]) -> Self {
        let n: usize = parts.iter().map(|p| p.n_modes).sum();
        let mut alpha = DVector::zeros(2 * n);
        let mut sigma = DMatrix::zeros(2 * n, 2 * n);
        let mut offset = 0;
        for p in parts {
            let d = 2 * p.n_modes;
            alpha.rows_mut(offset, d).copy_from(&p.alpha);
            sigma.view_mut((offset, offset), (d, d)).copy_from(&p.sigma);
            offset += d;
        }
        Self::from_parts_unchecked(alpha, sigma)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn mode_alpha(&self, mode: usize) -> [f64; 2] {
        [self.alpha[2 * mode], self.alpha[2 * mode + 1]]
    }

    /// `⟨a_j⟩` as a complex amplitude.
    pub fn complex_displacement(&self, mode: usize) -> C64 {
        C64::new(self.alpha[2 * mode], self.alpha[2 * mode + 1])
    }

    pub fn is_displaced(&self) -> bool {
        self.alpha.iter().any(|&a| a != 0.0)
    }

    /// Williamson eigenvalues `ν_k`, ascending.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = SymmetricEigen::new(self.sigma.clone());
        if let Some(&bad) = eig.eigenvalues.iter().find(|&&e| e <= 0.0) {
            return Err(Error::Unphysical(format!(
                "covariance not positive definite (eigenvalue {bad:e})"
            )));
        }
        let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
        let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
        let omega = symplectic_form(self.n_modes);
        let m = &root * omega.transpose() * &self.sigma * &omega * &root;
        let m = (&m + m.transpose()) * 0.5;
        let mut squares: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        squares.sort_by(f64::total_cmp);
        Ok(squares
            .chunks(2)
            .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
            .collect())
    }

    /// Photon number of the passive state with the same symplectic spectrum.
    pub fn passive_energy(&self) -> Result<f64> {
        Ok(self
            .symplectic_eigenvalues()?
            .iter()
            .map(|nu| ((nu - 1.0) / 2.0).max(0.0))
            .sum())
    }
}

/// `α' = Sα`, `σ' = SσSᵀ`.
pub fn apply_symplectic(state: &GaussianState, s: &DMatrix<f64>) -> Result<GaussianState> {
    if s.nrows() != state.sigma.nrows() || !s.is_square() {
        return Err(Error::Contract(format!(
            "symplectic matrix is {} x {}, state has {} modes",
            s.nrows(),
            s.ncols(),
            state.n_modes
        )));
    }
    if !is_symplectic(s, SYMPLECTIC_TOL) {
        return Err(Error::Contract("matrix is not symplectic".into()));
    }
    Ok(apply_symplectic_unchecked(state, s))
}

pub(crate) fn apply_symplectic_unchecked(state: &GaussianState, s: &DMatrix<f64>) -> GaussianState {
    let sigma = s * &state.sigma * s.transpose();
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    GaussianState::from_parts_unchecked(s * &state.alpha, sigma)
}

pub fn displace(state: &GaussianState, shift: &DVector<f64>) -> Result<GaussianState> {
    if shift.len() != state.alpha.len() {
        return Err(Error::Contract(format!(
            "displacement of length {} for a {}-mode state",
            shift.len(),
            state.n_modes
        )));
    }
    Ok(GaussianState::from_parts_unchecked(
        &state.alpha + shift,
        state.sigma.clone(),
    ))
}

/// Signal-to-noise ratio `Γ = δN/ΔN` with explicit sentinels for the
/// zero-variance cases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Snr {
    Finite(f64),
    /// `ΔN = 0` with `δN > 0`: an exact number state above the reference.
    Divergent,
    /// `ΔN = 0` and `δN = 0`.
    Undefined,
}

impl Snr {
    pub fn from_parts(delta_n: f64, var_n: f64) -> Snr {
        if var_n > 0.0 {
            Snr::Finite(delta_n / var_n.sqrt())
        } else if delta_n > 0.0 {
            Snr::Divergent
        } else if delta_n == 0.0 {
            Snr::Undefined
        } else {
            Snr::Finite(f64::NEG_INFINITY)
        }
    }

    /// `+∞` for [`Snr::Divergent`], NaN for [`Snr::Undefined`].
    pub fn value(self) -> f64 {
        match self {
            Snr::Finite(v) => v,
            Snr::Divergent => f64::INFINITY,
            Snr::Undefined => f64::NAN,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, Snr::Divergent)
    }
}

/// First and second photon-number moments and everything derived from them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentResult {
    pub mean_n: f64,
    pub var_n: f64,
    /// Photon number of the passive reference the signal is measured against.
    pub reference_n0: f64,
    /// `δN = ⟨N⟩ - N₀`.
    pub delta_n: f64,
    pub snr: Snr,
    /// `g²(0)`; `None` when `⟨N⟩ = 0`.
    pub g2: Option<f64>,
}

impl MomentResult {
    /// Rounding noise up to `1e-12 · max(1, ⟨N⟩²)` in the variance is clamped to zero;
    /// anything more negative is reported as an error.
    pub fn from_moments(mean_n: f64, var_n: f64, reference_n0: f64) -> Result<Self> {
        let tol = 1e-12 * mean_n.abs().powi(2).max(1.0);
        if var_n < -tol {
            return Err(Error::Unphysical(format!("negative photon-number variance {var_n:e}")));
        }
        let var_n = if var_n.abs() < tol { 0.0 } else { var_n };
        let delta_n = mean_n - reference_n0;
        let g2 = (mean_n > 0.0).then(|| var_n / (mean_n * mean_n) - 1.0 / mean_n + 1.0);
        Ok(MomentResult {
            mean_n,
            var_n,
            reference_n0,
            delta_n,
            snr: Snr::from_parts(delta_n, var_n),
            g2,
        })
    }

    pub fn from_second_moment(mean_n: f64, second: f64, reference_n0: f64) -> Result<Self> {
        Self::from_moments(mean_n, second - mean_n * mean_n, reference_n0)
    }

    pub fn with_reference(&self, reference_n0: f64) -> Self {
        let delta_n = self.mean_n - reference_n0;
        MomentResult {
            reference_n0,
            delta_n,
            snr: Snr::from_parts(delta_n, self.var_n),
            ..*self
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.var_n.sqrt()
    }
}

/// Mean and variance of `N = Σ a_j†a_j`:
/// `⟨N⟩ = ¼(Tr σ - 2N) + ‖α‖²`, `ΔN² = αᵀσα + ⅛(Tr σ² - 2N)`.
/// `δN` is measured against the passive state with the same symplectic spectrum.
pub fn photon_moments(state: &GaussianState) -> Result<MomentResult> {
    let reference = state.passive_energy()?;
    raw_photon_moments(state, reference)
}

pub(crate) fn raw_photon_moments(state: &GaussianState, reference_n0: f64) -> Result<MomentResult> {
    let n = state.n_modes as f64;
    let sigma = &state.sigma;
    let alpha = &state.alpha;
    let mean = 0.25 * (sigma.trace() - 2.0 * n) + alpha.norm_squared();
    let tr_sq: f64 = sigma.iter().map(|v| v * v).sum();
    let var = (alpha.transpose() * sigma * alpha)[(0, 0)] + 0.125 * (tr_sq - 2.0 * n);
    MomentResult::from_moments(mean, var, reference_n0)
}

/// `Γ` against `n_modes` thermal modes at the given fluctuation level.
pub fn snr(state: &GaussianState, thermal: ThermalSpec) -> Result<Snr> {
    let n0 = thermal_occupation(thermal.nu()?)? * state.n_modes as f64;
    Ok(raw_photon_moments(state, n0)?.snr)
}

/// `g²(0) = (Γ + N₀/ΔN)⁻² - 1/⟨N⟩ + 1`.
pub fn g2_zero(moments: &MomentResult, n0: f64) -> Option<f64> {
    if !(moments.mean_n > 0.0) {
        return None;
    }
    let inverse_square = if moments.var_n > 0.0 {
        let sd = moments.var_n.sqrt();
        let gamma = (moments.mean_n - n0) / sd;
        (gamma + n0 / sd).powi(-2)
    } else {
        0.0
    };
    Some(inverse_square - 1.0 / moments.mean_n + 1.0)
}

/// `(Γ + N₀/ΔN)² > ⟨N⟩`, i.e. sub-Poissonian statistics. The comparison
/// carries a relative margin of `1e-12` so Poissonian states sit on the
/// classical side.
pub fn is_antibunched(moments: &MomentResult, n0: f64) -> bool {
    if !(moments.mean_n > 0.0) {
        return false;
    }
    if moments.var_n == 0.0 {
        return true;
    }
    let sd = moments.var_n.sqrt();
    let lhs = ((moments.mean_n - n0) / sd + n0 / sd).powi(2);
    lhs > moments.mean_n * (1.0 + 1e-12)
}

/// Linear photocurrent model of the energy harvester.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarvesterModel {
    efficiency: f64,
    repetition_rate: f64,
}

impl HarvesterModel {
    pub fn new(efficiency: f64, repetition_rate: f64) -> Result<Self> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::Domain(format!("efficiency {efficiency} outside (0, 1]")));
        }
        if !(repetition_rate > 0.0) || !repetition_rate.is_finite() {
            return Err(Error::Domain(format!(
                "repetition rate must be positive, got {repetition_rate}"
            )));
        }
        Ok(HarvesterModel {
            efficiency,
            repetition_rate,
        })
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn repetition_rate(&self) -> f64 {
        self.repetition_rate
    }
}

/// Mean current `μ f ⟨N⟩` (absolute, including the thermal background).
pub fn harvester_current(moments: &MomentResult, harvester: &HarvesterModel) -> f64 {
    harvester.efficiency * harvester.repetition_rate * moments.mean_n
}

/// Closed-form single-mode statistics for a thermal mode squeezed by `z`,
/// rotated by `φ` and displaced by `α`. Returns `(δN, ΔN²)` with `δN`
/// measured against the unsqueezed thermal mode.
pub fn single_mode_closed_form(nu: f64, z: f64, phi: f64, alpha: [f64; 2]) -> (f64, f64) {
    let (s, c) = phi.sin_cos();
    let [a1, a2] = alpha;
    let delta_n = 0.25 * nu * (z + 1.0 / z - 2.0) + a1 * a1 + a2 * a2;
    let var = 0.125 * nu * nu * (z * z + 1.0 / (z * z)) - 0.25
        + nu * (a1 * a1 * (z * c * c + s * s / z)
            + a2 * a2 * (z * s * s + c * c / z)
            + 2.0 * a1 * a2 * ((1.0 - z * z) / z * s * c));
    (delta_n, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn nu_limits_and_values() {
        let tiny = ThermalSpec::temperature(1e-3);
        assert_eq!(tiny.nu().unwrap(), 1.0);
        let half = ThermalSpec::temperature(0.5).nu().unwrap();
        let e2 = (2.0f64).exp();
        assert_relative_eq!(half, (e2 + 1.0) / (e2 - 1.0), max_relative = 1e-14);
        assert_relative_eq!(half, 1.3130352855, epsilon = 1e-9);
        assert_eq!(ThermalSpec::Nu(2.0).nu().unwrap(), 2.0);
        let full = ThermalSpec::Temperature {
            temperature: 1.0,
            convention: NuConvention::CothFull,
        };
        assert_relative_eq!(full.nu().unwrap(), half, max_relative = 1e-14);
        assert!(matches!(
            ThermalSpec::temperature(0.0).nu(),
            Err(Error::Domain(_))
        ));
        assert!(ThermalSpec::temperature(-1.0).nu().is_err());
        let t = NuConvention::CothHalf.temperature_from_nu(half).unwrap();
        assert_relative_eq!(t, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn thermal_occupation_values() {
        assert_eq!(thermal_occupation(1.0).unwrap(), 0.0);
        assert_eq!(thermal_occupation(3.0).unwrap(), 1.0);
        let nu = 1.0 / (1.0f64).tanh();
        assert_relative_eq!(thermal_occupation(nu).unwrap(), 0.1565176428, epsilon = 1e-9);
        assert!(thermal_occupation(0.5).is_err());
    }

    #[test]
    fn single_mode_covariance_examples() {
        let id = single_mode_covariance(1.0, 1.0, 0.7).unwrap();
        assert_relative_eq!(id, Matrix2::identity(), epsilon = 1e-15);
        let m = single_mode_covariance(2.0, 0.5, 0.0).unwrap();
        assert_relative_eq!(m, Matrix2::new(1.0, 0.0, 0.0, 4.0), epsilon = 1e-15);
        let m = single_mode_covariance(1.0, 0.5, PI / 4.0).unwrap();
        assert_relative_eq!(m[(0, 1)], 0.75, epsilon = 1e-15);
        // conjugating diag(z, 1/z) with the quadrature rotation
        let r = rotation(PI / 4.0);
        let conj = r * Matrix2::new(0.5, 0.0, 0.0, 2.0) * r.transpose();
        assert_relative_eq!(m, conj, epsilon = 1e-14);
        assert!(single_mode_covariance(1.0, 1.5, 0.0).is_err());
        assert!(single_mode_covariance(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn anti_squeezing_is_canonicalized() {
        let a = GaussianState::single_mode(1.5, 2.0, 0.3, [0.2, 0.1]).unwrap();
        let b = GaussianState::single_mode(1.5, 0.5, 0.3 + PI / 2.0, [0.2, 0.1]).unwrap();
        assert_relative_eq!(a.sigma(), b.sigma(), epsilon = 1e-14);
    }

    #[test]
    fn symplectic_builders() {
        let state = GaussianState::product(&[
            GaussianState::single_mode(1.3, 0.4, 0.2, [0.3, -0.2]).unwrap(),
            GaussianState::single_mode(2.0, 0.7, 1.1, [1.0, 0.5]).unwrap(),
        ]);
        let id = DMatrix::identity(4, 4);
        assert_eq!(apply_symplectic(&state, &id).unwrap(), state);

        let swap = beam_splitter(2, PI / 2.0, 0, 1).unwrap();
        let out = apply_symplectic(&state, &swap).unwrap();
        // full reflection: a₀ → a₁, a₁ → -a₀
        let a = state.alpha();
        assert_relative_eq!(out.alpha()[0], a[2], epsilon = 1e-15);
        assert_relative_eq!(out.alpha()[1], a[3], epsilon = 1e-15);
        assert_relative_eq!(out.alpha()[2], -a[0], epsilon = 1e-15);
        let s = state.sigma();
        let o = out.sigma();
        for (r, c) in [(0, 0), (0, 1), (1, 1)] {
            assert_relative_eq!(o[(r, c)], s[(r + 2, c + 2)], epsilon = 1e-14);
            assert_relative_eq!(o[(r + 2, c + 2)], s[(r, c)], epsilon = 1e-14);
        }

        let sq = squeezer(1, 0.3, 0).unwrap();
        let out = apply_symplectic(&GaussianState::vacuum(1), &sq).unwrap();
        assert_relative_eq!(out.sigma()[(0, 0)], 0.3, epsilon = 1e-15);
        assert_relative_eq!(out.sigma()[(1, 1)], 1.0 / 0.3, epsilon = 1e-14);

        assert_eq!(beam_splitter(2, 0.0, 0, 1).unwrap(), DMatrix::identity(4, 4));
        assert_eq!(squeezer(1, 1.0, 0).unwrap(), DMatrix::identity(2, 2));
        assert!(matches!(
            beam_splitter(2, 0.1, 0, 2),
            Err(Error::ModeOutOfRange { index: 2, n_modes: 2 })
        ));
        assert!(phase_shifter(1, 0.1, 1).is_err());

        let mut bad = DMatrix::identity(2, 2);
        bad[(0, 0)] = 2.0;
        assert!(matches!(
            apply_symplectic(&GaussianState::vacuum(1), &bad),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn moments_examples() {
        let vac = photon_moments(&GaussianState::vacuum(2)).unwrap();
        assert_eq!((vac.mean_n, vac.var_n), (0.0, 0.0));
        assert_eq!(vac.snr, Snr::Undefined);
        assert_eq!(vac.g2, None);

        let coh = GaussianState::single_mode(1.0, 1.0, 0.0, [1.7, 0.0]).unwrap();
        let m = photon_moments(&coh).unwrap();
        assert_relative_eq!(m.mean_n, 1.7 * 1.7, epsilon = 1e-14);
        assert_relative_eq!(m.var_n, 1.7 * 1.7, epsilon = 1e-14);

        let sq = GaussianState::single_mode(2.0, 0.5, 0.0, [0.0, 0.0]).unwrap();
        let m = raw_photon_moments(&sq, 0.5).unwrap();
        assert_relative_eq!(m.delta_n, 0.25, epsilon = 1e-14);
        assert_relative_eq!(m.var_n, 1.875, epsilon = 1e-14);
        assert_relative_eq!(m.snr.value(), 0.25 / 1.875f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(m.snr.value(), 0.18257, epsilon = 1e-5);
        // ⟨N⟩ = N₀ + δN = 0.75 here, so g² = 1.875/0.5625 - 1/0.75 + 1 = 3
        assert_relative_eq!(g2_zero(&m, 0.5).unwrap(), 3.0, epsilon = 1e-12);
        assert!(!is_antibunched(&m, 0.5));
        // the same variance around a mean of 0.25 gives 27
        let shifted = MomentResult::from_moments(0.25, 1.875, 0.0).unwrap();
        assert_relative_eq!(g2_zero(&shifted, 0.0).unwrap(), 27.0, epsilon = 1e-12);
        // δN from the symplectic spectrum agrees with the explicit ν
        let m2 = photon_moments(&sq).unwrap();
        assert_relative_eq!(m2.delta_n, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn coherent_snr_and_bunching() {
        let coh = GaussianState::single_mode(1.0, 1.0, 0.0, [2.0, 0.0]).unwrap();
        assert_relative_eq!(snr(&coh, ThermalSpec::Nu(1.0)).unwrap().value(), 2.0, epsilon = 1e-14);
        let m = photon_moments(&coh).unwrap();
        assert_relative_eq!(g2_zero(&m, 0.0).unwrap(), 1.0, epsilon = 1e-14);
        assert!(!is_antibunched(&m, 0.0));
    }

    #[test]
    fn number_like_moments() {
        let m = MomentResult::from_moments(3.0, 0.0, 0.0).unwrap();
        assert_eq!(m.snr, Snr::Divergent);
        assert_relative_eq!(g2_zero(&m, 0.0).unwrap(), 1.0 - 1.0 / 3.0, epsilon = 1e-15);
        assert!(is_antibunched(&m, 0.0));
        assert!(MomentResult::from_moments(1.0, -1e-3, 0.0).is_err());
        assert_eq!(MomentResult::from_moments(1.0, -1e-14, 0.0).unwrap().var_n, 0.0);
    }

    #[test]
    fn harvester() {
        let h = HarvesterModel::new(0.5, 2.0).unwrap();
        let m = MomentResult::from_moments(3.0, 1.0, 0.0).unwrap();
        assert_eq!(harvester_current(&m, &h), 3.0);
        let zero = MomentResult::from_moments(0.0, 0.0, 0.0).unwrap();
        assert_eq!(harvester_current(&zero, &h), 0.0);
        assert!(HarvesterModel::new(0.0, 1.0).is_err());
        assert!(HarvesterModel::new(0.5, -1.0).is_err());
        let sq = GaussianState::single_mode(2.0, 0.5, 0.0, [0.0, 0.0]).unwrap();
        let m = photon_moments(&sq).unwrap();
        let unit = HarvesterModel::new(1.0, 1.0).unwrap();
        assert_relative_eq!(harvester_current(&m, &unit), m.mean_n, epsilon = 1e-15);
        assert_relative_eq!(m.mean_n, 0.75, epsilon = 1e-14);
    }

    #[test]
    fn symplectic_eigenvalues_of_rotated_squeezed_thermal() {
        let s = GaussianState::single_mode(2.5, 0.2, 0.9, [0.0, 0.0]).unwrap();
        let nus = s.symplectic_eigenvalues().unwrap();
        assert_relative_eq!(nus[0], 2.5, max_relative = 1e-12);
        let bad = GaussianState::new(DVector::zeros(2), DMatrix::identity(2, 2) * 0.5);
        assert!(matches!(bad, Err(Error::Unphysical(_))));
    }

    fn random_passive(n: usize, angles: &[f64]) -> DMatrix<f64> {
        let mut s = DMatrix::identity(2 * n, 2 * n);
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                s = beam_splitter(n, angles[k % angles.len()], i, j).unwrap() * s;
                k += 1;
                s = phase_shifter(n, angles[k % angles.len()] * 3.0, i).unwrap() * s;
                k += 1;
            }
        }
        s
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn det_equals_nu_squared(nu in 1.0..5.0f64, z in 0.01..1.0f64, phi in 0.0..(2.0 * PI)) {
            let m = single_mode_covariance(nu, z, phi).unwrap();
            prop_assert!((m.determinant() - nu * nu).abs() <= 1e-12 * nu * nu * (1.0 / z));
        }

        #[test]
        fn phase_absorption(nu in 1.0..4.0f64, z in 0.05..1.0f64, phi in 0.0..(2.0 * PI),
                            a1 in -3.0..3.0f64, a2 in -3.0..3.0f64) {
            let n0 = thermal_occupation(nu).unwrap();
            let g = |phi: f64, alpha: [f64; 2]| {
                let s = GaussianState::single_mode(nu, z, phi, alpha).unwrap();
                raw_photon_moments(&s, n0).unwrap().snr.value()
            };
            let lhs = g(phi, [a1, a2]);
            let rhs = g(0.0, absorb_phase(phi, [a1, a2]));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }

        #[test]
        fn closed_form_agrees(nu in 1.0..4.0f64, z in 0.05..1.0f64, phi in 0.0..(2.0 * PI),
                              a1 in -3.0..3.0f64, a2 in -3.0..3.0f64) {
            let s = GaussianState::single_mode(nu, z, phi, [a1, a2]).unwrap();
            let m = raw_photon_moments(&s, thermal_occupation(nu).unwrap()).unwrap();
            let (dn, var) = single_mode_closed_form(nu, z, phi, [a1, a2]);
            prop_assert!((m.delta_n - dn).abs() <= 1e-12 * dn.abs().max(1.0));
            prop_assert!((m.var_n - var).abs() <= 1e-12 * var.abs().max(1.0));
        }

        #[test]
        fn passive_invariance(nu1 in 1.0..3.0f64, nu2 in 1.0..3.0f64, nu3 in 1.0..3.0f64,
                              z1 in 0.2..1.0f64, z2 in 0.2..1.0f64,
                              a in proptest::collection::vec(-2.0..2.0f64, 6),
                              angles in proptest::collection::vec(0.0..(2.0 * PI), 6)) {
            let state = GaussianState::product(&[
                GaussianState::single_mode(nu1, z1, 0.3, [a[0], a[1]]).unwrap(),
                GaussianState::single_mode(nu2, z2, 1.2, [a[2], a[3]]).unwrap(),
                GaussianState::single_mode(nu3, 1.0, 0.0, [a[4], a[5]]).unwrap(),
            ]);
            let before = photon_moments(&state).unwrap();
            let after = photon_moments(&apply_symplectic(&state, &random_passive(3, &angles)).unwrap()).unwrap();
            prop_assert!((before.mean_n - after.mean_n).abs() <= 1e-12 * before.mean_n.max(1.0));
            prop_assert!((before.var_n - after.var_n).abs() <= 1e-12 * before.var_n.max(1.0));
            let g_before = before.snr.value();
            let g_after = after.snr.value();
            prop_assert!((g_before - g_after).abs() <= 1e-12 * g_before.abs().max(1.0));
        }

        #[test]
        fn g2_identity(nu in 1.0..4.0f64, z in 0.05..1.0f64, phi in 0.0..(2.0 * PI),
                       a1 in -3.0..3.0f64, a2 in -3.0..3.0f64) {
            let s = GaussianState::single_mode(nu, z, phi, [a1, a2]).unwrap();
            let n0 = thermal_occupation(nu).unwrap();
            let m = raw_photon_moments(&s, n0).unwrap();
            if m.mean_n > 1e-6 {
                let via_snr = g2_zero(&m, n0).unwrap();
                let direct = m.g2.unwrap();
                prop_assert!((via_snr - direct).abs() <= 1e-12 * direct.abs().max(1.0) / m.mean_n.min(1.0));
                if (direct - 1.0).abs() > 1e-9 {
                    prop_assert_eq!(is_antibunched(&m, n0), direct < 1.0);
                }
            }
        }
    }
}
