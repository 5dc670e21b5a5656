//! Brute-force reference in a truncated Fock basis.
//!
//! States are kept as ensembles `ρ = Σ_i w_i |v_i⟩⟨v_i|` of product vectors.
//! A single-mode Gaussian state `U ρ_th U†` with `U = D(β) R(φ) S(r)` is
//! stored through the columns `U|k⟩` weighted by the thermal distribution.
//! The columns of `R(φ) S(r)` come from `U|k⟩ = (U a† U†) U|k-1⟩ / √k`
//! starting at the squeezed vacuum, and the displacement is applied as a
//! matrix built column by column the same way. Vectors live in a padded
//! box larger than the reported cutoff so that neither the recurrences nor
//! the ladder operations touch the truncation edge; whatever lands above the
//! cutoff is reported as tail mass.
//!
//! Two-mode states are products of single-mode states followed by a beam
//! splitter `U`. Since `U` conserves the total photon number, the network is
//! moved onto the ladder operations (`a_j → U† a_j U`), so moments of
//! `N = n₁ + n₂` are evaluated on the product ensemble directly.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gaussian::{canonical_squeezing, thermal_occupation, MomentResult};
use crate::wick::{LadderFactor, LadderKind, DEGENERATE_NORM};
use crate::C64;

pub const DEFAULT_DIM_CAP: usize = 512;
/// Largest cutoff per mode for two-mode states (vectors have `dim²` entries).
pub const TWO_MODE_DIM_CAP: usize = 128;
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Ensemble components lighter than this (relative) are dropped and counted as tail.
const WEIGHT_FLOOR: f64 = 1e-18;

/// Parameters of a single-mode Gaussian state: thermal `ν`, squeezing `z`,
/// orientation `φ`, displacement `(Re⟨a⟩, Im⟨a⟩)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianParams {
    pub nu: f64,
    pub z: f64,
    pub phi: f64,
    pub alpha: [f64; 2],
}

/// Weighted pure states of one mode on a padded number basis.
#[derive(Clone, Debug)]
struct ModeEnsemble {
    weights: Vec<f64>,
    vectors: Vec<DVector<C64>>,
}

/// Linear ladder operator `Σ_j u_j a_j` or its adjoint `Σ_j u_j* a_j†`.
#[derive(Clone, Debug, PartialEq)]
struct LinearLadder {
    coeffs: Vec<C64>,
    kind: LadderKind,
}

#[derive(Clone, Debug)]
pub struct TruncatedState {
    dim: usize,
    pad: usize,
    modes: Vec<ModeEnsemble>,
    /// `U† a_j U = Σ_k frame[j][k] a_k` for the passive network `U`.
    frame: Vec<Vec<C64>>,
    ops: Vec<LinearLadder>,
}

/// Thermal components needed so the dropped weight stays below the floor.
fn thermal_components(nu: f64, limit: usize) -> Vec<f64> {
    let q = (nu - 1.0) / (nu + 1.0);
    let mut weights = Vec::new();
    let mut p = 1.0 - q;
    let mut k = 0;
    while k < limit && (k == 0 || p > WEIGHT_FLOOR) {
        weights.push(p);
        p *= q;
        k += 1;
    }
    weights
}

fn padded_size(dim: usize, n_ops: usize, n_components: usize) -> usize {
    dim + n_ops + n_components + 2
}

/// Columns `U|k⟩`, `k < n_cols`, of `U = D(β) R(φ) S(r)` with `z = e^{-2r}`,
/// on `rows` basis states.
fn gaussian_columns(z: f64, phi: f64, beta: C64, n_cols: usize, rows: usize) -> Vec<DVector<C64>> {
    let zero = C64::new(0.0, 0.0);
    let inner = if beta == zero {
        rows
    } else {
        let b = beta.norm();
        rows + n_cols + (b * b + 12.0 * b + 24.0).ceil() as usize
    };
    let squeezed = squeezed_columns(z, phi, n_cols, inner);
    if beta == zero {
        return squeezed;
    }
    let d = displacement_matrix(beta, rows, inner);
    squeezed.iter().map(|c| &d * c).collect()
}

/// Columns of `R(φ) S(r)`. Row `i` of column `k` is exact for `i + k < rows`.
fn squeezed_columns(z: f64, phi: f64, n_cols: usize, rows: usize) -> Vec<DVector<C64>> {
    let r = -0.5 * z.ln();
    let rot = C64::from_polar(1.0, -phi);
    // Heisenberg map U† a U = c a + s a†, inverse U a U† = c* a - s a†
    let c = rot * r.cosh();
    let s = -rot * r.sinh();
    let mut col = DVector::from_element(rows, C64::new(0.0, 0.0));
    col[0] = C64::new(1.0 / r.cosh().sqrt(), 0.0);
    // U|0⟩ is annihilated by c* a - s a†
    let step = s / c.conj();
    for m in (1..rows.saturating_sub(1)).step_by(2) {
        col[m + 1] = step * (m as f64 / (m + 1) as f64).sqrt() * col[m - 1];
    }
    let mut cols = Vec::with_capacity(n_cols);
    cols.push(col);
    // U a† U† = c a† - s* a
    let (cu, su) = (c, -s.conj());
    for k in 1..n_cols {
        let prev = &cols[k - 1];
        let norm = 1.0 / (k as f64).sqrt();
        let next = DVector::from_fn(rows, |i, _| {
            let mut v = C64::new(0.0, 0.0);
            if i > 0 {
                v += cu * (i as f64).sqrt() * prev[i - 1];
            }
            if i + 1 < rows {
                v += su * ((i + 1) as f64).sqrt() * prev[i + 1];
            }
            v * norm
        });
        cols.push(next);
    }
    cols
}

/// `⟨m|D(β)|n⟩` for `m < rows`, `n < cols`, from `D|n⟩ = (a† - β*) D|n-1⟩ / √n`.
/// The recurrence only shifts rows downwards, so every entry is exact.
fn displacement_matrix(beta: C64, rows: usize, cols: usize) -> nalgebra::DMatrix<C64> {
    let mut d = nalgebra::DMatrix::from_element(rows, cols, C64::new(0.0, 0.0));
    d[(0, 0)] = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for m in 1..rows {
        d[(m, 0)] = d[(m - 1, 0)] * beta / (m as f64).sqrt();
    }
    let bc = beta.conj();
    for n in 1..cols {
        let norm = 1.0 / (n as f64).sqrt();
        for m in 0..rows {
            let mut v = -bc * d[(m, n - 1)];
            if m > 0 {
                v += (m as f64).sqrt() * d[(m - 1, n - 1)];
            }
            d[(m, n)] = v * norm;
        }
    }
    d
}

fn gaussian_ensemble(p: &GaussianParams, dim: usize, n_ops: usize) -> Result<(ModeEnsemble, usize)> {
    thermal_occupation(p.nu)?;
    let (z, phi) = canonical_squeezing(p.z, p.phi)?;
    let weights = thermal_components(p.nu.max(1.0), dim.max(1));
    let pad = padded_size(dim, n_ops, weights.len());
    let beta = C64::new(p.alpha[0], p.alpha[1]);
    let vectors = gaussian_columns(z, phi, beta, weights.len(), pad);
    Ok((
        ModeEnsemble { weights, vectors },
        pad,
    ))
}

fn coherent_vector(beta: C64, rows: usize) -> DVector<C64> {
    let mut v = DVector::from_element(rows, C64::new(0.0, 0.0));
    v[0] = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for k in 1..rows {
        v[k] = v[k - 1] * beta / (k as f64).sqrt();
    }
    v
}

impl TruncatedState {
    fn single(dim: usize, pad: usize, mode: ModeEnsemble) -> Self {
        TruncatedState {
            dim,
            pad,
            modes: vec![mode],
            frame: vec![vec![C64::new(1.0, 0.0)]],
            ops: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Applies a ladder operator (lab frame). Normalization happens when
    /// moments are evaluated; a state annihilated by the operations reports
    /// [`Error::Degenerate`] there.
    pub fn apply_ladder(&self, factor: LadderFactor) -> Result<Self> {
        if factor.mode >= self.n_modes() {
            return Err(Error::ModeOutOfRange {
                index: factor.mode,
                n_modes: self.n_modes(),
            });
        }
        let mut out = self.clone();
        out.ops.push(LinearLadder {
            coeffs: self.frame[factor.mode].clone(),
            kind: factor.kind,
        });
        Ok(out)
    }

    fn components(&self) -> Vec<(f64, Vec<usize>)> {
        match self.modes.len() {
            1 => (0..self.modes[0].weights.len())
                .map(|k| (self.modes[0].weights[k], vec![k]))
                .collect(),
            _ => {
                let (a, b) = (&self.modes[0], &self.modes[1]);
                let mut out = Vec::new();
                for (i, wa) in a.weights.iter().enumerate() {
                    for (j, wb) in b.weights.iter().enumerate() {
                        if wa * wb > WEIGHT_FLOOR {
                            out.push((wa * wb, vec![i, j]));
                        }
                    }
                }
                out
            }
        }
    }

    fn dropped_weight(&self) -> f64 {
        // thermal weights plus the dropped remainder sum to one per mode
        let kept: f64 = self.components().iter().map(|c| c.0).sum();
        (1.0 - kept).max(0.0)
    }

    /// Flat vector of one ensemble component with the operations applied,
    /// indexed `n₁·pad + n₂` for two modes.
    fn component_vector(&self, idx: &[usize]) -> DVector<C64> {
        let pad = self.pad;
        let mut v = if idx.len() == 1 {
            self.modes[0].vectors[idx[0]].clone()
        } else {
            let (a, b) = (&self.modes[0].vectors[idx[0]], &self.modes[1].vectors[idx[1]]);
            DVector::from_fn(pad * pad, |i, _| a[i / pad] * b[i % pad])
        };
        for op in &self.ops {
            v = self.apply_linear(op, &v);
        }
        v
    }

    fn apply_linear(&self, op: &LinearLadder, v: &DVector<C64>) -> DVector<C64> {
        let pad = self.pad;
        let n_modes = self.n_modes();
        let mut out = DVector::from_element(v.len(), C64::new(0.0, 0.0));
        for (mode, &u) in op.coeffs.iter().enumerate() {
            if u == C64::new(0.0, 0.0) {
                continue;
            }
            let stride = if n_modes == 1 || mode == 1 { 1 } else { pad };
            for i in 0..v.len() {
                let n = (i / stride) % pad;
                match op.kind {
                    LadderKind::Annihilation => {
                        if n + 1 < pad {
                            out[i] += u * ((n + 1) as f64).sqrt() * v[i + stride];
                        }
                    }
                    LadderKind::Creation => {
                        if n > 0 {
                            out[i] += u.conj() * (n as f64).sqrt() * v[i - stride];
                        }
                    }
                }
            }
        }
        out
    }

    fn occupation(&self, i: usize) -> (usize, bool) {
        // total photon number and whether the index lies inside the cutoff
        if self.n_modes() == 1 {
            (i, i < self.dim)
        } else {
            let (n1, n2) = (i / self.pad, i % self.pad);
            (n1 + n2, n1 < self.dim && n2 < self.dim)
        }
    }

    /// `(⟨N⟩, ⟨N²⟩, tail_mass)` on the cutoff box, renormalized.
    pub fn raw_moments(&self) -> Result<(f64, f64, f64)> {
        let mut full = 0.0;
        let mut kept = 0.0;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (w, idx) in self.components() {
            let v = self.component_vector(&idx);
            for (i, x) in v.iter().enumerate() {
                let p = w * x.norm_sqr();
                full += p;
                let (n, inside) = self.occupation(i);
                if inside {
                    kept += p;
                    s1 += p * n as f64;
                    s2 += p * (n * n) as f64;
                }
            }
        }
        if !(kept > DEGENERATE_NORM) {
            return Err(Error::Degenerate(kept));
        }
        // weight never generated is scaled like the kept part, which is an
        // underestimate for photon-added states; the doubling check covers it
        let tail = (full - kept) / full + self.dropped_weight();
        Ok((s1 / kept, s2 / kept, tail))
    }

    pub fn tail_mass(&self) -> Result<f64> {
        Ok(self.raw_moments()?.2)
    }

    /// Normalized density matrix on the cutoff box, in the frame before any
    /// passive network.
    pub fn density_matrix(&self) -> Result<nalgebra::DMatrix<C64>> {
        let d = self.dim.pow(self.n_modes() as u32);
        if d > 4096 {
            return Err(Error::TruncationCap { cap: 4096 });
        }
        let mut rho = nalgebra::DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        for (w, idx) in self.components() {
            let v = self.component_vector(&idx);
            let cropped: Vec<(usize, C64)> = v
                .iter()
                .enumerate()
                .filter_map(|(i, x)| {
                    let inside = self.occupation(i).1;
                    inside.then(|| {
                        let j = if self.n_modes() == 1 {
                            i
                        } else {
                            (i / self.pad) * self.dim + i % self.pad
                        };
                        (j, *x)
                    })
                })
                .collect();
            for &(a, xa) in &cropped {
                for &(b, xb) in &cropped {
                    rho[(a, b)] += xa * xb.conj() * w;
                }
            }
        }
        let tr = rho.trace().re;
        if !(tr > DEGENERATE_NORM) {
            return Err(Error::Degenerate(tr));
        }
        Ok(rho / C64::new(tr, 0.0))
    }
}

pub fn build_thermal(nu: f64, dim: usize) -> Result<TruncatedState> {
    build_gaussian(
        &GaussianParams {
            nu,
            z: 1.0,
            phi: 0.0,
            alpha: [0.0, 0.0],
        },
        dim,
    )
}

pub fn build_gaussian(params: &GaussianParams, dim: usize) -> Result<TruncatedState> {
    build_gaussian_for_ops(params, dim, 0)
}

/// As [`build_gaussian`], with room for `n_ops` ladder operations above the cutoff.
pub fn build_gaussian_for_ops(params: &GaussianParams, dim: usize, n_ops: usize) -> Result<TruncatedState> {
    if dim == 0 {
        return Err(Error::Domain("cutoff must be positive".into()));
    }
    let (mode, pad) = gaussian_ensemble(params, dim, n_ops)?;
    Ok(TruncatedState::single(dim, pad, mode))
}

/// Product of two single-mode Gaussian states followed by a beam splitter
/// `a₀ → cos θ a₀ + sin θ a₁`, `a₁ → -sin θ a₀ + cos θ a₁`.
pub fn build_two_mode(modes: &[GaussianParams; 2], theta: f64, dim: usize, n_ops: usize) -> Result<TruncatedState> {
    if dim == 0 {
        return Err(Error::Domain("cutoff must be positive".into()));
    }
    if dim > TWO_MODE_DIM_CAP {
        return Err(Error::TruncationCap {
            cap: TWO_MODE_DIM_CAP,
        });
    }
    let (a, pa) = gaussian_ensemble(&modes[0], dim, n_ops)?;
    let (b, pb) = gaussian_ensemble(&modes[1], dim, n_ops)?;
    let pad = pa.max(pb);
    let extend = |m: ModeEnsemble| ModeEnsemble {
        vectors: m
            .vectors
            .into_iter()
            .map(|v| {
                let mut w = DVector::from_element(pad, C64::new(0.0, 0.0));
                w.rows_mut(0, v.len()).copy_from(&v);
                w
            })
            .collect(),
        ..m
    };
    let (s, c) = theta.sin_cos();
    Ok(TruncatedState {
        dim,
        pad,
        modes: vec![extend(a), extend(b)],
        frame: vec![
            vec![C64::new(c, 0.0), C64::new(s, 0.0)],
            vec![C64::new(-s, 0.0), C64::new(c, 0.0)],
        ],
        ops: Vec::new(),
    })
}

/// Best-effort model of a coherent/Fock superposition exposed to a bath:
/// `(1 - w)|ψ⟩⟨ψ| + w ρ_th(ν)` with `|ψ⟩ ∝ |β⟩ + |n⟩`.
pub fn build_coherent_fock_superposition(
    alpha: [f64; 2],
    n: usize,
    mixing: f64,
    nu: f64,
    dim: usize,
) -> Result<TruncatedState> {
    if !(0.0..=1.0).contains(&mixing) {
        return Err(Error::Domain(format!("mixing weight {mixing} outside [0, 1]")));
    }
    thermal_occupation(nu)?;
    let thermal = thermal_components(nu.max(1.0), dim.max(1));
    let pad = padded_size(dim.max(n + 1), 4, 0).max(thermal.len() + 1);
    let beta = C64::new(alpha[0], alpha[1]);
    let mut psi = coherent_vector(beta, pad);
    let overlap = psi[n.min(pad - 1)].re;
    psi[n] += C64::new(1.0, 0.0);
    let norm = (2.0 + 2.0 * overlap).sqrt();
    psi /= C64::new(norm, 0.0);

    let mut weights = vec![1.0 - mixing];
    let mut vectors = vec![psi];
    for (k, p) in thermal.iter().enumerate() {
        let mut e = DVector::from_element(pad, C64::new(0.0, 0.0));
        e[k] = C64::new(1.0, 0.0);
        weights.push(mixing * p);
        vectors.push(e);
    }
    Ok(TruncatedState::single(
        dim,
        pad,
        ModeEnsemble { weights, vectors },
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub dims_tried: Vec<usize>,
    /// Largest relative change of `(⟨N⟩, ⟨N²⟩)` against the previous cutoff.
    pub moment_deltas: Vec<f64>,
    pub tail_masses: Vec<f64>,
    pub converged: bool,
}

/// Doubles the cutoff from `start_dim` until two successive cutoffs agree to
/// `1e-10` relative and the tail mass is below `1e-10`.
pub fn oracle_moments<F>(build: F, reference_n0: f64, start_dim: usize, cap: usize) -> Result<(MomentResult, ConvergenceReport)>
where
    F: Fn(usize) -> Result<TruncatedState>,
{
    let mut report = ConvergenceReport {
        dims_tried: Vec::new(),
        moment_deltas: Vec::new(),
        tail_masses: Vec::new(),
        converged: false,
    };
    let mut dim = start_dim.max(2);
    let mut previous: Option<(f64, f64)> = None;
    loop {
        let (mean, second, tail) = build(dim)?.raw_moments()?;
        report.dims_tried.push(dim);
        report.tail_masses.push(tail);
        if let Some((pm, ps)) = previous {
            let delta = ((mean - pm).abs() / mean.abs().max(1.0)).max((second - ps).abs() / second.abs().max(1.0));
            report.moment_deltas.push(delta);
            if delta <= CONVERGENCE_TOL && tail <= CONVERGENCE_TOL {
                report.converged = true;
                return Ok((MomentResult::from_second_moment(mean, second, reference_n0)?, report));
            }
        }
        previous = Some((mean, second));
        if dim >= cap {
            return Err(Error::TruncationCap { cap });
        }
        dim = (2 * dim).min(cap);
    }
}

/// `Γ` of a coherent state truncated to `trunc_dim` levels and renormalized,
/// next to the exact `|α|`. Returns `(Γ_truncated, Γ_exact, bound)`; the bound
/// for a coherent state is `|α|` itself.
pub fn truncation_pathology_demo(alpha: f64, trunc_dim: usize) -> Result<(f64, f64, f64)> {
    if trunc_dim < 2 {
        return Err(Error::Domain("truncation needs at least two levels".into()));
    }
    let v = coherent_vector(C64::new(alpha, 0.0), trunc_dim);
    let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (k, x) in v.iter().enumerate() {
        let p = x.norm_sqr() / norm;
        s1 += p * k as f64;
        s2 += p * (k * k) as f64;
    }
    let var = s2 - s1 * s1;
    let gamma = if var > 0.0 { s1 / var.sqrt() } else { 0.0 };
    Ok((gamma, alpha.abs(), alpha.abs()))
}

/// Closed form of the three-level truncation: with `x = |α|²` and
/// `C² = 1/(1 + x + x²/2)`, `⟨N⟩ = C²(x + x²)`, `⟨N²⟩ = C²(x + 2x²)`.
pub fn three_level_coherent_snr(alpha: f64) -> f64 {
    let x = alpha * alpha;
    let c2 = 1.0 / (1.0 + x + 0.5 * x * x);
    let mean = c2 * (x + x * x);
    let second = c2 * (x + 2.0 * x * x);
    mean / (second - mean * mean).sqrt()
}

/// Convenience: single-mode Gaussian state followed by `ops`, converged.
pub fn oracle_single_mode(
    params: &GaussianParams,
    ops: &[LadderFactor],
    reference_n0: f64,
) -> Result<(MomentResult, ConvergenceReport)> {
    oracle_moments(
        |dim| {
            let mut s = build_gaussian_for_ops(params, dim, ops.len())?;
            for &op in ops {
                s = s.apply_ladder(op)?;
            }
            Ok(s)
        },
        reference_n0,
        16,
        DEFAULT_DIM_CAP,
    )
}

/// Convenience: two-mode product state, beam splitter `θ`, then `ops`, converged.
pub fn oracle_two_mode(
    modes: &[GaussianParams; 2],
    theta: f64,
    ops: &[LadderFactor],
    reference_n0: f64,
) -> Result<(MomentResult, ConvergenceReport)> {
    oracle_moments(
        |dim| {
            let mut s = build_two_mode(modes, theta, dim, ops.len())?;
            for &op in ops {
                s = s.apply_ladder(op)?;
            }
            Ok(s)
        },
        reference_n0,
        8,
        TWO_MODE_DIM_CAP,
    )
}
