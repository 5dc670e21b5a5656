//! Multistart simplex search over the Gaussian block of photon-added states.
//!
//! The state is `O U_BS (⊗_j D_j R_j S_j ρ_th) U_BS† O†` with `O` a product of
//! creation operators. Points that overspend the budget are pulled back by
//! shrinking all squeezing and displacement by a common factor until
//! `δN = ε`; at zero squeezing and displacement the state is the bare
//! photon-added thermal state, which is feasible whenever the ansatz is.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{max_additions, min_added_energy};
use crate::error::{Error, Result};
use crate::gaussian::{
    apply_symplectic, beam_splitter, thermal_occupation, GaussianState, MomentResult, ThermalSpec,
};
use crate::gaussian_opt::{optimal_displacement, solve_optimal_squeezing, GaussianOptProblem};
use crate::nelder_mead::{minimize, NelderMeadOptions};
use crate::roots::brent;
use crate::wick::{LadderFactor, NonGaussianState};

/// Below this photon-number spread a state counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e-8;
/// Value reported in place of `Γ` for divergent states.
pub const DISPLAY_CAP: f64 = 1e8;
/// Two optima closer than this (relative) are ties.
const TIE_TOL: f64 = 1e-10;

/// How per-mode Gaussian parameters are shared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSharing {
    #[default]
    Independent,
    /// Every mode carries the same squeezing, orientation and displacement.
    Symmetric,
    /// Mode 0 is free, the remaining modes share one parameter set.
    FirstPlusShared,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzSpec {
    pub nu: f64,
    pub epsilon: f64,
    /// Creation operators applied to each mode after the network.
    pub additions: Vec<usize>,
    pub sharing: ModeSharing,
    /// Beam splitter angles of the chain `(n-2,n-1), …, (0,1)`; `None` leaves them free.
    pub fixed_thetas: Option<Vec<f64>>,
    pub freeze_displacement: bool,
}

impl AnsatzSpec {
    pub fn single_mode(nu: f64, epsilon: f64, m: usize) -> Self {
        AnsatzSpec {
            nu,
            epsilon,
            additions: vec![m],
            sharing: ModeSharing::Independent,
            fixed_thetas: None,
            freeze_displacement: false,
        }
    }

    pub fn multimode(nu: f64, epsilon: f64, additions: Vec<usize>, sharing: ModeSharing) -> Self {
        AnsatzSpec {
            nu,
            epsilon,
            additions,
            sharing,
            fixed_thetas: None,
            freeze_displacement: false,
        }
    }

    pub fn with_fixed_thetas(mut self, thetas: Vec<f64>) -> Self {
        self.fixed_thetas = Some(thetas);
        self
    }

    pub fn with_frozen_displacement(mut self, freeze: bool) -> Self {
        self.freeze_displacement = freeze;
        self
    }

    pub fn n_modes(&self) -> usize {
        self.additions.len()
    }

    pub fn total_additions(&self) -> usize {
        self.additions.iter().sum()
    }

    fn ops(&self) -> Vec<LadderFactor> {
        self.additions
            .iter()
            .enumerate()
            .flat_map(|(mode, &m)| std::iter::repeat_n(LadderFactor::create(mode), m))
            .collect()
    }

    /// Reference energy: the thermal state of every mode.
    pub fn reference_energy(&self) -> Result<f64> {
        Ok(self.n_modes() as f64 * thermal_occupation(self.nu)?)
    }

    /// Structural checks plus the requirement `m(N₀+1) ≤ ε`.
    pub fn validate(&self) -> Result<()> {
        if self.additions.is_empty() {
            return Err(Error::Domain("ansatz needs at least one mode".into()));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Domain(format!("energy budget must be >= 0, got {}", self.epsilon)));
        }
        let n0 = thermal_occupation(self.nu)?;
        if let Some(t) = &self.fixed_thetas {
            if t.len() != self.n_modes() - 1 {
                return Err(Error::Contract(format!(
                    "{} beam splitter angles given for {} modes",
                    t.len(),
                    self.n_modes()
                )));
            }
        }
        let (min_energy, _) = min_added_energy(self.total_additions() as u64, n0);
        if min_energy > self.epsilon * (1.0 + 1e-12) {
            let m_max = max_additions(self.epsilon, ThermalSpec::Nu(self.nu))?.m_max;
            return Err(Error::Infeasible {
                min_energy,
                epsilon: self.epsilon,
                m_max,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeParams {
    pub z: f64,
    pub phi: f64,
    pub alpha: [f64; 2],
}

impl ModeParams {
    pub const IDLE: ModeParams = ModeParams {
        z: 1.0,
        phi: 0.0,
        alpha: [0.0, 0.0],
    };
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzParams {
    pub modes: Vec<ModeParams>,
    pub thetas: Vec<f64>,
}

impl AnsatzParams {
    /// `Σ_j -ln z_j`, used to break ties.
    pub fn total_squeezing(&self) -> f64 {
        self.modes.iter().map(|m| -m.z.ln()).sum()
    }
}

/// Gaussian block: per-mode squeezed displaced thermal states sent through
/// the beam splitter chain, the pair `(n-2, n-1)` first.
pub fn gaussian_block(spec: &AnsatzSpec, params: &AnsatzParams) -> Result<GaussianState> {
    let n = spec.n_modes();
    if params.modes.len() != n || params.thetas.len() + 1 != n {
        return Err(Error::Contract(format!(
            "{} mode parameter sets and {} angles for {n} modes",
            params.modes.len(),
            params.thetas.len()
        )));
    }
    let parts = params
        .modes
        .iter()
        .map(|m| GaussianState::single_mode(spec.nu, m.z, m.phi, m.alpha))
        .collect::<Result<Vec<_>>>()?;
    let mut state = GaussianState::product(&parts);
    for (k, &theta) in params.thetas.iter().enumerate().rev() {
        if theta != 0.0 {
            state = apply_symplectic(&state, &beam_splitter(n, theta, k, k + 1)?)?;
        }
    }
    Ok(state)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub moments: MomentResult,
    pub divergent: bool,
    /// `Γ`, or [`DISPLAY_CAP`] when divergent.
    pub gamma: f64,
}

impl Evaluation {
    fn new(moments: MomentResult) -> Self {
        let divergent = moments.var_n.sqrt() < DIVERGENCE_THRESHOLD && moments.delta_n > 0.0;
        let gamma = if divergent {
            DISPLAY_CAP
        } else {
            match moments.snr.value() {
                g if g.is_nan() => 0.0,
                g => g.min(DISPLAY_CAP),
            }
        };
        Evaluation {
            moments,
            divergent,
            gamma,
        }
    }
}

pub fn evaluate(spec: &AnsatzSpec, params: &AnsatzParams) -> Result<Evaluation> {
    let base = gaussian_block(spec, params)?;
    let state = NonGaussianState::new(base, spec.ops())?;
    let (mean, second) = state.raw_moments()?;
    let moments = MomentResult::from_second_moment(mean.re, second.re, spec.reference_energy()?)?;
    Ok(Evaluation::new(moments))
}

fn delta_n(spec: &AnsatzSpec, params: &AnsatzParams) -> Result<f64> {
    let base = gaussian_block(spec, params)?;
    let state = NonGaussianState::new(base, spec.ops())?;
    Ok(state.mean_photon_number()? - spec.reference_energy()?)
}

/// Photon-added squeezed thermal state, `m` additions, no optimization.
pub fn photon_added_moments(nu: f64, z: f64, phi: f64, alpha: [f64; 2], m: usize) -> Result<Evaluation> {
    let spec = AnsatzSpec::single_mode(nu, f64::INFINITY, m);
    evaluate(
        &spec,
        &AnsatzParams {
            modes: vec![ModeParams { z, phi, alpha }],
            thetas: Vec::new(),
        },
    )
}

/// Map between the flat search vector and [`AnsatzParams`].
struct Layout {
    groups: Vec<Vec<usize>>,
    free_phase: Vec<bool>,
    with_alpha: bool,
    free_thetas: bool,
}

impl Layout {
    fn new(spec: &AnsatzSpec) -> Self {
        let n = spec.n_modes();
        let groups: Vec<Vec<usize>> = match spec.sharing {
            _ if n == 1 => vec![vec![0]],
            ModeSharing::Independent => (0..n).map(|j| vec![j]).collect(),
            ModeSharing::Symmetric => vec![(0..n).collect()],
            ModeSharing::FirstPlusShared => vec![vec![0], (1..n).collect()],
        };
        // a common rotation of every mode commutes with N and the network
        let free_phase = (0..groups.len()).map(|g| g > 0).collect();
        Layout {
            groups,
            free_phase,
            with_alpha: !spec.freeze_displacement,
            free_thetas: spec.fixed_thetas.is_none(),
        }
    }

    fn group_len(&self, g: usize) -> usize {
        1 + self.free_phase[g] as usize + 2 * self.with_alpha as usize
    }

    fn len(&self, n_modes: usize) -> usize {
        let per: usize = (0..self.groups.len()).map(|g| self.group_len(g)).sum();
        per + if self.free_thetas { n_modes - 1 } else { 0 }
    }

    /// Squeezing and displacement scaled by `t`.
    fn decode(&self, spec: &AnsatzSpec, v: &[f64], t: f64) -> AnsatzParams {
        let n = spec.n_modes();
        let mut modes = vec![ModeParams::IDLE; n];
        let mut i = 0;
        for (g, members) in self.groups.iter().enumerate() {
            let x = v[i].abs() * t;
            i += 1;
            let phi = if self.free_phase[g] {
                i += 1;
                v[i - 1]
            } else {
                0.0
            };
            let alpha = if self.with_alpha {
                i += 2;
                [v[i - 2] * t, v[i - 1] * t]
            } else {
                [0.0, 0.0]
            };
            for &j in members {
                modes[j] = ModeParams {
                    z: (-2.0 * x).exp(),
                    phi,
                    alpha,
                };
            }
        }
        let thetas = match &spec.fixed_thetas {
            Some(t) => t.clone(),
            None => v[i..i + n - 1].to_vec(),
        };
        AnsatzParams { modes, thetas }
    }

    fn encode(&self, params: &AnsatzParams) -> Vec<f64> {
        let mut v = Vec::new();
        for (g, members) in self.groups.iter().enumerate() {
            let m = params.modes[members[0]];
            v.push(-0.5 * m.z.ln());
            if self.free_phase[g] {
                v.push(m.phi);
            }
            if self.with_alpha {
                v.extend_from_slice(&m.alpha);
            }
        }
        if self.free_thetas {
            v.extend_from_slice(&params.thetas);
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerBudget {
    pub restarts: usize,
    /// Objective evaluations per restart.
    pub max_evals: usize,
    pub seed: u64,
}

impl Default for OptimizerBudget {
    fn default() -> Self {
        OptimizerBudget {
            restarts: 32,
            max_evals: 3000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationalResult {
    pub best_params: AnsatzParams,
    pub gamma: f64,
    pub delta_n: f64,
    pub moments: MomentResult,
    pub divergent: bool,
    pub restarts_used: usize,
    /// Best `Γ` of each restart, in restart order. The bare photon-added
    /// state is also a candidate for the overall optimum.
    pub history: Vec<f64>,
}

/// Largest `t ∈ [0, 1]` keeping `δN ≤ ε` when the parameters are scaled by `t`.
fn project(spec: &AnsatzSpec, layout: &Layout, v: &[f64]) -> Result<(AnsatzParams, f64)> {
    let full = layout.decode(spec, v, 1.0);
    if delta_n(spec, &full)? <= spec.epsilon {
        return Ok((full, 1.0));
    }
    let g = |t: f64| match delta_n(spec, &layout.decode(spec, v, t)) {
        Ok(d) => d - spec.epsilon,
        Err(_) => f64::NAN,
    };
    let g0 = g(0.0);
    if g0 >= 0.0 {
        return Ok((layout.decode(spec, v, 0.0), 0.0));
    }
    let t = brent(g, 0.0, 1.0, 1e-13, 200)?;
    // the root may sit a hair above the budget
    let mut t_safe = t;
    for _ in 0..60 {
        let p = layout.decode(spec, v, t_safe);
        if delta_n(spec, &p)? <= spec.epsilon * (1.0 + 1e-12) + 1e-13 {
            return Ok((p, t_safe));
        }
        t_safe *= 1.0 - 1e-12_f64.max(1e-3 * (1.0 - t_safe / t.max(1e-300)).abs());
    }
    Ok((layout.decode(spec, v, 0.0), 0.0))
}

struct Candidate {
    params: AnsatzParams,
    eval: Evaluation,
}

/// `a` beats `b`: larger `Γ`, then smaller `δN`, then less squeezing.
fn better(a: &Candidate, b: &Candidate) -> bool {
    let (ga, gb) = (a.eval.gamma, b.eval.gamma);
    if (ga - gb).abs() > TIE_TOL * ga.abs().max(gb.abs()).max(1.0) {
        return ga > gb;
    }
    let (da, db) = (a.eval.moments.delta_n, b.eval.moments.delta_n);
    if (da - db).abs() > TIE_TOL * da.abs().max(db.abs()).max(1.0) {
        return da < db;
    }
    a.params.total_squeezing() < b.params.total_squeezing()
}

fn starting_point(spec: &AnsatzSpec, layout: &Layout, restart: usize, seed: u64) -> Result<Vec<f64>> {
    let n = spec.n_modes();
    let n0 = thermal_occupation(spec.nu)?;
    let spare = (spec.epsilon - min_added_energy(spec.total_additions() as u64, n0).0).max(0.0);
    if restart == 0 {
        // the Gaussian optimum for the spare budget on mode 0, the rest idle
        let z = solve_optimal_squeezing(&GaussianOptProblem::new(spec.nu, spare)?)?;
        let alpha = if spec.freeze_displacement {
            [0.0, 0.0]
        } else {
            optimal_displacement(z, spec.nu)?
        };
        let mut modes = vec![ModeParams::IDLE; n];
        for (j, m) in modes.iter_mut().enumerate() {
            if j == 0 || spec.sharing == ModeSharing::Symmetric {
                *m = ModeParams { z, phi: 0.0, alpha };
            }
        }
        let thetas = spec.fixed_thetas.clone().unwrap_or_else(|| vec![0.3; n - 1]);
        return Ok(layout.encode(&AnsatzParams { modes, thetas }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
    let amp = spare.sqrt().max(0.1);
    let mut v = Vec::with_capacity(layout.len(n));
    for g in 0..layout.groups.len() {
        v.push(rng.random_range(0.0..1.2));
        if layout.free_phase[g] {
            v.push(rng.random_range(0.0..std::f64::consts::PI));
        }
        if layout.with_alpha {
            v.push(rng.random_range(-amp..amp));
            v.push(rng.random_range(-amp..amp));
        }
    }
    if layout.free_thetas {
        for _ in 0..n - 1 {
            v.push(rng.random_range(0.0..std::f64::consts::FRAC_PI_2));
        }
    }
    Ok(v)
}

fn run_restart(spec: &AnsatzSpec, layout: &Layout, budget: &OptimizerBudget, restart: usize) -> Result<Option<Candidate>> {
    let x0 = starting_point(spec, layout, restart, budget.seed)?;
    let objective = |v: &[f64]| -> f64 {
        match project(spec, layout, v).and_then(|(p, _)| evaluate(spec, &p)) {
            Ok(e) => -e.gamma,
            Err(_) => f64::INFINITY,
        }
    };
    let opts = NelderMeadOptions {
        max_evals: budget.max_evals,
        ..Default::default()
    };
    let r = minimize(objective, &x0, &opts);
    if !r.f.is_finite() {
        return Ok(None);
    }
    let (params, _) = project(spec, layout, &r.x)?;
    let eval = evaluate(spec, &params)?;
    Ok(Some(Candidate { params, eval }))
}

/// Maximizes `Γ` subject to `δN ≤ ε` from `budget.restarts` starting points.
/// Restart 0 starts from the Gaussian optimum of the spare budget, the rest
/// from points drawn with seed `budget.seed + restart`.
pub fn optimize(spec: &AnsatzSpec, budget: &OptimizerBudget) -> Result<VariationalResult> {
    spec.validate()?;
    let layout = Layout::new(spec);
    let restarts = budget.restarts.max(1);
    let candidates: Vec<Option<Candidate>> = (0..restarts)
        .into_par_iter()
        .map(|k| run_restart(spec, &layout, budget, k))
        .collect::<Result<_>>()?;
    let history = candidates
        .iter()
        .map(|c| c.as_ref().map_or(f64::NAN, |c| c.eval.gamma))
        .collect();
    // the bare photon-added thermal state is an isolated optimum at zero
    // temperature (a Fock state), which a simplex only approaches
    let bare = AnsatzParams {
        modes: vec![ModeParams::IDLE; spec.n_modes()],
        thetas: spec.fixed_thetas.clone().unwrap_or_else(|| vec![0.0; spec.n_modes() - 1]),
    };
    let bare = Candidate {
        eval: evaluate(spec, &bare)?,
        params: bare,
    };
    let best = candidates
        .into_iter()
        .flatten()
        .chain(std::iter::once(bare))
        .reduce(|best, c| if better(&c, &best) { c } else { best })
        .ok_or_else(|| Error::Optimization("no restart reached a feasible point".into()))?;
    Ok(VariationalResult {
        gamma: best.eval.gamma,
        delta_n: best.eval.moments.delta_n,
        moments: best.eval.moments,
        divergent: best.eval.divergent,
        best_params: best.params,
        restarts_used: restarts,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{photon_moments, raw_photon_moments};
    use crate::gaussian_opt::optimal_gaussian_snr;
    use approx::assert_relative_eq;

    fn small() -> OptimizerBudget {
        OptimizerBudget {
            restarts: 4,
            max_evals: 2000,
            seed: 11,
        }
    }

    #[test]
    fn gaussian_block_of_product_matches_direct_state() {
        let spec = AnsatzSpec::multimode(1.5, 10.0, vec![0, 0], ModeSharing::Independent);
        let p = AnsatzParams {
            modes: vec![
                ModeParams { z: 0.5, phi: 0.2, alpha: [0.3, 0.1] },
                ModeParams { z: 0.8, phi: 1.0, alpha: [0.0, -0.4] },
            ],
            thetas: vec![0.7],
        };
        let e = evaluate(&spec, &p).unwrap();
        let g = photon_moments(&gaussian_block(&spec, &p).unwrap()).unwrap();
        assert_relative_eq!(e.moments.var_n, g.var_n, max_relative = 1e-12);
        assert_relative_eq!(e.moments.delta_n, g.delta_n, max_relative = 1e-12);
    }

    #[test]
    fn layout_round_trip() {
        let spec = AnsatzSpec::multimode(1.2, 3.0, vec![1, 0, 0], ModeSharing::FirstPlusShared);
        let layout = Layout::new(&spec);
        let v: Vec<f64> = (0..layout.len(3)).map(|i| 0.1 * (i + 1) as f64).collect();
        let p = layout.decode(&spec, &v, 1.0);
        assert_eq!(p.modes[1], p.modes[2]);
        assert_eq!(p.modes[0].phi, 0.0);
        let back = layout.encode(&p);
        for (a, b) in back.iter().zip(&v) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn infeasible_spec_reports_m_max() {
        let spec = AnsatzSpec::single_mode(3.0, 2.5, 2);
        match optimize(&spec, &small()) {
            Err(Error::Infeasible { m_max, .. }) => assert_eq!(m_max, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gaussian_calibration() {
        for (nu, eps) in [(1.0, 5.0), (1.7, 2.0), (3.0, 12.0)] {
            let exact = optimal_gaussian_snr(&GaussianOptProblem::new(nu, eps).unwrap()).unwrap();
            let r = optimize(&AnsatzSpec::single_mode(nu, eps, 0), &small()).unwrap();
            assert!((r.gamma - exact.gamma_opt).abs() <= 1e-6 * exact.gamma_opt, "{} vs {}", r.gamma, exact.gamma_opt);
            assert!(r.delta_n <= eps + 1e-9);
        }
    }

    #[test]
    fn pure_fock_limit_is_divergent() {
        let r = optimize(&AnsatzSpec::single_mode(1.0, 2.0, 1), &small()).unwrap();
        assert!(r.divergent);
        assert_eq!(r.gamma, DISPLAY_CAP);
    }

    #[test]
    fn photon_addition_beats_gaussian_when_cold() {
        let nu = 1.05;
        let eps = 3.0;
        let exact = optimal_gaussian_snr(&GaussianOptProblem::new(nu, eps).unwrap()).unwrap();
        let r = optimize(&AnsatzSpec::single_mode(nu, eps, 1), &small()).unwrap();
        assert!(r.gamma > exact.gamma_opt);
        assert!(r.delta_n <= eps + 1e-9);
    }

    #[test]
    fn seeded_runs_repeat() {
        let spec = AnsatzSpec::single_mode(1.4, 3.0, 1);
        let a = optimize(&spec, &small()).unwrap();
        let b = optimize(&spec, &small()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn projection_lands_on_budget() {
        let spec = AnsatzSpec::single_mode(1.3, 2.0, 1);
        let layout = Layout::new(&spec);
        let (p, t) = project(&spec, &layout, &[0.8, 2.0, 0.5]).unwrap();
        assert!(t < 1.0);
        let e = evaluate(&spec, &p).unwrap();
        assert!(e.moments.delta_n <= 2.0 * (1.0 + 1e-12));
        assert!(e.moments.delta_n > 2.0 - 1e-9);
        let g = raw_photon_moments(&GaussianState::thermal(1, 1.3).unwrap(), 0.0).unwrap();
        assert!(g.mean_n < e.moments.mean_n);
    }
}
