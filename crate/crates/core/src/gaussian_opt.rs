//! Exact maximization of `Γ` over single-mode Gaussian states with a
//! budget `δN ≤ ε`.
//!
//! With the phase absorbed into the displacement, the optimum saturates the
//! budget and the Lagrange conditions reduce to the quartic
//! `ν(1/z³ + z - 2) = 4ε` for the squeezing, with the remaining energy spent
//! on a displacement along the squeezed quadrature.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{
    nu_from_temperature, single_mode_closed_form, thermal_occupation, MomentResult, NuConvention,
    ThermalSpec,
};
use crate::roots::brent;
use crate::sweep::{flag, SweepTable};

const Z_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianOptProblem {
    pub nu: f64,
    pub epsilon: f64,
}

impl GaussianOptProblem {
    pub fn new(nu: f64, epsilon: f64) -> Result<Self> {
        thermal_occupation(nu)?;
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::Domain(format!("energy budget must be >= 0, got {epsilon}")));
        }
        Ok(GaussianOptProblem {
            nu: nu.max(1.0),
            epsilon,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianOptResult {
    pub z_opt: f64,
    pub alpha_opt: [f64; 2],
    pub gamma_opt: f64,
    pub delta_n: f64,
    pub moments: MomentResult,
    /// Relative stationarity residual of the Lagrangian.
    pub kkt_residual: f64,
    pub approx_gamma: f64,
}

/// Unique root in `(0, 1]` of `ν(1/z³ + z - 2) = 4ε`; exactly 1 for `ε = 0`.
pub fn solve_optimal_squeezing(problem: &GaussianOptProblem) -> Result<f64> {
    let GaussianOptProblem { nu, epsilon } = *problem;
    if epsilon == 0.0 {
        return Ok(1.0);
    }
    let h = |z: f64| nu * (1.0 / (z * z * z) + z - 2.0) - 4.0 * epsilon;
    if h(Z_FLOOR) <= 0.0 {
        return Err(Error::Root(format!(
            "budget {epsilon} needs squeezing below z = {Z_FLOOR}"
        )));
    }
    brent(h, Z_FLOOR, 1.0, 0.0, 500)
}

/// `α₁² = (ν/4)(1/z³ - 1/z)`, `α₂ = 0`.
pub fn optimal_displacement(z_opt: f64, nu: f64) -> Result<[f64; 2]> {
    if !(z_opt > 0.0 && z_opt <= 1.0) {
        return Err(Error::Domain(format!("squeezing z = {z_opt} outside (0, 1]")));
    }
    let a1_sq = 0.25 * nu * (1.0 / (z_opt * z_opt * z_opt) - 1.0 / z_opt);
    Ok([a1_sq.max(0.0).sqrt(), 0.0])
}

/// High-squeezing approximation `Γ² ≈ 8ε² / (ν²[3u^{2/3} - 2 + u^{-2/3}])`
/// with `u = 4ε/ν + 2`. It follows from `1/z³ ≈ u` and dropping the vacuum
/// offset `-1/4` from the variance; the error is below 5% once `z_opt ≤ 0.3`.
pub fn approx_gamma_opt(nu: f64, epsilon: f64) -> f64 {
    let u = 4.0 * epsilon / nu + 2.0;
    let u23 = u.powf(2.0 / 3.0);
    epsilon * (8.0 / (nu * nu * (3.0 * u23 - 2.0 + 1.0 / u23))).sqrt()
}

/// `Γ` of a thermal mode displaced by `‖α‖² = ε`, no squeezing.
pub fn coherent_only_snr(nu: f64, epsilon: f64) -> f64 {
    let (dn, var) = single_mode_closed_form(nu, 1.0, 0.0, [epsilon.sqrt(), 0.0]);
    dn / var.sqrt()
}

/// `Γ` of a squeezed thermal mode with no displacement spending the whole budget.
pub fn squeezed_only_snr(nu: f64, epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        return 0.0;
    }
    let b = 2.0 + 4.0 * epsilon / nu;
    // smaller root of z + 1/z = b, written to avoid cancellation
    let z = 2.0 / (b + (b * b - 4.0).sqrt());
    let (dn, var) = single_mode_closed_form(nu, z, 0.0, [0.0, 0.0]);
    dn / var.sqrt()
}

/// Objective (variance) and constraint (`δN`) as functions of `(z, α₁, α₂)` at `φ = 0`.
fn objective_and_constraint(nu: f64, x: [f64; 3]) -> (f64, f64) {
    let (dn, var) = single_mode_closed_form(nu, x[0], 0.0, [x[1], x[2]]);
    (var, dn)
}

/// `‖∇f - λ∇g‖∞ / max(‖∇f‖∞, 1)` with `λ` fitted by least squares. Gradients
/// are central differences Richardson-extrapolated from steps `h` and `h/2`,
/// `h = 1e-4` (capped at `z/2` for the squeezing). A plain `1e-6` step has a
/// rounding floor near `1e-9` relative, which is the size of the residual we
/// want to certify.
pub fn kkt_residual(nu: f64, z: f64, alpha: [f64; 2]) -> f64 {
    let x = [z, alpha[0], alpha[1]];
    let central = |i: usize, h: f64| {
        let mut up = x;
        let mut down = x;
        up[i] += h;
        down[i] -= h;
        let (fu, gu) = objective_and_constraint(nu, up);
        let (fd, gd) = objective_and_constraint(nu, down);
        ((fu - fd) / (2.0 * h), (gu - gd) / (2.0 * h))
    };
    let mut grad_f = [0.0; 3];
    let mut grad_g = [0.0; 3];
    for i in 0..3 {
        let h = if i == 0 { 1e-4f64.min(0.5 * z) } else { 1e-4 };
        let (f1, g1) = central(i, h);
        let (f2, g2) = central(i, 0.5 * h);
        grad_f[i] = (4.0 * f2 - f1) / 3.0;
        grad_g[i] = (4.0 * g2 - g1) / 3.0;
    }
    let gg: f64 = grad_g.iter().map(|g| g * g).sum();
    let fg: f64 = grad_f.iter().zip(&grad_g).map(|(f, g)| f * g).sum();
    let lambda = if gg > 0.0 { fg / gg } else { 0.0 };
    let res = (0..3)
        .map(|i| (grad_f[i] - lambda * grad_g[i]).abs())
        .fold(0.0, f64::max);
    let scale = grad_f.iter().map(|g| g.abs()).fold(1.0, f64::max);
    res / scale
}

pub fn optimal_gaussian_snr(problem: &GaussianOptProblem) -> Result<GaussianOptResult> {
    let GaussianOptProblem { nu, epsilon } = *problem;
    let z = solve_optimal_squeezing(problem)?;
    let alpha = optimal_displacement(z, nu)?;
    let (delta_n, var) = single_mode_closed_form(nu, z, 0.0, alpha);
    if (delta_n - epsilon).abs() > 1e-9 * epsilon.max(1.0) {
        return Err(Error::Optimization(format!(
            "optimum does not saturate the budget: dN = {delta_n}, eps = {epsilon}"
        )));
    }
    let n0 = thermal_occupation(nu)?;
    let moments = MomentResult::from_moments(n0 + delta_n, var, n0)?;
    let kkt = if epsilon > 0.0 {
        kkt_residual(nu, z, alpha)
    } else {
        0.0
    };
    Ok(GaussianOptResult {
        z_opt: z,
        alpha_opt: alpha,
        gamma_opt: moments.snr.value(),
        delta_n,
        moments,
        kkt_residual: kkt,
        approx_gamma: approx_gamma_opt(nu, epsilon),
    })
}

pub const FIG2_COLUMNS: [&str; 14] = [
    "temperature",
    "nu",
    "epsilon",
    "z_opt",
    "alpha1",
    "alpha2",
    "delta_n",
    "mean_n",
    "var_n",
    "gamma_opt",
    "gamma_approx",
    "g2",
    "antibunched",
    "kkt_residual",
];

/// One row per `(T, ε)`, sorted by `T` then `ε`.
pub fn sweep_gaussian_optimum(
    temperatures: &[f64],
    epsilons: &[f64],
    convention: NuConvention,
) -> Result<SweepTable> {
    let mut t_sorted = temperatures.to_vec();
    t_sorted.sort_by(f64::total_cmp);
    let mut e_sorted = epsilons.to_vec();
    e_sorted.sort_by(f64::total_cmp);
    let cells: Vec<(f64, f64)> = t_sorted
        .iter()
        .flat_map(|&t| e_sorted.iter().map(move |&e| (t, e)))
        .collect();
    let rows: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(t, e)| {
            let nu = nu_from_temperature(ThermalSpec::Temperature {
                temperature: t,
                convention,
            })?;
            let r = optimal_gaussian_snr(&GaussianOptProblem::new(nu, e)?)?;
            let n0 = thermal_occupation(nu)?;
            let m = r.moments;
            Ok(vec![
                t,
                nu,
                e,
                r.z_opt,
                r.alpha_opt[0],
                r.alpha_opt[1],
                r.delta_n,
                m.mean_n,
                m.var_n,
                r.gamma_opt,
                r.approx_gamma,
                m.g2.unwrap_or(f64::NAN),
                flag(crate::gaussian::is_antibunched(&m, n0)),
                r.kkt_residual,
            ])
        })
        .collect::<Result<_>>()?;
    let mut table = SweepTable::new("gaussian_optimum", &FIG2_COLUMNS);
    for row in rows {
        table.push(row)?;
    }
    table.set_meta("nu_convention", convention.label());
    Ok(table)
}

/// `g²(0) - 1` of the optimal state.
fn g2_excess(nu: f64, epsilon: f64) -> Result<f64> {
    let r = optimal_gaussian_snr(&GaussianOptProblem::new(nu, epsilon)?)?;
    Ok(r.moments.g2.unwrap_or(f64::NAN) - 1.0)
}

/// Budgets where the optimal state's `g²(0)` crosses one, located by sign
/// changes on the `ε` grid and refined by Brent's method. One row per crossing.
pub fn g2_boundary(
    temperatures: &[f64],
    epsilons: &[f64],
    convention: NuConvention,
) -> Result<SweepTable> {
    let mut e_sorted = epsilons.to_vec();
    e_sorted.sort_by(f64::total_cmp);
    let mut t_sorted = temperatures.to_vec();
    t_sorted.sort_by(f64::total_cmp);
    let mut table = SweepTable::new("g2_boundary", &["temperature", "nu", "epsilon_boundary"]);
    for &t in &t_sorted {
        let nu = nu_from_temperature(ThermalSpec::Temperature {
            temperature: t,
            convention,
        })?;
        let values: Vec<f64> = e_sorted
            .iter()
            .map(|&e| g2_excess(nu, e))
            .collect::<Result<_>>()?;
        for k in 1..e_sorted.len() {
            let (a, b) = (values[k - 1], values[k]);
            if a.is_nan() || b.is_nan() || a.signum() == b.signum() {
                continue;
            }
            let root = brent(
                |e| g2_excess(nu, e).unwrap_or(f64::NAN),
                e_sorted[k - 1],
                e_sorted[k],
                1e-12,
                200,
            )?;
            table.push(vec![t, nu, root])?;
        }
    }
    table.set_meta("nu_convention", convention.label());
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{GaussianState, raw_photon_moments};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn squeezing_root_examples() {
        let z = solve_optimal_squeezing(&GaussianOptProblem::new(1.0, 5.0).unwrap()).unwrap();
        let residual = 1.0 / z.powi(3) + z - 2.0 - 20.0;
        assert!(residual.abs() < 1e-12);
        assert_relative_eq!(z, 0.358845, epsilon = 1e-6);
        assert_eq!(
            solve_optimal_squeezing(&GaussianOptProblem::new(1.3, 0.0).unwrap()).unwrap(),
            1.0
        );
        let small = solve_optimal_squeezing(&GaussianOptProblem::new(1.0, 1e-8).unwrap()).unwrap();
        assert!(1.0 - small < 1e-3);
        // large budget: z ≈ (4ε/ν + 2)^(-1/3)
        let z = solve_optimal_squeezing(&GaussianOptProblem::new(1.5, 1e4).unwrap()).unwrap();
        assert_relative_eq!(z, (4e4 / 1.5 + 2.0f64).powf(-1.0 / 3.0), max_relative = 1e-3);
        assert!(GaussianOptProblem::new(1.0, -1.0).is_err());
    }

    #[test]
    fn displacement_examples() {
        assert_eq!(optimal_displacement(1.0, 2.0).unwrap(), [0.0, 0.0]);
        let a = optimal_displacement(0.5, 1.0).unwrap();
        assert_relative_eq!(a[0] * a[0], 1.5, epsilon = 1e-14);
        assert_relative_eq!(a[0], 1.22474, epsilon = 1e-5);
        assert!(optimal_displacement(1.2, 1.0).is_err());
    }

    #[test]
    fn optimum_examples() {
        let r = optimal_gaussian_snr(&GaussianOptProblem::new(1.0, 5.0).unwrap()).unwrap();
        assert_relative_eq!(r.delta_n, 5.0, epsilon = 1e-9);
        assert!(r.gamma_opt > 5f64.sqrt());
        assert!(r.kkt_residual <= 1e-9, "kkt {}", r.kkt_residual);
        let b = 3.0 * 22f64.powf(2.0 / 3.0) - 2.0 + 22f64.powf(-2.0 / 3.0);
        assert_relative_eq!(r.approx_gamma, (200.0 / b).sqrt(), epsilon = 1e-12);
        assert!((r.approx_gamma - r.gamma_opt).abs() / r.gamma_opt < 0.1);

        let zero = optimal_gaussian_snr(&GaussianOptProblem::new(1.4, 0.0).unwrap()).unwrap();
        assert_eq!(zero.gamma_opt, 0.0);

        // the closed form agrees with the covariance-matrix route
        let state = GaussianState::single_mode(1.0, r.z_opt, 0.0, r.alpha_opt).unwrap();
        let m = raw_photon_moments(&state, 0.0).unwrap();
        assert_relative_eq!(m.snr.value(), r.gamma_opt, max_relative = 1e-12);
    }

    #[test]
    fn small_budget_limit() {
        let eps = 1e-6;
        let approx = approx_gamma_opt(1.0, eps);
        let two23 = 2f64.powf(2.0 / 3.0);
        assert_relative_eq!(approx, eps * (8.0 / (3.0 * two23 - 2.0 + 1.0 / two23)).sqrt(), max_relative = 1e-5);
        assert!(approx_gamma_opt(100.0, 1.0) < 0.02);
    }

    #[test]
    fn sweep_single_point_matches() {
        let t = sweep_gaussian_optimum(&[0.5], &[2.0], NuConvention::CothHalf).unwrap();
        assert_eq!(t.len(), 1);
        let nu = ThermalSpec::temperature(0.5).nu().unwrap();
        let r = optimal_gaussian_snr(&GaussianOptProblem::new(nu, 2.0).unwrap()).unwrap();
        assert_eq!(t.column("gamma_opt").unwrap()[0], r.gamma_opt);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn single_sign_change(nu in 1.0..5.0f64, eps in 0.01..50.0f64) {
            let h = |z: f64| nu * (1.0 / (z * z * z) + z - 2.0) - 4.0 * eps;
            let grid: Vec<f64> = (0..2000).map(|i| 1e-3 + (1.0 - 1e-3) * i as f64 / 1999.0).collect();
            let changes = grid.windows(2).filter(|w| h(w[0]).signum() != h(w[1]).signum()).count();
            prop_assert!(changes <= 1);
        }

        #[test]
        fn dominates_baselines(nu in 1.0..5.0f64, eps in 0.01..50.0f64) {
            let r = optimal_gaussian_snr(&GaussianOptProblem::new(nu, eps).unwrap()).unwrap();
            prop_assert!(r.gamma_opt >= coherent_only_snr(nu, eps) - 1e-12);
            prop_assert!(r.gamma_opt >= squeezed_only_snr(nu, eps) - 1e-12);
            prop_assert!((r.delta_n - eps).abs() <= 1e-9 * eps.max(1.0));
            prop_assert!(r.kkt_residual <= 1e-9, "kkt {}", r.kkt_residual);
            if r.z_opt <= 0.3 {
                prop_assert!((r.approx_gamma - r.gamma_opt).abs() <= 0.05 * r.gamma_opt);
            }
        }

        #[test]
        fn splitting_the_budget_does_not_help(nu in 1.0..5.0f64, eps in 0.01..50.0f64, n in 2usize..6) {
            let one = optimal_gaussian_snr(&GaussianOptProblem::new(nu, eps).unwrap()).unwrap();
            let part = optimal_gaussian_snr(&GaussianOptProblem::new(nu, eps / n as f64).unwrap()).unwrap();
            let split = eps / (n as f64 * part.moments.var_n).sqrt();
            prop_assert!(split <= one.gamma_opt * (1.0 + 1e-12));
        }
    }
}
