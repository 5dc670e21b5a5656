//! Plot-ready sweeps over temperature, squeezing, budget and mode count.

use std::f64::consts::FRAC_PI_4;

use serde_json::json;

use crate::analytic::{kitten_snr, max_additions, KittenSpec};
use crate::error::{Error, Result};
use crate::fock::{build_coherent_fock_superposition, oracle_moments, DEFAULT_DIM_CAP};
use crate::gaussian::{nu_from_temperature, thermal_occupation, NuConvention, ThermalSpec};
use crate::gaussian_opt::{optimal_gaussian_snr, GaussianOptProblem};
use crate::sweep::{flag, SweepTable};
use crate::variational::{
    evaluate, optimize, photon_added_moments, AnsatzParams, AnsatzSpec, ModeSharing, OptimizerBudget,
    VariationalResult, DISPLAY_CAP,
};

fn nu_at(temperature: f64, convention: NuConvention) -> Result<f64> {
    nu_from_temperature(ThermalSpec::Temperature {
        temperature,
        convention,
    })
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

fn budget_meta(table: &mut SweepTable, budget: &OptimizerBudget) {
    table.set_meta(
        "optimizer",
        json!({"restarts": budget.restarts, "max_evals": budget.max_evals, "seed": budget.seed}),
    );
}

fn gaussian_gamma(nu: f64, epsilon: f64) -> Result<f64> {
    Ok(optimal_gaussian_snr(&GaussianOptProblem::new(nu, epsilon)?)?.gamma_opt)
}

/// `Γ` of the one-photon-added squeezed thermal state over a `(ν, z)` grid,
/// no displacement. Rows ordered by `ν` then `z`.
pub fn snr_surface_photon_added(nus: &[f64], zs: &[f64], convention: NuConvention) -> Result<SweepTable> {
    let mut table = SweepTable::new(
        "photon_added_surface",
        &["nu", "temperature", "z", "mean_n", "var_n", "delta_n", "gamma", "divergent"],
    );
    for &nu in &sorted(nus) {
        let t = convention.temperature_from_nu(nu)?;
        for &z in &sorted(zs) {
            let e = photon_added_moments(nu, z, 0.0, [0.0, 0.0], 1)?;
            let m = e.moments;
            table.push(vec![nu, t, z, m.mean_n, m.var_n, m.delta_n, e.gamma, flag(e.divergent)])?;
        }
    }
    table.set_meta("nu_convention", convention.label());
    table.set_meta("additions", 1);
    Ok(table)
}

pub const PHOTON_ADDED_COLUMNS: [&str; 12] = [
    "temperature",
    "nu",
    "m",
    "feasible",
    "gamma",
    "gamma_gaussian",
    "delta_n",
    "var_n",
    "divergent",
    "z",
    "alpha_norm",
    "m_max",
];

fn optimum_row(t: f64, nu: f64, m: usize, g0: f64, m_max: u64, r: Option<&VariationalResult>) -> Vec<f64> {
    match r {
        Some(r) => {
            let p = r.best_params.modes[0];
            vec![
                t,
                nu,
                m as f64,
                1.0,
                r.gamma,
                g0,
                r.delta_n,
                r.moments.var_n,
                flag(r.divergent),
                p.z,
                p.alpha[0].hypot(p.alpha[1]),
                m_max as f64,
            ]
        }
        None => vec![
            t,
            nu,
            m as f64,
            0.0,
            f64::NAN,
            g0,
            f64::NAN,
            f64::NAN,
            0.0,
            f64::NAN,
            f64::NAN,
            m_max as f64,
        ],
    }
}

/// Optimal single-mode `Γ` with `m` additions for every `(T, m)`; the `m = 0`
/// rows use the exact Gaussian solver. Infeasible cells (`m > m_max`) are
/// kept with `feasible = 0` and NaN values.
pub fn sweep_snr_vs_temperature(
    ms: &[usize],
    epsilon: f64,
    temperatures: &[f64],
    convention: NuConvention,
    budget: &OptimizerBudget,
    freeze_displacement: bool,
) -> Result<SweepTable> {
    let mut table = SweepTable::new("photon_added_vs_temperature", &PHOTON_ADDED_COLUMNS);
    let mut ms = ms.to_vec();
    ms.sort_unstable();
    ms.dedup();
    for &t in &sorted(temperatures) {
        let nu = nu_at(t, convention)?;
        let g0 = gaussian_gamma(nu, epsilon)?;
        let m_max = max_additions(epsilon, ThermalSpec::Nu(nu))?.m_max;
        for &m in &ms {
            let r = if m as u64 > m_max {
                None
            } else {
                let spec = AnsatzSpec::single_mode(nu, epsilon, m).with_frozen_displacement(freeze_displacement && m > 0);
                Some(optimize(&spec, budget)?)
            };
            table.push(optimum_row(t, nu, m, g0, m_max, r.as_ref()))?;
        }
    }
    table.set_meta("nu_convention", convention.label());
    table.set_meta("epsilon", epsilon);
    table.set_meta("freeze_displacement", freeze_displacement);
    budget_meta(&mut table, budget);
    Ok(table)
}

/// Sign changes of `Γ_m - Γ_Gaussian` between neighbouring feasible
/// temperatures of a [`sweep_snr_vs_temperature`] table, refined by bisection
/// on the optimizer. One row per crossing.
pub fn crossing_temperatures(
    table: &SweepTable,
    epsilon: f64,
    convention: NuConvention,
    budget: &OptimizerBudget,
    freeze_displacement: bool,
) -> Result<SweepTable> {
    let col = |name: &str| {
        table
            .column_index(name)
            .ok_or_else(|| Error::Contract(format!("column '{name}' missing")))
    };
    let (ct, cm, cf, cg, c0) = (col("temperature")?, col("m")?, col("feasible")?, col("gamma")?, col("gamma_gaussian")?);
    let mut out = SweepTable::new(
        "gaussian_crossings",
        &["m", "temperature_lo", "temperature_hi", "crossing_temperature", "gamma_at_crossing"],
    );
    let mut ms: Vec<usize> = table.rows.iter().map(|r| r[cm] as usize).filter(|&m| m > 0).collect();
    ms.sort_unstable();
    ms.dedup();
    for m in ms {
        let pts: Vec<(f64, f64)> = table
            .rows
            .iter()
            .filter(|r| r[cm] as usize == m && r[cf] == 1.0)
            .map(|r| (r[ct], r[cg] - r[c0]))
            .collect();
        for w in pts.windows(2) {
            let ((t_lo, d_lo), (t_hi, d_hi)) = (w[0], w[1]);
            if d_lo.signum() == d_hi.signum() || d_lo == 0.0 && d_hi == 0.0 {
                continue;
            }
            let excess = |t: f64| -> Result<(f64, f64)> {
                let nu = nu_at(t, convention)?;
                let spec = AnsatzSpec::single_mode(nu, epsilon, m).with_frozen_displacement(freeze_displacement);
                let r = optimize(&spec, budget)?;
                Ok((r.gamma - gaussian_gamma(nu, epsilon)?, r.gamma))
            };
            let (mut a, mut b) = (t_lo, t_hi);
            let sign_a = d_lo.signum();
            let mut gamma = f64::NAN;
            for _ in 0..40 {
                if b - a <= 1e-7 * b.abs().max(1.0) {
                    break;
                }
                let mid = 0.5 * (a + b);
                let (d, g) = excess(mid)?;
                gamma = g;
                if d.signum() == sign_a {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push(vec![m as f64, t_lo, t_hi, 0.5 * (a + b), gamma])?;
        }
    }
    out.set_meta("nu_convention", convention.label());
    out.set_meta("epsilon", epsilon);
    Ok(out)
}

/// Best kitten (`m` subtractions on squeezed thermal) over the squeezing,
/// subject to `δN ≤ ε` with `δN` measured from the unsqueezed thermal state.
pub fn kitten_curve(
    temperatures: &[f64],
    epsilon: f64,
    subtractions: &[u64],
    convention: NuConvention,
) -> Result<SweepTable> {
    let mut table = SweepTable::new(
        "kitten_vs_temperature",
        &["temperature", "nu", "m_sub", "feasible", "z_opt", "delta_n", "var_n", "gamma", "divergent"],
    );
    for &t in &sorted(temperatures) {
        let nu = nu_at(t, convention)?;
        for &m in subtractions {
            let eval = |z: f64| kitten_snr(&KittenSpec { nu, z, m_subtractions: m }).ok();
            let score = |z: f64| match eval(z) {
                Some(k) if k.delta_n <= epsilon => k.snr.value().min(DISPLAY_CAP),
                _ => f64::NEG_INFINITY,
            };
            // log grid on z, then golden-section refinement around the best cell
            let grid: Vec<f64> = (0..=240).map(|i| 10f64.powf(-3.0 * (1.0 - i as f64 / 240.0))).collect();
            let best = (0..grid.len())
                .max_by(|&i, &j| score(grid[i]).total_cmp(&score(grid[j])))
                .unwrap_or(0);
            let row = if score(grid[best]) == f64::NEG_INFINITY {
                vec![t, nu, m as f64, 0.0, f64::NAN, f64::NAN, f64::NAN, f64::NAN, 0.0]
            } else {
                let lo = grid[best.saturating_sub(1)];
                let hi = grid[(best + 1).min(grid.len() - 1)];
                let z = golden_max(score, lo, hi, 60);
                let z = if score(z) >= score(grid[best]) { z } else { grid[best] };
                let k = eval(z).expect("scored point evaluates");
                let divergent = k.var_n.sqrt() < crate::variational::DIVERGENCE_THRESHOLD;
                let gamma = if divergent { DISPLAY_CAP } else { k.snr.value() };
                vec![t, nu, m as f64, 1.0, z, k.delta_n, k.var_n, gamma, flag(divergent)]
            };
            table.push(row)?;
        }
    }
    table.set_meta("nu_convention", convention.label());
    table.set_meta("epsilon", epsilon);
    table.set_meta(
        "reference",
        "delta_n is measured from the thermal occupation before squeezing",
    );
    Ok(table)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}

/// Mixing weight of the thermal part in the coherent/Fock stand-in model.
pub fn coherent_fock_mixing(nu: f64) -> f64 {
    (nu - 1.0) / (nu + 1.0)
}

/// Best-effort coherent/Fock superposition exposed to a bath,
/// `(1 - w)|ψ⟩⟨ψ| + w ρ_th` with `|ψ⟩ ∝ |β⟩ + |n⟩` and `w = (ν-1)/(ν+1)`,
/// optimized over real `β ≥ 0` under `δN ≤ ε` through the Fock oracle.
pub fn coherent_fock_curve(
    temperatures: &[f64],
    epsilon: f64,
    fock_n: usize,
    convention: NuConvention,
) -> Result<SweepTable> {
    let mut table = SweepTable::new(
        "coherent_fock_vs_temperature",
        &["temperature", "nu", "fock_n", "mixing", "feasible", "beta", "delta_n", "var_n", "gamma"],
    );
    for &t in &sorted(temperatures) {
        let nu = nu_at(t, convention)?;
        let n0 = thermal_occupation(nu)?;
        let w = coherent_fock_mixing(nu);
        let moments = |beta: f64| {
            oracle_moments(
                |dim| build_coherent_fock_superposition([beta, 0.0], fock_n, w, nu, dim),
                n0,
                32,
                DEFAULT_DIM_CAP,
            )
            .map(|(m, _)| m)
        };
        let score = |beta: f64| match moments(beta) {
            Ok(m) if m.delta_n <= epsilon => m.snr.value().min(DISPLAY_CAP),
            _ => f64::NEG_INFINITY,
        };
        let top = epsilon.sqrt() + 2.0;
        let grid: Vec<f64> = (0..=40).map(|i| top * i as f64 / 40.0).collect();
        let scores: Vec<f64> = grid.iter().map(|&b| score(b)).collect();
        let best = (0..grid.len()).max_by(|&i, &j| scores[i].total_cmp(&scores[j])).unwrap_or(0);
        let row = if scores[best] == f64::NEG_INFINITY {
            vec![t, nu, fock_n as f64, w, 0.0, f64::NAN, f64::NAN, f64::NAN, f64::NAN]
        } else {
            let lo = grid[best.saturating_sub(1)];
            let hi = grid[(best + 1).min(grid.len() - 1)];
            let b = golden_max(score, lo, hi, 40);
            let b = if score(b) >= scores[best] { b } else { grid[best] };
            let m = moments(b)?;
            vec![t, nu, fock_n as f64, w, 1.0, b, m.delta_n, m.var_n, m.snr.value().min(DISPLAY_CAP)]
        };
        table.push(row)?;
    }
    table.set_meta("nu_convention", convention.label());
    table.set_meta("epsilon", epsilon);
    table.set_meta(
        "model",
        "best-effort stand-in: (1-w)|psi><psi| + w rho_th, |psi> ~ |beta> + |n>, w = (nu-1)/(nu+1)",
    );
    Ok(table)
}

pub const ENTANGLEMENT_COLUMNS: [&str; 10] = [
    "temperature",
    "nu",
    "gamma_gaussian",
    "gamma_separable",
    "gamma_entangled",
    "gap",
    "relative_gap",
    "theta_opt",
    "gamma_theta_free",
    "divergent",
];

/// Two modes sharing one Gaussian parameter set, one photon added to mode 0
/// after a beam splitter: separable (`θ = 0`), entangled (`θ = π/4`) and free
/// `θ` optima, next to the two-mode Gaussian optimum.
pub fn sweep_two_mode_entanglement(
    temperatures: &[f64],
    epsilon: f64,
    convention: NuConvention,
    budget: &OptimizerBudget,
) -> Result<SweepTable> {
    let mut table = SweepTable::new("two_mode_entanglement", &ENTANGLEMENT_COLUMNS);
    for &t in &sorted(temperatures) {
        let nu = nu_at(t, convention)?;
        let gauss = optimize(
            &AnsatzSpec::multimode(nu, epsilon, vec![0, 0], ModeSharing::Independent).with_fixed_thetas(vec![0.0]),
            budget,
        )?;
        let sym = AnsatzSpec::multimode(nu, epsilon, vec![1, 0], ModeSharing::Symmetric);
        let sep = optimize(&sym.clone().with_fixed_thetas(vec![0.0]), budget)?;
        let ent = optimize(&sym.clone().with_fixed_thetas(vec![FRAC_PI_4]), budget)?;
        let free = optimize(&sym, budget)?;
        let theta = free.best_params.thetas[0].rem_euclid(std::f64::consts::PI);
        let gap = ent.gamma - sep.gamma;
        table.push(vec![
            t,
            nu,
            gauss.gamma,
            sep.gamma,
            ent.gamma,
            gap,
            gap / sep.gamma,
            theta,
            free.gamma,
            flag(sep.divergent || ent.divergent),
        ])?;
    }
    table.set_meta("nu_convention", convention.label());
    table.set_meta("epsilon", epsilon);
    table.set_meta("sharing", "symmetric");
    budget_meta(&mut table, budget);
    Ok(table)
}

/// `Γ` against the beam splitter angle for fixed Gaussian parameters, with
/// and without the photon addition on mode 0.
pub fn sweep_theta(nu: f64, params: &AnsatzParams, thetas: &[f64]) -> Result<SweepTable> {
    if params.modes.len() != 2 {
        return Err(Error::Contract("angle sweep needs two modes".into()));
    }
    let mut table = SweepTable::new("gamma_vs_theta", &["theta", "gamma_photon_added", "gamma_gaussian"]);
    for &theta in thetas {
        let p = AnsatzParams {
            modes: params.modes.clone(),
            thetas: vec![theta],
        };
        let added = evaluate(&AnsatzSpec::multimode(nu, f64::INFINITY, vec![1, 0], ModeSharing::Independent), &p)?;
        let plain = evaluate(&AnsatzSpec::multimode(nu, f64::INFINITY, vec![0, 0], ModeSharing::Independent), &p)?;
        table.push(vec![theta, added.gamma, plain.gamma])?;
    }
    Ok(table)
}

/// Optimal `Γ` for `n` modes with all `m` additions on mode 0. Mode 0 has its
/// own Gaussian parameters, the others share one set; the chain of beam
/// splitters is free.
pub fn sweep_mode_count(
    mode_counts: &[usize],
    ms: &[usize],
    temperature: f64,
    epsilon: f64,
    convention: NuConvention,
    budget: &OptimizerBudget,
) -> Result<SweepTable> {
    let nu = nu_at(temperature, convention)?;
    let mut table = SweepTable::new(
        "mode_count",
        &["n_modes", "m", "feasible", "gamma", "delta_n", "var_n", "divergent"],
    );
    let mut ms = ms.to_vec();
    ms.sort_unstable();
    let mut ns = mode_counts.to_vec();
    ns.sort_unstable();
    for &m in &ms {
        for &n in &ns {
            if n == 0 {
                return Err(Error::Domain("mode count must be positive".into()));
            }
            let mut additions = vec![0; n];
            additions[0] = m;
            let spec = AnsatzSpec::multimode(nu, epsilon, additions, ModeSharing::FirstPlusShared);
            match optimize(&spec, budget) {
                Ok(r) => table.push(vec![
                    n as f64,
                    m as f64,
                    1.0,
                    r.gamma,
                    r.delta_n,
                    r.moments.var_n,
                    flag(r.divergent),
                ])?,
                Err(Error::Infeasible { .. }) => {
                    table.push(vec![n as f64, m as f64, 0.0, f64::NAN, f64::NAN, f64::NAN, 0.0])?
                }
                Err(e) => return Err(e),
            }
        }
    }
    table.set_meta("nu_convention", convention.label());
    table.set_meta("temperature", temperature);
    table.set_meta("nu", nu);
    table.set_meta("epsilon", epsilon);
    table.set_meta("sharing", "first-plus-shared");
    budget_meta(&mut table, budget);
    Ok(table)
}

/// Optimal single-mode `Γ` against the budget at fixed temperature.
pub fn sweep_snr_vs_budget(
    epsilons: &[f64],
    ms: &[usize],
    temperature: f64,
    convention: NuConvention,
    budget: &OptimizerBudget,
) -> Result<SweepTable> {
    let nu = nu_at(temperature, convention)?;
    let mut table = SweepTable::new(
        "photon_added_vs_budget",
        &["epsilon", "m", "feasible", "gamma", "gamma_gaussian", "delta_n", "divergent", "m_max"],
    );
    let mut ms = ms.to_vec();
    ms.sort_unstable();
    for &e in &sorted(epsilons) {
        let m_max = max_additions(e, ThermalSpec::Nu(nu))?.m_max;
        let g0 = gaussian_gamma(nu, e)?;
        for &m in &ms {
            if m as u64 > m_max {
                table.push(vec![e, m as f64, 0.0, f64::NAN, g0, f64::NAN, 0.0, m_max as f64])?;
                continue;
            }
            let r = optimize(&AnsatzSpec::single_mode(nu, e, m), budget)?;
            table.push(vec![e, m as f64, 1.0, r.gamma, g0, r.delta_n, flag(r.divergent), m_max as f64])?;
        }
    }
    table.set_meta("nu_convention", convention.label());
    table.set_meta("temperature", temperature);
    table.set_meta("nu", nu);
    budget_meta(&mut table, budget);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{oracle_single_mode, GaussianParams};
    use crate::variational::ModeParams;
    use crate::wick::LadderFactor;

    fn quick() -> OptimizerBudget {
        OptimizerBudget {
            restarts: 3,
            max_evals: 1500,
            seed: 5,
        }
    }

    #[test]
    fn surface_corner_and_oracle_cells() {
        let t = snr_surface_photon_added(&[1.0, 1.5, 2.5], &[0.3, 0.7, 1.0], NuConvention::CothHalf).unwrap();
        assert_eq!(t.len(), 9);
        let corner = t
            .rows
            .iter()
            .find(|r| r[0] == 1.0 && r[2] == 1.0)
            .unwrap();
        assert_eq!(corner[7], 1.0);
        assert_eq!(corner[6], DISPLAY_CAP);
        for r in t.rows.iter().filter(|r| !(r[0] == 1.0 && r[2] == 1.0)) {
            let (o, _) = oracle_single_mode(
                &GaussianParams {
                    nu: r[0],
                    z: r[2],
                    phi: 0.0,
                    alpha: [0.0, 0.0],
                },
                &[LadderFactor::create(0)],
                (r[0] - 1.0) / 2.0,
            )
            .unwrap();
            assert!((o.snr.value() - r[6]).abs() <= 1e-8 * r[6], "{r:?}");
        }
        // decreasing in ν at fixed z
        for z in [0.3, 0.7] {
            let g: Vec<f64> = t.rows.iter().filter(|r| r[2] == z).map(|r| r[6]).collect();
            assert!(g.windows(2).all(|w| w[1] < w[0]), "{g:?}");
        }
    }

    #[test]
    fn temperature_sweep_marks_infeasible_cells() {
        let t = sweep_snr_vs_temperature(&[0, 2], 5.0, &[0.5, 2.5], NuConvention::CothHalf, &quick(), false).unwrap();
        assert_eq!(t.len(), 4);
        let hot_m2 = &t.rows[3];
        assert_eq!(hot_m2[3], 0.0);
        assert!(hot_m2[4].is_nan());
        let cold_m0 = &t.rows[0];
        assert!((cold_m0[4] - cold_m0[5]).abs() <= 1e-6 * cold_m0[5]);
    }

    #[test]
    fn crossing_refinement_lands_between_samples() {
        let temps = [0.2, 0.6];
        let budget = quick();
        let t = sweep_snr_vs_temperature(&[1], 5.0, &temps, NuConvention::CothHalf, &budget, true).unwrap();
        let c = crossing_temperatures(&t, 5.0, NuConvention::CothHalf, &budget, true).unwrap();
        assert_eq!(c.len(), 1);
        let row = &c.rows[0];
        assert!(row[3] > 0.2 && row[3] < 0.6);
        let nu = nu_at(row[3], NuConvention::CothHalf).unwrap();
        let g0 = gaussian_gamma(nu, 5.0).unwrap();
        assert!((row[4] - g0).abs() < 1e-3 * g0, "{} vs {}", row[4], g0);
    }

    #[test]
    fn kitten_respects_budget() {
        let t = kitten_curve(&[0.3, 1.0], 5.0, &[1, 2], NuConvention::CothHalf).unwrap();
        for r in &t.rows {
            assert_eq!(r[3], 1.0);
            assert!(r[5] <= 5.0 + 1e-12);
            assert!(r[7] > 0.0);
        }
    }

    #[test]
    fn coherent_fock_curve_is_feasible() {
        let t = coherent_fock_curve(&[0.2, 1.0], 5.0, 5, NuConvention::CothHalf).unwrap();
        for r in &t.rows {
            assert_eq!(r[4], 1.0);
            assert!(r[6] <= 5.0 + 1e-9);
        }
        assert!(t.metadata_json()["model"].as_str().unwrap().contains("stand-in"));
    }

    #[test]
    fn theta_sweep_separates_gaussian_from_photon_added() {
        let p = AnsatzParams {
            modes: vec![ModeParams { z: 0.6, phi: 0.0, alpha: [0.8, 0.0] }; 2],
            thetas: vec![0.0],
        };
        let thetas: Vec<f64> = (0..=8).map(|i| i as f64 * std::f64::consts::FRAC_PI_8).collect();
        let t = sweep_theta(1.3, &p, &thetas).unwrap();
        let plain = t.column("gamma_gaussian").unwrap();
        let added = t.column("gamma_photon_added").unwrap();
        assert!(plain.iter().all(|g| (g - plain[0]).abs() <= 1e-12 * plain[0]));
        let spread = added.iter().cloned().fold(f64::MIN, f64::max) - added.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 1e-6);
    }
}
