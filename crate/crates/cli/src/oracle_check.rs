//! Cross-check of the Wick engine against the truncated Fock-space oracle,
//! plus the three-level truncation demo.

use bosonic_snr::fock::{oracle_single_mode, truncation_pathology_demo, GaussianParams};
use bosonic_snr::gaussian::{GaussianState, MomentResult};
use bosonic_snr::wick::{ng_photon_moments_with_reference, LadderFactor, NonGaussianState};

#[derive(Clone, Debug)]
pub struct OracleCheckOptions {
    pub nus: Vec<f64>,
    pub zs: Vec<f64>,
    pub alphas: Vec<[f64; 2]>,
    pub phi: f64,
    pub max_m: usize,
    pub tolerance: f64,
    pub truncation_dim: usize,
    pub truncation_alpha: f64,
    pub flip_i1: bool,
}

impl Default for OracleCheckOptions {
    fn default() -> Self {
        OracleCheckOptions {
            nus: vec![1.0, 1.5, 2.0],
            zs: vec![1.0, 0.6, 0.3],
            alphas: vec![[0.0, 0.0], [0.8, 0.6], [-1.2, 1.6]],
            phi: 0.4,
            max_m: 3,
            tolerance: 1e-8,
            truncation_dim: 3,
            truncation_alpha: 1.0,
            flip_i1: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mismatch {
    pub params: GaussianParams,
    pub ops: String,
    pub engine: Option<(f64, f64)>,
    pub oracle: (f64, f64),
    pub deviation: f64,
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub cases: usize,
    pub skipped: usize,
    pub worst_deviation: f64,
    pub mismatches: Vec<Mismatch>,
    pub truncated_gamma: f64,
    pub truncation_alpha: f64,
    pub truncation_dim: usize,
}

fn second(m: &MomentResult) -> f64 {
    m.var_n + m.mean_n * m.mean_n
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn run(opts: &OracleCheckOptions) -> Result<OracleReport, String> {
    let mut report = OracleReport {
        cases: 0,
        skipped: 0,
        worst_deviation: 0.0,
        mismatches: Vec::new(),
        truncated_gamma: f64::NAN,
        truncation_alpha: opts.truncation_alpha,
        truncation_dim: opts.truncation_dim,
    };
    for &nu in &opts.nus {
        for &z in &opts.zs {
            for &alpha in &opts.alphas {
                let params = GaussianParams { nu, z, phi: opts.phi, alpha };
                let base = GaussianState::single_mode(nu, z, opts.phi, alpha).map_err(|e| e.to_string())?;
                for m in 0..=opts.max_m {
                    for (label, factor) in [("add", LadderFactor::create(0)), ("sub", LadderFactor::annihilate(0))] {
                        if m == 0 && label == "sub" {
                            continue;
                        }
                        let ops = vec![factor; m];
                        let state = match NonGaussianState::new(base.clone(), ops.clone()) {
                            Ok(s) => s,
                            Err(_) => {
                                report.skipped += 1;
                                continue;
                            }
                        };
                        let engine = if opts.flip_i1 {
                            state.with_flipped_i1().and_then(|s| ng_photon_moments_with_reference(&s, 0.0))
                        } else {
                            ng_photon_moments_with_reference(&state, 0.0)
                        }
                        .ok();
                        let (oracle, _) = oracle_single_mode(&params, &ops, 0.0).map_err(|e| e.to_string())?;
                        report.cases += 1;
                        let deviation = match &engine {
                            Some(w) => rel(w.mean_n, oracle.mean_n).max(rel(second(w), second(&oracle))),
                            None => f64::INFINITY,
                        };
                        report.worst_deviation = report.worst_deviation.max(deviation);
                        if !(deviation <= opts.tolerance) {
                            report.mismatches.push(Mismatch {
                                params,
                                ops: if m == 0 { "none".into() } else { format!("{label}({m})") },
                                engine: engine.map(|w| (w.mean_n, second(&w))),
                                oracle: (oracle.mean_n, second(&oracle)),
                                deviation,
                            });
                        }
                    }
                }
            }
        }
    }
    let (g, _, _) =
        truncation_pathology_demo(opts.truncation_alpha, opts.truncation_dim).map_err(|e| e.to_string())?;
    report.truncated_gamma = g;
    Ok(report)
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn render(&self, tolerance: f64) -> String {
        let mut out = format!(
            "wick vs fock oracle: {} states, {} degenerate skipped, worst relative deviation {:.3e} (tolerance {:.1e})\n",
            self.cases, self.skipped, self.worst_deviation, tolerance
        );
        for m in &self.mismatches {
            let p = m.params;
            let engine = m
                .engine
                .map_or("evaluation failed".to_string(), |(a, b)| format!("<N> = {a:.12e}, <N^2> = {b:.12e}"));
            out.push_str(&format!(
                "MISMATCH nu = {}, z = {}, phi = {}, alpha = ({}, {}), ops = {}: engine {engine}; oracle <N> = {:.12e}, <N^2> = {:.12e}; deviation {:.3e}\n",
                p.nu, p.z, p.phi, p.alpha[0], p.alpha[1], m.ops, m.oracle.0, m.oracle.1, m.deviation
            ));
        }
        let verdict = if self.truncated_gamma > self.truncation_alpha {
            "exceeds the coherent-state value |alpha|, an artifact of truncation"
        } else {
            "does not exceed |alpha|"
        };
        out.push_str(&format!(
            "truncated coherent state, dim {}, alpha = {}: Gamma = {:.12} {verdict}\n",
            self.truncation_dim, self.truncation_alpha, self.truncated_gamma
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> OracleCheckOptions {
        OracleCheckOptions {
            nus: vec![1.3],
            zs: vec![0.5],
            alphas: vec![[0.4, 0.2]],
            max_m: 2,
            ..Default::default()
        }
    }

    #[test]
    fn clean_engine_passes() {
        let r = run(&small()).unwrap();
        assert!(r.passed(), "{}", r.render(1e-8));
        assert_eq!(r.cases, 5);
        assert!(r.truncated_gamma > 1.0);
    }

    #[test]
    fn flipped_identity_is_caught() {
        let r = run(&OracleCheckOptions {
            flip_i1: true,
            ..small()
        })
        .unwrap();
        assert!(!r.passed());
        assert!(r.render(1e-8).contains("MISMATCH nu = 1.3, z = 0.5"));
    }
}
