//! Nelder–Mead simplex minimization with dimension-adapted coefficients.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values is below `f_tol·(|f_best| + 1e-30)`.
    pub f_tol: f64,
    /// Stop when every vertex is within `x_tol` of the best one (max norm).
    pub x_tol: f64,
    pub initial_step: f64,
    /// Rebuild the simplex around the best point this many times after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 4000,
            f_tol: 1e-13,
            x_tol: 1e-10,
            initial_step: 0.25,
            restarts: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Minimizes `f` from `x0`. NaN values are treated as `+∞`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let mut counted = Counted { f, evals: 0 };
    let n = x0.len();
    if n == 0 {
        let v = counted.call(x0);
        return NelderMeadResult {
            x: Vec::new(),
            f: v,
            evals: 1,
            converged: true,
        };
    }
    let mut x = x0.to_vec();
    let mut fx = f64::INFINITY;
    let mut converged = false;
    let mut step = opts.initial_step;
    for _ in 0..=opts.restarts {
        let (bx, bf, ok) = run(&mut counted, &x, step, opts);
        let improved = bf < fx;
        if bf <= fx {
            x = bx;
            fx = bf;
        }
        converged = ok;
        if !ok || counted.evals >= opts.max_evals || !improved && converged {
            break;
        }
        step *= 0.5;
    }
    NelderMeadResult {
        x,
        f: fx,
        evals: counted.evals,
        converged,
    }
}

fn run<F: FnMut(&[f64]) -> f64>(
    counted: &mut Counted<F>,
    x0: &[f64],
    step: f64,
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let nf = n as f64;
    let d = nf.max(2.0);
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / d, 0.75 - 1.0 / (2.0 * d), 1.0 - 1.0 / d);

    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1e-3 { step * v[i].abs().max(0.1) } else { step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| counted.call(v)).collect();

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let (best, worst) = (values[0], values[n]);
        let spread = if best.is_finite() && worst.is_finite() {
            worst - best
        } else {
            f64::INFINITY
        };
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol * (best.abs() + 1e-30) && size <= opts.x_tol.max(1e-3 * step) || size <= opts.x_tol {
            return (simplex[0].clone(), best, true);
        }
        if counted.evals >= opts.max_evals {
            return (simplex[0].clone(), best, false);
        }

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / nf).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = counted.call(&xr);
        if fr < values[0] {
            let xe = along(gamma);
            let fe = counted.call(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < values[n] {
            let xc = along(alpha * rho);
            let fc = counted.call(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = along(-rho);
            let fc = counted.call(&xc);
            (xc, fc, fc < values[n])
        };
        if accept {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=n {
            let v: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + sigma * (x - b))
                .collect();
            values[i] = counted.call(&v);
            simplex[i] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |x| (x[0] - 1.0).powi(2) + 4.0 * (x[1] + 2.0).powi(2) + 0.5,
            &[0.0, 0.0],
            &NelderMeadOptions::default(),
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] + 2.0).abs() < 1e-5, "{:?}", r);
        assert!((r.f - 0.5).abs() < 1e-10);
    }

    #[test]
    fn rosenbrock() {
        let opts = NelderMeadOptions {
            max_evals: 20_000,
            ..Default::default()
        };
        let r = minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &opts,
        );
        assert!((r.x[0] - 1.0).abs() < 1e-4, "{:?}", r);
    }

    #[test]
    fn higher_dimension_and_nan_wall() {
        let target = [0.3, -0.7, 1.1, 0.0, 2.0, -1.5];
        let r = minimize(
            |x| {
                if x[0] < -5.0 {
                    return f64::NAN;
                }
                x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            },
            &[0.0; 6],
            &NelderMeadOptions {
                max_evals: 20_000,
                ..Default::default()
            },
        );
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-4, "{:?}", r);
        }
    }

    #[test]
    fn respects_budget() {
        let r = minimize(
            |x| x.iter().map(|v| v.abs()).sum(),
            &[5.0; 4],
            &NelderMeadOptions {
                max_evals: 30,
                ..Default::default()
            },
        );
        assert!(r.evals <= 30 + 8);
    }
}
