//! Small deterministic fitting utilities: linear regression, golden-section
//! minimization, and a dense Levenberg-Marquardt for few-parameter models.

use crate::error::{Error, Result};

/// Ordinary least squares y = a + b x with standard errors.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub stderr_intercept: f64,
    pub stderr_slope: f64,
    /// Residual sum of squares.
    pub ss_res: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::InvalidInput(
            "linear fit needs at least two matched samples".into(),
        ));
    }
    let nf = n as f64;
    let mean_x = x.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|&v| (v - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissa values identical".into()));
    }
    let sxy: f64 = x
        .iter()
        .zip(y.iter())
        .map(|(&xi, &yi)| (xi - mean_x) * (yi - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = x
        .iter()
        .zip(y.iter())
        .map(|(&xi, &yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let variance = if n > 2 { ss_res / (nf - 2.0) } else { 0.0 };
    Ok(LinearFit {
        intercept,
        slope,
        stderr_intercept: (variance * (1.0 / nf + mean_x * mean_x / sxx)).sqrt(),
        stderr_slope: (variance / sxx).sqrt(),
        ss_res,
    })
}

/// Golden-section minimization of a unimodal function on [lo, hi].
pub fn golden_section_min(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..400 {
        if (b - a).abs() < tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Levenberg-Marquardt least squares with a numeric Jacobian.
///
/// `residuals(params, out)` fills one residual per data point. Parameters may
/// be bounded; steps are clamped to the box. The iteration schedule is fixed
/// so the result is deterministic.
pub struct LmProblem<'a> {
    pub residuals: &'a dyn Fn(&[f64], &mut [f64]),
    pub n_residuals: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    pub ss_res: f64,
    pub n_iterations: usize,
}

pub fn levenberg_marquardt(problem: &LmProblem, initial: &[f64]) -> Result<LmResult> {
    let np = initial.len();
    let nr = problem.n_residuals;
    if nr < np {
        return Err(Error::InvalidInput(
            "more parameters than residuals".into(),
        ));
    }
    let clamp = |p: &mut [f64]| {
        for k in 0..np {
            p[k] = p[k].clamp(problem.lower[k], problem.upper[k]);
        }
    };
    let mut params = initial.to_vec();
    clamp(&mut params);
    let mut r = vec![0.0; nr];
    (problem.residuals)(&params, &mut r);
    let mut ss: f64 = r.iter().map(|v| v * v).sum();

    let mut lambda = 1e-3;
    let mut iterations = 0;
    for _ in 0..200 {
        iterations += 1;
        // Numeric Jacobian.
        let mut jac = vec![vec![0.0; np]; nr];
        let mut rp = vec![0.0; nr];
        for k in 0..np {
            let h = 1e-6 * params[k].abs().max(1e-9);
            let mut trial = params.clone();
            trial[k] += h;
            (problem.residuals)(&trial, &mut rp);
            for i in 0..nr {
                jac[i][k] = (rp[i] - r[i]) / h;
            }
        }
        // Normal equations with damping: (JᵀJ + λ diag(JᵀJ)) δ = −Jᵀr.
        let mut jtj = vec![vec![0.0; np]; np];
        let mut jtr = vec![0.0; np];
        for i in 0..nr {
            for a in 0..np {
                jtr[a] += jac[i][a] * r[i];
                for b in 0..np {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..12 {
            let mut m = jtj.clone();
            for a in 0..np {
                m[a][a] += lambda * jtj[a][a].max(1e-12);
            }
            let Some(delta) = solve_dense(&m, &jtr) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = params.clone();
            for k in 0..np {
                trial[k] -= delta[k];
            }
            clamp(&mut trial);
            (problem.residuals)(&trial, &mut rp);
            let ss_trial: f64 = rp.iter().map(|v| v * v).sum();
            if ss_trial < ss {
                params = trial;
                r.copy_from_slice(&rp);
                let gain = ss - ss_trial;
                ss = ss_trial;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if gain < 1e-14 * ss.max(1e-300) + 1e-30 {
                    return Ok(LmResult {
                        params,
                        ss_res: ss,
                        n_iterations: iterations,
                    });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(LmResult {
        params,
        ss_res: ss,
        n_iterations: iterations,
    })
}

/// Gaussian elimination with partial pivoting for the small LM systems.
fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for k in (row + 1)..n {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    Some(x)
}

/// 1-σ uncertainty of a single fitted parameter from the curvature of the
/// sum-of-squares surface at its minimum: σ² = 2 s² / (∂²SSR/∂θ²), with
/// s² = SSR/(n − p).
pub fn curvature_uncertainty(
    ss_at: &dyn Fn(f64) -> f64,
    theta_min: f64,
    step: f64,
    n_points: usize,
    n_params: usize,
) -> f64 {
    let s0 = ss_at(theta_min);
    let sp = ss_at(theta_min + step);
    let sm = ss_at(theta_min - step);
    let second = (sp - 2.0 * s0 + sm) / (step * step);
    if second <= 0.0 || n_points <= n_params {
        return f64::INFINITY;
    }
    let dof = (n_points - n_params) as f64;
    let s2 = s0 / dof;
    (2.0 * s2 / second).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| 3.0 - 0.25 * v).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.slope, -0.25, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 3.0, epsilon = 1e-12);
        assert!(fit.ss_res < 1e-20);
    }

    #[test]
    fn linear_fit_degenerate_abscissa() {
        assert!(matches!(
            linear_fit(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let f = |x: f64| (x - 2.5) * (x - 2.5) + 1.0;
        let x = golden_section_min(&f, -10.0, 10.0, 1e-10);
        // Flat quadratic minima are only locatable to ~sqrt(machine eps).
        assert_relative_eq!(x, 2.5, epsilon = 1e-7);
    }

    #[test]
    fn lm_fits_a_two_exponential_model() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.5).collect();
        let truth = [0.6, 12.5, 60.0];
        let data: Vec<f64> = t
            .iter()
            .map(|&w| 1.0 - truth[0] * (-w / truth[1]).exp() - (1.0 - truth[0]) * (-w / truth[2]).exp())
            .collect();
        let residuals = |p: &[f64], out: &mut [f64]| {
            for (i, (&w, &d)) in t.iter().zip(data.iter()).enumerate() {
                let model = 1.0 - p[0] * (-w / p[1]).exp() - (1.0 - p[0]) * (-w / p[2]).exp();
                out[i] = model - d;
            }
        };
        let problem = LmProblem {
            residuals: &residuals,
            n_residuals: t.len(),
            lower: vec![0.0, 0.1, 0.1],
            upper: vec![1.0, 1e4, 1e4],
        };
        let fit = levenberg_marquardt(&problem, &[0.5, 5.0, 100.0]).unwrap();
        assert_relative_eq!(fit.params[0], truth[0], max_relative = 1e-6);
        assert_relative_eq!(fit.params[1], truth[1], max_relative = 1e-6);
        assert_relative_eq!(fit.params[2], truth[2], max_relative = 1e-5);
    }

    #[test]
    fn curvature_uncertainty_matches_linear_regression() {
        // For y = b x + noise the curvature route must agree with the
        // analytic standard error of the slope.
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let noise: Vec<f64> = (0..50).map(|i| ((i * 2654435761_usize) % 1000) as f64 / 1000.0 - 0.5).collect();
        let y: Vec<f64> = x.iter().zip(&noise).map(|(&v, &n)| 2.0 * v + 0.05 * n).collect();
        let fit = linear_fit(&x, &y).unwrap();
        let mean_x = x.iter().sum::<f64>() / x.len() as f64;
        let mean_y = y.iter().sum::<f64>() / y.len() as f64;
        // Profile over the slope with the intercept re-optimized, the same
        // surface the analytic standard error describes.
        let ss = |b: f64| -> f64 {
            let a = mean_y - b * mean_x;
            x.iter()
                .zip(&y)
                .map(|(&xi, &yi)| (yi - a - b * xi).powi(2))
                .sum()
        };
        let sigma = curvature_uncertainty(&ss, fit.slope, 1e-4, x.len(), 2);
        assert_relative_eq!(sigma, fit.stderr_slope, max_relative = 0.05);
    }
}
