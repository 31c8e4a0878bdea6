//! Damped least squares with Marquardt diagonal scaling.

use nalgebra::{DMatrix, DVector};

/// A curve `y = f(x; p)` with an analytic Jacobian.
pub trait CurveModel {
    fn n_params(&self) -> usize;
    fn value(&self, p: &[f64], x: f64) -> f64;
    /// Writes `∂f/∂p` at `x` into `out`.
    fn gradient(&self, p: &[f64], x: f64, out: &mut [f64]);
    /// Projects parameters back into the feasible set (bounds).
    fn project(&self, _p: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step tolerance.
    pub xtol: f64,
    /// Relative cost-decrease tolerance.
    pub ftol: f64,
    /// Cosine between residual and Jacobian columns.
    pub gtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            xtol: 1e-12,
            ftol: 1e-15,
            gtol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub residual_norm: f64,
    /// Largest `|J_iᵀ r| / (‖J_i‖ ‖r‖)` at the solution.
    pub gradient_norm: f64,
    pub jtj: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn residuals<M: CurveModel>(model: &M, p: &[f64], x: &[f64], y: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        x.len(),
        x.iter().zip(y).map(|(&xi, &yi)| yi - model.value(p, xi)),
    )
}

pub(crate) fn jacobian<M: CurveModel>(model: &M, p: &[f64], x: &[f64]) -> DMatrix<f64> {
    let n = model.n_params();
    let mut jac = DMatrix::zeros(x.len(), n);
    let mut row = vec![0.0; n];
    for (i, &xi) in x.iter().enumerate() {
        model.gradient(p, xi, &mut row);
        for (k, v) in row.iter().enumerate() {
            jac[(i, k)] = *v;
        }
    }
    jac
}

fn scaled_gradient(jac: &DMatrix<f64>, r: &DVector<f64>) -> f64 {
    let rn = r.norm();
    if rn == 0.0 {
        return 0.0;
    }
    let g = jac.transpose() * r;
    (0..jac.ncols())
        .map(|k| {
            let cn = jac.column(k).norm();
            if cn == 0.0 {
                0.0
            } else {
                g[k].abs() / (cn * rn)
            }
        })
        .fold(0.0, f64::max)
}

/// Minimizes `Σ (y_i - f(x_i; p))²` from `start`. The cost never increases
/// between accepted iterates.
pub fn levenberg_marquardt<M: CurveModel>(
    model: &M,
    x: &[f64],
    y: &[f64],
    start: &[f64],
    opts: LmOptions,
) -> LmOutcome {
    let n = model.n_params();
    let mut p = start.to_vec();
    model.project(&mut p);
    let mut r = residuals(model, &p, x, y);
    let mut cost = r.norm_squared();
    let mut jac = jacobian(model, &p, x);
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;
    // Residuals at rounding level carry no direction information.
    let exact = 1e-22 * y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);

    while iterations < opts.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        if scaled_gradient(&jac, &r) <= opts.gtol || cost <= exact {
            converged = true;
            break;
        }
        let diag_floor = (0..n).map(|k| jtj[(k, k)]).fold(0.0, f64::max) * 1e-15;
        let mut accepted = false;
        let mut tiny_step = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(diag_floor).max(f64::MIN_POSITIVE);
            }
            let Some(step) = a
                .clone()
                .cholesky()
                .map(|c| c.solve(&jtr))
                .or_else(|| a.lu().solve(&jtr))
            else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            model.project(&mut trial);
            let r_new = residuals(model, &trial, x, y);
            let cost_new = r_new.norm_squared();
            let step_norm: f64 = trial
                .iter()
                .zip(&p)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let p_norm: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if cost_new.is_finite() && cost_new < cost {
                let decrease = (cost - cost_new) / cost;
                p = trial;
                r = r_new;
                cost = cost_new;
                jac = jacobian(model, &p, x);
                lambda = (lambda / 3.0).max(1e-20);
                nu = 2.0;
                accepted = true;
                if decrease < opts.ftol || step_norm <= opts.xtol * (p_norm + opts.xtol) {
                    tiny_step = true;
                }
                break;
            }
            if step_norm <= opts.xtol * (p_norm + opts.xtol) {
                tiny_step = true;
                break;
            }
            lambda *= nu;
            nu *= 2.0;
        }
        if tiny_step || !accepted {
            break;
        }
    }

    let gradient_norm = scaled_gradient(&jac, &r);
    let jtj = jac.transpose() * &jac;
    if gradient_norm <= opts.gtol.max(1e-6) || cost <= exact {
        converged = true;
    }
    LmOutcome {
        params: p,
        residual_norm: cost.sqrt(),
        gradient_norm,
        jtj,
        iterations,
        converged,
    }
}

/// `s² (JᵀJ)⁻¹` with `s² = cost/(m - n)`; falls back to a pseudo-inverse.
pub fn covariance(jtj: &DMatrix<f64>, residual_norm: f64, m: usize) -> DMatrix<f64> {
    let n = jtj.nrows();
    let dof = m.saturating_sub(n).max(1) as f64;
    let s2 = residual_norm * residual_norm / dof;
    let inv = jtj
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .unwrap_or_else(|| {
            jtj.clone()
                .pseudo_inverse(1e-14)
                .unwrap_or_else(|_| DMatrix::zeros(n, n))
        });
    let cov = inv * s2;
    (&cov + cov.transpose()) * 0.5
}
