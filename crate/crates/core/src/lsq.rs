//! Levenberg-Marquardt least squares with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step for the central-difference Jacobian.
    pub rel_step: f64,
    /// Step-size criterion: ||dx|| <= xtol (||x|| + xtol).
    pub xtol: f64,
    /// Gradient criterion: largest cosine between the residual vector and
    /// a Jacobian column.
    pub gtol: f64,
    /// Stop once the sum of squares falls below this absolute floor.
    pub cost_floor: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 400,
            rel_step: 1e-6,
            xtol: 1e-12,
            gtol: 1e-8,
            cost_floor: 1e-26,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub jacobian: DMatrix<f64>,
}

impl LmOutcome {
    pub fn rms(&self) -> f64 {
        if self.residuals.is_empty() {
            0.0
        } else {
            (self.cost / self.residuals.len() as f64).sqrt()
        }
    }

    /// One-sigma parameter uncertainties from s^2 (J^T J)^+ with
    /// s^2 = cost / (m - n). Zero when there are no spare degrees of freedom.
    pub fn uncertainties(&self) -> Vec<f64> {
        let (m, n) = self.jacobian.shape();
        if m <= n {
            return vec![0.0; n];
        }
        let s2 = self.cost / (m - n) as f64;
        let jtj = self.jacobian.tr_mul(&self.jacobian);
        let svd = jtj.svd(true, true);
        let cutoff = 1e-14 * svd.singular_values.max();
        let cov = svd
            .pseudo_inverse(cutoff)
            .unwrap_or_else(|_| DMatrix::zeros(n, n));
        (0..n).map(|i| (s2 * cov[(i, i)]).max(0.0).sqrt()).collect()
    }
}

fn to_vector(r: Vec<f64>, expected: Option<usize>) -> Result<DVector<f64>> {
    if let Some(m) = expected {
        if r.len() != m {
            return Err(Error::Shape(format!("residual length changed from {m} to {}", r.len())));
        }
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("residual function returned a non-finite value".into()));
    }
    Ok(DVector::from_vec(r))
}

/// Central differences with step `rel_step * max(|x_j|, 1)`.
pub fn numerical_jacobian<F>(f: &F, x: &[f64], m: usize, rel_step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let h = rel_step * x[j].abs().max(1.0);
        probe[j] = x[j] + h;
        let plus = to_vector(f(&probe)?, Some(m))?;
        probe[j] = x[j] - h;
        let minus = to_vector(f(&probe)?, Some(m))?;
        probe[j] = x[j];
        jac.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    Ok(jac)
}

/// Numerical rank from singular values above `rel_tol * s_max`.
pub fn numerical_rank(jac: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = jac.clone().svd(false, false).singular_values;
    let max = s.max();
    if max == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * max).count()
}

/// Minimizes sum r_i(x)^2.
///
/// Fails up front when there are fewer residuals than parameters or when
/// the Jacobian at the starting point is rank deficient. Running out of
/// iterations is not an error; the outcome then has `converged == false`.
pub fn levenberg_marquardt<F>(f: F, x0: &[f64], opts: &LmOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut r = to_vector(f(x.as_slice())?, None)?;
    let m = r.len();
    if m < n {
        return Err(Error::Underdetermined { points: m, parameters: n });
    }
    let mut jac = numerical_jacobian(&f, x.as_slice(), m, opts.rel_step)?;
    let rank = numerical_rank(&jac, 1e-10);
    if rank < n {
        return Err(Error::SingularJacobian { rank, parameters: n });
    }

    let mut cost = r.norm_squared();
    let mut mu = {
        let jtj = jac.tr_mul(&jac);
        1e-3 * (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max)
    };
    let mut nu = 2.0;
    let mut converged = cost <= opts.cost_floor;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let jtj = jac.tr_mul(&jac);
        let g = jac.tr_mul(&r);
        // Largest cosine between the residual and a Jacobian column.
        let rnorm = r.norm();
        let cosine = (0..n)
            .map(|j| {
                let cn = jac.column(j).norm();
                if cn == 0.0 || rnorm == 0.0 {
                    0.0
                } else {
                    g[j].abs() / (cn * rnorm)
                }
            })
            .fold(0.0, f64::max);
        if cosine <= opts.gtol {
            converged = true;
            break;
        }

        let mut damped = jtj.clone();
        for i in 0..n {
            damped[(i, i)] += mu * jtj[(i, i)].max(1e-300);
        }
        let Some(chol) = damped.cholesky() else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };
        let step = chol.solve(&(-&g));
        if step.norm() <= opts.xtol * (x.norm() + opts.xtol) {
            converged = true;
            break;
        }

        let candidate = &x + &step;
        let r_new = match f(candidate.as_slice()).and_then(|v| to_vector(v, Some(m))) {
            Ok(v) => v,
            Err(_) => {
                mu *= nu;
                nu *= 2.0;
                continue;
            }
        };
        let cost_new = r_new.norm_squared();
        // Reduction predicted by the local linear model.
        let predicted = -(2.0 * g.dot(&step) + step.dot(&(&jtj * &step)));
        let rho = if predicted > 0.0 { (cost - cost_new) / predicted } else { -1.0 };
        if rho > 0.0 {
            x = candidate;
            r = r_new;
            cost = cost_new;
            jac = numerical_jacobian(&f, x.as_slice(), m, opts.rel_step)?;
            mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
            nu = 2.0;
            converged = cost <= opts.cost_floor;
        } else {
            mu *= nu;
            nu *= 2.0;
        }
    }

    Ok(LmOutcome {
        x: x.as_slice().to_vec(),
        residuals: r.as_slice().to_vec(),
        cost,
        iterations,
        converged,
        jacobian: jac,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential_decay() {
        let t: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = t.iter().map(|&t| 3.0 * (-0.7 * t).exp() + 0.5).collect();
        let f = |p: &[f64]| Ok(t.iter().zip(&y).map(|(&t, &y)| p[0] * (-p[1] * t).exp() + p[2] - y).collect());
        let out = levenberg_marquardt(f, &[1.0, 0.2, 0.0], &LmOptions::default()).unwrap();
        assert!(out.converged);
        for (got, want) in out.x.iter().zip([3.0, 0.7, 0.5]) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn rosenbrock_residuals() {
        let f = |p: &[f64]| Ok(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]);
        let out = levenberg_marquardt(f, &[-1.2, 1.0], &LmOptions::default()).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn underdetermined_and_singular_are_errors() {
        let f = |p: &[f64]| Ok(vec![p[0] + p[1]]);
        assert!(matches!(
            levenberg_marquardt(f, &[0.0, 0.0], &LmOptions::default()),
            Err(Error::Underdetermined { points: 1, parameters: 2 })
        ));
        let g = |p: &[f64]| Ok(vec![p[0] + p[1] - 1.0, 2.0 * (p[0] + p[1]) - 2.0]);
        assert!(matches!(
            levenberg_marquardt(g, &[0.0, 0.0], &LmOptions::default()),
            Err(Error::SingularJacobian { rank: 1, parameters: 2 })
        ));
    }

    #[test]
    fn linear_fit_uncertainty_matches_closed_form() {
        // y = a + b x with known residual scatter.
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let noise = [0.1, -0.2, 0.05, 0.0, 0.15, -0.1, 0.2, -0.05, -0.15, 0.0];
        let y: Vec<f64> = x.iter().zip(noise).map(|(x, e)| 1.0 + 2.0 * x + e).collect();
        let f = |p: &[f64]| Ok(x.iter().zip(&y).map(|(x, y)| p[0] + p[1] * x - y).collect());
        let out = levenberg_marquardt(f, &[0.0, 0.0], &LmOptions::default()).unwrap();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        let s2 = out.cost / (n - 2.0);
        let sigma_b = (s2 / sxx).sqrt();
        assert!((out.uncertainties()[1] - sigma_b).abs() < 1e-8 * sigma_b.max(1.0));
    }
}
