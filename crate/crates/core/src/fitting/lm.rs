//! Levenberg-Marquardt with Marquardt's diagonal scaling.
//!
//! Each trial step solves `(JᵀJ + λ diag(JᵀJ)) δ = -Jᵀr` for a forward
//! difference Jacobian `J`. A step that lowers the cost `½‖r‖²` is accepted
//! and λ shrinks by `ν`; otherwise λ grows by `ν` and the step is retried.
//! Bounds are handled by dropping parameters that sit on a bound with the
//! gradient pushing outward, then clipping the step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Exec;

/// Cost assigned to trial points where the residuals cannot be evaluated or
/// are not finite. Any such step is rejected.
pub const PENALTY_COST: f64 = 1e300;

const MAX_LAMBDA: f64 = 1e12;

/// A nonlinear least-squares problem `min ½ Σ rᵢ(p)²`.
pub struct FitProblem<F> {
    residual: F,
    n_params: usize,
    n_residuals: usize,
    bounds: Option<Vec<(f64, f64)>>,
    names: Vec<String>,
}

impl<F> FitProblem<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    pub fn new(n_params: usize, n_residuals: usize, residual: F) -> Result<Self> {
        if n_residuals < n_params {
            return Err(Error::Usage(format!(
                "over-parameterized problem: {n_params} parameters for {n_residuals} residuals"
            )));
        }
        Ok(Self {
            residual,
            n_params,
            n_residuals,
            bounds: None,
            names: (0..n_params).map(|i| format!("p{i}")).collect(),
        })
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != self.n_params {
            return Err(Error::Usage(format!(
                "{} bounds for {} parameters",
                bounds.len(),
                self.n_params
            )));
        }
        if let Some(i) = bounds.iter().position(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::Usage(format!(
                "bounds of parameter {i} have lower > upper ({:?})",
                bounds[i]
            )));
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_params {
            return Err(Error::Usage(format!("{} names for {} parameters", names.len(), self.n_params)));
        }
        self.names = names;
        Ok(self)
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_residuals(&self) -> usize {
        self.n_residuals
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        self.bounds.as_deref()
    }

    pub fn residuals(&self, params: &[f64]) -> Result<Vec<f64>> {
        let r = (self.residual)(params)?;
        if r.len() != self.n_residuals {
            return Err(Error::Usage(format!(
                "residual function returned {} values, expected {}",
                r.len(),
                self.n_residuals
            )));
        }
        Ok(r)
    }

    fn within_bounds(&self, p: &[f64]) -> bool {
        self.bounds
            .as_ref()
            .is_none_or(|b| p.iter().zip(b).all(|(x, (lo, hi))| lo <= x && x <= hi))
    }

    fn clip(&self, p: &mut [f64]) {
        if let Some(b) = &self.bounds {
            for (x, (lo, hi)) in p.iter_mut().zip(b) {
                *x = x.clamp(*lo, *hi);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub lambda0: f64,
    pub nu: f64,
    pub max_iter: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub cost_tol: f64,
    /// Stop when the cost itself drops below this.
    pub abs_cost_tol: f64,
    pub step_tol: f64,
    /// Relative forward-difference step, scaled by `max(|p|, 1)`.
    pub fd_step: f64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e-3,
            nu: 10.0,
            max_iter: 200,
            cost_tol: 1e-12,
            abs_cost_tol: 1e-24,
            step_tol: 1e-10,
            fd_step: 1e-6,
            exec: Exec::default(),
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda0", self.lambda0),
            ("cost_tol", self.cost_tol),
            ("abs_cost_tol", self.abs_cost_tol),
            ("step_tol", self.step_tol),
            ("fd_step", self.fd_step),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::Usage(format!("{name} must be > 0 (got {v})")));
        }
        if !(self.nu > 1.0) {
            return Err(Error::Usage(format!("nu must be > 1 (got {})", self.nu)));
        }
        if self.max_iter == 0 {
            return Err(Error::Usage("max_iter must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    ConvergedCost,
    ConvergedStep,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    /// Cost at the trial point (the penalty cost if it could not be evaluated).
    pub cost: f64,
    pub lambda: f64,
    pub step_norm: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub names: Vec<String>,
    pub parameters: Vec<f64>,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub trace: Vec<TraceEntry>,
    pub status: FitStatus,
    pub rmse: f64,
}

impl FitReport {
    /// Costs of the accepted steps, starting with the initial cost.
    pub fn accepted_costs(&self) -> Vec<f64> {
        std::iter::once(self.initial_cost)
            .chain(self.trace.iter().filter(|e| e.accepted).map(|e| e.cost))
            .collect()
    }
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

fn fd_step(p: f64, rel: f64) -> f64 {
    p.abs().max(1.0) * rel
}

/// Forward-difference Jacobian, one residual evaluation per column. Steps
/// that would leave the box are taken backwards instead.
pub fn numerical_jacobian<F>(problem: &FitProblem<F>, params: &[f64], rel_step: f64, exec: Exec) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let r0 = problem.residuals(params)?;
    jacobian_at(problem, params, &r0, rel_step, exec)
}

fn jacobian_at<F>(problem: &FitProblem<F>, params: &[f64], r0: &[f64], rel_step: f64, exec: Exec) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let m = problem.n_residuals();
    let columns = exec.try_map(problem.n_params(), |j| {
        let mut h = fd_step(params[j], rel_step);
        if let Some(b) = problem.bounds() {
            if params[j] + h > b[j].1 {
                h = -h;
            }
        }
        let mut p = params.to_vec();
        p[j] += h;
        let h = p[j] - params[j];
        let r = problem.residuals(&p).map_err(|e| Error::Jacobian {
            index: j,
            name: problem.names()[j].clone(),
            source: Box::new(e),
        })?;
        Ok::<_, Error>(r.iter().zip(r0).map(|(a, b)| (a - b) / h).collect::<Vec<f64>>())
    })?;
    Ok(DMatrix::from_fn(m, problem.n_params(), |i, j| columns[j][i]))
}

/// Runs Levenberg-Marquardt from `initial`.
pub fn lm_fit<F>(problem: &FitProblem<F>, initial: &[f64], cfg: &LmConfig) -> Result<FitReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    cfg.validate()?;
    let n = problem.n_params();
    if initial.len() != n {
        return Err(Error::Usage(format!("initial point has {} entries, expected {n}", initial.len())));
    }
    if !problem.within_bounds(initial) {
        return Err(Error::Usage("initial point violates the parameter bounds".into()));
    }
    let mut p = initial.to_vec();
    let mut r = problem.residuals(&p)?;
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Usage("residuals are not finite at the initial point".into()));
    }
    let mut cost = cost_of(&r);
    let initial_cost = cost;
    let mut lambda = cfg.lambda0;
    let mut trace = Vec::new();
    let mut status = FitStatus::MaxIterations;
    let mut iter = 0;

    if cost <= cfg.abs_cost_tol || n == 0 {
        status = if n == 0 { FitStatus::ConvergedStep } else { FitStatus::ConvergedCost };
    } else {
        'outer: while iter < cfg.max_iter {
            let jac = jacobian_at(problem, &p, &r, cfg.fd_step, cfg.exec)?;
            let jt = jac.transpose();
            let gradient = &jt * DVector::from_column_slice(&r);
            let normal = &jt * &jac;

            // parameters pinned on a bound with the descent direction pointing out
            let free: Vec<usize> = (0..n)
                .filter(|&j| match problem.bounds() {
                    Some(b) => {
                        let g = gradient[j];
                        !((p[j] <= b[j].0 && g > 0.0) || (p[j] >= b[j].1 && g < 0.0))
                    }
                    None => true,
                })
                .collect();
            let g_free = DVector::from_iterator(free.len(), free.iter().map(|&j| gradient[j]));
            if g_free.iter().all(|g| *g == 0.0) {
                status = FitStatus::ConvergedStep;
                break;
            }
            let a = DMatrix::from_fn(free.len(), free.len(), |i, j| normal[(free[i], free[j])]);
            let max_diag = a.diagonal().iter().copied().fold(0.0, f64::max);
            let diag: Vec<f64> = a.diagonal().iter().map(|d| d.max(1e-12 * max_diag).max(f64::MIN_POSITIVE)).collect();

            loop {
                if iter >= cfg.max_iter {
                    break 'outer;
                }
                let mut damped = a.clone();
                for (i, d) in diag.iter().enumerate() {
                    damped[(i, i)] += lambda * d;
                }
                let delta = match damped.cholesky() {
                    Some(ch) => ch.solve(&(-&g_free)),
                    None => {
                        lambda *= cfg.nu;
                        if lambda > MAX_LAMBDA {
                            return Err(Error::Singular(format!(
                                "damped normal equations not positive definite up to lambda = {MAX_LAMBDA:e}"
                            )));
                        }
                        continue;
                    }
                };
                iter += 1;

                let mut trial = p.clone();
                for (k, &j) in free.iter().enumerate() {
                    trial[j] += delta[k];
                }
                problem.clip(&mut trial);
                let step_norm = trial.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let p_norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                let small_step = step_norm <= cfg.step_tol * (p_norm + cfg.step_tol);

                let (trial_r, trial_cost) = match problem.residuals(&trial) {
                    Ok(tr) if tr.iter().all(|x| x.is_finite()) => {
                        let c = cost_of(&tr);
                        (Some(tr), c)
                    }
                    _ => (None, PENALTY_COST),
                };

                if trial_cost < cost {
                    trace.push(TraceEntry {
                        iter,
                        cost: trial_cost,
                        lambda,
                        step_norm,
                        accepted: true,
                    });
                    let decrease = (cost - trial_cost) / cost;
                    p = trial;
                    r = trial_r.expect("finite residuals for accepted step");
                    cost = trial_cost;
                    lambda = (lambda / cfg.nu).max(1e-15);
                    if cost <= cfg.abs_cost_tol || decrease <= cfg.cost_tol {
                        status = FitStatus::ConvergedCost;
                        break 'outer;
                    }
                    if small_step {
                        status = FitStatus::ConvergedStep;
                        break 'outer;
                    }
                    continue 'outer;
                }

                trace.push(TraceEntry {
                    iter,
                    cost: trial_cost,
                    lambda,
                    step_norm,
                    accepted: false,
                });
                if small_step {
                    status = FitStatus::ConvergedStep;
                    break 'outer;
                }
                lambda *= cfg.nu;
                if lambda > 1e16 {
                    // steps are vanishingly small; nothing left to gain
                    status = FitStatus::ConvergedStep;
                    break 'outer;
                }
            }
        }
    }

    Ok(FitReport {
        names: problem.names().to_vec(),
        parameters: p,
        initial_cost,
        final_cost: cost,
        trace,
        status,
        rmse: (2.0 * cost / problem.n_residuals().max(1) as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_decay_problem(a_true: f64) -> FitProblem<impl Fn(&[f64]) -> Result<Vec<f64>> + Sync> {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (-a_true * x).exp()).collect();
        FitProblem::new(1, 50, move |p: &[f64]| {
            Ok(xs.iter().zip(&ys).map(|(x, y)| (-p[0] * x).exp() - y).collect())
        })
        .unwrap()
    }

    fn assert_monotone(report: &FitReport) {
        let c = report.accepted_costs();
        assert!(c.windows(2).all(|w| w[1] <= w[0]), "{c:?}");
        assert!(report.parameters.iter().all(|x| x.is_finite()));
        assert!(report.trace.iter().all(|e| e.cost.is_finite() && e.lambda.is_finite()));
    }

    #[test]
    fn exponential_decay_is_recovered() {
        let problem = exp_decay_problem(1.5);
        let report = lm_fit(&problem, &[0.3], &LmConfig::default()).unwrap();
        assert!((report.parameters[0] - 1.5).abs() < 1e-8, "{report:?}");
        assert_ne!(report.status, FitStatus::MaxIterations);
        assert_monotone(&report);
    }

    #[test]
    fn zero_residual_start_stops_immediately() {
        let problem = exp_decay_problem(1.5);
        let report = lm_fit(&problem, &[1.5], &LmConfig::default()).unwrap();
        assert_eq!(report.status, FitStatus::ConvergedCost);
        assert!(report.trace.len() <= 1);
        assert_eq!(report.parameters, vec![1.5]);
    }

    #[test]
    fn linear_jacobian_is_exact() {
        let a = [[1.0, 2.0], [3.0, -1.0], [0.5, 4.0]];
        let b = [1.0, 0.0, -2.0];
        let problem = FitProblem::new(2, 3, move |p: &[f64]| {
            Ok((0..3).map(|i| a[i][0] * p[0] + a[i][1] * p[1] - b[i]).collect())
        })
        .unwrap();
        let j = numerical_jacobian(&problem, &[0.7, -1.3], 1e-6, Exec::Sequential).unwrap();
        for i in 0..3 {
            for k in 0..2 {
                assert!((j[(i, k)] - a[i][k]).abs() < 1e-9);
            }
        }
        // and LM solves the linear least-squares problem
        let report = lm_fit(&problem, &[0.0, 0.0], &LmConfig::default()).unwrap();
        let normal = nalgebra::Matrix2::new(10.25, 1.0, 1.0, 21.0);
        let rhs = nalgebra::Vector2::new(0.0, -6.0);
        let want = normal.lu().solve(&rhs).unwrap();
        assert!((report.parameters[0] - want[0]).abs() < 1e-7);
        assert!((report.parameters[1] - want[1]).abs() < 1e-7);
    }

    #[test]
    fn square_derivative() {
        let problem = FitProblem::new(1, 1, |p: &[f64]| Ok(vec![p[0] * p[0]])).unwrap();
        let j = numerical_jacobian(&problem, &[3.0], 1e-6, Exec::Sequential).unwrap();
        assert!((j[(0, 0)] - 6.0).abs() < 1e-4);
    }

    #[test]
    fn jacobian_failure_names_the_parameter() {
        let problem = FitProblem::new(2, 2, |p: &[f64]| {
            if p[1] > 1.0 {
                Err(Error::domain("test", "out of range"))
            } else {
                Ok(p.to_vec())
            }
        })
        .unwrap()
        .with_names(vec!["a".into(), "b".into()])
        .unwrap();
        match numerical_jacobian(&problem, &[0.0, 1.0], 1e-6, Exec::Sequential) {
            Err(Error::Jacobian { index, name, .. }) => {
                assert_eq!(index, 1);
                assert_eq!(name, "b");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bounds_are_respected() {
        // unconstrained minimum at p = -2, box [0, 5]
        let problem = FitProblem::new(1, 2, |p: &[f64]| Ok(vec![p[0] + 2.0, 0.5 * (p[0] + 2.0)]))
            .unwrap()
            .with_bounds(vec![(0.0, 5.0)])
            .unwrap();
        let report = lm_fit(&problem, &[3.0], &LmConfig::default()).unwrap();
        assert_eq!(report.parameters[0], 0.0);
        assert_monotone(&report);
        assert!(lm_fit(&problem, &[-1.0], &LmConfig::default()).is_err());
    }

    #[test]
    fn failed_trial_points_are_penalized_not_fatal() {
        // residuals undefined for p < 0.5; the minimum sits at p = 1
        let problem = FitProblem::new(1, 1, |p: &[f64]| {
            if p[0] < 0.5 {
                Err(Error::domain("test", "undefined"))
            } else {
                Ok(vec![(p[0] - 1.0) * 10.0])
            }
        })
        .unwrap();
        let cfg = LmConfig {
            lambda0: 1e-9,
            ..LmConfig::default()
        };
        let report = lm_fit(&problem, &[4.0], &cfg).unwrap();
        assert!((report.parameters[0] - 1.0).abs() < 1e-8);
        assert_monotone(&report);
    }

    #[test]
    fn usage_errors() {
        assert!(FitProblem::new(3, 2, |_: &[f64]| Ok(vec![0.0; 2])).is_err());
        let nan = FitProblem::new(1, 1, |_: &[f64]| Ok(vec![f64::NAN])).unwrap();
        assert!(matches!(lm_fit(&nan, &[0.0], &LmConfig::default()), Err(Error::Usage(_))));
        let bad = LmConfig {
            nu: 1.0,
            ..LmConfig::default()
        };
        let p = exp_decay_problem(1.0);
        assert!(lm_fit(&p, &[0.5], &bad).is_err());
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let problem = exp_decay_problem(0.7);
        let seq = LmConfig {
            exec: Exec::Sequential,
            ..LmConfig::default()
        };
        let par = LmConfig {
            exec: Exec::Parallel,
            ..LmConfig::default()
        };
        assert_eq!(lm_fit(&problem, &[2.0], &seq).unwrap(), lm_fit(&problem, &[2.0], &par).unwrap());
    }
}
