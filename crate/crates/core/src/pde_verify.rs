//! Finite-difference residual oracle.
//!
//! A sampled field is plugged into the defect form of the model equation,
//! `i ψ_t + (σ/2) ψ_ss + β|ψ|²ψ`, or of the linear equation,
//! `iσ ψ_t + (σ²/2) ψ_ss`, at every interior node. For an exact solution the
//! defect is pure truncation error and shrinks like `h²` when both steps are
//! halved; for anything else it stalls.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{central_diff_t, second_diff_s, ComplexSample, Field2D, Grid1D};
use crate::par::Exec;
use crate::waves::{Component, ComponentKind};

/// Defects at the interior nodes `1..ns-1 × 1..nt-1`, t-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub s_interior: usize,
    pub t_interior: usize,
    pub residuals: Vec<ComplexSample>,
    pub max_abs: f64,
    /// Grid-weighted norm `sqrt(h_s h_t Σ |r|²)`.
    pub l2: f64,
    pub h_s: f64,
    pub h_t: f64,
}

impl ResidualField {
    /// Residual at interior node `(i, j)` of the original grid.
    pub fn at(&self, i: usize, j: usize) -> ComplexSample {
        self.residuals[(j - 1) * self.s_interior + (i - 1)]
    }
}

fn residual_with<F>(field: &Field2D, exec: Exec, defect: F) -> Result<ResidualField>
where
    F: Fn(ComplexSample, ComplexSample, ComplexSample) -> ComplexSample + Sync + Send,
{
    let (ns, nt) = (field.s_grid().count(), field.t_grid().count());
    if ns < 3 || nt < 3 {
        return Err(Error::Usage(format!(
            "residual needs at least a 3x3 grid (got {ns}x{nt})"
        )));
    }
    let (si, ti) = (ns - 2, nt - 2);
    let residuals = exec.try_map(si * ti, |idx| {
        let (i, j) = (idx % si + 1, idx / si + 1);
        let dt = central_diff_t(field, i, j)?;
        let dss = second_diff_s(field, i, j)?;
        Ok(defect(field.get(i, j), dt, dss))
    })?;
    let (h_s, h_t) = (field.s_grid().step(), field.t_grid().step());
    let max_abs = residuals.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let sum_sq: f64 = residuals.iter().map(|r| r.norm_sqr()).sum();
    Ok(ResidualField {
        s_interior: si,
        t_interior: ti,
        residuals,
        max_abs,
        l2: (h_s * h_t * sum_sq).sqrt(),
        h_s,
        h_t,
    })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) {
        return Err(Error::Usage(format!("sigma must be > 0 (got {sigma})")));
    }
    Ok(())
}

/// Defect of `i ψ_t = -(σ/2) ψ_ss - β|ψ|²ψ`.
pub fn nls_residual(field: &Field2D, sigma: f64, beta: f64) -> Result<ResidualField> {
    nls_residual_with(field, sigma, beta, Exec::default())
}

pub fn nls_residual_with(field: &Field2D, sigma: f64, beta: f64, exec: Exec) -> Result<ResidualField> {
    check_sigma(sigma)?;
    let i = Complex64::i();
    residual_with(field, exec, |psi, dt, dss| {
        i * dt + dss * (0.5 * sigma) + psi * (beta * psi.norm_sqr())
    })
}

/// Defect of `iσ ψ_t = -(σ²/2) ψ_ss`.
pub fn linear_residual(field: &Field2D, sigma: f64) -> Result<ResidualField> {
    linear_residual_with(field, sigma, Exec::default())
}

pub fn linear_residual_with(field: &Field2D, sigma: f64, exec: Exec) -> Result<ResidualField> {
    check_sigma(sigma)?;
    let i = Complex64::i();
    residual_with(field, exec, |_, dt, dss| i * dt * sigma + dss * (0.5 * sigma * sigma))
}

/// Least-squares slope of `ln(max_abs)` against `ln(h)`.
pub fn convergence_order(residuals_at: &[(f64, f64)]) -> Result<f64> {
    if residuals_at.len() < 2 {
        return Err(Error::Usage(format!(
            "convergence order needs at least 2 refinement levels (got {})",
            residuals_at.len()
        )));
    }
    if residuals_at.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::Usage("step sizes must be strictly decreasing".into()));
    }
    if let Some(&(h, r)) = residuals_at.iter().find(|&&(h, r)| !(h > 0.0) || !(r > 0.0)) {
        return Err(Error::Usage(format!(
            "step and residual must be positive to take logs (h={h}, residual={r})"
        )));
    }
    let n = residuals_at.len() as f64;
    let xs: Vec<f64> = residuals_at.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = residuals_at.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub s_points: usize,
    pub t_points: usize,
    pub h_s: f64,
    pub h_t: f64,
    pub max_abs: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub component: ComponentKind,
    /// `"nls"` or `"linear"`.
    pub equation: String,
    pub levels: Vec<LevelSummary>,
    pub order: f64,
}

/// Samples `component` on `levels` successively halved grids, runs the
/// matching residual oracle on each and fits the convergence order. The
/// packet goes to the linear equation, everything else to the nonlinear one
/// with the component's own β.
pub fn certify(
    component: &Component,
    s_grid: Grid1D,
    t_grid: Grid1D,
    levels: usize,
    exec: Exec,
) -> Result<Certification> {
    if levels < 2 {
        return Err(Error::Usage(format!("need at least 2 refinement levels (got {levels})")));
    }
    let sigma = component.sigma();
    let (mut sg, mut tg) = (s_grid, t_grid);
    let mut summaries = Vec::with_capacity(levels);
    for _ in 0..levels {
        let field = Field2D::sample(sg, tg, exec, |s, t| component.eval(s, t))?;
        let res = match component.beta() {
            None => linear_residual_with(&field, sigma, exec)?,
            Some(beta) => nls_residual_with(&field, sigma, beta, exec)?,
        };
        summaries.push(LevelSummary {
            s_points: sg.count(),
            t_points: tg.count(),
            h_s: res.h_s,
            h_t: res.h_t,
            max_abs: res.max_abs,
            l2: res.l2,
        });
        sg = sg.refined();
        tg = tg.refined();
    }
    let pairs: Vec<(f64, f64)> = summaries.iter().map(|l| (l.h_s, l.max_abs)).collect();
    Ok(Certification {
        component: component.kind(),
        equation: if component.beta().is_none() { "linear" } else { "nls" }.into(),
        levels: summaries,
        order: convergence_order(&pairs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waves::{eval_soliton, omega, PacketParams, PacketTerm, Sign, SolitaryParams};

    fn grid(a: f64, b: f64, n: usize) -> Grid1D {
        Grid1D::from_range(a, b, n).unwrap()
    }

    fn soliton() -> SolitaryParams {
        SolitaryParams {
            sign: Sign::Plus,
            sigma: 1.0,
            beta: 1.0,
            k: 1.0,
        }
    }

    fn soliton_field(ns: usize, nt: usize, scale: f64) -> Field2D {
        let p = soliton();
        Field2D::sample(grid(-10.0, 10.0, ns), grid(0.0, 1.0, nt), Exec::default(), |s, t| {
            Ok(eval_soliton(&p, s, t)? * scale)
        })
        .unwrap()
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let f = Field2D::sample(grid(0.0, 1.0, 5), grid(0.0, 1.0, 4), Exec::Sequential, |_, _| {
            Ok(Complex64::new(0.0, 0.0))
        })
        .unwrap();
        let r = nls_residual(&f, 1.0, 1.0).unwrap();
        assert_eq!(r.max_abs, 0.0);
        assert_eq!(r.l2, 0.0);
        assert_eq!(r.residuals.len(), 3 * 2);
        let c = f.map(|_| Complex64::new(2.0, -1.0));
        assert_eq!(linear_residual(&c, 0.7).unwrap().max_abs, 0.0);
    }

    #[test]
    fn small_grids_are_rejected() {
        let f = Field2D::sample(grid(0.0, 1.0, 2), grid(0.0, 1.0, 5), Exec::Sequential, |_, _| {
            Ok(Complex64::new(0.0, 0.0))
        })
        .unwrap();
        assert!(matches!(nls_residual(&f, 1.0, 1.0), Err(Error::Usage(_))));
        assert!(matches!(linear_residual(&f, 1.0), Err(Error::Usage(_))));
    }

    #[test]
    fn soliton_residual_is_second_order() {
        let coarse = nls_residual(&soliton_field(801, 201, 1.0), 1.0, 1.0).unwrap();
        assert!(coarse.max_abs < 1e-3, "{}", coarse.max_abs);
        let fine = nls_residual(&soliton_field(1601, 401, 1.0), 1.0, 1.0).unwrap();
        let ratio = coarse.max_abs / fine.max_abs;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");

        let stats_ok = {
            let m = coarse.residuals.iter().map(|r| r.norm()).fold(0.0, f64::max);
            let l2 = (coarse.h_s * coarse.h_t * coarse.residuals.iter().map(|r| r.norm_sqr()).sum::<f64>()).sqrt();
            m == coarse.max_abs && l2 == coarse.l2
        };
        assert!(stats_ok);
    }

    #[test]
    fn corrupted_soliton_is_detected() {
        let bad = nls_residual(&soliton_field(801, 201, 1.1), 1.0, 1.0).unwrap();
        assert!(bad.max_abs > 1e-2);
    }

    #[test]
    fn linear_equation_scales_nonlinear_does_not() {
        let p = PacketParams {
            amplitude: 1.0,
            terms: vec![PacketTerm { c: 1.0, k: 0.8 }, PacketTerm { c: 0.5, k: -1.4 }],
            sigma: 0.9,
        };
        let f = Field2D::sample(grid(-5.0, 5.0, 201), grid(0.0, 1.0, 101), Exec::default(), |s, t| {
            crate::waves::eval_packet(&p, s, t)
        })
        .unwrap();
        let c = Complex64::new(1.5, 2.0);
        let base = linear_residual(&f, 0.9).unwrap().max_abs;
        let scaled = linear_residual(&f.map(|z| z * c), 0.9).unwrap().max_abs;
        assert!((scaled / base - c.norm()).abs() < 1e-9);

        let s1 = nls_residual(&soliton_field(401, 101, 1.0), 1.0, 1.0).unwrap().max_abs;
        let s2 = nls_residual(&soliton_field(401, 101, 2.5), 1.0, 1.0).unwrap().max_abs;
        assert!((s2 / s1 - 2.5).abs() > 1.0);
    }

    #[test]
    fn plane_wave_linear_residual_converges() {
        let (sigma, k) = (1.2, 1.7);
        let levels: Vec<(f64, f64)> = [101usize, 201, 401]
            .iter()
            .map(|&n| {
                let f = Field2D::sample(grid(-3.0, 3.0, n), grid(0.0, 1.0, n), Exec::default(), |s, t| {
                    Ok(Complex64::from_polar(1.0, k * s - omega(sigma, k) * t))
                })
                .unwrap();
                let r = linear_residual(&f, sigma).unwrap();
                (r.h_s, r.max_abs)
            })
            .collect();
        let order = convergence_order(&levels).unwrap();
        assert!((1.8..=2.2).contains(&order), "order {order}");
    }

    #[test]
    fn convergence_order_cases() {
        let c = 3.7;
        let h = 0.1;
        assert!((convergence_order(&[(h, c * h * h), (h / 2.0, c * h * h / 4.0)]).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(convergence_order(&[(0.1, 1.0)]), Err(Error::Usage(_))));
        assert!(convergence_order(&[(0.1, 1.0), (0.2, 0.5)]).is_err());
        assert!(convergence_order(&[(0.1, 1.0), (0.05, 0.0)]).is_err());
    }

    #[test]
    fn non_solution_does_not_converge() {
        let p = soliton();
        let comp = Component::Soliton(p);
        // the β = 1 soliton checked against β = 2: the defect stays O(1)
        let wrong = comp.clone();
        let good = certify(&comp, grid(-10.0, 10.0, 201), grid(0.0, 1.0, 51), 3, Exec::default()).unwrap();
        assert!((1.8..=2.2).contains(&good.order));
        let field_levels: Vec<(f64, f64)> = [201usize, 401, 801]
            .iter()
            .map(|&n| {
                let f = Field2D::sample(grid(-10.0, 10.0, n), grid(0.0, 1.0, (n - 1) / 4 + 1), Exec::default(), |s, t| {
                    wrong.eval(s, t)
                })
                .unwrap();
                let r = nls_residual(&f, 1.0, 2.0).unwrap();
                (r.h_s, r.max_abs)
            })
            .collect();
        let order = convergence_order(&field_levels).unwrap();
        assert!(order.abs() < 0.1, "order {order}");
    }
}
