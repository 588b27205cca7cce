//! Scalar special functions, uniform grids, sampled complex fields and the
//! finite-difference stencils the residual oracle is built from.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Exec;

/// A sample of the wave function at one grid point.
pub type ComplexSample = Complex64;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

// Below this the Maclaurin series is used, above it the continued fraction
// for erfc. Both stay well under 1e-15 absolute error on their side.
const ERF_SPLIT: f64 = 2.0;
const ERFC_CF_TERMS: usize = 60;

/// Gauss error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let v = if ax < ERF_SPLIT {
        erf_series(ax)
    } else {
        1.0 - erfc_cf(ax)
    };
    v.copysign(x)
}

/// Complementary error function `1 - erf(x)`, accurate in the right tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= ERF_SPLIT {
        erfc_cf(x)
    } else if x <= -ERF_SPLIT {
        2.0 - erfc_cf(-x)
    } else {
        1.0 - erf_series(x.abs()).copysign(x)
    }
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = 0.0;
    let mut n = 0u32;
    loop {
        let c = term / f64::from(2 * n + 1);
        sum += c;
        if c.abs() <= 1e-17 * sum.abs() || n > 100 {
            break;
        }
        n += 1;
        term *= -x2 / f64::from(n);
    }
    FRAC_2_SQRT_PI * sum
}

fn erfc_cf(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    if x > 27.3 {
        return 0.0;
    }
    let mut f = x;
    for n in (1..=ERFC_CF_TERMS).rev() {
        f = x + (n as f64 * 0.5) / f;
    }
    (-x * x).exp() * FRAC_2_SQRT_PI * 0.5 / f
}

/// Hyperbolic secant, computed from `e^{-|x|}` so it never overflows.
pub fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// Hyperbolic tangent. `f64::tanh` already saturates cleanly to ±1.
#[inline]
pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

/// Composite Simpson rule with `intervals` (rounded up to even) panels.
/// Summation order is fixed, so the result is reproducible.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = (intervals.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b))
}

/// Uniform 1-D grid `start + i * step`, `i < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    start: f64,
    step: f64,
    count: usize,
}

impl Grid1D {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !start.is_finite() || !step.is_finite() || step <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs finite start and step > 0 (got start={start}, step={step})"
            )));
        }
        if count == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point".into()));
        }
        Ok(Self { start, step, count })
    }

    /// Grid covering `[start, stop]` with `count` points. A single-point grid
    /// requires `start == stop` and gets a nominal unit step.
    pub fn from_range(start: f64, stop: f64, count: usize) -> Result<Self> {
        match count {
            0 => Err(Error::InvalidParameter("grid needs at least one point".into())),
            1 if start == stop => Self::new(start, 1.0, 1),
            1 => Err(Error::InvalidParameter(format!(
                "single-point grid needs start == stop (got {start}:{stop})"
            ))),
            _ if stop > start => Self::new(start, (stop - start) / (count - 1) as f64, count),
            _ => Err(Error::InvalidParameter(format!(
                "grid range must be increasing (got {start}:{stop})"
            ))),
        }
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.start
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.step
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn last(&self) -> f64 {
        self.point(self.count - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.point(i))
    }

    /// Same interval, step halved.
    pub fn refined(&self) -> Self {
        Self {
            start: self.start,
            step: self.step * 0.5,
            count: 2 * (self.count - 1) + 1,
        }
    }
}

/// Complex field sampled on an `(s, t)` grid, stored t-major:
/// `values[j * s_count + i] = psi(s_i, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    s_grid: Grid1D,
    t_grid: Grid1D,
    values: Vec<ComplexSample>,
}

impl Field2D {
    pub fn from_values(s_grid: Grid1D, t_grid: Grid1D, values: Vec<ComplexSample>) -> Result<Self> {
        if values.len() != s_grid.count() * t_grid.count() {
            return Err(Error::Usage(format!(
                "field has {} values, grid needs {}x{}",
                values.len(),
                s_grid.count(),
                t_grid.count()
            )));
        }
        Ok(Self {
            s_grid,
            t_grid,
            values,
        })
    }

    /// Samples `f(s, t)` on every node.
    pub fn sample<F>(s_grid: Grid1D, t_grid: Grid1D, exec: Exec, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<ComplexSample> + Sync + Send,
    {
        let ns = s_grid.count();
        let values = exec.try_map(ns * t_grid.count(), |idx| {
            f(s_grid.point(idx % ns), t_grid.point(idx / ns))
        })?;
        Ok(Self {
            s_grid,
            t_grid,
            values,
        })
    }

    pub fn s_grid(&self) -> &Grid1D {
        &self.s_grid
    }

    pub fn t_grid(&self) -> &Grid1D {
        &self.t_grid
    }

    pub fn values(&self) -> &[ComplexSample] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> ComplexSample {
        self.values[j * self.s_grid.count() + i]
    }

    pub fn map(&self, f: impl Fn(ComplexSample) -> ComplexSample) -> Self {
        Self {
            s_grid: self.s_grid,
            t_grid: self.t_grid,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }
}

/// `(psi(i, j+1) - psi(i, j-1)) / (2 dt)`.
pub fn central_diff_t(field: &Field2D, i: usize, j: usize) -> Result<ComplexSample> {
    let (ns, nt) = (field.s_grid.count(), field.t_grid.count());
    if i >= ns || j == 0 || j + 1 >= nt {
        return Err(Error::Usage(format!(
            "central t-difference needs 0 <= i < {ns} and 1 <= j <= {} (got i={i}, j={j})",
            nt.saturating_sub(2)
        )));
    }
    Ok((field.get(i, j + 1) - field.get(i, j - 1)) / (2.0 * field.t_grid.step()))
}

/// `(psi(i+1, j) - 2 psi(i, j) + psi(i-1, j)) / ds^2`.
pub fn second_diff_s(field: &Field2D, i: usize, j: usize) -> Result<ComplexSample> {
    let (ns, nt) = (field.s_grid.count(), field.t_grid.count());
    if j >= nt || i == 0 || i + 1 >= ns {
        return Err(Error::Usage(format!(
            "second s-difference needs 1 <= i <= {} and 0 <= j < {nt} (got i={i}, j={j})",
            ns.saturating_sub(2)
        )));
    }
    let h = field.s_grid.step();
    Ok((field.get(i + 1, j) - 2.0 * field.get(i, j) + field.get(i - 1, j)) / (h * h))
}
