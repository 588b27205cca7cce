//! Black-Scholes reference surfaces.
//!
//! European call/put prices without dividends, indexed by stock price `s` and
//! calendar time `t` (time to expiry `τ = T - t`), plus the classical
//! closed-form Greeks for comparison with the wave-model sensitivities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{erfc, Grid1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsParams {
    pub strike: f64,
    pub rate: f64,
    pub vol: f64,
    pub expiry: f64,
    pub kind: OptionKind,
}

impl BsParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("strike", self.strike), ("vol", self.vol), ("expiry", self.expiry)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain("black-scholes", format!("{name} must be > 0 (got {v})")));
            }
        }
        if !self.rate.is_finite() {
            return Err(Error::domain("black-scholes", "rate must be finite"));
        }
        Ok(())
    }

    fn tau(&self, s: f64, t: f64) -> Result<f64> {
        self.validate()?;
        if !(s > 0.0) {
            return Err(Error::domain("black-scholes", format!("stock price must be > 0 (got {s})")));
        }
        if !(t < self.expiry) {
            return Err(Error::domain(
                "black-scholes",
                format!("time t={t} must be before expiry T={}", self.expiry),
            ));
        }
        Ok(self.expiry - t)
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn d1_d2(p: &BsParams, s: f64, tau: f64) -> (f64, f64) {
    let vs = p.vol * tau.sqrt();
    let d1 = ((s / p.strike).ln() + (p.rate + 0.5 * p.vol * p.vol) * tau) / vs;
    (d1, d1 - vs)
}

pub fn bs_price(p: &BsParams, s: f64, t: f64) -> Result<f64> {
    let tau = p.tau(s, t)?;
    let (d1, d2) = d1_d2(p, s, tau);
    let disc_k = p.strike * (-p.rate * tau).exp();
    let v = match p.kind {
        OptionKind::Call => s * norm_cdf(d1) - disc_k * norm_cdf(d2),
        OptionKind::Put => disc_k * norm_cdf(-d2) - s * norm_cdf(-d1),
    };
    // rounding can push a worthless option a hair below zero
    Ok(v.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsGreeks {
    pub delta: f64,
    pub gamma: f64,
    pub vega: f64,
    /// `∂V/∂t` in calendar time, i.e. `-∂V/∂τ`.
    pub theta: f64,
    pub rho: f64,
}

pub fn bs_greeks(p: &BsParams, s: f64, t: f64) -> Result<BsGreeks> {
    let tau = p.tau(s, t)?;
    let (d1, d2) = d1_d2(p, s, tau);
    let sqrt_tau = tau.sqrt();
    let disc_k = p.strike * (-p.rate * tau).exp();
    let pdf1 = norm_pdf(d1);
    let gamma = pdf1 / (s * p.vol * sqrt_tau);
    let vega = s * pdf1 * sqrt_tau;
    let decay = s * pdf1 * p.vol / (2.0 * sqrt_tau);
    let g = match p.kind {
        OptionKind::Call => BsGreeks {
            delta: norm_cdf(d1),
            gamma,
            vega,
            theta: -decay - p.rate * disc_k * norm_cdf(d2),
            rho: tau * disc_k * norm_cdf(d2),
        },
        OptionKind::Put => BsGreeks {
            delta: norm_cdf(d1) - 1.0,
            gamma,
            vega,
            theta: -decay + p.rate * disc_k * norm_cdf(-d2),
            rho: -tau * disc_k * norm_cdf(-d2),
        },
    };
    Ok(g)
}

/// Where a surface's prices came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceSource {
    BlackScholes(BsParams),
    File { path: String, sha256: String },
    Synthetic(String),
}

/// Option prices on an `(s, t)` grid, t-major like [`crate::numerics::Field2D`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSurface {
    pub s_grid: Grid1D,
    pub t_grid: Grid1D,
    pub prices: Vec<f64>,
    pub source: SurfaceSource,
}

impl PriceSurface {
    pub fn new(s_grid: Grid1D, t_grid: Grid1D, prices: Vec<f64>, source: SurfaceSource) -> Result<Self> {
        if prices.len() != s_grid.count() * t_grid.count() {
            return Err(Error::Validation(format!(
                "surface has {} prices for a {}x{} grid",
                prices.len(),
                s_grid.count(),
                t_grid.count()
            )));
        }
        if let Some(i) = prices.iter().position(|p| !p.is_finite() || *p < 0.0) {
            let (si, tj) = (i % s_grid.count(), i / s_grid.count());
            return Err(Error::Validation(format!(
                "price {} at (s={}, t={}) must be finite and >= 0",
                prices[i],
                s_grid.point(si),
                t_grid.point(tj)
            )));
        }
        Ok(Self {
            s_grid,
            t_grid,
            prices,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    #[inline]
    pub fn price(&self, i: usize, j: usize) -> f64 {
        self.prices[j * self.s_grid.count() + i]
    }

    /// `(s, t, price)` for every node, t-major then s ascending.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let ns = self.s_grid.count();
        self.prices
            .iter()
            .enumerate()
            .map(move |(idx, &p)| (self.s_grid.point(idx % ns), self.t_grid.point(idx / ns), p))
    }

    pub fn max_price(&self) -> f64 {
        self.prices.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_price(&self) -> f64 {
        self.prices.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Prices `bs_price(s_i, t_j)` on the whole grid.
pub fn generate_surface(p: &BsParams, s_grid: Grid1D, t_grid: Grid1D) -> Result<PriceSurface> {
    p.validate()?;
    let bad_s: Vec<usize> = (0..s_grid.count()).filter(|&i| !(s_grid.point(i) > 0.0)).collect();
    let bad_t: Vec<usize> = (0..t_grid.count()).filter(|&j| !(t_grid.point(j) < p.expiry)).collect();
    if !bad_s.is_empty() || !bad_t.is_empty() {
        return Err(Error::domain(
            "black-scholes",
            format!("grid outside the pricing domain: s indices {bad_s:?} (need s > 0), t indices {bad_t:?} (need t < T)"),
        ));
    }
    let mut prices = Vec::with_capacity(s_grid.count() * t_grid.count());
    for t in t_grid.points() {
        for s in s_grid.points() {
            prices.push(bs_price(p, s, t)?);
        }
    }
    PriceSurface::new(s_grid, t_grid, prices, SurfaceSource::BlackScholes(*p))
}
