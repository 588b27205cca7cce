//! Closed-form solutions of the focusing nonlinear Schrödinger equation
//!
//! ```text
//! i ψ_t = -(σ/2) ψ_ss - β |ψ|² ψ
//! ```
//!
//! used as option-price wave templates: a linear wave packet, the dark
//! (shock) and bright (soliton) solitary waves, and the first- and
//! second-order rational rogue waves ("rogons"). The superposition of all
//! five lives in [`general`].

mod general;
mod kinematics;
pub mod rogon;

pub use general::{eval_general, BetaSource, ComponentKind, WaveParams, COMPONENT_KINDS};
pub use kinematics::{group_velocity, omega, packet_center, phase_velocity};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{erf, sech, tanh, ComplexSample};

/// Adaptive market-heat potential `β(s) = r Σ w1ᵢ erf(w2ᵢ s / w3ᵢ)`.
/// With no terms the potential is the plain rate, `β = r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveWeights {
    pub r: f64,
    /// `(w1, w2, w3)` triples; `w3` must be nonzero.
    pub terms: Vec<(f64, f64, f64)>,
}

impl AdaptiveWeights {
    pub fn nonadaptive(r: f64) -> Self {
        Self {
            r,
            terms: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.terms.iter().position(|&(_, _, w3)| w3 == 0.0) {
            return Err(Error::InvalidParameter(format!(
                "adaptive weight term {i} has w3 = 0"
            )));
        }
        Ok(())
    }
}

pub fn adaptive_beta(w: &AdaptiveWeights, s: f64) -> Result<f64> {
    w.validate()?;
    if w.terms.is_empty() {
        return Ok(w.r);
    }
    let sum: f64 = w
        .terms
        .iter()
        .map(|&(w1, w2, w3)| w1 * erf(w2 * s / w3))
        .sum();
    Ok(w.r * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketTerm {
    pub c: f64,
    pub k: f64,
}

/// Linear wave packet `A Σ cᵢ e^{i(kᵢ s - ωᵢ t)}`, `ωᵢ = σ kᵢ² / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketParams {
    pub amplitude: f64,
    pub terms: Vec<PacketTerm>,
    pub sigma: f64,
}

impl PacketParams {
    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::domain("packet", "needs at least one plane-wave term"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::domain("packet", format!("sigma must be > 0 (got {})", self.sigma)));
        }
        Ok(())
    }
}

/// Parameters shared by the dark and bright solitary waves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitaryParams {
    pub sign: Sign,
    pub sigma: f64,
    pub beta: f64,
    pub k: f64,
}

/// Parameters of the rogue waves: scaling `α`, gauge `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RogonParams {
    pub alpha: f64,
    pub k: f64,
    pub sigma: f64,
    pub beta: f64,
}

impl RogonParams {
    fn check(&self, component: &'static str) -> Result<()> {
        if !(self.sigma * self.beta > 0.0) {
            return Err(Error::domain(
                component,
                format!("requires sigma*beta > 0 (sigma={}, beta={})", self.sigma, self.beta),
            ));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::domain(component, format!("requires alpha > 0 (got {})", self.alpha)));
        }
        Ok(())
    }

    /// Background level `α √(σ / 2β)` the rogon relaxes to away from the event.
    pub fn background(&self) -> f64 {
        self.alpha * (self.sigma / (2.0 * self.beta)).sqrt()
    }

    /// Canonical coordinates `(X, T)` of the rogue-wave polynomials and the
    /// carrier phase.
    fn canonical(&self, s: f64, t: f64) -> (f64, f64, f64) {
        let (a, k, sigma) = (self.alpha, self.k, self.sigma);
        let x = a * (s - sigma * k * t) / std::f64::consts::SQRT_2;
        let tt = 0.5 * sigma * a * a * t;
        let phase = k * s + 0.5 * sigma * (a * a - k * k) * t;
        (x, tt, phase)
    }
}

pub fn eval_packet(p: &PacketParams, s: f64, t: f64) -> Result<ComplexSample> {
    p.validate()?;
    let sum = p.terms.iter().fold(Complex64::new(0.0, 0.0), |acc, term| {
        acc + Complex64::from_polar(term.c, term.k * s - omega(p.sigma, term.k) * t)
    });
    Ok(sum * p.amplitude)
}

/// Dark soliton `±√(-σ/β) tanh(s - σkt) e^{i[ks - σt(2+k²)/2]}`, valid for σ/β < 0.
pub fn eval_shock(p: &SolitaryParams, s: f64, t: f64) -> Result<ComplexSample> {
    let ratio = p.sigma / p.beta;
    if !(ratio < 0.0) {
        return Err(Error::domain(
            "shock",
            format!("requires sigma/beta < 0 (sigma={}, beta={})", p.sigma, p.beta),
        ));
    }
    let envelope = p.sign.value() * (-ratio).sqrt() * tanh(s - p.sigma * p.k * t);
    let phase = p.k * s - 0.5 * p.sigma * t * (2.0 + p.k * p.k);
    Ok(Complex64::from_polar(1.0, phase) * envelope)
}

/// Bright soliton `±√(σ/β) sech(s - σkt) e^{i[ks - σt(k²-1)/2]}`, valid for σ/β > 0.
pub fn eval_soliton(p: &SolitaryParams, s: f64, t: f64) -> Result<ComplexSample> {
    let ratio = p.sigma / p.beta;
    if !(ratio > 0.0) {
        return Err(Error::domain(
            "soliton",
            format!("requires sigma/beta > 0 (sigma={}, beta={})", p.sigma, p.beta),
        ));
    }
    let envelope = p.sign.value() * ratio.sqrt() * sech(s - p.sigma * p.k * t);
    let phase = p.k * s - 0.5 * p.sigma * t * (p.k * p.k - 1.0);
    Ok(Complex64::from_polar(1.0, phase) * envelope)
}

/// First-order rogue wave (scaled Peregrine breather). Peak `3×` background at
/// `s = t = 0`.
pub fn eval_one_rogon(p: &RogonParams, s: f64, t: f64) -> Result<ComplexSample> {
    p.check("one-rogon")?;
    let (x, tt, phase) = p.canonical(s, t);
    let rational = rogon::peregrine(x, tt);
    Ok(Complex64::from_polar(p.background(), phase) * rational)
}

/// Second-order rogue wave. Peak `5×` background at `s = t = 0`.
pub fn eval_two_rogon(p: &RogonParams, s: f64, t: f64) -> Result<ComplexSample> {
    p.check("two-rogon")?;
    let (x, tt, phase) = p.canonical(s, t);
    let rational = rogon::second_order(x, tt);
    Ok(Complex64::from_polar(p.background(), phase) * rational)
}

/// `|ψ|²`, the option-price probability density.
#[inline]
pub fn pdf(z: ComplexSample) -> f64 {
    z.norm_sqr()
}

/// One wave component with its parameters, for code that dispatches on the
/// component at runtime (residual checks, Greeks, the CLI).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "component", rename_all = "kebab-case")]
pub enum Component {
    Packet(PacketParams),
    Shock(SolitaryParams),
    Soliton(SolitaryParams),
    OneRogon(RogonParams),
    TwoRogon(RogonParams),
}

impl Component {
    pub fn kind(&self) -> ComponentKind {
        match self {
            Component::Packet(_) => ComponentKind::Packet,
            Component::Shock(_) => ComponentKind::Shock,
            Component::Soliton(_) => ComponentKind::Soliton,
            Component::OneRogon(_) => ComponentKind::OneRogon,
            Component::TwoRogon(_) => ComponentKind::TwoRogon,
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<ComplexSample> {
        match self {
            Component::Packet(p) => eval_packet(p, s, t),
            Component::Shock(p) => eval_shock(p, s, t),
            Component::Soliton(p) => eval_soliton(p, s, t),
            Component::OneRogon(p) => eval_one_rogon(p, s, t),
            Component::TwoRogon(p) => eval_two_rogon(p, s, t),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            Component::Packet(p) => p.sigma,
            Component::Shock(p) | Component::Soliton(p) => p.sigma,
            Component::OneRogon(p) | Component::TwoRogon(p) => p.sigma,
        }
    }

    /// `None` for the packet, which solves the linear equation.
    pub fn beta(&self) -> Option<f64> {
        match self {
            Component::Packet(_) => None,
            Component::Shock(p) | Component::Soliton(p) => Some(p.beta),
            Component::OneRogon(p) | Component::TwoRogon(p) => Some(p.beta),
        }
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        let mut c = self.clone();
        match &mut c {
            Component::Packet(p) => p.sigma = sigma,
            Component::Shock(p) | Component::Soliton(p) => p.sigma = sigma,
            Component::OneRogon(p) | Component::TwoRogon(p) => p.sigma = sigma,
        }
        c
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        let mut c = self.clone();
        match &mut c {
            Component::Packet(_) => {}
            Component::Shock(p) | Component::Soliton(p) => p.beta = beta,
            Component::OneRogon(p) | Component::TwoRogon(p) => p.beta = beta,
        }
        c
    }
}
