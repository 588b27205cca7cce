//! Sensitivities of the wave function: delta `∂ψ/∂s`, gamma `∂²ψ/∂s²`,
//! theta `∂ψ/∂t`, vega `∂ψ/∂σ` and rho `∂ψ/∂β`.
//!
//! For the dark soliton `ψ = ±a tanh(ξ) e^{iφ}` with `a = √(-σ/β)`,
//! `ξ = s - σkt`, `φ = ks - σt(2+k²)/2` and `E = e^{iφ}`:
//!
//! ```text
//! ψ_s  = ±a E (sech²ξ + ik tanh ξ)
//! ψ_ss = ±a E (-2 sech²ξ tanh ξ + 2ik sech²ξ - k² tanh ξ)
//! ψ_t  = ±a E (-σk sech²ξ - iσ(2+k²)/2 tanh ξ)
//! ψ_σ  = ±E (a_σ tanh ξ - a k t sech²ξ - i a t (2+k²)/2 tanh ξ),  a_σ = -1/(2aβ)
//! ψ_β  = ±E a_β tanh ξ,                                          a_β = σ/(2aβ²)
//! ```
//!
//! Rho is the β-derivative, which is the rate sensitivity when β is set to
//! the interest rate. Greeks of `|ψ|²` follow by the chain rule.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blackscholes::BsGreeks;
use crate::error::{Error, Result};
use crate::numerics::{sech, tanh, ComplexSample};
use crate::waves::{eval_shock, BetaSource, Component, SolitaryParams, WaveParams};

/// Relative step of the first-order central differences.
pub const FD_STEP: f64 = 1e-6;
/// Relative step of the second difference in `s`; smaller steps drown in
/// rounding error (`ε/h²`).
pub const FD_STEP_GAMMA: f64 = 1e-4;

/// Greeks of `|ψ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdfGreeks {
    pub delta: f64,
    pub gamma: f64,
    pub theta: f64,
    pub vega: f64,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlsGreeks {
    pub value: ComplexSample,
    pub delta: ComplexSample,
    pub gamma: ComplexSample,
    pub theta: ComplexSample,
    pub vega: ComplexSample,
    /// `None` when β is not a single scalar (adaptive potential, packet).
    pub rho: Option<ComplexSample>,
    pub pdf: PdfGreeks,
    /// Quantities computed with a one-sided difference because a central
    /// stencil left the component's validity domain.
    pub one_sided: Vec<String>,
}

impl NlsGreeks {
    fn assemble(
        value: ComplexSample,
        delta: ComplexSample,
        gamma: ComplexSample,
        theta: ComplexSample,
        vega: ComplexSample,
        rho: Option<ComplexSample>,
        one_sided: Vec<String>,
    ) -> Self {
        let chain = |d: ComplexSample| 2.0 * (value.conj() * d).re;
        let pdf = PdfGreeks {
            delta: chain(delta),
            gamma: 2.0 * delta.norm_sqr() + chain(gamma),
            theta: chain(theta),
            vega: chain(vega),
            rho: rho.map(chain),
        };
        Self {
            value,
            delta,
            gamma,
            theta,
            vega,
            rho,
            pdf,
            one_sided,
        }
    }

    /// `(name, value)` for each complex Greek, in reporting order.
    pub fn complex_rows(&self) -> Vec<(&'static str, ComplexSample)> {
        let mut rows = vec![
            ("delta", self.delta),
            ("gamma", self.gamma),
            ("theta", self.theta),
            ("vega", self.vega),
        ];
        if let Some(rho) = self.rho {
            rows.push(("rho", rho));
        }
        rows
    }

    /// Complex Greeks followed by the real `|ψ|²` Greeks.
    pub fn rows(&self) -> Vec<(&'static str, ComplexSample)> {
        let mut rows = self.complex_rows();
        let real = |x: f64| Complex64::new(x, 0.0);
        rows.push(("pdf_delta", real(self.pdf.delta)));
        rows.push(("pdf_gamma", real(self.pdf.gamma)));
        rows.push(("pdf_theta", real(self.pdf.theta)));
        rows.push(("pdf_vega", real(self.pdf.vega)));
        if let Some(rho) = self.pdf.rho {
            rows.push(("pdf_rho", real(rho)));
        }
        rows
    }
}

/// Closed-form Greeks of the dark soliton.
pub fn shock_greeks_analytic(p: &SolitaryParams, s: f64, t: f64) -> Result<NlsGreeks> {
    let value = eval_shock(p, s, t)?;
    let (sigma, beta, k) = (p.sigma, p.beta, p.k);
    let a = (-sigma / beta).sqrt();
    let xi = s - sigma * k * t;
    let th = tanh(xi);
    let sc2 = sech(xi).powi(2);
    let phase = k * s - 0.5 * sigma * t * (2.0 + k * k);
    let e = Complex64::from_polar(p.sign.value(), phase);
    let i = Complex64::i();
    let disp = 0.5 * (2.0 + k * k);

    let delta = e * a * (sc2 + i * k * th);
    let gamma = e * a * (-2.0 * sc2 * th + 2.0 * i * k * sc2 - k * k * th);
    let theta = e * a * (-sigma * k * sc2 - i * sigma * disp * th);
    let a_sigma = -1.0 / (2.0 * a * beta);
    let vega = e * (a_sigma * th - a * k * t * sc2 - i * a * t * disp * th);
    let a_beta = sigma / (2.0 * a * beta * beta);
    let rho = e * (a_beta * th);
    Ok(NlsGreeks::assemble(value, delta, gamma, theta, vega, Some(rho), Vec::new()))
}

/// Anything whose wave function can be probed and whose σ and β can be
/// perturbed.
pub trait GreekModel: Sized {
    fn eval(&self, s: f64, t: f64) -> Result<ComplexSample>;
    /// Scale for the σ step.
    fn sigma(&self) -> f64;
    fn bump_sigma(&self, d: f64) -> Self;
    /// Scale for the β step; `None` if there is no scalar β.
    fn beta(&self) -> Option<f64>;
    fn bump_beta(&self, d: f64) -> Option<Self>;
}

impl GreekModel for Component {
    fn eval(&self, s: f64, t: f64) -> Result<ComplexSample> {
        Component::eval(self, s, t)
    }

    fn sigma(&self) -> f64 {
        Component::sigma(self)
    }

    fn bump_sigma(&self, d: f64) -> Self {
        self.with_sigma(Component::sigma(self) + d)
    }

    fn beta(&self) -> Option<f64> {
        Component::beta(self)
    }

    fn bump_beta(&self, d: f64) -> Option<Self> {
        Component::beta(self).map(|b| self.with_beta(b + d))
    }
}

/// σ is moved for every component at once. With per-component β, every
/// nonlinear component's β moves by the same amount; an adaptive potential
/// has no rho.
impl GreekModel for WaveParams {
    fn eval(&self, s: f64, t: f64) -> Result<ComplexSample> {
        WaveParams::eval(self, s, t)
    }

    fn sigma(&self) -> f64 {
        self.enabled()
            .next()
            .map(|k| self.component(k).sigma())
            .unwrap_or(self.packet.sigma)
    }

    fn bump_sigma(&self, d: f64) -> Self {
        let mut p = self.clone();
        p.packet.sigma += d;
        p.shock.sigma += d;
        p.soliton.sigma += d;
        p.rogon1.sigma += d;
        p.rogon2.sigma += d;
        p
    }

    fn beta(&self) -> Option<f64> {
        match &self.beta_source {
            BetaSource::Shared(b) => Some(*b),
            BetaSource::Adaptive(_) => None,
            BetaSource::PerComponent => self.enabled().find_map(|k| self.component(k).beta()),
        }
    }

    fn bump_beta(&self, d: f64) -> Option<Self> {
        let mut p = self.clone();
        match &mut p.beta_source {
            BetaSource::Shared(b) => *b += d,
            BetaSource::Adaptive(_) => return None,
            BetaSource::PerComponent => {
                GreekModel::beta(self)?;
                p.shock.beta += d;
                p.soliton.beta += d;
                p.rogon1.beta += d;
                p.rogon2.beta += d;
            }
        }
        Some(p)
    }
}

fn step(x: f64, rel: f64) -> f64 {
    x.abs().max(1.0) * rel
}

/// First derivative of `g` at 0 from a central stencil, falling back to a
/// one-sided one. Returns whether the fallback was used.
fn first_derivative(g: impl Fn(f64) -> Result<ComplexSample>, f0: ComplexSample, h: f64) -> Result<(ComplexSample, bool)> {
    match (g(h), g(-h)) {
        (Ok(fp), Ok(fm)) => Ok(((fp - fm) / (2.0 * h), false)),
        (Ok(fp), Err(_)) => Ok(((fp - f0) / h, true)),
        (Err(_), Ok(fm)) => Ok(((f0 - fm) / h, true)),
        (Err(e), Err(_)) => Err(e),
    }
}

fn second_derivative(g: impl Fn(f64) -> Result<ComplexSample>, f0: ComplexSample, h: f64) -> Result<(ComplexSample, bool)> {
    match (g(h), g(-h)) {
        (Ok(fp), Ok(fm)) => Ok(((fp - 2.0 * f0 + fm) / (h * h), false)),
        (Ok(fp), Err(_)) => Ok(((f0 - 2.0 * fp + g(2.0 * h)?) / (h * h), true)),
        (Err(_), Ok(fm)) => Ok(((f0 - 2.0 * fm + g(-2.0 * h)?) / (h * h), true)),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Finite-difference Greeks of any [`GreekModel`].
pub fn greeks_fd<M: GreekModel>(model: &M, s: f64, t: f64) -> Result<NlsGreeks> {
    let f0 = model.eval(s, t)?;
    let mut one_sided = Vec::new();
    let mut flag = |name: &str, used: bool| {
        if used {
            one_sided.push(name.to_string());
        }
    };

    let (delta, used) = first_derivative(|d| model.eval(s + d, t), f0, step(s, FD_STEP))?;
    flag("delta", used);
    let (gamma, used) = second_derivative(|d| model.eval(s + d, t), f0, step(s, FD_STEP_GAMMA))?;
    flag("gamma", used);
    let (theta, used) = first_derivative(|d| model.eval(s, t + d), f0, step(t, FD_STEP))?;
    flag("theta", used);
    let (vega, used) = first_derivative(|d| model.bump_sigma(d).eval(s, t), f0, step(model.sigma(), FD_STEP))?;
    flag("vega", used);
    let rho = match model.beta() {
        Some(b) => {
            let bumped = |d: f64| match model.bump_beta(d) {
                Some(m) => m.eval(s, t),
                None => Err(Error::InvalidParameter("model has no scalar beta".into())),
            };
            let (rho, used) = first_derivative(bumped, f0, step(b, FD_STEP))?;
            flag("rho", used);
            Some(rho)
        }
        None => None,
    };
    Ok(NlsGreeks::assemble(f0, delta, gamma, theta, vega, rho, one_sided))
}

/// Moduli of the NLS density Greeks next to the classical Black-Scholes ones.
pub fn compare_with_black_scholes(nls: &NlsGreeks, bs: &BsGreeks) -> Vec<(&'static str, f64, f64)> {
    vec![
        ("delta", nls.pdf.delta, bs.delta),
        ("gamma", nls.pdf.gamma, bs.gamma),
        ("theta", nls.pdf.theta, bs.theta),
        ("vega", nls.pdf.vega, bs.vega),
        ("rho", nls.pdf.rho.unwrap_or(f64::NAN), bs.rho),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waves::{PacketParams, PacketTerm, Sign};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shock(sigma: f64, beta: f64, k: f64) -> SolitaryParams {
        SolitaryParams {
            sign: Sign::Plus,
            sigma,
            beta,
            k,
        }
    }

    /// `|a - b| <= tol · max(|a|, |b|, floor)`
    fn close(a: ComplexSample, b: ComplexSample, tol: f64, floor: f64) -> bool {
        (a - b).norm() <= tol * a.norm().max(b.norm()).max(floor)
    }

    fn assert_greeks_close(a: &NlsGreeks, b: &NlsGreeks, tol: f64, floor: f64) {
        for ((name, x), (_, y)) in a.complex_rows().into_iter().zip(b.complex_rows()) {
            assert!(close(x, y, tol, floor), "{name}: {x} vs {y}");
        }
    }

    #[test]
    fn delta_at_center_is_amplitude() {
        let g = shock_greeks_analytic(&shock(1.0, -1.0, 0.0), 0.0, 0.0).unwrap();
        assert!((g.delta.norm() - 1.0).abs() < 1e-15);
        assert_eq!(g.gamma.norm(), 0.0);
        let g = shock_greeks_analytic(&shock(2.0, -0.5, 0.0), 0.0, 0.0).unwrap();
        assert!((g.delta.norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn analytic_matches_fd_at_reference_point() {
        let p = shock(1.0, -2.0, 1.5);
        let a = shock_greeks_analytic(&p, 0.8, 0.4).unwrap();
        let f = greeks_fd(&Component::Shock(p), 0.8, 0.4).unwrap();
        assert!(f.one_sided.is_empty());
        assert_greeks_close(&a, &f, 1e-6, (1.0f64 / 2.0).sqrt());
    }

    #[test]
    fn analytic_matches_fd_on_random_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let sigma = rng.random_range(0.1..2.0);
            let beta = -rng.random_range(0.1..2.0);
            let k = rng.random_range(-2.0..2.0);
            let s = rng.random_range(-3.0..3.0);
            let t = rng.random_range(0.0..2.0);
            let p = shock(sigma, beta, k);
            let a = shock_greeks_analytic(&p, s, t).unwrap();
            let f = greeks_fd(&Component::Shock(p), s, t).unwrap();
            let scale = (-sigma / beta).sqrt();
            assert_greeks_close(&a, &f, 1e-5, scale);
        }
    }

    #[test]
    fn gamma_is_derivative_of_delta() {
        let p = shock(0.7, -1.3, 0.9);
        let (s, t) = (0.4, 0.6);
        let h = 1e-5;
        let dp = shock_greeks_analytic(&p, s + h, t).unwrap().delta;
        let dm = shock_greeks_analytic(&p, s - h, t).unwrap().delta;
        let g = shock_greeks_analytic(&p, s, t).unwrap().gamma;
        assert!(close((dp - dm) / (2.0 * h), g, 1e-4, 1.0));
    }

    #[test]
    fn delta_modulus_travels_with_the_wave() {
        let p = shock(1.2, -0.8, 0.7);
        let shift = 0.9;
        let a = shock_greeks_analytic(&p, 0.3, 0.5).unwrap();
        let b = shock_greeks_analytic(&p, 0.3 + p.sigma * p.k * shift, 0.5 + shift).unwrap();
        assert!((a.delta.norm() - b.delta.norm()).abs() < 1e-12);
    }

    #[test]
    fn constant_packet_has_zero_greeks() {
        let packet = Component::Packet(PacketParams {
            amplitude: 1.3,
            terms: vec![PacketTerm { c: 1.0, k: 0.0 }],
            sigma: 0.5,
        });
        let g = greeks_fd(&packet, 2.0, 1.0).unwrap();
        for (name, z) in g.complex_rows() {
            assert!(z.norm() < 1e-12, "{name} = {z}");
        }
        assert!(g.rho.is_none());
    }

    #[test]
    fn soliton_vega_is_positive() {
        let soliton = Component::Soliton(SolitaryParams {
            sign: Sign::Plus,
            sigma: 0.8,
            beta: 1.1,
            k: 0.0,
        });
        let g = greeks_fd(&soliton, 0.0, 0.0).unwrap();
        assert!(g.pdf.vega > 0.0);
        // ∂|ψ|/∂σ = 1 / (2√(σβ)) at the center
        let modulus_vega = g.pdf.vega / (2.0 * g.value.norm());
        assert!((modulus_vega - 1.0 / (2.0 * (0.8f64 * 1.1).sqrt())).abs() < 1e-6);
    }

    #[test]
    fn fallback_is_flagged_at_domain_edge() {
        // σ + h crosses zero for the forward stencil when σ is tiny
        let p = Component::Shock(shock(5e-7, -1.0, 0.0));
        let g = greeks_fd(&p, 0.3, 0.0).unwrap();
        assert_eq!(g.one_sided, vec!["vega".to_string()]);
    }

    #[test]
    fn general_model_fd_matches_single_component() {
        let p = shock(1.0, -2.0, 0.5);
        let wp = WaveParams::from_component(Component::Shock(p), 1.0);
        let a = greeks_fd(&wp, 0.2, 0.3).unwrap();
        let b = greeks_fd(&Component::Shock(p), 0.2, 0.3).unwrap();
        assert_greeks_close(&a, &b, 1e-12, 1.0);
    }

    #[test]
    fn pdf_chain_rule() {
        let p = shock(1.0, -1.0, 0.8);
        let g = shock_greeks_analytic(&p, 0.3, 0.2).unwrap();
        let h = 1e-6;
        let dens = |s: f64| eval_shock(&p, s, 0.2).unwrap().norm_sqr();
        let fd = (dens(0.3 + h) - dens(0.3 - h)) / (2.0 * h);
        assert!((g.pdf.delta - fd).abs() < 1e-8);
    }
}
