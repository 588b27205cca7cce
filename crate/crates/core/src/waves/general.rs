use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    adaptive_beta, eval_one_rogon, eval_packet, eval_shock, eval_soliton, eval_two_rogon,
    AdaptiveWeights, Component, PacketParams, PacketTerm, RogonParams, Sign, SolitaryParams,
};
use crate::error::{Error, Result};
use crate::numerics::ComplexSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Packet,
    Shock,
    Soliton,
    OneRogon,
    TwoRogon,
}

pub const COMPONENT_KINDS: [ComponentKind; 5] = [
    ComponentKind::Packet,
    ComponentKind::Shock,
    ComponentKind::Soliton,
    ComponentKind::OneRogon,
    ComponentKind::TwoRogon,
];

impl ComponentKind {
    /// Position of the component's amplitude in `WaveParams::amplitudes`.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ComponentKind::Packet => "packet",
            ComponentKind::Shock => "shock",
            ComponentKind::Soliton => "soliton",
            ComponentKind::OneRogon => "one-rogon",
            ComponentKind::TwoRogon => "two-rogon",
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ComponentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        COMPONENT_KINDS
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown component {s:?} (expected packet, shock, soliton, one-rogon or two-rogon)"
                ))
            })
    }
}

/// Where the nonlinear components take their β from.
///
/// With a shared or adaptive source only the magnitude `|β|` is shared: the
/// shock takes `-|β|` and the soliton and rogons `+|β|`, so every component
/// stays inside its own validity region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaSource {
    /// Each component uses the `beta` stored in its own parameters.
    PerComponent,
    Shared(f64),
    /// `β(s)` evaluated at each probe price and substituted into the closed
    /// forms. These are then fitting templates, not exact solutions.
    Adaptive(AdaptiveWeights),
}

/// Parameters of the five-component superposition
///
/// ```text
/// ψ = A₁ packet ± A₂ shock ± A₃ soliton + A₄ one-rogon + A₅ two-rogon
/// ```
///
/// The ± signs live in the solitary parameters. A zero amplitude disables
/// its component entirely, so its parameters are not validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub amplitudes: [f64; 5],
    pub packet: PacketParams,
    pub shock: SolitaryParams,
    pub soliton: SolitaryParams,
    pub rogon1: RogonParams,
    pub rogon2: RogonParams,
    pub beta_source: BetaSource,
}

impl Default for WaveParams {
    fn default() -> Self {
        Self {
            amplitudes: [0.0; 5],
            packet: PacketParams {
                amplitude: 1.0,
                terms: vec![PacketTerm { c: 1.0, k: 0.0 }],
                sigma: 1.0,
            },
            shock: SolitaryParams {
                sign: Sign::Plus,
                sigma: 1.0,
                beta: -1.0,
                k: 0.0,
            },
            soliton: SolitaryParams {
                sign: Sign::Plus,
                sigma: 1.0,
                beta: 1.0,
                k: 0.0,
            },
            rogon1: RogonParams {
                alpha: 1.0,
                k: 0.0,
                sigma: 1.0,
                beta: 1.0,
            },
            rogon2: RogonParams {
                alpha: 1.0,
                k: 0.0,
                sigma: 1.0,
                beta: 1.0,
            },
            beta_source: BetaSource::PerComponent,
        }
    }
}

impl WaveParams {
    /// A model with a single enabled component.
    pub fn from_component(component: Component, amplitude: f64) -> Self {
        let mut p = Self::default();
        p.amplitudes[component.kind().index()] = amplitude;
        p.set_component(component);
        p
    }

    pub fn component(&self, kind: ComponentKind) -> Component {
        match kind {
            ComponentKind::Packet => Component::Packet(self.packet.clone()),
            ComponentKind::Shock => Component::Shock(self.shock),
            ComponentKind::Soliton => Component::Soliton(self.soliton),
            ComponentKind::OneRogon => Component::OneRogon(self.rogon1),
            ComponentKind::TwoRogon => Component::TwoRogon(self.rogon2),
        }
    }

    pub fn set_component(&mut self, component: Component) {
        match component {
            Component::Packet(p) => self.packet = p,
            Component::Shock(p) => self.shock = p,
            Component::Soliton(p) => self.soliton = p,
            Component::OneRogon(p) => self.rogon1 = p,
            Component::TwoRogon(p) => self.rogon2 = p,
        }
    }

    pub fn amplitude(&self, kind: ComponentKind) -> f64 {
        self.amplitudes[kind.index()]
    }

    pub fn enabled(&self) -> impl Iterator<Item = ComponentKind> + '_ {
        COMPONENT_KINDS
            .into_iter()
            .filter(|k| self.amplitudes[k.index()] != 0.0)
    }

    /// Every component's `sigma` set to the same value.
    pub fn with_sigma(&self, sigma: f64) -> Self {
        let mut p = self.clone();
        p.packet.sigma = sigma;
        p.shock.sigma = sigma;
        p.soliton.sigma = sigma;
        p.rogon1.sigma = sigma;
        p.rogon2.sigma = sigma;
        p
    }

    /// `|β|` at price `s`, or `None` when components use their own β.
    fn beta_magnitude(&self, s: f64) -> Result<Option<f64>> {
        let b = match &self.beta_source {
            BetaSource::PerComponent => return Ok(None),
            BetaSource::Shared(b) => b.abs(),
            BetaSource::Adaptive(w) => adaptive_beta(w, s)?.abs(),
        };
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::domain(
                "general",
                format!("market-heat potential resolves to |beta| = {b} at s = {s}"),
            ));
        }
        Ok(Some(b))
    }

    /// Superposition of the enabled components at `(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> Result<ComplexSample> {
        let a = &self.amplitudes;
        let b = self.beta_magnitude(s)?;
        let mut sum = Complex64::new(0.0, 0.0);
        if a[0] != 0.0 {
            sum += eval_packet(&self.packet, s, t)? * a[0];
        }
        if a[1] != 0.0 {
            let mut p = self.shock;
            if let Some(b) = b {
                p.beta = -b;
            }
            sum += eval_shock(&p, s, t)? * a[1];
        }
        if a[2] != 0.0 {
            let mut p = self.soliton;
            if let Some(b) = b {
                p.beta = b;
            }
            sum += eval_soliton(&p, s, t)? * a[2];
        }
        if a[3] != 0.0 {
            let mut p = self.rogon1;
            if let Some(b) = b {
                p.beta = b;
            }
            sum += eval_one_rogon(&p, s, t)? * a[3];
        }
        if a[4] != 0.0 {
            let mut p = self.rogon2;
            if let Some(b) = b {
                p.beta = b;
            }
            sum += eval_two_rogon(&p, s, t)? * a[4];
        }
        Ok(sum)
    }

    /// Names of the entries of [`WaveParams::to_vec`], in order.
    pub fn names(&self) -> Vec<String> {
        let mut n: Vec<String> = (1..=5).map(|i| format!("A{i}")).collect();
        n.push("packet.amplitude".into());
        n.push("packet.sigma".into());
        for i in 0..self.packet.terms.len() {
            n.push(format!("packet.c{i}"));
            n.push(format!("packet.k{i}"));
        }
        for c in ["shock", "soliton"] {
            for f in ["sigma", "beta", "k"] {
                n.push(format!("{c}.{f}"));
            }
        }
        for c in ["rogon1", "rogon2"] {
            for f in ["alpha", "k", "sigma", "beta"] {
                n.push(format!("{c}.{f}"));
            }
        }
        match &self.beta_source {
            BetaSource::PerComponent => {}
            BetaSource::Shared(_) => n.push("beta".into()),
            BetaSource::Adaptive(w) => {
                n.push("beta.r".into());
                for i in 0..w.terms.len() {
                    n.push(format!("beta.w1_{i}"));
                    n.push(format!("beta.w2_{i}"));
                    n.push(format!("beta.w3_{i}"));
                }
            }
        }
        n
    }

    /// Flat parameter vector. Discrete structure (signs, number of packet and
    /// weight terms, kind of β source) stays in `self`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.amplitudes.to_vec();
        v.push(self.packet.amplitude);
        v.push(self.packet.sigma);
        for t in &self.packet.terms {
            v.push(t.c);
            v.push(t.k);
        }
        for p in [&self.shock, &self.soliton] {
            v.extend([p.sigma, p.beta, p.k]);
        }
        for p in [&self.rogon1, &self.rogon2] {
            v.extend([p.alpha, p.k, p.sigma, p.beta]);
        }
        match &self.beta_source {
            BetaSource::PerComponent => {}
            BetaSource::Shared(b) => v.push(*b),
            BetaSource::Adaptive(w) => {
                v.push(w.r);
                for &(w1, w2, w3) in &w.terms {
                    v.extend([w1, w2, w3]);
                }
            }
        }
        v
    }

    /// Inverse of [`WaveParams::to_vec`], using `self` for the structure.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        let expected = self.names().len();
        if values.len() != expected {
            return Err(Error::Usage(format!(
                "parameter vector has {} entries, model needs {expected}",
                values.len()
            )));
        }
        let mut it = values.iter().copied();
        let mut next = || it.next().expect("length checked above");
        let mut p = self.clone();
        for a in p.amplitudes.iter_mut() {
            *a = next();
        }
        p.packet.amplitude = next();
        p.packet.sigma = next();
        for t in p.packet.terms.iter_mut() {
            t.c = next();
            t.k = next();
        }
        for s in [&mut p.shock, &mut p.soliton] {
            s.sigma = next();
            s.beta = next();
            s.k = next();
        }
        for r in [&mut p.rogon1, &mut p.rogon2] {
            r.alpha = next();
            r.k = next();
            r.sigma = next();
            r.beta = next();
        }
        match &mut p.beta_source {
            BetaSource::PerComponent => {}
            BetaSource::Shared(b) => *b = next(),
            BetaSource::Adaptive(w) => {
                w.r = next();
                for term in w.terms.iter_mut() {
                    *term = (next(), next(), next());
                }
            }
        }
        Ok(p)
    }
}

/// [`WaveParams::eval`] as a free function.
pub fn eval_general(p: &WaveParams, s: f64, t: f64) -> Result<ComplexSample> {
    p.eval(s, t)
}
