//! Calibration of the wave superposition against a price surface.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::lm::{lm_fit, FitProblem, FitReport, LmConfig};
use crate::blackscholes::PriceSurface;
use crate::error::{Error, Result};
use crate::numerics::ComplexSample;
use crate::waves::{ComponentKind, WaveParams, COMPONENT_KINDS};

/// What the model value compared with the price is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// `|ψ|`
    #[default]
    Modulus,
    /// `|ψ|²`
    Density,
}

impl Target {
    #[inline]
    pub fn apply(self, z: ComplexSample) -> f64 {
        match self {
            Target::Modulus => z.norm(),
            Target::Density => z.norm_sqr(),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Modulus => "modulus",
            Target::Density => "density",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modulus" => Ok(Target::Modulus),
            "density" => Ok(Target::Density),
            _ => Err(Error::InvalidParameter(format!(
                "unknown fit target {s:?} (expected modulus or density)"
            ))),
        }
    }
}

/// Which parts of a [`WaveParams`] template are fitted and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Starting values and all fixed structure (signs, σ, β source).
    pub template: WaveParams,
    pub components: Vec<ComponentKind>,
    /// Tie the wave numbers of the shock, soliton and rogons to one value.
    pub shared_k: bool,
    pub target: Target,
    /// Divide prices by the surface maximum before fitting.
    pub normalize: bool,
    /// Free parameter names; `None` selects [`ModelSpec::default_free`].
    pub free: Option<Vec<String>>,
}

impl ModelSpec {
    pub fn new(template: WaveParams, components: Vec<ComponentKind>) -> Self {
        Self {
            template,
            components,
            shared_k: false,
            target: Target::Modulus,
            normalize: true,
            free: None,
        }
    }

    fn has(&self, kind: ComponentKind) -> bool {
        self.components.contains(&kind)
    }

    /// Amplitudes and shape parameters of the enabled components. σ, β, the
    /// packet's overall amplitude and its reference weight `c0` stay fixed.
    pub fn default_free(&self) -> Vec<String> {
        let mut names = Vec::new();
        for kind in COMPONENT_KINDS {
            if self.has(kind) {
                names.push(format!("A{}", kind.index() + 1));
            }
        }
        if self.has(ComponentKind::Packet) {
            for i in 1..self.template.packet.terms.len() {
                names.push(format!("packet.c{i}"));
            }
            for i in 0..self.template.packet.terms.len() {
                names.push(format!("packet.k{i}"));
            }
        }
        let mut k_names = Vec::new();
        for (kind, prefix) in [
            (ComponentKind::Shock, "shock"),
            (ComponentKind::Soliton, "soliton"),
            (ComponentKind::OneRogon, "rogon1"),
            (ComponentKind::TwoRogon, "rogon2"),
        ] {
            if !self.has(kind) {
                continue;
            }
            if matches!(kind, ComponentKind::OneRogon | ComponentKind::TwoRogon) {
                names.push(format!("{prefix}.alpha"));
            }
            k_names.push(format!("{prefix}.k"));
        }
        if self.shared_k && !k_names.is_empty() {
            names.push("k".into());
        } else {
            names.extend(k_names);
        }
        names
    }

    /// Template slots tied to the shared `k`.
    fn shared_k_slots(&self, all: &[String]) -> Vec<usize> {
        [
            (ComponentKind::Shock, "shock.k"),
            (ComponentKind::Soliton, "soliton.k"),
            (ComponentKind::OneRogon, "rogon1.k"),
            (ComponentKind::TwoRogon, "rogon2.k"),
        ]
        .into_iter()
        .filter(|(kind, _)| self.has(*kind))
        .filter_map(|(_, name)| all.iter().position(|n| n == name))
        .collect()
    }
}

fn default_bounds(name: &str) -> (f64, f64) {
    if name.starts_with('A') && name[1..].parse::<usize>().is_ok() {
        (0.0, f64::INFINITY)
    } else if name.ends_with(".alpha") {
        (1e-8, f64::INFINITY)
    } else if name.ends_with("sigma") {
        (1e-12, f64::INFINITY)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Map between the free-parameter vector and a full [`WaveParams`].
#[derive(Debug, Clone)]
pub struct ModelBinding {
    base: WaveParams,
    base_values: Vec<f64>,
    /// Template slots written by each free parameter.
    slots: Vec<Vec<usize>>,
    names: Vec<String>,
    bounds: Vec<(f64, f64)>,
}

impl ModelBinding {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        if spec.components.is_empty() {
            return Err(Error::Usage("at least one component must be enabled".into()));
        }
        let mut base = spec.template.clone();
        for kind in COMPONENT_KINDS {
            if !spec.has(kind) {
                base.amplitudes[kind.index()] = 0.0;
            }
        }
        let all = base.names();
        let shared = if spec.shared_k { spec.shared_k_slots(&all) } else { Vec::new() };
        let names = spec.free.clone().unwrap_or_else(|| spec.default_free());
        let mut slots = Vec::with_capacity(names.len());
        for name in &names {
            if name == "k" && spec.shared_k {
                if shared.is_empty() {
                    return Err(Error::Usage("shared k needs a shock, soliton or rogon component".into()));
                }
                slots.push(shared.clone());
                continue;
            }
            match all.iter().position(|n| n == name) {
                Some(i) => slots.push(vec![i]),
                None => {
                    return Err(Error::Usage(format!("unknown free parameter {name:?}")));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = slots.iter().flatten().find(|i| !seen.insert(**i)) {
            return Err(Error::Usage(format!("parameter {:?} is freed twice", all[*dup])));
        }
        let bounds = names.iter().map(|n| default_bounds(n)).collect();
        let base_values = base.to_vec();
        Ok(Self {
            base,
            base_values,
            slots,
            names,
            bounds,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Template values of the free parameters, clipped into the bounds.
    pub fn initial(&self) -> Vec<f64> {
        self.slots
            .iter()
            .zip(&self.bounds)
            .map(|(s, (lo, hi))| self.base_values[s[0]].clamp(*lo, *hi))
            .collect()
    }

    pub fn params(&self, free: &[f64]) -> Result<WaveParams> {
        if free.len() != self.slots.len() {
            return Err(Error::Usage(format!(
                "{} free values for {} free parameters",
                free.len(),
                self.slots.len()
            )));
        }
        let mut v = self.base_values.clone();
        for (x, slots) in free.iter().zip(&self.slots) {
            for &i in slots {
                v[i] = *x;
            }
        }
        self.base.with_values(&v)
    }
}

/// Result of [`fit_general_model`]. Model values in price units are
/// `target(ψ) · scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub report: FitReport,
    pub params: WaveParams,
    pub scale: f64,
}

/// Divisor applied to prices before fitting.
pub fn price_scale(surface: &PriceSurface, spec: &ModelSpec) -> f64 {
    let max = surface.max_price();
    if spec.normalize && max > 0.0 {
        max
    } else {
        1.0
    }
}

/// Fits from the template values in `spec`.
pub fn fit_general_model(surface: &PriceSurface, spec: &ModelSpec, cfg: &LmConfig) -> Result<ModelFit> {
    let binding = ModelBinding::new(spec)?;
    let initial = binding.initial();
    fit_general_model_from(surface, spec, &binding, &initial, cfg)
}

/// Fits from an explicit free-parameter vector.
pub fn fit_general_model_from(
    surface: &PriceSurface,
    spec: &ModelSpec,
    binding: &ModelBinding,
    initial: &[f64],
    cfg: &LmConfig,
) -> Result<ModelFit> {
    if surface.is_empty() {
        return Err(Error::Usage("cannot fit an empty surface".into()));
    }
    if binding.len() > surface.len() {
        return Err(Error::Usage(format!(
            "over-parameterized model: {} free parameters for {} surface nodes",
            binding.len(),
            surface.len()
        )));
    }
    let scale = price_scale(surface, spec);
    let nodes: Vec<(f64, f64, f64)> = surface.nodes().map(|(s, t, p)| (s, t, p / scale)).collect();
    let target = spec.target;
    let exec = cfg.exec;
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        let wp = binding.params(x)?;
        exec.try_map(nodes.len(), |i| {
            let (s, t, y) = nodes[i];
            Ok::<_, Error>(target.apply(wp.eval(s, t)?) - y)
        })
    };
    let problem = FitProblem::new(binding.len(), nodes.len(), residual)?
        .with_bounds(binding.bounds().to_vec())?
        .with_names(binding.names().to_vec())?;
    let report = lm_fit(&problem, initial, cfg)?;
    let params = binding.params(&report.parameters)?;
    Ok(ModelFit { report, params, scale })
}

/// Model values `target(ψ) · scale` on every node of `surface`, t-major.
pub fn model_prices(fit: &ModelFit, target: Target, surface: &PriceSurface) -> Result<Vec<f64>> {
    surface
        .nodes()
        .map(|(s, t, _)| Ok(target.apply(fit.params.eval(s, t)?) * fit.scale))
        .collect()
}
