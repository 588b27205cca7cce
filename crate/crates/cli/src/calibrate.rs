//! Start-point strategies around the single LM run: seeded multistart and a
//! staged warm start from single-component fits.

use nlswave::blackscholes::PriceSurface;
use nlswave::fitting::{fit_general_model_from, LmConfig, ModelBinding, ModelFit, ModelSpec};
use nlswave::waves::{ComponentKind, WaveParams};
use nlswave::{Error, Exec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartOptions {
    /// Random starts per starting point; start 0 is the unperturbed point.
    pub starts: usize,
    pub seed: u64,
    /// Each free value `x` is moved to `x (1 + p u)`, `u ~ U(-1, 1)`.
    pub perturbation: f64,
    pub staged: bool,
}

impl Default for StartOptions {
    fn default() -> Self {
        Self {
            starts: 1,
            seed: 42,
            perturbation: 0.3,
            staged: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub fit: ModelFit,
    /// Where the winning run started: `template` or `from-<component>`.
    pub start_point: String,
    pub start_index: usize,
    /// Best single-component fits, when staged.
    pub singles: Vec<(ComponentKind, ModelFit)>,
}

fn perturbed(x0: &[f64], bounds: &[(f64, f64)], rng: &mut ChaCha8Rng, p: f64) -> Vec<f64> {
    x0.iter()
        .zip(bounds)
        .map(|(x, (lo, hi))| (x * (1.0 + p * rng.random_range(-1.0..=1.0))).clamp(*lo, *hi))
        .collect()
}

/// Independent stream per start so results do not depend on scheduling.
fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs every `(template, start)` pair and keeps the lowest final cost; ties
/// go to the lowest index. Failed runs are skipped unless all fail.
fn best_of(
    surface: &PriceSurface,
    spec: &ModelSpec,
    templates: &[WaveParams],
    cfg: &LmConfig,
    opts: &StartOptions,
    exec: Exec,
) -> nlswave::Result<(ModelFit, usize)> {
    let starts = opts.starts.max(1);
    let bindings: Vec<ModelBinding> = templates
        .iter()
        .map(|t| {
            let mut s = spec.clone();
            s.template = t.clone();
            ModelBinding::new(&s)
        })
        .collect::<nlswave::Result<_>>()?;
    let results = exec.map(templates.len() * starts, |idx| {
        let (c, i) = (idx / starts, idx % starts);
        let binding = &bindings[c];
        let x0 = binding.initial();
        let x = if i == 0 {
            x0
        } else {
            let mut rng = start_rng(opts.seed, idx);
            perturbed(&x0, binding.bounds(), &mut rng, opts.perturbation)
        };
        fit_general_model_from(surface, spec, binding, &x, cfg)
    });
    let mut best: Option<(ModelFit, usize)> = None;
    let mut first_err: Option<Error> = None;
    for (idx, r) in results.into_iter().enumerate() {
        match r {
            Ok(fit) => {
                if best.as_ref().is_none_or(|(b, _)| fit.report.final_cost < b.report.final_cost) {
                    best = Some((fit, idx));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one start ran"))
}

/// Seeded multistart from the template in `spec`.
pub fn multistart(
    surface: &PriceSurface,
    spec: &ModelSpec,
    cfg: &LmConfig,
    opts: &StartOptions,
) -> nlswave::Result<(ModelFit, usize)> {
    best_of(surface, spec, std::slice::from_ref(&spec.template), cfg, opts, cfg.exec)
}

/// Template with one component taken from a single-component fit and every
/// other amplitude zeroed: the full model starts exactly where the single
/// fit ended, so its final cost cannot be higher.
fn warm_template(spec: &ModelSpec, kind: ComponentKind, single: &WaveParams) -> WaveParams {
    let mut t = spec.template.clone();
    t.set_component(single.component(kind));
    t.amplitudes = [0.0; 5];
    t.amplitudes[kind.index()] = single.amplitudes[kind.index()];
    if spec.shared_k && kind != ComponentKind::Packet {
        let k = match single.component(kind) {
            nlswave::waves::Component::Shock(p) | nlswave::waves::Component::Soliton(p) => p.k,
            nlswave::waves::Component::OneRogon(p) | nlswave::waves::Component::TwoRogon(p) => p.k,
            nlswave::waves::Component::Packet(_) => unreachable!(),
        };
        t.shock.k = k;
        t.soliton.k = k;
        t.rogon1.k = k;
        t.rogon2.k = k;
    }
    t
}

/// Staged calibration: fit each enabled component alone (with multistart),
/// then fit the full model from the template and from every single-component
/// result, keeping the best.
pub fn calibrate(
    surface: &PriceSurface,
    spec: &ModelSpec,
    cfg: &LmConfig,
    opts: &StartOptions,
) -> nlswave::Result<Calibration> {
    if !opts.staged || spec.components.len() < 2 {
        let (fit, idx) = multistart(surface, spec, cfg, opts)?;
        return Ok(Calibration {
            fit,
            start_point: "template".into(),
            start_index: idx,
            singles: Vec::new(),
        });
    }
    // validates the full spec (over-parameterization) before any fitting
    let full = ModelBinding::new(spec)?;
    if full.len() > surface.len() {
        return Err(Error::Usage(format!(
            "over-parameterized model: {} free parameters for {} surface nodes",
            full.len(),
            surface.len()
        )));
    }
    let mut singles = Vec::with_capacity(spec.components.len());
    for &kind in &spec.components {
        let mut single = spec.clone();
        single.components = vec![kind];
        single.free = None;
        let (fit, _) = multistart(surface, &single, cfg, opts)?;
        singles.push((kind, fit));
    }
    let mut templates = vec![spec.template.clone()];
    let mut labels = vec!["template".to_string()];
    for (kind, fit) in &singles {
        templates.push(warm_template(spec, *kind, &fit.params));
        labels.push(format!("from-{kind}"));
    }
    let (fit, idx) = best_of(surface, spec, &templates, cfg, opts, cfg.exec)?;
    let starts = opts.starts.max(1);
    Ok(Calibration {
        fit,
        start_point: labels[idx / starts].clone(),
        start_index: idx % starts,
        singles,
    })
}
