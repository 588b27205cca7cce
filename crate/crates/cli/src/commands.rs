use std::path::{Path, PathBuf};

use nlswave::blackscholes::{generate_surface, BsParams, OptionKind, PriceSurface, SurfaceSource};
use nlswave::fitting::{model_prices, LmConfig, ModelSpec};
use nlswave::greeks::{greeks_fd, shock_greeks_analytic, NlsGreeks};
use nlswave::numerics::Grid1D;
use nlswave::pde_verify::certify;
use nlswave::waves::{
    AdaptiveWeights, BetaSource, Component, ComponentKind, PacketParams, PacketTerm, RogonParams, Sign,
    SolitaryParams, WaveParams, COMPONENT_KINDS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::args::{
    ComponentArgs, FitArgs, GenerateArgs, GreekMethod, GreeksArgs, KindArg, SampleArgs, SignArg, VerifyArgs,
};
use crate::calibrate::{calibrate, StartOptions};
use crate::error::{CliError, CliResult};
use crate::surface_io::{ingest_market_csv, overlay_csv, surface_csv, write_file};

fn out_path(dir: &Path, file: &Path) -> PathBuf {
    if file.is_absolute() {
        file.to_path_buf()
    } else {
        dir.join(file)
    }
}

fn to_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn config_json<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("argument structs serialize")
}

pub fn run_generate(args: &GenerateArgs) -> CliResult<String> {
    let params = BsParams {
        strike: args.strike,
        rate: args.rate,
        vol: args.vol,
        expiry: args.expiry,
        kind: match args.kind {
            KindArg::Call => OptionKind::Call,
            KindArg::Put => OptionKind::Put,
        },
    };
    let surface = generate_surface(&params, args.s.grid()?, args.t.grid()?)?;
    let path = out_path(&args.common.out_dir, &args.output);
    write_file(&path, &surface_csv(&surface))?;
    Ok(format!(
        "wrote {} nodes to {} (price range {:.6e} .. {:.6e})",
        surface.len(),
        path.display(),
        surface.min_price(),
        surface.max_price()
    ))
}

fn parse_packet(spec: &str) -> CliResult<Vec<PacketTerm>> {
    spec.split(',')
        .map(|pair| {
            let (c, k) = pair
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("packet term {pair:?} is not c:k")))?;
            let num = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("packet term {pair:?}: {x:?} is not a number")))
            };
            Ok(PacketTerm { c: num(c)?, k: num(k)? })
        })
        .collect()
}

/// Builds the component named by `kind` from the shared component flags.
pub fn component_from_args(kind: ComponentKind, a: &ComponentArgs) -> CliResult<Component> {
    let sign = match a.sign {
        SignArg::Plus => Sign::Plus,
        SignArg::Minus => Sign::Minus,
    };
    let beta = |default: f64| a.beta.unwrap_or(default);
    Ok(match kind {
        ComponentKind::Packet => Component::Packet(PacketParams {
            amplitude: a.amplitude,
            terms: parse_packet(&a.packet)?,
            sigma: a.sigma,
        }),
        ComponentKind::Shock => Component::Shock(SolitaryParams {
            sign,
            sigma: a.sigma,
            beta: beta(-1.0),
            k: a.k,
        }),
        ComponentKind::Soliton => Component::Soliton(SolitaryParams {
            sign,
            sigma: a.sigma,
            beta: beta(1.0),
            k: a.k,
        }),
        ComponentKind::OneRogon | ComponentKind::TwoRogon => {
            let p = RogonParams {
                alpha: a.alpha,
                k: a.k,
                sigma: a.sigma,
                beta: beta(1.0),
            };
            if kind == ComponentKind::OneRogon {
                Component::OneRogon(p)
            } else {
                Component::TwoRogon(p)
            }
        }
    })
}

pub fn run_sample(args: &SampleArgs) -> CliResult<String> {
    let comp = component_from_args(args.component, &args.params)?;
    let (sg, tg) = (args.s.grid()?, args.t.grid()?);
    if args.noise < 0.0 || !args.noise.is_finite() {
        return Err(CliError::Usage(format!("--noise must be >= 0 (got {})", args.noise)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut values = Vec::with_capacity(sg.count() * tg.count());
    for t in tg.points() {
        for s in sg.points() {
            let mut v = args.target.apply(comp.eval(s, t)?);
            if args.noise > 0.0 {
                v = (v + args.noise * rng.random_range(-1.0..=1.0)).max(0.0);
            }
            values.push(v);
        }
    }
    let surface = PriceSurface::new(sg, tg, values, SurfaceSource::Synthetic(format!("{} {}", args.component, args.target)))?;
    let path = out_path(&args.common.out_dir, &args.output);
    write_file(&path, &surface_csv(&surface))?;
    Ok(format!("wrote {} nodes to {}", surface.len(), path.display()))
}

pub fn parse_components(list: &str) -> CliResult<Vec<ComponentKind>> {
    if list.trim() == "all" {
        return Ok(COMPONENT_KINDS.to_vec());
    }
    let mut out: Vec<ComponentKind> = Vec::new();
    for name in list.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        let kind: ComponentKind = name.parse()?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("--components selects nothing".into()));
    }
    out.sort();
    Ok(out)
}

fn parse_weights(spec: &str) -> CliResult<Vec<(f64, f64, f64)>> {
    spec.split(',')
        .map(|triple| {
            let v: Vec<f64> = triple
                .split(':')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Usage(format!("weight term {triple:?} is not w1:w2:w3")))?;
            match v[..] {
                [a, b, c] => Ok((a, b, c)),
                _ => Err(CliError::Usage(format!("weight term {triple:?} is not w1:w2:w3"))),
            }
        })
        .collect()
}

/// Default starting point, scaled to the width `w` of the s range: packet
/// wave numbers `(i+1)/w`, rogon scaling `2/w`, solitary wave numbers `10/w`.
pub fn fit_template(args: &FitArgs, surface: &PriceSurface, scale: f64) -> CliResult<WaveParams> {
    if !(args.sigma > 0.0) {
        return Err(CliError::Usage(format!("--sigma must be > 0 (got {})", args.sigma)));
    }
    if args.packet_terms == 0 {
        return Err(CliError::Usage("--packet-terms must be >= 1".into()));
    }
    let width = surface.s_grid.last() - surface.s_grid.start();
    let w = if width > 0.0 { width } else { 1.0 };
    let b = args.beta.abs();
    let amp = if args.normalize { 1.0 } else { scale.max(f64::MIN_POSITIVE) };
    let mut p = WaveParams::default().with_sigma(args.sigma);
    p.amplitudes = [0.3 * amp, 0.2 * amp, 0.2 * amp, 0.3 * amp, 0.2 * amp];
    p.packet.terms = (0..args.packet_terms)
        .map(|i| PacketTerm {
            c: 0.5f64.powi(i as i32),
            k: (i + 1) as f64 / w,
        })
        .collect();
    p.shock.beta = -b;
    p.shock.k = 10.0 / w;
    p.soliton.beta = b;
    p.soliton.k = 10.0 / w;
    for r in [&mut p.rogon1, &mut p.rogon2] {
        r.beta = b;
        r.alpha = 2.0 / w;
        r.k = 0.0;
    }
    p.beta_source = match &args.beta_weights {
        Some(w) => BetaSource::Adaptive(AdaptiveWeights {
            r: args.beta,
            terms: parse_weights(w)?,
        }),
        None => BetaSource::Shared(args.beta),
    };
    if !args.init.is_empty() {
        let names = p.names();
        let mut values = p.to_vec();
        for entry in &args.init {
            let (name, value) = entry
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--init entry {entry:?} is not name=value")))?;
            let i = names
                .iter()
                .position(|n| n == name.trim())
                .ok_or_else(|| CliError::Usage(format!("--init: unknown parameter {name:?}")))?;
            values[i] = value
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--init {name}: {value:?} is not a number")))?;
        }
        p = p.with_values(&values)?;
    }
    Ok(p)
}

fn lm_config(args: &FitArgs) -> LmConfig {
    LmConfig {
        lambda0: args.lambda0,
        nu: args.nu,
        max_iter: args.max_iter,
        cost_tol: args.cost_tol,
        step_tol: args.step_tol,
        fd_step: args.fd_step,
        exec: args.exec.into(),
        ..LmConfig::default()
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn run_fit(args: &FitArgs) -> CliResult<String> {
    let components = parse_components(&args.components)?;
    if args.starts == 0 {
        return Err(CliError::Usage("--starts must be >= 1".into()));
    }
    let cfg = lm_config(args);
    cfg.validate()?;
    let surface = ingest_market_csv(&args.input)?;
    let input_hash = match &surface.source {
        SurfaceSource::File { sha256, .. } => sha256.clone(),
        _ => unreachable!("ingested surfaces carry a file source"),
    };
    let max = surface.max_price();
    let mut spec = ModelSpec::new(WaveParams::default(), components);
    spec.target = args.target;
    spec.shared_k = args.shared_k;
    spec.normalize = args.normalize;
    let scale = nlswave::fitting::price_scale(&surface, &spec);
    spec.template = fit_template(args, &surface, if args.normalize { 1.0 } else { max })?;

    let opts = StartOptions {
        starts: args.starts,
        seed: args.seed,
        perturbation: args.perturbation,
        staged: args.staged,
    };
    let cal = calibrate(&surface, &spec, &cfg, &opts)?;
    let fit = &cal.fit;
    debug_assert_eq!(fit.scale, scale);

    let model = model_prices(fit, spec.target, &surface)?;
    let overlay_path = out_path(&args.common.out_dir, &args.overlay);
    write_file(&overlay_path, &overlay_csv(&surface, &model))?;

    let mut extrapolation = Value::Null;
    if let Some(tg) = args.extrapolate_t {
        let tg = tg.grid()?;
        let (lo, hi) = (surface.t_grid.start(), surface.t_grid.last());
        let mut csv = String::from("s,t,model,label\n");
        for t in tg.points() {
            let label = if t < lo || t > hi { "extrapolation" } else { "in-sample" };
            for s in surface.s_grid.points() {
                let m = spec.target.apply(fit.params.eval(s, t)?) * fit.scale;
                csv.push_str(&format!("{s:?},{t:?},{m:?},{label}\n"));
            }
        }
        let path = out_path(&args.common.out_dir, &args.extrapolation);
        write_file(&path, &csv)?;
        extrapolation = json!({ "file": args.extrapolation, "t_grid": tg, "fitted_t_range": [lo, hi] });
    }

    let parameters: Map<String, Value> = fit
        .report
        .names
        .iter()
        .zip(&fit.report.parameters)
        .map(|(n, v)| (n.clone(), num(*v)))
        .collect();
    let trace: Vec<Value> = fit
        .report
        .trace
        .iter()
        .map(|e| {
            json!({
                "iter": e.iter,
                "cost": num(e.cost),
                "lambda": num(e.lambda),
                "step_norm": num(e.step_norm),
                "accepted": e.accepted,
            })
        })
        .collect();
    let singles: Map<String, Value> = cal
        .singles
        .iter()
        .map(|(k, f)| (k.to_string(), num(f.report.rmse)))
        .collect();
    let report = json!({
        "parameters": parameters,
        "model": fit.params,
        "cost_trace": trace,
        "status": fit.report.status,
        "rmse": num(fit.report.rmse),
        "initial_cost": num(fit.report.initial_cost),
        "final_cost": num(fit.report.final_cost),
        "price_scale": num(fit.scale),
        "target": spec.target,
        "start": { "point": cal.start_point, "index": cal.start_index },
        "single_component_rmse": singles,
        "extrapolation": extrapolation,
        "config": config_json(args),
        "input_hash": input_hash,
    });
    let report_path = out_path(&args.common.out_dir, &args.report);
    write_file(&report_path, &to_json(&report))?;
    Ok(format!(
        "status {}, rmse {:.6e} after {} trial steps; report {}, overlay {}",
        report["status"].as_str().unwrap_or("?"),
        fit.report.rmse,
        fit.report.trace.len(),
        report_path.display(),
        overlay_path.display()
    ))
}

pub fn run_verify(args: &VerifyArgs) -> CliResult<String> {
    let comp = component_from_args(args.component, &args.params)?;
    let rogon = matches!(args.component, ComponentKind::OneRogon | ComponentKind::TwoRogon);
    let sg = match args.s {
        Some(g) => g.grid()?,
        None => Grid1D::from_range(-10.0, 10.0, 401)?,
    };
    let tg = match args.t {
        Some(g) => g.grid()?,
        None if rogon => Grid1D::from_range(-2.0, 2.0, 201)?,
        None => Grid1D::from_range(0.0, 2.0, 201)?,
    };
    let cert = certify(&comp, sg, tg, args.levels, args.exec.into())?;
    let levels: Vec<Value> = cert
        .levels
        .iter()
        .map(|l| {
            json!({
                "s_points": l.s_points,
                "t_points": l.t_points,
                "h_s": num(l.h_s),
                "h_t": num(l.h_t),
                "max_abs": num(l.max_abs),
                "l2": num(l.l2),
            })
        })
        .collect();
    let report = json!({
        "component": cert.component,
        "equation": cert.equation,
        "levels": levels,
        "order": num(cert.order),
        "config": config_json(args),
    });
    let path = out_path(&args.common.out_dir, &args.output);
    write_file(&path, &to_json(&report))?;
    Ok(format!(
        "{} ({} equation): convergence order {:.4}; report {}",
        cert.component,
        cert.equation,
        cert.order,
        path.display()
    ))
}

/// Reads a general model from a fit report (`model` key) or a bare
/// parameter document.
fn load_model(path: &Path) -> CliResult<WaveParams> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: invalid JSON ({e})", path.display())))?;
    let model = value.get("model").cloned().unwrap_or(value);
    serde_json::from_value(model)
        .map_err(|e| CliError::Validation(format!("{}: not a model description ({e})", path.display())))
}

pub fn greeks_csv(g: &NlsGreeks) -> String {
    let mut out = String::from("quantity,re,im,modulus\n");
    for (name, z) in g.rows() {
        out.push_str(&format!("{name},{:?},{:?},{:?}\n", z.re, z.im, z.norm()));
    }
    out
}

pub fn run_greeks(args: &GreeksArgs) -> CliResult<String> {
    let (s, t) = (args.at_s, args.at_t);
    let greeks = match &args.model {
        Some(path) => {
            if args.method == Some(GreekMethod::Analytic) {
                return Err(CliError::Usage("analytic Greeks exist only for the shock component".into()));
            }
            greeks_fd(&load_model(path)?, s, t)?
        }
        None => {
            let comp = component_from_args(args.component, &args.params)?;
            let method = args.method.unwrap_or(if args.component == ComponentKind::Shock {
                GreekMethod::Analytic
            } else {
                GreekMethod::Fd
            });
            match (method, &comp) {
                (GreekMethod::Analytic, Component::Shock(p)) => shock_greeks_analytic(p, s, t)?,
                (GreekMethod::Analytic, _) => {
                    return Err(CliError::Usage(format!(
                        "analytic Greeks exist only for the shock component, not {}",
                        args.component
                    )))
                }
                (GreekMethod::Fd, _) => greeks_fd(&comp, s, t)?,
            }
        }
    };
    for q in &greeks.one_sided {
        eprintln!("warning: {q} used a one-sided difference at the edge of the validity domain");
    }
    let path = out_path(&args.common.out_dir, &args.output);
    write_file(&path, &greeks_csv(&greeks))?;
    Ok(format!("|delta| = {:.6e} at (s={s}, t={t}); wrote {}", greeks.delta.norm(), path.display()))
}
