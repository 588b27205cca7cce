//! Surface CSV files: `s,t,price`, one row per node, t-major then s
//! ascending. Numbers are written in the shortest form (scientific notation for very large or small magnitudes) that parses back to
//! the identical `f64`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use nlswave::blackscholes::{PriceSurface, SurfaceSource};
use nlswave::numerics::Grid1D;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SURFACE_HEADER: &str = "s,t,price";
pub const OVERLAY_HEADER: &str = "s,t,price,model";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn surface_csv(surface: &PriceSurface) -> String {
    let mut out = String::with_capacity(32 * surface.len());
    out.push_str(SURFACE_HEADER);
    out.push('\n');
    for (s, t, p) in surface.nodes() {
        writeln!(out, "{s:?},{t:?},{p:?}").expect("writing to a String");
    }
    out
}

pub fn overlay_csv(surface: &PriceSurface, model: &[f64]) -> String {
    let mut out = String::new();
    out.push_str(OVERLAY_HEADER);
    out.push('\n');
    for ((s, t, p), m) in surface.nodes().zip(model) {
        writeln!(out, "{s:?},{t:?},{p:?},{m:?}").expect("writing to a String");
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn parse_cell(cell: &str, line: usize, column: &str) -> CliResult<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("line {line}: {column} value {cell:?} is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Validation(format!("line {line}: {column} value {cell:?} is not finite")));
    }
    Ok(v)
}

/// Sorted distinct values, checked to be evenly spaced.
fn axis(values: &BTreeSet<u64>, name: &str) -> CliResult<(Vec<f64>, Grid1D)> {
    let mut pts: Vec<f64> = values.iter().map(|b| f64::from_bits(*b)).collect();
    pts.sort_by(f64::total_cmp);
    let grid = Grid1D::from_range(pts[0], pts[pts.len() - 1], pts.len())?;
    let tol = 1e-9 * (pts[pts.len() - 1] - pts[0]).abs().max(pts[0].abs()).max(1.0);
    if let Some(i) = (0..pts.len()).find(|&i| (grid.point(i) - pts[i]).abs() > tol) {
        return Err(CliError::Validation(format!(
            "{name} values are not evenly spaced: {name}[{i}] = {} but a uniform grid would put {}",
            pts[i],
            grid.point(i)
        )));
    }
    Ok((pts, grid))
}

/// Parses a surface CSV. Row order does not matter, but the rows must cover
/// a complete, evenly spaced `(s, t)` grid exactly once.
pub fn parse_surface_csv(text: &str, source: SurfaceSource) -> CliResult<PriceSurface> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let header = lines.find(|(_, l)| !l.trim().is_empty());
    match header {
        Some((_, h)) if h.split(',').map(str::trim).eq(SURFACE_HEADER.split(',')) => {}
        Some((n, h)) => {
            return Err(CliError::Validation(format!(
                "line {n}: expected header {SURFACE_HEADER:?}, found {h:?}"
            )))
        }
        None => return Err(CliError::Validation("empty surface file".into())),
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(CliError::Validation(format!(
                "line {n}: expected 3 columns, found {}",
                cells.len()
            )));
        }
        let s = parse_cell(cells[0], n, "s")?;
        let t = parse_cell(cells[1], n, "t")?;
        let p = parse_cell(cells[2], n, "price")?;
        if p < 0.0 {
            return Err(CliError::Validation(format!("line {n}: negative price {p}")));
        }
        rows.push((n, s, t, p));
    }
    if rows.is_empty() {
        return Err(CliError::Validation("surface file has no data rows".into()));
    }
    // +0.0 and -0.0 are the same coordinate
    let key = |x: f64| (x + 0.0).to_bits();
    let s_set: BTreeSet<u64> = rows.iter().map(|r| key(r.1)).collect();
    let t_set: BTreeSet<u64> = rows.iter().map(|r| key(r.2)).collect();
    let (s_pts, s_grid) = axis(&s_set, "s")?;
    let (t_pts, t_grid) = axis(&t_set, "t")?;
    let s_index: HashMap<u64, usize> = s_pts.iter().enumerate().map(|(i, v)| (key(*v), i)).collect();
    let t_index: HashMap<u64, usize> = t_pts.iter().enumerate().map(|(j, v)| (key(*v), j)).collect();

    let ns = s_pts.len();
    let mut prices: Vec<Option<f64>> = vec![None; ns * t_pts.len()];
    for &(n, s, t, p) in &rows {
        let idx = t_index[&key(t)] * ns + s_index[&key(s)];
        if prices[idx].replace(p).is_some() {
            return Err(CliError::Validation(format!("line {n}: duplicate node (s={s}, t={t})")));
        }
    }
    let missing: Vec<String> = prices
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_none())
        .map(|(idx, _)| format!("(s={}, t={})", s_pts[idx % ns], t_pts[idx / ns]))
        .collect();
    if !missing.is_empty() {
        const SHOWN: usize = 20;
        let more = if missing.len() > SHOWN {
            format!(" and {} more", missing.len() - SHOWN)
        } else {
            String::new()
        };
        return Err(CliError::Validation(format!(
            "incomplete grid, missing {} node(s): {}{more}",
            missing.len(),
            missing[..missing.len().min(SHOWN)].join(", ")
        )));
    }
    let prices = prices.into_iter().map(|p| p.expect("checked complete")).collect();
    Ok(PriceSurface::new(s_grid, t_grid, prices, source)?)
}

/// Reads a surface CSV from disk; the source records the path and the
/// SHA-256 of the file contents.
pub fn ingest_market_csv(path: &Path) -> CliResult<PriceSurface> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: not UTF-8 ({e})", path.display())))?;
    let source = SurfaceSource::File {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    parse_surface_csv(text, source).map_err(|e| match e {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}
