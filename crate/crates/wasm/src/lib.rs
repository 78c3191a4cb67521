//! Three operations for the static page in `www/`. Every array crosses the
//! boundary flat, row after row, as a `Float64Array`.

use gdnls_core::negative_direction::{beta_scan, build_psi, radius_sweep, CutoffSpec, NegativeDirection};
use gdnls_core::profile::{matched_grid, profile_value, varphi};
use gdnls_core::{Grid, ProfileKind, QuadratureSpec, WaveParams};
use wasm_bindgen::prelude::*;

fn params(sigma: f64, c: f64) -> Result<WaveParams, String> {
    WaveParams::new(sigma, c).map_err(|e| e.to_string())
}

/// Rows `x, ϕ(x), Re φ(x), Im φ(x)` on `n` nodes of `[−L, L)`.
#[wasm_bindgen]
pub fn profile_curves(sigma: f64, c: f64, half_width: f64, n: usize) -> Result<Vec<f64>, String> {
    let p = params(sigma, c)?;
    let g = Grid::new(half_width, n).map_err(|e| e.to_string())?;
    Ok(g.nodes()
        .flat_map(|x| {
            let v = profile_value(&p, ProfileKind::Phi, x);
            [x, varphi(&p, x), v.re, v.im]
        })
        .collect())
}

/// Rows `R, μ, ν, ⟨S''ψ,ψ⟩` for each radius.
#[wasm_bindgen]
pub fn radius_table(sigma: f64, c: f64, radii: Vec<f64>) -> Result<Vec<f64>, String> {
    let p = params(sigma, c)?;
    let rows = radius_sweep(&p, &radii, &QuadratureSpec::adaptive()).map_err(|e| e.to_string())?;
    Ok(rows.iter().flat_map(|r| [r.radius, r.mu, r.nu, r.quad_form]).collect())
}

fn direction(p: &WaveParams, radius: f64) -> Result<NegativeDirection, String> {
    let spec = CutoffSpec::new(radius).map_err(|e| e.to_string())?;
    // the whole-line scan never reads the samples, a coarse box suffices
    let g = matched_grid(p, 5.0 * radius, 1024).map_err(|e| e.to_string())?;
    build_psi(p, &spec, &g, &QuadratureSpec::adaptive()).map_err(|e| e.to_string())
}

/// Rows `β, S_c(φ+βψ) − S_c(φ), β²⟨S''ψ,ψ⟩/2` for each `β`.
#[wasm_bindgen]
pub fn action_scan(sigma: f64, c: f64, radius: f64, betas: Vec<f64>) -> Result<Vec<f64>, String> {
    let p = params(sigma, c)?;
    let nd = direction(&p, radius)?;
    let scan = beta_scan(&nd, &betas, &QuadratureSpec::adaptive()).map_err(|e| e.to_string())?;
    Ok(scan
        .into_iter()
        .flat_map(|(b, gap)| [b, gap, 0.5 * b * b * nd.quad_form_value])
        .collect())
}
