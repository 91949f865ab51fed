//! Browser bindings for three small views of the library:
//! Möbius arithmetic on the Poincaré disk, exact chain energies against
//! the next-nearest-neighbour coupling, and hidden-state norms of a
//! randomly initialized hyperbolic RNN under the radius clamps.

use hypvmc::cells::{step, CellConfig, CellVariant, ClampMode, HiddenState};
use hypvmc::geometry::poincare;
use hypvmc::hamiltonian::HeisenbergSpec;
use hypvmc::oracle::{ed_ground_with, Method, MAX_DENSE_SITES};
use hypvmc::wavefunction::WavefunctionModel;
use wasm_bindgen::prelude::*;

/// Points on the geodesic from `x` to `y` in the unit disk, then `x ⊕ y`
/// and the midpoint `x ⊕ ½(-x ⊕ y)`.
///
/// Returns `[gx0, gy0, gx1, gy1, …, sum_x, sum_y, mid_x, mid_y]` with
/// `samples` geodesic points.
#[wasm_bindgen]
pub fn disk_geodesic(x0: f64, x1: f64, y0: f64, y1: f64, samples: usize) -> Vec<f64> {
    let inside = |p: [f64; 2]| poincare::project(&p, 1.0);
    let x = inside([x0, x1]);
    let y = inside([y0, y1]);
    let v = poincare::log_x(&x, &y, 1.0);
    let samples = samples.max(2);
    let mut out = Vec::with_capacity(2 * samples + 4);
    for k in 0..samples {
        let t = k as f64 / (samples - 1) as f64;
        let p = poincare::exp_x(&x, &[t * v[0], t * v[1]], 1.0);
        out.extend(p);
    }
    out.extend(poincare::mobius_add(&x, &y, 1.0));
    out.extend(poincare::exp_x(&x, &[0.5 * v[0], 0.5 * v[1]], 1.0));
    out
}

/// Ground energy per site of the open chain for `steps` evenly spaced
/// values of `J2` in `[j2_min, j2_max]`; `n` is capped at the dense limit.
#[wasm_bindgen]
pub fn energy_curve(n: usize, j2_min: f64, j2_max: f64, j3: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    energy_per_site(n, j2_min, j2_max, j3, steps).map_err(|e| JsError::new(&e))
}

pub fn energy_per_site(n: usize, j2_min: f64, j2_max: f64, j3: f64, steps: usize) -> Result<Vec<f64>, String> {
    let n = n.clamp(2, MAX_DENSE_SITES);
    let steps = steps.max(2);
    (0..steps)
        .map(|k| {
            let j2 = j2_min + (j2_max - j2_min) * k as f64 / (steps - 1) as f64;
            let spec = HeisenbergSpec::new(n, 1.0, j2, j3)?;
            Ok(ed_ground_with(&spec, Method::Auto)?.energy / n as f64)
        })
        .collect::<Result<_, Box<dyn std::error::Error>>>()
        .map_err(|e| e.to_string())
}

/// Norm of the hidden state along one sampled configuration of a freshly
/// initialized hyperbolic RNN, before and after the clamp.
///
/// `geometry` is `"poincare"` or `"lorentz"`; `bound` is `R_max` or
/// `L_max` (double clamp). `weight_scale` multiplies the initial weights
/// so the unclamped trajectory actually reaches the boundary. Returns
/// `[raw_1, kept_1, raw_2, kept_2, …]`.
#[wasm_bindgen]
pub fn hidden_norms(
    geometry: &str,
    bound: f64,
    hidden: usize,
    sites: usize,
    weight_scale: f64,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    norm_trajectory(geometry, bound, hidden, sites, weight_scale, seed).map_err(|e| JsError::new(&e))
}

pub fn norm_trajectory(
    geometry: &str,
    bound: f64,
    hidden: usize,
    sites: usize,
    weight_scale: f64,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let variant = match geometry {
        "poincare" => CellVariant::PoincareRnn,
        "lorentz" => CellVariant::LorentzRnn,
        other => return Err(format!("unknown geometry `{other}`")),
    };
    let mut cell = CellConfig::new(variant, hidden.clamp(1, 64));
    if variant == CellVariant::PoincareRnn {
        cell.r_max = bound;
    } else {
        cell.l_max = Some(bound);
        cell.clamp_mode = ClampMode::Double;
    }
    let sites = sites.clamp(2, 64);
    let mut model = WavefunctionModel::random(cell.clone(), sites, seed).map_err(|e| err(&e))?;
    for x in model.params.values_mut() {
        *x *= weight_scale;
    }
    let sigma = &model.sample(1, seed).map_err(|e| err(&e))?[0].config;
    let mut h = HiddenState::initial(&cell);
    let mut out = Vec::with_capacity(2 * sites);
    let mut input = None;
    for &s in sigma {
        let (next, stats) = step(&cell, &model.params, &h, input).map_err(|e| err(&e))?;
        out.push(stats.max_norm_raw);
        out.push(stats.max_norm);
        h = next;
        input = Some(s);
    }
    Ok(out)
}
