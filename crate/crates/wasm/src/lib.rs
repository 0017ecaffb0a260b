//! Browser bindings: phase-space heatmaps, the ordering gap and pointer
//! statistics. The plain functions are what the exports wrap; they run
//! natively too.

use num_complex::Complex64;
use qphase::measurement::{pointer_probabilities, MeasurementModel};
use qphase::ordering::ordering_discrepancy;
use qphase::phasespace::{q_grid, wigner_grid};
use qphase::preparation::StateRecipe;
use qphase::{DensityOperator, Error, Measure, ModeSpace, PhaseGrid, PhasePolynomial, Result};
use wasm_bindgen::prelude::*;

/// Largest grid the page may request, per axis.
pub const MAX_SAMPLES: usize = 301;

fn prepare(state: &str, dim: usize) -> Result<DensityOperator> {
    let recipe = StateRecipe::parse(state)?;
    if recipe.mode_count().is_some_and(|m| m != 1) {
        return Err(Error::Unsupported("the demo shows single-mode states".into()));
    }
    recipe.density(&ModeSpace::single(dim)?, 0)
}

/// Row-major grid values (`Re alpha` rows, `Im alpha` columns); Q per
/// `d^2 alpha`, Wigner per `dq dp`.
pub fn distribution_values(state: &str, kind: &str, dim: usize, radius: f64, samples: usize) -> Result<Vec<f64>> {
    if samples > MAX_SAMPLES {
        return Err(Error::Domain(format!("at most {MAX_SAMPLES} samples per axis")));
    }
    let rho = prepare(state, dim)?;
    let dist = match kind {
        "q" => q_grid(&rho, &PhaseGrid::square(rho.space(), radius, samples, Measure::Alpha)?)?,
        "wigner" => wigner_grid(&rho, &PhaseGrid::square(rho.space(), radius, samples, Measure::Qp)?)?,
        other => return Err(Error::Domain(format!("unknown distribution '{other}'"))),
    };
    Ok(dist.values().to_vec())
}

/// Weyl trace minus Q average of a polynomial in `q` and `p`.
pub fn ordering_gap_value(state: &str, poly: &str, dim: usize) -> Result<f64> {
    let f = PhasePolynomial::parse(poly)?;
    ordering_discrepancy(&f, &prepare(state, dim)?)
}

/// Pointer probabilities for amplitudes `re[j] + i im[j]` on a polygon of
/// regions.
pub fn pointer_statistics(re: &[f64], im: &[f64], separation: f64, radius: f64) -> Result<Vec<f64>> {
    if re.len() != im.len() {
        return Err(Error::Dimension {
            expected: re.len(),
            got: im.len(),
        });
    }
    let mut amps: Vec<Complex64> = re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect();
    let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidState("all amplitudes are zero".into()));
    }
    for c in &mut amps {
        *c /= norm;
    }
    pointer_probabilities(&MeasurementModel::polygon(&amps, separation, radius)?)
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn distribution(state: &str, kind: &str, dim: usize, radius: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    distribution_values(state, kind, dim, radius, samples).map_err(js)
}

#[wasm_bindgen(js_name = orderingGap)]
pub fn ordering_gap(state: &str, poly: &str, dim: usize) -> Result<f64, JsError> {
    ordering_gap_value(state, poly, dim).map_err(js)
}

#[wasm_bindgen(js_name = pointerProbabilities)]
pub fn pointer_probabilities_js(re: &[f64], im: &[f64], separation: f64, radius: f64) -> Result<Vec<f64>, JsError> {
    pointer_statistics(re, im, separation, radius).map_err(js)
}
