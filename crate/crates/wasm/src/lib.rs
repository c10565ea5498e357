//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! The exported functions are thin wrappers over [`demo`], converting
//! errors to JavaScript exceptions.

// Guards like `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: bbscore_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct BridgePaths {
    inner: demo::Paths,
}

#[wasm_bindgen]
impl BridgePaths {
    pub fn coords(&self) -> Vec<f64> {
        self.inner.coords.clone()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.inner.scores.clone()
    }
}

#[wasm_bindgen(js_name = bridgePaths)]
pub fn bridge_paths(count: u32, horizon: u32, scale: f64, rho: f64, seed: u32) -> Result<BridgePaths, JsError> {
    demo::bridge_paths(count as usize, horizon as usize, scale, rho, seed.into())
        .map(|inner| BridgePaths { inner })
        .map_err(js)
}

#[wasm_bindgen]
pub struct ScoreHistogram {
    inner: demo::Histogram,
}

#[wasm_bindgen]
impl ScoreHistogram {
    #[wasm_bindgen(getter)]
    pub fn hi(&self) -> f64 {
        self.inner.hi
    }

    #[wasm_bindgen(getter)]
    pub fn mean(&self) -> f64 {
        self.inner.mean
    }

    pub fn density(&self) -> Vec<f64> {
        self.inner.density.clone()
    }

    pub fn reference(&self) -> Vec<f64> {
        self.inner.reference.clone()
    }
}

#[wasm_bindgen(js_name = scoreHistogram)]
pub fn score_histogram(n: u32, horizon: u32, inflation: f64, bins: u32, hi: f64, seed: u32) -> Result<ScoreHistogram, JsError> {
    demo::score_histogram(n as usize, horizon as usize, inflation, bins as usize, hi, seed.into())
        .map(|inner| ScoreHistogram { inner })
        .map_err(js)
}

#[wasm_bindgen(js_name = discriminationCurve)]
pub fn discrimination_curve(
    n: u32,
    horizon: u32,
    rho: f64,
    copies: u32,
    block_sizes: &[u32],
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    let sizes: Vec<usize> = block_sizes.iter().map(|&b| b as usize).collect();
    demo::discrimination_curve(n as usize, horizon as usize, rho, copies as usize, &sizes, seed.into()).map_err(js)
}
