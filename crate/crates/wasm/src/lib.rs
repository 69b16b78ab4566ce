//! Browser bindings for the heat-rod demo page in `www/`.
//!
//! Matrices cross the boundary as row-major `Float64Array`s.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js_err(e: gckf::GckfError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Prior(demo::PriorView);

#[wasm_bindgen]
impl Prior {
    #[wasm_bindgen(getter)]
    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn prior(&self) -> Vec<f64> {
        self.0.prior.clone()
    }

    pub fn decorrelated(&self) -> Vec<f64> {
        self.0.decorrelated.clone()
    }

    pub fn blocks(&self) -> Vec<u32> {
        self.0.blocks.iter().map(|&b| b as u32).collect()
    }
}

/// Normalised initial covariance and its conservative block-diagonal bound.
#[wasm_bindgen(js_name = priorView)]
pub fn prior_view(nos: usize, noss: usize, scale: f64, phi: f64, psi: f64) -> Result<Prior, JsError> {
    demo::prior_view(nos, noss, scale, phi, psi).map(Prior).map_err(js_err)
}

#[wasm_bindgen]
pub struct Run(demo::CorrelationRun);

#[wasm_bindgen]
impl Run {
    #[wasm_bindgen(getter)]
    pub fn n(&self) -> usize {
        self.0.n
    }

    #[wasm_bindgen(getter)]
    pub fn label(&self) -> String {
        self.0.label.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn distance(&self) -> f64 {
        self.0.distance
    }

    pub fn full(&self) -> Vec<f64> {
        self.0.full.clone()
    }

    pub fn gckf(&self) -> Vec<f64> {
        self.0.gckf.clone()
    }

    #[wasm_bindgen(js_name = stdPercent)]
    pub fn std_percent(&self) -> Vec<f64> {
        self.0.std_percent.clone()
    }

    /// Global-update indices of [`Run::series_values`].
    #[wasm_bindgen(js_name = seriesGu)]
    pub fn series_gu(&self) -> Vec<u32> {
        self.0.distance_series.iter().map(|(g, _)| *g as u32).collect()
    }

    #[wasm_bindgen(js_name = seriesValues)]
    pub fn series_values(&self) -> Vec<f64> {
        self.0.distance_series.iter().map(|(_, d)| *d).collect()
    }
}

/// Full filter and one compressed variant in pure prediction on the heat rod.
#[wasm_bindgen(js_name = correlationRun)]
pub fn correlation_run(fast: bool, archetype: &str, arch: &str, gus: usize) -> Result<Run, JsError> {
    demo::correlation_run(fast, archetype, arch, gus).map(Run).map_err(js_err)
}
