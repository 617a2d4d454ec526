//! Browser bindings: p-value plot, volcano plot and null-simulation grid.
//!
//! Each exported function returns a JSON string `{ "svg": ..., ... }`. The
//! plain-Rust functions underneath return `Result<String, String>` so they
//! can be tested without a JavaScript host.

use metaudit_core::nullsim::{self, SimulationConfig};
use metaudit_core::pplot::{self, Thresholds};
use metaudit_core::render::{render_svg, PlotSpec, SimulationSection};
use metaudit_core::{derive_tests, parse_table, volcano, Scale, TestedStudy};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const SAMPLES: [(&str, &str, f64); 2] = [
    ("smoking", include_str!("../../../data/gori_luik_ets.csv"), 0.90),
    ("apathy", include_str!("../../../data/van_dalen_apathy.tsv"), 0.95),
];

/// Reps above this would make the page unresponsive.
const MAX_REPS: usize = 20_000;

fn load(text: &str, confidence_level: f64) -> Result<Vec<TestedStudy>, String> {
    let table = parse_table(text.as_bytes(), confidence_level, 1.0, "input").map_err(|e| e.to_string())?;
    derive_tests(&table, Scale::Linear).map_err(|e| e.to_string())
}

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Text of a bundled sample table, and the confidence level it reports.
pub fn sample(name: &str) -> Result<(String, f64), String> {
    SAMPLES
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, text, cl)| (text.to_string(), *cl))
        .ok_or_else(|| format!("unknown sample `{name}`"))
}

#[derive(Serialize)]
struct PlotResult<'a, T: Serialize> {
    svg: String,
    #[serde(flatten)]
    data: &'a T,
}

pub fn pvalue_plot_json(text: &str, confidence_level: f64) -> Result<String, String> {
    let tests = load(text, confidence_level)?;
    let d = pplot::diagnose(&tests, &Thresholds::default()).map_err(|e| e.to_string())?;
    let svg = render_svg(&PlotSpec::pvalue(&d, "P-value plot")).map_err(|e| e.to_string())?;
    to_json(&PlotResult { svg, data: &d })
}

pub fn volcano_json(text: &str, confidence_level: f64, alpha: f64, m_tests: usize) -> Result<String, String> {
    let tests = load(text, confidence_level)?;
    let m = if m_tests == 0 { tests.len() } else { m_tests };
    let v = volcano::build_volcano(&tests, 1.0, alpha, m).map_err(|e| e.to_string())?;
    let svg = render_svg(&PlotSpec::volcano(&v, "Volcano plot")).map_err(|e| e.to_string())?;
    to_json(&PlotResult { svg, data: &v })
}

pub fn simulation_json(n: usize, reps: usize, seed: u64, panels: usize) -> Result<String, String> {
    if reps > MAX_REPS {
        return Err(format!("at most {MAX_REPS} replications in the browser"));
    }
    let sim = nullsim::simulate(&SimulationConfig {
        n_per_study: n,
        replications: reps,
        seed,
    })
    .map_err(|e| e.to_string())?;
    let th = Thresholds::default();
    let section = SimulationSection::new(&sim, None, (n >= 4).then_some(&th)).map_err(|e| e.to_string())?;
    let svg = render_svg(&PlotSpec::simulation_grid(&sim, panels)).map_err(|e| e.to_string())?;
    to_json(&PlotResult { svg, data: &section })
}

#[wasm_bindgen(js_name = sampleTable)]
pub fn sample_table(name: &str) -> Result<String, JsValue> {
    sample(name).map(|(text, _)| text).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = sampleConfidence)]
pub fn sample_confidence(name: &str) -> Result<f64, JsValue> {
    sample(name).map(|(_, cl)| cl).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = pvaluePlot)]
pub fn pvalue_plot(text: &str, confidence_level: f64) -> Result<String, JsValue> {
    pvalue_plot_json(text, confidence_level).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = volcanoPlot)]
pub fn volcano_plot(text: &str, confidence_level: f64, alpha: f64, m_tests: u32) -> Result<String, JsValue> {
    volcano_json(text, confidence_level, alpha, m_tests as usize).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = simulateGrid)]
pub fn simulate_grid(n: u32, reps: u32, seed: u32, panels: u32) -> Result<String, JsValue> {
    simulation_json(n as usize, reps as usize, u64::from(seed), panels as usize).map_err(|e| JsValue::from_str(&e))
}
