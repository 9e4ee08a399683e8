//! Browser bindings. Every export returns a JSON string.

use quasispec::pattern::frequency_table;
use quasispec::spectra::{eigh_sym, ids_run, sup_distance, AnalyticCdf, Cdf, RunOptions};
use quasispec::{rational, GraphDescriptor, InfiniteGraph, PatternOperator};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

type Result<T> = std::result::Result<T, quasispec::Error>;

fn export(v: Result<Value>) -> std::result::Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

/// Finite-section staircase of the ℤ Laplacian at `level` against the
/// analytic density of states, sampled at `samples` points of `[-0.5, 4.5]`.
#[wasm_bindgen]
pub fn ids_curve(level: u32, samples: u32) -> std::result::Result<String, JsError> {
    export(ids_curve_value(level, samples))
}

pub fn ids_curve_value(level: u32, samples: u32) -> Result<Value> {
    let lap = PatternOperator::laplacian(&InfiniteGraph::lattice(1)?);
    let reference = AnalyticCdf::z_laplacian();
    let est = ids_run(&lap, &[level], Some(&reference), &RunOptions::default())?;
    let stair = &est.levels[0].staircase;
    let (lo, hi) = (-0.5, 4.5);
    let samples = samples.max(2);
    let xs: Vec<f64> = (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect();
    Ok(json!({
        "level": level,
        "size": stair.size,
        "x": xs,
        "staircase": xs.iter().map(|&x| stair.value(x)).collect::<Vec<_>>(),
        "reference": xs.iter().map(|&x| reference.value(x)).collect::<Vec<_>>(),
        "sup_distance": sup_distance(stair, &reference, lo, hi),
    }))
}

/// Radius-`radius` pattern frequencies in the window of `level`. The graph
/// is given as a descriptor in JSON, e.g. `{"generator":"pendant_chain","params":{"k":2}}`.
#[wasm_bindgen]
pub fn pattern_frequencies(descriptor: &str, radius: u32, level: u32) -> std::result::Result<String, JsError> {
    export(pattern_frequencies_value(descriptor, radius, level))
}

pub fn pattern_frequencies_value(descriptor: &str, radius: u32, level: u32) -> Result<Value> {
    let desc: GraphDescriptor = serde_json::from_str(descriptor).map_err(|e| quasispec::Error::Parse(e.to_string()))?;
    let g = InfiniteGraph::from_descriptor(&desc)?;
    let table = frequency_table(&g, &[level], radius)?;
    let mut rows: Vec<(String, String, f64)> = table.levels[0]
        .counts
        .keys()
        .map(|c| {
            let f = table.frequency(0, c);
            (c.to_string(), rational::to_string(&f), rational::to_f64(&f))
        })
        .collect();
    rows.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    Ok(json!({
        "size": table.levels[0].size,
        "patterns": rows.iter().map(|(code, exact, f)| json!({
            "code": code,
            "frequency": exact,
            "value": f,
        })).collect::<Vec<_>>(),
    }))
}

/// A window of the decorated lattice with its diagonals, and the lowest
/// eigenvector of the graph Laplacian restricted to it.
#[wasm_bindgen]
pub fn decorated_ground_state(p_num: u32, p_den: u32, seed: u64, level: u32) -> std::result::Result<String, JsError> {
    export(decorated_ground_state_value(p_num, p_den, seed, level))
}

pub fn decorated_ground_state_value(p_num: u32, p_den: u32, seed: u64, level: u32) -> Result<Value> {
    let g = InfiniteGraph::decorated_lattice(p_num as u64, p_den as u64, seed)?;
    let q = g.folner_window(level);
    let section = quasispec::finite_section(&PatternOperator::laplacian(&g), &q)?;
    let (values, vectors) = eigh_sym(&section.to_float_matrix())?;
    let coords: Vec<[i32; 2]> = q.vertices().iter().map(|v| [v.coords()[0], v.coords()[1]]).collect();
    let mut edges = Vec::new();
    for (i, &v) in q.vertices().iter().enumerate() {
        for w in g.neighbors(v) {
            if let Some(j) = q.index_of(w) {
                if i < j {
                    edges.push([i, j]);
                }
            }
        }
    }
    Ok(json!({
        "level": level,
        "vertices": coords,
        "edges": edges,
        "energy": values[0],
        "amplitudes": vectors[0],
    }))
}
