//! Browser bindings. Each export takes and returns JSON text so the page
//! needs no glue beyond `JSON.parse`.

use metastable::hierarchy::{full_hierarchy, HierarchyOptions};
use metastable::io::parse_landscape;
use metastable::kawasaki::{ground_state, hamiltonian, interface, kawasaki_neighbors, KawasakiParams, LatticeConfig};
use metastable::plateaux::validate_cycle;
use metastable::report::HierarchyReport;
use metastable::verify::{exit_distribution_exact, exit_distribution_limit};
use metastable::StateSet;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Full hierarchy report of a landscape given as JSON.
pub fn analyze(landscape: &str) -> Result<String, String> {
    let l = parse_landscape(landscape).map_err(text)?;
    let h = full_hierarchy(&l, &HierarchyOptions::default()).map_err(text)?;
    Ok(HierarchyReport::new(&h, l.n_states()).to_json())
}

/// Energy, interface and neighbors of a lattice configuration given by its
/// hex label; an empty label selects the ground state σ⁰.
pub fn lattice(k: usize, l: usize, n0: usize, label: &str) -> Result<String, String> {
    let p = KawasakiParams::new(k, l, n0).map_err(text)?;
    let c = if label.trim().is_empty() {
        ground_state(&p, 0).map_err(text)?
    } else {
        LatticeConfig::from_label(&p, label.trim()).map_err(text)?
    };
    let describe = |c: &LatticeConfig| -> Result<serde_json::Value, String> {
        Ok(json!({
            "label": c.label(&p),
            "energy": hamiltonian(&p, c).map_err(text)?.0,
            "interface": interface(&p, c),
            "grid": c.render(&p),
        }))
    };
    let neighbors = kawasaki_neighbors(&p, &c)
        .iter()
        .map(&describe)
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = describe(&c)?;
    out["h0"] = json!(p.h0().0);
    out["neighbors"] = json!(neighbors);
    Ok(out.to_string())
}

/// Limit and finite-β exit laws of the cycle listed by comma-separated
/// labels.
pub fn exit_law(landscape: &str, cycle: &str, beta: f64) -> Result<String, String> {
    let l = parse_landscape(landscape).map_err(text)?;
    let mut ids = Vec::new();
    for token in cycle.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let id = l
            .labels()
            .iter()
            .position(|s| s == token)
            .ok_or_else(|| format!("unknown state '{token}'"))?;
        ids.push(id);
    }
    let c = validate_cycle(&l, &StateSet::from_indices(ids)).map_err(text)?;
    let limit = exit_distribution_limit(&l, &c).map_err(text)?;
    let exact = exit_distribution_exact(&l, &c, beta, None).map_err(text)?;
    let rows: Vec<_> = exact
        .probabilities
        .iter()
        .map(|&(s, p)| {
            let lim = limit.iter().find(|(t, _)| *t == s).map(|(_, q)| q.to_string());
            json!({"state": l.label(s), "probability": p, "limit": lim.unwrap_or_else(|| "0".into())})
        })
        .collect();
    Ok(json!({"depth": c.depth, "beta": beta, "exits": rows}).to_string())
}

#[wasm_bindgen(js_name = analyze)]
pub fn analyze_js(landscape: &str) -> Result<String, JsValue> {
    analyze(landscape).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = lattice)]
pub fn lattice_js(k: usize, l: usize, n0: usize, label: &str) -> Result<String, JsValue> {
    lattice(k, l, n0, label).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = exitLaw)]
pub fn exit_law_js(landscape: &str, cycle: &str, beta: f64) -> Result<String, JsValue> {
    exit_law(landscape, cycle, beta).map_err(|e| JsValue::from_str(&e))
}
