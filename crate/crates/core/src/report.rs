//! JSON report of a full hierarchy, in the ids of the input landscape.

use serde::Serialize;

use crate::hierarchy::{Hierarchy, Level, Role};

#[derive(Clone, Debug, Serialize)]
pub struct RateEntry {
    pub from: usize,
    pub to: usize,
    /// `"p/q"` for exact chains, scientific notation otherwise.
    pub rate: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub h: usize,
    pub gamma_star: i64,
    pub nu: usize,
    /// Member state ids of each plateau; the position is the plateau index
    /// used by `components`, `transient` and `rates`.
    pub plateaux: Vec<Vec<u32>>,
    pub energies: Vec<i64>,
    pub depths: Vec<i64>,
    pub valley_sizes: Vec<usize>,
    pub sharp_cycles: usize,
    pub components: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
    pub roles: Vec<Role>,
    pub exact: bool,
    pub rates: Vec<RateEntry>,
    pub rate_sum_gap: f64,
    pub gamma_tilde: Vec<i64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HierarchyReport {
    pub tool: String,
    pub version: String,
    pub n_states: usize,
    pub n_restricted: usize,
    pub phi_bar: i64,
    pub ground_states: Vec<u32>,
    pub terminal: usize,
    pub gamma_stars: Vec<i64>,
    pub nus: Vec<usize>,
    pub levels: Vec<LevelReport>,
}

impl HierarchyReport {
    /// `n_states` is the size of the landscape the hierarchy was built from.
    pub fn new(h: &Hierarchy, n_states: usize) -> Self {
        let ground = h.to_original(&h.landscape().ground_states());
        HierarchyReport {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            n_states,
            n_restricted: h.landscape().n_states(),
            phi_bar: h.restriction.phi_bar.0,
            ground_states: ground.iter().map(|s| s.0).collect(),
            terminal: h.terminal(),
            gamma_stars: h.gamma_stars(),
            nus: h.nus(),
            levels: h
                .levels
                .iter()
                .zip(&h.diagnostics)
                .map(|(lv, d)| level_report(h, lv, d.roles.clone(), d.rate_sum_gap))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

fn level_report(h: &Hierarchy, lv: &Level, roles: Vec<Role>, rate_sum_gap: f64) -> LevelReport {
    LevelReport {
        h: lv.h,
        gamma_star: lv.gamma_star,
        nu: lv.nu(),
        plateaux: lv
            .plateaux
            .iter()
            .map(|p| h.to_original(p).iter().map(|s| s.0).collect())
            .collect(),
        energies: lv.energies.iter().map(|e| e.0).collect(),
        depths: lv.depths.clone(),
        valley_sizes: lv.valleys.iter().map(|v| v.states.len()).collect(),
        sharp_cycles: lv.sharp.len(),
        components: lv.classification.components.clone(),
        transient: lv.classification.transient.clone(),
        roles,
        exact: lv.limit.exact,
        rates: lv
            .limit
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter().map(move |(j, r)| RateEntry { from: i, to: *j, rate: r.to_string() })
            })
            .collect(),
        rate_sum_gap,
        gamma_tilde: lv.gamma_tilde.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{full_hierarchy, HierarchyOptions};
    use crate::landscape::build_landscape;

    #[test]
    fn fixture_report() {
        let e = [0, 3, 1, 2, 1, 3, 0];
        let states = e.iter().enumerate().map(|(i, &x)| (format!("s{i}"), x)).collect();
        let edges: Vec<_> = (0..6).map(|i| (i, i + 1)).collect();
        let l = build_landscape(states, &edges).unwrap();
        let h = full_hierarchy(&l, &HierarchyOptions::default()).unwrap();
        let r = HierarchyReport::new(&h, l.n_states());
        assert_eq!(r.gamma_stars, vec![1, 2, 3]);
        assert_eq!(r.levels[1].plateaux, vec![vec![0], vec![2, 4], vec![6]]);
        let json = r.to_json();
        assert!(json.contains("\"rate\": \"1/4\""));
        assert_eq!(json, HierarchyReport::new(&h, l.n_states()).to_json());
    }
}
