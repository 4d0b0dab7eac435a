//! Seeded random landscapes for property tests.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::landscape::Landscape;

/// A connected random graph on `n_states` nodes with about
/// `avg_degree · n / 2` edges (a random spanning tree plus uniform extra
/// edges) and energies uniform in `energy_range` (inclusive).
pub fn random_landscape(seed: u64, n_states: usize, avg_degree: f64, energy_range: (i64, i64)) -> Result<Landscape> {
    if n_states < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 states, got {n_states}")));
    }
    let (lo, hi) = energy_range;
    if lo > hi {
        return Err(Error::InvalidParams(format!("empty energy range {lo}..={hi}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..n_states)
        .map(|i| (format!("r{i}"), rng.gen_range(lo..=hi)))
        .collect();
    let mut order: Vec<usize> = (0..n_states).collect();
    order.shuffle(&mut rng);
    let mut edges = BTreeSet::new();
    for k in 1..n_states {
        let parent = order[rng.gen_range(0..k)];
        let (a, b) = (order[k], parent);
        edges.insert((a.min(b), a.max(b)));
    }
    let max_edges = n_states * (n_states - 1) / 2;
    let wanted = ((avg_degree * n_states as f64 / 2.0).round() as usize).clamp(n_states - 1, max_edges);
    while edges.len() < wanted {
        let a = rng.gen_range(0..n_states);
        let b = rng.gen_range(0..n_states);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    Landscape::build(states, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{full_hierarchy, HierarchyOptions};

    #[test]
    fn connected_and_deterministic() {
        let a = random_landscape(1, 10, 3.0, (0, 5)).unwrap();
        let b = random_landscape(1, 10, 3.0, (0, 5)).unwrap();
        assert_eq!(a.n_states(), 10);
        assert_eq!(a.energies(), b.energies());
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        assert_eq!(a.n_edges(), 15);
    }

    #[test]
    fn flat_range_has_a_single_plateau() {
        let l = random_landscape(4, 8, 2.5, (3, 3)).unwrap();
        assert_eq!(
            full_hierarchy(&l, &HierarchyOptions::default()).unwrap_err(),
            Error::SingleGround
        );
    }
}
