//! Stable plateaux, cycles, depths and valleys.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::landscape::{Energy, Landscape, StateId, StateSet};
use crate::merge_tree::{energy_order, UnionFind};

/// Connected equal-energy set whose whole outer boundary is strictly higher.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Plateau {
    pub states: StateSet,
    pub energy: Energy,
}

/// Connected set whose interior maximum lies strictly below its boundary
/// minimum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cycle {
    pub states: StateSet,
    pub depth: i64,
    pub bottom: StateSet,
}

/// All stable plateaux, ordered by smallest member.
pub fn stable_plateaux(l: &Landscape) -> Vec<Plateau> {
    let n = l.n_states();
    let mut uf = UnionFind::new(n);
    for (a, b) in l.edges() {
        if l.energy(a) == l.energy(b) {
            uf.union(a.index(), b.index());
        }
    }
    let mut stable = vec![true; n];
    for v in 0..n {
        let e = l.energy_of(v);
        if l.neighbors_of(v).iter().any(|&w| l.energy(w) < e) {
            let r = uf.find(v);
            stable[r] = false;
        }
    }
    let mut members: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for v in 0..n {
        let r = uf.find(v);
        if stable[r] {
            members[r].push(StateId::from(v));
        }
    }
    let mut out: Vec<Plateau> = members
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| Plateau {
            energy: l.energy(m[0]),
            states: StateSet::from_ids(m),
        })
        .collect();
    out.sort_by_key(|p| p.states.first());
    out
}

/// Checks the cycle property and computes depth and bottom.
pub fn validate_cycle(l: &Landscape, c: &StateSet) -> Result<Cycle> {
    let (boundary, _) = l.boundary_sets(c)?;
    if !l.is_connected(c) {
        return Err(Error::NotConnected);
    }
    let interior_max = c.iter().map(|s| l.energy(s)).max().expect("nonempty");
    let boundary_min = boundary.iter().map(|s| l.energy(s)).min().expect("connected graph");
    if interior_max >= boundary_min {
        return Err(Error::NotACycle {
            interior_max: interior_max.0,
            boundary_min: boundary_min.0,
        });
    }
    let bottom = l.bottom(c)?;
    let depth = boundary_min - l.energy(bottom.first().expect("nonempty"));
    Ok(Cycle {
        states: c.clone(),
        depth,
        bottom,
    })
}

/// States reachable from `p` strictly below `ℍ(p) + gamma`, validated as a
/// cycle with bottom `p` and depth `gamma`.
pub fn valley(l: &Landscape, p: &StateSet, gamma: i64) -> Result<Cycle> {
    l.check_set(p)?;
    let base = l.energy(p.first().expect("nonempty"));
    let states = l.allowed_neighborhood(p, &StateSet::new(), base + gamma, true)?;
    let cycle = validate_cycle(l, &states)?;
    if cycle.depth != gamma || !p.is_subset(&cycle.bottom) {
        return Err(Error::InvariantViolation {
            level: 0,
            detail: format!(
                "valley of {} has depth {} and bottom of size {}, expected depth {gamma}",
                p.first().expect("nonempty"),
                cycle.depth,
                cycle.bottom.len()
            ),
        });
    }
    Ok(cycle)
}

/// Depth of each group: Φ(group, union of the others) − ℍ(group).
///
/// Groups must be disjoint and each of constant energy. Computed in one
/// energy sweep: a component labelled by a single group records that group's
/// depth when it first joins a component holding another group.
pub fn group_depths(l: &Landscape, groups: &[StateSet]) -> Result<Vec<i64>> {
    if groups.len() < 2 {
        return Err(Error::SingleGround);
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Label {
        Free,
        One(usize),
        Many,
    }
    let n = l.n_states();
    let mut label = vec![Label::Free; n];
    let mut base = Vec::with_capacity(groups.len());
    for (i, g) in groups.iter().enumerate() {
        l.check_set(g)?;
        for s in g.iter() {
            if label[s.index()] != Label::Free {
                return Err(Error::Overlap);
            }
            label[s.index()] = Label::One(i);
        }
        base.push(l.energy(g.first().expect("nonempty")));
    }
    let mut depth: Vec<Option<i64>> = vec![None; groups.len()];
    let mut uf = UnionFind::new(n);
    let mut present = vec![false; n];
    for v in energy_order(l) {
        present[v] = true;
        let e = l.energy_of(v);
        for &w in l.neighbors_of(v) {
            if !present[w.index()] {
                continue;
            }
            let (rv, rw) = (uf.find(v), uf.find(w.index()));
            if rv == rw {
                continue;
            }
            let (lv, lw) = (label[rv], label[rw]);
            let mut record = |x: Label| {
                if let Label::One(i) = x {
                    depth[i].get_or_insert(e - base[i]);
                }
            };
            let merged = match (lv, lw) {
                (Label::Free, x) | (x, Label::Free) => x,
                (Label::One(i), Label::One(j)) if i == j => lv,
                _ => {
                    record(lv);
                    record(lw);
                    Label::Many
                }
            };
            let root = uf.union(rv, rw).expect("distinct roots");
            label[root] = merged;
        }
    }
    Ok(depth
        .into_iter()
        .map(|d| d.expect("connected landscape joins every group"))
        .collect())
}

/// Initial depths of the stable plateaux and their minimum.
pub fn initial_depths(l: &Landscape, plateaux: &[Plateau]) -> Result<(Vec<i64>, i64)> {
    let groups: Vec<StateSet> = plateaux.iter().map(|p| p.states.clone()).collect();
    let depths = group_depths(l, &groups)?;
    let min = *depths.iter().min().expect("at least two plateaux");
    Ok((depths, min))
}

/// For each state, the index of the plateau containing it.
pub fn plateau_index(n_states: usize, plateaux: &[Plateau]) -> Vec<Option<usize>> {
    let mut idx = vec![None; n_states];
    for (i, p) in plateaux.iter().enumerate() {
        for s in p.states.iter() {
            idx[s.index()] = Some(i);
        }
    }
    idx
}

/// Indices of the plateaux whose union is `set`, or `None` if `set` is not a
/// union of plateaux.
pub fn decompose_into_plateaux(
    set: &StateSet,
    plateaux: &[Plateau],
    index: &[Option<usize>],
) -> Option<Vec<usize>> {
    let mut used: Vec<usize> = Vec::new();
    for s in set.iter() {
        used.push(index[s.index()]?);
    }
    used.sort_unstable();
    used.dedup();
    let covered: usize = used.iter().map(|&i| plateaux[i].states.len()).sum();
    (covered == set.len()).then_some(used)
}

/// Γ̃(V) = max over η ∈ V∖{η₀} of Φ(η, η₀) − ℍ(η), with η₀ the first bottom
/// state; 0 for singletons.
pub fn gamma_tilde(l: &Landscape, cycle: &Cycle) -> i64 {
    let inside = cycle.states.mask(l.n_states());
    let eta0 = cycle.bottom.first().expect("nonempty");
    // paths leaving a cycle cross its boundary, which is above everything
    // inside, so the search can stay within the cycle
    let mut best = vec![Energy(i64::MAX); l.n_states()];
    best[eta0.index()] = l.energy(eta0);
    let mut heap = BinaryHeap::from([Reverse((l.energy(eta0), eta0))]);
    while let Some(Reverse((h, v))) = heap.pop() {
        if h > best[v.index()] {
            continue;
        }
        for &w in l.neighbors(v) {
            if !inside[w.index()] {
                continue;
            }
            let hw = h.max(l.energy(w));
            if hw < best[w.index()] {
                best[w.index()] = hw;
                heap.push(Reverse((hw, w)));
            }
        }
    }
    cycle
        .states
        .iter()
        .filter(|&s| s != eta0)
        .map(|s| best[s.index()] - l.energy(s))
        .max()
        .unwrap_or(0)
}
