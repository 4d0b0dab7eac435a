//! Bulk communication heights.
//!
//! States are added in increasing energy order and joined to their already
//! present neighbors with a union-find; every join becomes an internal node
//! of a binary merge tree labelled by the energy at which it happened. The
//! communication height of two states is the label of their lowest common
//! ancestor, found by binary lifting.

use crate::landscape::{Energy, Landscape, StateId};

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = self.parent[x] as usize;
        }
        x
    }

    /// Joins the sets of `a` and `b`; returns the new root, or `None` if they
    /// were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        Some(ra)
    }
}

/// State indices sorted by (energy, id).
pub fn energy_order(l: &Landscape) -> Vec<usize> {
    let mut order: Vec<usize> = (0..l.n_states()).collect();
    order.sort_by_key(|&i| (l.energy_of(i), i));
    order
}

/// One union-find join: components containing `a` and `b` merged at `energy`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeEvent {
    pub a: StateId,
    pub b: StateId,
    pub energy: Energy,
}

#[derive(Clone, Debug)]
pub struct MergeTree {
    n_leaves: usize,
    height: Vec<Energy>,
    depth: Vec<u32>,
    up: Vec<Vec<u32>>,
    events: Vec<MergeEvent>,
}

/// Builds the merge tree of a landscape.
pub fn barrier_filtration(l: &Landscape) -> MergeTree {
    let n = l.n_states();
    let mut uf = UnionFind::new(n);
    // tree node currently representing each union-find root
    let mut top: Vec<u32> = (0..n as u32).collect();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    let mut height: Vec<Energy> = l.energies().to_vec();
    let mut present = vec![false; n];
    let mut events = Vec::with_capacity(n.saturating_sub(1));
    for v in energy_order(l) {
        present[v] = true;
        let e = l.energy_of(v);
        for &w in l.neighbors_of(v) {
            let w = w.index();
            if !present[w] {
                continue;
            }
            let (rv, rw) = (uf.find(v), uf.find(w));
            if rv == rw {
                continue;
            }
            let node = height.len() as u32;
            height.push(e);
            parent.push(node);
            parent[top[rv] as usize] = node;
            parent[top[rw] as usize] = node;
            let root = uf.union(rv, rw).expect("distinct roots");
            top[root] = node;
            events.push(MergeEvent {
                a: StateId::from(v),
                b: StateId::from(w),
                energy: e,
            });
        }
    }
    let m = height.len();
    // children always have smaller indices than their parent
    let mut depth = vec![0u32; m];
    for x in (0..m).rev() {
        let p = parent[x] as usize;
        if p != x {
            depth[x] = depth[p] + 1;
        }
    }
    let levels = (usize::BITS - m.leading_zeros()).max(1) as usize;
    let mut up = vec![parent];
    for k in 1..levels {
        let prev = &up[k - 1];
        let next = (0..m).map(|x| prev[prev[x] as usize]).collect();
        up.push(next);
    }
    MergeTree {
        n_leaves: n,
        height,
        depth,
        up,
        events,
    }
}

impl MergeTree {
    pub fn n_states(&self) -> usize {
        self.n_leaves
    }

    /// Join events in sweep order.
    pub fn events(&self) -> &[MergeEvent] {
        &self.events
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        if self.depth[a] < self.depth[b] {
            std::mem::swap(&mut a, &mut b);
        }
        let diff = self.depth[a] - self.depth[b];
        for (k, row) in self.up.iter().enumerate() {
            if diff >> k & 1 == 1 {
                a = row[a] as usize;
            }
        }
        if a == b {
            return a;
        }
        for row in self.up.iter().rev() {
            if row[a] != row[b] {
                a = row[a] as usize;
                b = row[b] as usize;
            }
        }
        self.up[0][a] as usize
    }

    /// Communication height Φ(a, b); Φ(a, a) = ℍ(a).
    pub fn height(&self, a: StateId, b: StateId) -> Energy {
        self.height[self.lca(a.index(), b.index())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::StateSet;

    fn chain(energies: &[i64]) -> Landscape {
        let states = energies.iter().enumerate().map(|(i, &e)| (format!("{i}"), e)).collect();
        let edges: Vec<_> = (1..energies.len()).map(|i| (i - 1, i)).collect();
        Landscape::build(states, &edges).unwrap()
    }

    #[test]
    fn fixture_heights() {
        let w = chain(&[0, 3, 1, 2, 1, 3, 0]);
        let t = barrier_filtration(&w);
        let h = |a: u32, b: u32| t.height(StateId(a), StateId(b)).0;
        assert_eq!(h(0, 6), 3);
        assert_eq!(h(2, 4), 2);
        assert_eq!(h(0, 2), 3);
        assert_eq!(h(3, 3), 2);
        assert_eq!(t.events().len(), 6);
    }

    #[test]
    fn single_state() {
        let l = Landscape::build(vec![("x".into(), -4)], &[]).unwrap();
        assert_eq!(barrier_filtration(&l).height(StateId(0), StateId(0)), Energy(-4));
    }

    #[test]
    fn flat_landscape() {
        let l = chain(&[7; 6]);
        let t = barrier_filtration(&l);
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(t.height(StateId(a), StateId(b)), Energy(7));
            }
        }
    }

    #[test]
    fn agrees_with_dijkstra_on_cycle_graph() {
        let e = [4, 0, 5, 2, 2, 6, 1, 3];
        let states = e.iter().enumerate().map(|(i, &e)| (format!("{i}"), e)).collect();
        let mut edges: Vec<_> = (1..8).map(|i| (i - 1, i)).collect();
        edges.push((7, 0));
        edges.push((1, 5));
        let l = Landscape::build(states, &edges).unwrap();
        let t = barrier_filtration(&l);
        for a in 0..8 {
            let heights = l.heights_from(&StateSet::from_indices([a]));
            for b in 0..8 {
                assert_eq!(t.height(StateId::from(a), StateId::from(b)), heights[b]);
            }
        }
    }
}
