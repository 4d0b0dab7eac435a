//! Finite energy landscapes: a connected state graph with exact integer
//! energies, plus the static primitives every later stage is built from
//! (bottoms, boundaries, communication heights, sublevel restriction and
//! capped neighborhoods).
//!
//! Energies are `i64`. Landscapes with rational energies must be scaled to
//! integers by the caller before construction.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default hard cap on the number of states a landscape may hold.
pub const DEFAULT_STATE_CAP: usize = 5_000_000;

/// Exact integer energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Energy(pub i64);

impl Add<i64> for Energy {
    type Output = Energy;
    fn add(self, rhs: i64) -> Energy {
        Energy(self.0 + rhs)
    }
}

impl Sub for Energy {
    type Output = i64;
    fn sub(self, rhs: Energy) -> i64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Dense index into a landscape's state table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u32);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for StateId {
    fn from(i: usize) -> Self {
        StateId(i as u32)
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Sorted, duplicate-free set of states.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSet(Vec<StateId>);

impl StateSet {
    pub fn new() -> Self {
        StateSet(Vec::new())
    }

    pub fn from_ids<I: IntoIterator<Item = StateId>>(ids: I) -> Self {
        let mut v: Vec<StateId> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        StateSet(v)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        Self::from_ids(ids.into_iter().map(StateId::from))
    }

    /// Collects the indices whose flag is set.
    pub fn from_mask(mask: &[bool]) -> Self {
        StateSet(
            mask.iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(i, _)| StateId::from(i))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: StateId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[StateId] {
        &self.0
    }

    pub fn first(&self) -> Option<StateId> {
        self.0.first().copied()
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        Self::from_ids(self.iter().chain(other.iter()))
    }

    pub fn is_disjoint(&self, other: &StateSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.iter().all(|s| other.contains(s))
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for s in self.iter() {
            m[s.index()] = true;
        }
        m
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().map(StateId::index).collect()
    }
}

impl FromIterator<StateId> for StateSet {
    fn from_iter<T: IntoIterator<Item = StateId>>(iter: T) -> Self {
        StateSet::from_ids(iter)
    }
}

/// A finite connected state graph with integer energies.
///
/// Adjacency is stored in compressed form; neighbor lists are sorted by id.
/// A landscape never changes after construction.
#[derive(Clone, Debug)]
pub struct Landscape {
    energies: Vec<Energy>,
    labels: Vec<String>,
    offsets: Vec<usize>,
    adjacency: Vec<StateId>,
}

/// Options for [`Landscape::build_with`].
#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub state_cap: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// Result of restricting a landscape to the states reachable from its
/// ground states below the global tunneling barrier.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub phi_bar: Energy,
    pub landscape: Landscape,
    /// `original[i]` is the id in the parent landscape of restricted state `i`.
    pub original: Vec<StateId>,
}

impl Landscape {
    /// Builds a landscape; StateIds follow input order.
    pub fn build(states: Vec<(String, i64)>, edges: &[(usize, usize)]) -> Result<Landscape> {
        Self::build_with(states, edges, BuildOptions::default())
    }

    pub fn build_with(
        states: Vec<(String, i64)>,
        edges: &[(usize, usize)],
        options: BuildOptions,
    ) -> Result<Landscape> {
        let n = states.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if n > options.state_cap || n > u32::MAX as usize {
            return Err(Error::TooManyStates {
                n_states: n,
                cap: options.state_cap,
            });
        }
        let mut lists: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for (k, &(a, b)) in edges.iter().enumerate() {
            for s in [a, b] {
                if s >= n {
                    return Err(Error::InvalidEdge {
                        edge: k,
                        state: s,
                        n_states: n,
                    });
                }
            }
            if a == b {
                return Err(Error::SelfLoop { edge: k, state: a });
            }
            lists[a].push(StateId::from(b));
            lists[b].push(StateId::from(a));
        }
        let mut duplicates = 0usize;
        for l in lists.iter_mut() {
            l.sort_unstable();
            let before = l.len();
            l.dedup();
            duplicates += before - l.len();
        }
        if duplicates > 0 {
            // each duplicate edge shows up once in both endpoint lists
            log::warn!("ignored {} duplicate edge(s)", duplicates / 2);
        }
        let (labels, energies): (Vec<String>, Vec<Energy>) =
            states.into_iter().map(|(l, e)| (l, Energy(e))).unzip();
        let landscape = Self::from_lists(energies, labels, lists);
        let components = landscape.count_components();
        if components != 1 {
            return Err(Error::DisconnectedGraph { components });
        }
        Ok(landscape)
    }

    fn from_lists(energies: Vec<Energy>, labels: Vec<String>, lists: Vec<Vec<StateId>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut adjacency = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        for l in lists {
            adjacency.extend(l);
            offsets.push(adjacency.len());
        }
        Landscape {
            energies,
            labels,
            offsets,
            adjacency,
        }
    }

    fn count_components(&self) -> usize {
        let n = self.n_states();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            components += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &w in self.neighbors_of(v) {
                    if !seen[w.index()] {
                        seen[w.index()] = true;
                        stack.push(w.index());
                    }
                }
            }
        }
        components
    }

    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.len() / 2
    }

    #[inline]
    pub fn energy(&self, s: StateId) -> Energy {
        self.energies[s.index()]
    }

    #[inline]
    pub fn energy_of(&self, i: usize) -> Energy {
        self.energies[i]
    }

    pub fn energies(&self) -> &[Energy] {
        &self.energies
    }

    pub fn label(&self, s: StateId) -> &str {
        &self.labels[s.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn neighbors(&self, s: StateId) -> &[StateId] {
        self.neighbors_of(s.index())
    }

    #[inline]
    pub fn neighbors_of(&self, i: usize) -> &[StateId] {
        &self.adjacency[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn are_adjacent(&self, a: StateId, b: StateId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Each undirected edge once, as `(smaller, larger)`.
    pub fn edges(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        (0..self.n_states()).flat_map(move |i| {
            self.neighbors_of(i)
                .iter()
                .filter(move |w| w.index() > i)
                .map(move |&w| (StateId::from(i), w))
        })
    }

    pub fn all_states(&self) -> StateSet {
        StateSet::from_indices(0..self.n_states())
    }

    pub fn min_energy(&self) -> Energy {
        *self.energies.iter().min().expect("landscape is nonempty")
    }

    pub fn check_set(&self, set: &StateSet) -> Result<()> {
        match set.as_slice().last() {
            None => Err(Error::EmptySet),
            Some(&s) if s.index() >= self.n_states() => Err(Error::UnknownState(s)),
            Some(_) => Ok(()),
        }
    }

    /// Energy minimizers within `set`.
    pub fn bottom(&self, set: &StateSet) -> Result<StateSet> {
        self.check_set(set)?;
        let min = set.iter().map(|s| self.energy(s)).min().expect("nonempty");
        Ok(set.iter().filter(|&s| self.energy(s) == min).collect())
    }

    /// Ground states: the bottom of the whole landscape.
    pub fn ground_states(&self) -> StateSet {
        let min = self.min_energy();
        StateSet::from_indices((0..self.n_states()).filter(|&i| self.energies[i] == min))
    }

    /// Outer boundary of `set`, and its energy minimizers.
    pub fn boundary_sets(&self, set: &StateSet) -> Result<(StateSet, StateSet)> {
        self.check_set(set)?;
        if set.len() == self.n_states() {
            return Err(Error::FullSet);
        }
        let boundary = self.outer_boundary(set);
        let min_boundary = self.bottom(&boundary)?;
        Ok((boundary, min_boundary))
    }

    pub(crate) fn outer_boundary(&self, set: &StateSet) -> StateSet {
        let inside = set.mask(self.n_states());
        let mut out = vec![false; self.n_states()];
        for s in set.iter() {
            for &w in self.neighbors(s) {
                if !inside[w.index()] {
                    out[w.index()] = true;
                }
            }
        }
        StateSet::from_mask(&out)
    }

    /// Whether `set` induces a connected subgraph.
    pub fn is_connected(&self, set: &StateSet) -> bool {
        let Some(start) = set.first() else {
            return false;
        };
        let inside = set.mask(self.n_states());
        let mut seen = vec![false; self.n_states()];
        seen[start.index()] = true;
        let mut stack = vec![start];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in self.neighbors(v) {
                if inside[w.index()] && !seen[w.index()] {
                    seen[w.index()] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == set.len()
    }

    /// Minimax path height from `sources` to every state (the communication
    /// height Φ(sources, ·), with Φ(sources, s) = ℍ(s) on the sources).
    pub fn heights_from(&self, sources: &StateSet) -> Vec<Energy> {
        let n = self.n_states();
        let mut best = vec![Energy(i64::MAX); n];
        let mut heap = BinaryHeap::new();
        for s in sources.iter() {
            best[s.index()] = self.energy(s);
            heap.push(Reverse((self.energy(s), s)));
        }
        while let Some(Reverse((h, v))) = heap.pop() {
            if h > best[v.index()] {
                continue;
            }
            for &w in self.neighbors(v) {
                let hw = h.max(self.energy(w));
                if hw < best[w.index()] {
                    best[w.index()] = hw;
                    heap.push(Reverse((hw, w)));
                }
            }
        }
        best
    }

    /// Communication height Φ(A, B) between disjoint nonempty sets.
    pub fn comm_height(&self, a: &StateSet, b: &StateSet) -> Result<Energy> {
        self.check_set(a)?;
        self.check_set(b)?;
        if !a.is_disjoint(b) {
            return Err(Error::Overlap);
        }
        let n = self.n_states();
        let target = b.mask(n);
        let mut best = vec![Energy(i64::MAX); n];
        let mut heap = BinaryHeap::new();
        for s in a.iter() {
            best[s.index()] = self.energy(s);
            heap.push(Reverse((self.energy(s), s)));
        }
        while let Some(Reverse((h, v))) = heap.pop() {
            if h > best[v.index()] {
                continue;
            }
            if target[v.index()] {
                return Ok(h);
            }
            for &w in self.neighbors(v) {
                let hw = h.max(self.energy(w));
                if hw < best[w.index()] {
                    best[w.index()] = hw;
                    heap.push(Reverse((hw, w)));
                }
            }
        }
        unreachable!("landscape is connected")
    }

    /// States reachable from `sources` along paths that avoid `forbidden` and
    /// whose every state has energy `<= cap` (or `< cap` when `strict`).
    pub fn allowed_neighborhood(
        &self,
        sources: &StateSet,
        forbidden: &StateSet,
        cap: Energy,
        strict: bool,
    ) -> Result<StateSet> {
        self.check_set(sources)?;
        if !sources.is_disjoint(forbidden) {
            return Err(Error::Overlap);
        }
        let admits = |e: Energy| if strict { e < cap } else { e <= cap };
        if let Some(s) = sources.iter().find(|&s| !admits(self.energy(s))) {
            return Err(Error::CapExcludesSource(s));
        }
        let n = self.n_states();
        let blocked = forbidden.mask(n);
        let mut seen = sources.mask(n);
        let mut queue: VecDeque<StateId> = sources.iter().collect();
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbors(v) {
                let wi = w.index();
                if !seen[wi] && !blocked[wi] && admits(self.energy(w)) {
                    seen[wi] = true;
                    queue.push_back(w);
                }
            }
        }
        Ok(StateSet::from_mask(&seen))
    }

    /// Subgraph induced on `set`, which must be connected.
    pub fn induced(&self, set: &StateSet) -> Result<(Landscape, Vec<StateId>)> {
        self.check_set(set)?;
        if !self.is_connected(set) {
            return Err(Error::NotConnected);
        }
        let mut local = vec![u32::MAX; self.n_states()];
        for (i, s) in set.iter().enumerate() {
            local[s.index()] = i as u32;
        }
        let lists = set
            .iter()
            .map(|s| {
                self.neighbors(s)
                    .iter()
                    .filter(|w| local[w.index()] != u32::MAX)
                    .map(|w| StateId(local[w.index()]))
                    .collect::<Vec<_>>()
            })
            .collect();
        let energies = set.iter().map(|s| self.energy(s)).collect();
        let labels = set.iter().map(|s| self.labels[s.index()].clone()).collect();
        let mut sub = Self::from_lists(energies, labels, lists);
        for i in 0..sub.n_states() {
            let (lo, hi) = (sub.offsets[i], sub.offsets[i + 1]);
            sub.adjacency[lo..hi].sort_unstable();
        }
        Ok((sub, set.iter().collect()))
    }

    /// Computes the global barrier Φ̄ between ground states and restricts the
    /// landscape to the states reachable from them at height at most Φ̄.
    pub fn restrict_to_omega_bar(&self, ground: &StateSet) -> Result<Restriction> {
        let actual = self.ground_states();
        if *ground != actual {
            return Err(Error::GroundMismatch);
        }
        if ground.len() < 2 {
            return Err(Error::SingleGround);
        }
        let heights = self.heights_from(&StateSet::from_ids(ground.first()));
        let phi_bar = ground
            .iter()
            .map(|s| heights[s.index()])
            .max()
            .expect("nonempty");
        // all ground states communicate below phi_bar, so one capped search
        // from all of them yields the whole component
        let keep = self.allowed_neighborhood(ground, &StateSet::new(), phi_bar, false)?;
        let (landscape, original) = self.induced(&keep)?;
        Ok(Restriction {
            phi_bar,
            landscape,
            original,
        })
    }
}

/// Free-function form of [`Landscape::build`].
pub fn build_landscape(states: Vec<(String, i64)>, edges: &[(usize, usize)]) -> Result<Landscape> {
    Landscape::build(states, edges)
}
