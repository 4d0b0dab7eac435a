//! Induced and trace chains between cycles, and the level-by-level
//! construction of the metastable hierarchy.
//!
//! A level starts from a list of plateaux (level 1: every stable plateau of
//! the restricted landscape; later levels: unions of the recurrent
//! components of the previous level). Each plateau gets a depth and a
//! valley; together with the cycles carried over from earlier levels these
//! define an induced chain on the contracted graph, whose trace on the valley
//! bottoms is the limit chain of the level. The closed classes of the limit
//! chain are the plateaux of the next level.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::landscape::{Energy, Landscape, Restriction, StateId, StateSet};
use crate::merge_tree::{energy_order, UnionFind};
use crate::plateaux::{gamma_tilde, group_depths, stable_plateaux, valley, Cycle};
use crate::reduction::{cannot_reach, reduce_onto, trace_rates_float};

/// How trace chains are solved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// Exact rationals when at most `exact_limit` nodes must be eliminated,
    /// floating point otherwise.
    Auto { exact_limit: usize },
    #[default]
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct HierarchyOptions {
    pub solver: SolverMode,
}

/// Transition rate of a limit chain.
#[derive(Clone, Debug, PartialEq)]
pub enum Rate {
    Exact(BigRational),
    Float(f64),
}

impl Rate {
    pub fn to_f64(&self) -> f64 {
        match self {
            Rate::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Rate::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Rate::Exact(q) => Some(q),
            Rate::Float(_) => None,
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Exact(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Rate::Float(x) => write!(f, "{x:e}"),
        }
    }
}

/// The induced chain on the contracted graph: nodes `0..delta.len()` are the
/// states outside all cycles, node `delta.len() + c` is the bottom of
/// `cycles[c]`.
#[derive(Clone, Debug)]
pub struct InducedChain {
    pub delta: Vec<StateId>,
    pub cycles: Vec<Cycle>,
    pub gamma_star: i64,
    /// Outgoing rates per node, sorted by target node.
    pub rates: Vec<Vec<(usize, Rational64)>>,
}

impl InducedChain {
    pub fn n_nodes(&self) -> usize {
        self.delta.len() + self.cycles.len()
    }

    pub fn cycle_node(&self, c: usize) -> usize {
        self.delta.len() + c
    }

    pub fn is_star(&self, c: usize) -> bool {
        self.cycles[c].depth >= self.gamma_star
    }

    /// Indices of the cycles of depth at least Γ⋆.
    pub fn star_cycles(&self) -> Vec<usize> {
        (0..self.cycles.len()).filter(|&c| self.is_star(c)).collect()
    }

    pub fn rate(&self, from: usize, to: usize) -> Rational64 {
        self.rates[from]
            .binary_search_by_key(&to, |&(t, _)| t)
            .map(|k| self.rates[from][k].1)
            .unwrap_or_else(|_| Rational64::zero())
    }

    /// Node of a state: its Δ index or the node of the cycle containing it.
    pub fn node_of(&self, s: StateId) -> Option<usize> {
        if let Ok(k) = self.delta.binary_search(&s) {
            return Some(k);
        }
        self.cycles
            .iter()
            .position(|c| c.states.contains(s))
            .map(|c| self.cycle_node(c))
    }
}

/// Builds the induced chain of `cycles` at time scale `gamma_star`.
pub fn induced_chain(l: &Landscape, cycles: Vec<Cycle>, gamma_star: i64) -> Result<InducedChain> {
    if cycles.len() < 2 {
        return Err(Error::InvalidParams("an induced chain needs at least two cycles".into()));
    }
    let n = l.n_states();
    let mut owner = vec![usize::MAX; n];
    for (c, cycle) in cycles.iter().enumerate() {
        for s in cycle.states.iter() {
            if owner[s.index()] != usize::MAX {
                return Err(Error::OverlappingCycles);
            }
            owner[s.index()] = c;
        }
    }
    let delta: Vec<StateId> = (0..n).filter(|&i| owner[i] == usize::MAX).map(StateId::from).collect();
    let mut node = vec![usize::MAX; n];
    for (k, s) in delta.iter().enumerate() {
        node[s.index()] = k;
    }
    let nd = delta.len();
    let mut rates: Vec<BTreeMap<usize, Rational64>> = vec![BTreeMap::new(); nd + cycles.len()];
    for (k, &eta) in delta.iter().enumerate() {
        let e = l.energy(eta);
        for &xi in l.neighbors(eta) {
            let c = owner[xi.index()];
            if c == usize::MAX {
                if l.energy(xi) <= e {
                    rates[k].insert(node[xi.index()], Rational64::from_integer(1));
                }
            } else {
                *rates[k].entry(nd + c).or_insert_with(Rational64::zero) += 1;
            }
        }
    }
    for (c, cycle) in cycles.iter().enumerate() {
        if cycle.depth > gamma_star {
            continue;
        }
        let (_, min_boundary) = l.boundary_sets(&cycle.states)?;
        let bottom = cycle.bottom.len() as i64;
        for eta in min_boundary.iter() {
            if owner[eta.index()] != usize::MAX {
                return Err(Error::OverlappingCycles);
            }
            let contacts = l
                .neighbors(eta)
                .iter()
                .filter(|w| owner[w.index()] == c)
                .count() as i64;
            rates[nd + c].insert(node[eta.index()], Rational64::new(contacts, bottom));
        }
    }
    Ok(InducedChain {
        delta,
        cycles,
        gamma_star,
        rates: rates.into_iter().map(|r| r.into_iter().collect()).collect(),
    })
}

/// The trace of an induced chain on the bottoms of its star cycles.
#[derive(Clone, Debug)]
pub struct LimitChain {
    /// Cycle index (into the induced chain) of each limit-chain state.
    pub cycles: Vec<usize>,
    pub exact: bool,
    /// Positive rates per state, sorted by target; self-loops included.
    pub rows: Vec<Vec<(usize, Rate)>>,
    /// Total induced rate from each state into Δ.
    pub outflow: Vec<Rate>,
}

impl LimitChain {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rate(&self, from: usize, to: usize) -> Option<&Rate> {
        self.rows[from].iter().find(|(t, _)| *t == to).map(|(_, r)| r)
    }

    /// Rate as an exact rational; zero when absent. Panics on float chains.
    pub fn exact_rate(&self, from: usize, to: usize) -> BigRational {
        match self.rate(from, to) {
            None => BigRational::zero(),
            Some(Rate::Exact(q)) => q.clone(),
            Some(Rate::Float(_)) => panic!("limit chain was solved in floating point"),
        }
    }

    /// Off-diagonal support.
    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[i].iter().map(|&(j, _)| j).filter(move |&j| j != i)
    }
}

fn big(q: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

/// Solves the trace chain. Which entries are positive is always decided by
/// exact graph search; the values are exact or floating point per `mode`.
pub fn trace_chain(ic: &InducedChain, mode: SolverMode) -> Result<LimitChain> {
    let n = ic.n_nodes();
    let star = ic.star_cycles();
    let mut target = vec![false; n];
    let mut index_of = vec![usize::MAX; n];
    for (k, &c) in star.iter().enumerate() {
        target[ic.cycle_node(c)] = true;
        index_of[ic.cycle_node(c)] = k;
    }
    let pairs: Vec<(usize, usize)> = ic
        .rates
        .iter()
        .enumerate()
        .flat_map(|(u, row)| row.iter().map(move |&(v, _)| (u, v)))
        .collect();
    if let Some(&v) = cannot_reach(n, &pairs, &target).first() {
        return Err(Error::UnreachableTarget(v));
    }
    let support = exact_support(ic, &index_of, &star);
    let outflow_exact: Vec<BigRational> = star
        .iter()
        .map(|&c| {
            ic.rates[ic.cycle_node(c)]
                .iter()
                .filter(|&&(v, _)| v < ic.delta.len())
                .fold(BigRational::zero(), |acc, &(_, r)| acc + big(r))
        })
        .collect();
    let eliminated = n - star.len();
    let exact = match mode {
        SolverMode::Exact => true,
        SolverMode::Float => false,
        SolverMode::Auto { exact_limit } => eliminated <= exact_limit,
    };
    let mut rows: Vec<Vec<(usize, Rate)>> = vec![Vec::new(); star.len()];
    if exact {
        let edges: Vec<(usize, usize, BigRational)> = ic
            .rates
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().map(move |&(v, r)| (u, v, big(r))))
            .collect();
        let reduced = reduce_onto(n, &edges, &target)?;
        for (k, &c) in star.iter().enumerate() {
            for (v, r) in &reduced[ic.cycle_node(c)] {
                if !r.is_zero() {
                    rows[k].push((index_of[*v], Rate::Exact(r.clone())));
                }
            }
            rows[k].sort_by_key(|&(j, _)| j);
            let got: BTreeSet<usize> = rows[k].iter().map(|&(j, _)| j).collect();
            if got != support[k] {
                return Err(Error::InvariantViolation {
                    level: 0,
                    detail: format!("trace support mismatch at star cycle {k}"),
                });
            }
        }
    } else {
        let edges: Vec<(usize, usize, f64)> = ic
            .rates
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().map(move |&(v, r)| (u, v, *r.numer() as f64 / *r.denom() as f64)))
            .collect();
        let sources: Vec<usize> = star
            .iter()
            .filter(|&&c| ic.cycles[c].depth == ic.gamma_star)
            .map(|&c| ic.cycle_node(c))
            .collect();
        let solved = trace_rates_float(n, &edges, &target, &sources)?;
        for (src, row) in sources.iter().zip(solved) {
            let k = index_of[*src];
            let values: BTreeMap<usize, f64> = row.into_iter().map(|(v, r)| (index_of[v], r)).collect();
            rows[k] = support[k]
                .iter()
                .map(|&j| (j, Rate::Float(values.get(&j).copied().unwrap_or(0.0))))
                .collect();
        }
    }
    let outflow = outflow_exact
        .into_iter()
        .map(|q| if exact { Rate::Exact(q) } else { Rate::Float(q.to_f64().unwrap_or(f64::NAN)) })
        .collect();
    Ok(LimitChain {
        cycles: star,
        exact,
        rows,
        outflow,
    })
}

/// For each star cycle, the star cycles its bottom can reach first.
fn exact_support(ic: &InducedChain, index_of: &[usize], star: &[usize]) -> Vec<BTreeSet<usize>> {
    let n = ic.n_nodes();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, row) in ic.rates.iter().enumerate() {
        for &(v, _) in row {
            incoming[v].push(u);
        }
    }
    let mut support = vec![BTreeSet::new(); star.len()];
    let mut mark = vec![usize::MAX; n];
    for (j, &c) in star.iter().enumerate() {
        let t = ic.cycle_node(c);
        // nodes that reach t without passing through another target first
        let mut stack = vec![t];
        mark[t] = j;
        while let Some(v) = stack.pop() {
            for &u in &incoming[v] {
                if index_of[u] != usize::MAX {
                    support[index_of[u]].insert(j);
                } else if mark[u] != j {
                    mark[u] = j;
                    stack.push(u);
                }
            }
        }
    }
    support
}

/// Recurrent classes (closed communicating classes) and transient states of
/// a limit chain. Self-loops are ignored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub components: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
}

pub fn classify_chain(lc: &LimitChain) -> Classification {
    let n = lc.n();
    let succ: Vec<Vec<usize>> = (0..n).map(|i| lc.successors(i).collect()).collect();
    let comp = strongly_connected(&succ);
    let n_comp = comp.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut closed = vec![true; n_comp];
    for i in 0..n {
        for &j in &succ[i] {
            if comp[i] != comp[j] {
                closed[comp[i]] = false;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut transient = Vec::new();
    for i in 0..n {
        if closed[comp[i]] {
            groups.entry(comp[i]).or_default().push(i);
        } else {
            transient.push(i);
        }
    }
    let mut components: Vec<Vec<usize>> = groups.into_values().collect();
    components.sort_by_key(|c| c[0]);
    Classification { components, transient }
}

/// Strongly connected components (iterative Tarjan); returns a component id
/// per node.
fn strongly_connected(succ: &[Vec<usize>]) -> Vec<usize> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("on stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// One level of the hierarchy, in the ids of the landscape it was built on.
#[derive(Clone, Debug)]
pub struct Level {
    pub h: usize,
    pub gamma_star: i64,
    /// Γ⋆ of the previous level (0 at level 1).
    pub prev_gamma_star: i64,
    /// The plateaux of this level, ordered by smallest member.
    pub plateaux: Vec<StateSet>,
    pub energies: Vec<Energy>,
    pub depths: Vec<i64>,
    /// `valleys[i]` is the valley of `plateaux[i]`.
    pub valleys: Vec<Cycle>,
    /// Cycles carried from earlier levels, all shallower than Γ⋆.
    pub sharp: Vec<Cycle>,
    pub induced: InducedChain,
    /// Limit chain; state `i` is `plateaux[i]`.
    pub limit: LimitChain,
    pub classification: Classification,
    pub gamma_tilde: Vec<i64>,
}

impl Level {
    pub fn nu(&self) -> usize {
        self.classification.components.len()
    }

    pub fn is_terminal(&self) -> bool {
        self.nu() == 1
    }

    /// Union of the valleys.
    pub fn valley_union(&self) -> StateSet {
        StateSet::from_ids(self.valleys.iter().flat_map(|v| v.states.iter()))
    }
}

fn violation(level: usize, detail: String) -> Error {
    Error::InvariantViolation { level, detail }
}

fn build_level(
    l: &Landscape,
    h: usize,
    mut plateaux: Vec<StateSet>,
    carried: Vec<Cycle>,
    prev_gamma_star: i64,
    options: &HierarchyOptions,
) -> Result<Level> {
    plateaux.sort_by_key(|p| p.first());
    let mut energies = Vec::with_capacity(plateaux.len());
    for p in &plateaux {
        l.check_set(p)?;
        let e = l.energy(p.first().expect("nonempty"));
        if p.iter().any(|s| l.energy(s) != e) {
            return Err(violation(h, format!("plateau at {} has unequal energies", p.first().unwrap())));
        }
        energies.push(e);
    }
    let depths = group_depths(l, &plateaux)?;
    let gamma_star = *depths.iter().min().expect("at least two plateaux");
    if gamma_star <= prev_gamma_star {
        return Err(violation(h, format!("Γ⋆ = {gamma_star} does not exceed {prev_gamma_star}")));
    }
    let valleys = plateaux
        .iter()
        .zip(&depths)
        .map(|(p, &d)| {
            let v = valley(l, p, d).map_err(|e| violation(h, e.to_string()))?;
            if v.bottom != *p {
                return Err(violation(h, format!("valley of {} has a larger bottom", p.first().unwrap())));
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let covered = StateSet::from_ids(valleys.iter().flat_map(|v| v.states.iter()));
    if covered.len() != valleys.iter().map(|v| v.states.len()).sum::<usize>() {
        return Err(violation(h, "valleys overlap".into()));
    }
    let sharp: Vec<Cycle> = carried.into_iter().filter(|c| c.states.is_disjoint(&covered)).collect();
    if let Some(c) = sharp.iter().find(|c| c.depth >= gamma_star) {
        return Err(violation(h, format!("carried cycle at {} is not shallow", c.states.first().unwrap())));
    }
    let gamma_tilde: Vec<i64> = valleys.iter().map(|v| gamma_tilde(l, v)).collect();
    if let Some(i) = gamma_tilde.iter().position(|&g| g > prev_gamma_star) {
        return Err(violation(h, format!("Γ̃ of valley {i} exceeds {prev_gamma_star}")));
    }
    let mut cycles = valleys.clone();
    cycles.extend(sharp.iter().cloned());
    let induced = induced_chain(l, cycles, gamma_star)?;
    let limit = trace_chain(&induced, options.solver)?;
    if limit.cycles != (0..plateaux.len()).collect::<Vec<_>>() {
        return Err(violation(h, "star cycles differ from the valleys".into()));
    }
    let classification = classify_chain(&limit);
    if classification.components.len() >= plateaux.len() {
        return Err(violation(h, format!("ν did not decrease below {}", plateaux.len())));
    }
    Ok(Level {
        h,
        gamma_star,
        prev_gamma_star,
        plateaux,
        energies,
        depths,
        valleys,
        sharp,
        induced,
        limit,
        classification,
        gamma_tilde,
    })
}

/// Level 1 on a landscape already restricted below Φ̄.
pub fn first_level(l: &Landscape, options: &HierarchyOptions) -> Result<Level> {
    let plateaux: Vec<StateSet> = stable_plateaux(l).into_iter().map(|p| p.states).collect();
    if plateaux.len() < 2 {
        return Err(Error::SingleGround);
    }
    build_level(l, 1, plateaux, Vec::new(), 0, options)
}

/// Builds level h+1 from level h.
pub fn advance_level(l: &Landscape, prev: &Level, options: &HierarchyOptions) -> Result<Level> {
    if prev.is_terminal() {
        return Err(Error::TerminalReached);
    }
    let plateaux: Vec<StateSet> = prev
        .classification
        .components
        .iter()
        .map(|comp| StateSet::from_ids(comp.iter().flat_map(|&i| prev.plateaux[i].iter())))
        .collect();
    let mut carried: Vec<Cycle> = prev
        .classification
        .transient
        .iter()
        .map(|&i| prev.valleys[i].clone())
        .collect();
    carried.extend(prev.sharp.iter().cloned());
    build_level(l, prev.h + 1, plateaux, carried, prev.gamma_star, options)
}

/// Outcome of the classification diagnostics for one plateau.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Singleton,
    Transient,
    Shared,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub level: usize,
    pub roles: Vec<Role>,
    /// Largest relative gap in the rate-sum identity (0 when exact).
    pub rate_sum_gap: f64,
}

/// Checks the classification trichotomy, recurrence of the ground states,
/// the rate-sum identity and the zero rows of deep cycles.
pub fn check_classification(l: &Landscape, level: &Level) -> Result<Diagnostics> {
    let h = level.h;
    let n = level.plateaux.len();
    let fail = |i: usize, reason: String| Error::ClassificationViolation {
        level: h,
        plateau: i,
        reason,
    };
    let gs = level.gamma_star;
    let mut roles = vec![Role::Transient; n];
    let mut comp_of = vec![usize::MAX; n];
    for (m, comp) in level.classification.components.iter().enumerate() {
        for &i in comp {
            comp_of[i] = m;
            roles[i] = if comp.len() == 1 { Role::Singleton } else { Role::Shared };
        }
    }
    let partners = barrier_partners(l, level);
    for i in 0..n {
        let d = level.depths[i];
        match roles[i] {
            Role::Singleton => {
                if d <= gs {
                    return Err(fail(i, format!("singleton class with depth {d} <= Γ⋆ = {gs}")));
                }
            }
            Role::Transient => {
                if d != gs {
                    return Err(fail(i, format!("transient with depth {d} != Γ⋆ = {gs}")));
                }
                if !partners[i].iter().any(|&j| level.energies[j] < level.energies[i]) {
                    return Err(fail(i, "transient without a lower plateau at barrier Γ⋆".into()));
                }
            }
            Role::Shared => {
                if d != gs {
                    return Err(fail(i, format!("shared class with depth {d} != Γ⋆ = {gs}")));
                }
                if partners[i].iter().any(|&j| level.energies[j] != level.energies[i]) {
                    return Err(fail(i, "barrier partner at a different energy".into()));
                }
                let others: BTreeSet<usize> = level.classification.components[comp_of[i]]
                    .iter()
                    .copied()
                    .filter(|&j| j != i)
                    .collect();
                if others != partners[i] {
                    return Err(fail(i, "class differs from the Γ⋆-barrier partners".into()));
                }
            }
        }
    }
    for s in l.ground_states().iter() {
        let Some(i) = level.plateaux.iter().position(|p| p.contains(s)) else {
            return Err(fail(usize::MAX, format!("ground state {s} lies in no plateau")));
        };
        if roles[i] == Role::Transient {
            return Err(fail(i, format!("ground state {s} is transient")));
        }
    }
    let mut gap = 0.0f64;
    for i in 0..n {
        let row = &level.limit.rows[i];
        if level.depths[i] > gs && !row.is_empty() {
            return Err(fail(i, "deep cycle has outgoing rates".into()));
        }
        match &level.limit.outflow[i] {
            Rate::Exact(total) => {
                let sum = row
                    .iter()
                    .fold(BigRational::zero(), |acc, (_, r)| acc + r.exact().expect("exact chain").clone());
                if sum != *total {
                    return Err(fail(i, format!("rate sum {sum} != outflow {total}")));
                }
            }
            Rate::Float(total) => {
                let sum: f64 = row.iter().map(|(_, r)| r.to_f64()).sum();
                let rel = (sum - total).abs() / total.abs().max(1e-300);
                if *total > 0.0 {
                    gap = gap.max(rel);
                }
                if rel > 1e-8 && *total > 0.0 {
                    return Err(fail(i, format!("rate sum {sum} != outflow {total}")));
                }
            }
        }
    }
    Ok(Diagnostics {
        level: h,
        roles,
        rate_sum_gap: gap,
    })
}

/// For each plateau i, the plateaux j ≠ i with Φ(P_i, P_j) ≤ ℍ(P_i) + Γ⋆.
fn barrier_partners(l: &Landscape, level: &Level) -> Vec<BTreeSet<usize>> {
    let n = level.plateaux.len();
    let caps: BTreeSet<Energy> = level.energies.iter().map(|&e| e + level.gamma_star).collect();
    let order = energy_order(l);
    let mut uf = UnionFind::new(l.n_states());
    let mut present = vec![false; l.n_states()];
    let mut next = 0;
    let mut partners = vec![BTreeSet::new(); n];
    for cap in caps {
        while next < order.len() && l.energy_of(order[next]) <= cap {
            let v = order[next];
            present[v] = true;
            for &w in l.neighbors_of(v) {
                if present[w.index()] {
                    uf.union(v, w.index());
                }
            }
            next += 1;
        }
        let mut by_root: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (j, p) in level.plateaux.iter().enumerate() {
            if level.energies[j] <= cap {
                for s in p.iter() {
                    by_root.entry(uf.find(s.index())).or_default().insert(j);
                }
            }
        }
        for i in 0..n {
            if level.energies[i] + level.gamma_star != cap {
                continue;
            }
            for s in level.plateaux[i].iter() {
                if let Some(js) = by_root.get(&uf.find(s.index())) {
                    partners[i].extend(js.iter().copied().filter(|&j| j != i));
                }
            }
        }
    }
    partners
}

/// The complete hierarchy of a landscape.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub restriction: Restriction,
    pub levels: Vec<Level>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Hierarchy {
    pub fn terminal(&self) -> usize {
        self.levels.len()
    }

    pub fn gamma_stars(&self) -> Vec<i64> {
        self.levels.iter().map(|lv| lv.gamma_star).collect()
    }

    pub fn nus(&self) -> Vec<usize> {
        self.levels.iter().map(Level::nu).collect()
    }

    /// The landscape all levels refer to.
    pub fn landscape(&self) -> &Landscape {
        &self.restriction.landscape
    }

    pub fn level(&self, h: usize) -> &Level {
        &self.levels[h - 1]
    }

    /// Maps a set of the restricted landscape back to the input landscape.
    pub fn to_original(&self, set: &StateSet) -> StateSet {
        StateSet::from_ids(set.iter().map(|s| self.restriction.original[s.index()]))
    }
}

/// Restricts `l` below Φ̄ and iterates levels until one recurrent class
/// remains, checking every invariant on the way.
pub fn full_hierarchy(l: &Landscape, options: &HierarchyOptions) -> Result<Hierarchy> {
    let restriction = l.restrict_to_omega_bar(&l.ground_states())?;
    let r = &restriction.landscape;
    let mut levels = vec![first_level(r, options)?];
    let mut diagnostics = vec![check_classification(r, &levels[0])?];
    while !levels.last().expect("nonempty").is_terminal() {
        let next = advance_level(r, levels.last().expect("nonempty"), options)?;
        diagnostics.push(check_classification(r, &next)?);
        levels.push(next);
    }
    let last = levels.last().expect("nonempty");
    let ground = r.ground_states();
    let class: StateSet = StateSet::from_ids(
        last.classification.components[0]
            .iter()
            .flat_map(|&i| last.plateaux[i].iter()),
    );
    if class != ground {
        return Err(violation(last.h, "terminal class is not the set of ground states".into()));
    }
    Ok(Hierarchy {
        restriction,
        levels,
        diagnostics,
    })
}
