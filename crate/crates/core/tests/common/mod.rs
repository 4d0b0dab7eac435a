//! Fixtures and brute-force oracles shared by the integration tests. The
//! oracles work on dense matrices straight from the definitions and share
//! no code with the library beyond `Landscape` accessors.
#![allow(dead_code)]

use std::collections::BTreeSet;

use metastable::landscape::build_landscape;
use metastable::{Landscape, StateId};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Seven-state chain with energies (0,3,1,2,1,3,0).
pub fn fixture_w() -> Landscape {
    let e = [0, 3, 1, 2, 1, 3, 0];
    let states = e.iter().enumerate().map(|(i, &x)| (format!("s{i}"), x)).collect();
    let edges: Vec<_> = (0..6).map(|i| (i, i + 1)).collect();
    build_landscape(states, &edges).unwrap()
}

/// a, b flat at 0; x1 touches a; x2 touches a and b; both at energy 1.
pub fn fixture_fork() -> Landscape {
    build_landscape(
        vec![("a".into(), 0), ("b".into(), 0), ("x1".into(), 1), ("x2".into(), 1)],
        &[(0, 1), (0, 2), (0, 3), (1, 3)],
    )
    .unwrap()
}

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn energies(l: &Landscape) -> Vec<i64> {
    l.energies().iter().map(|e| e.0).collect()
}

pub fn adjacency(l: &Landscape) -> Vec<Vec<usize>> {
    (0..l.n_states())
        .map(|i| l.neighbors_of(i).iter().map(|s| s.index()).collect())
        .collect()
}

/// All-pairs communication heights by minimax Floyd–Warshall.
pub fn minimax(e: &[i64], adj: &[Vec<usize>]) -> Vec<Vec<i64>> {
    let n = e.len();
    let mut d = vec![vec![i64::MAX; n]; n];
    for i in 0..n {
        d[i][i] = e[i];
        for &j in &adj[i] {
            d[i][j] = e[i].max(e[j]);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k].max(d[k][j]);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

pub fn set_height(phi: &[Vec<i64>], a: &[usize], b: &[usize]) -> i64 {
    a.iter().flat_map(|&x| b.iter().map(move |&y| phi[x][y])).min().unwrap()
}

/// Connected equal-energy components whose neighbors are all strictly higher.
pub fn brute_plateaux(e: &[i64], adj: &[Vec<usize>], within: &[bool]) -> Vec<Vec<usize>> {
    let n = e.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] || !within[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut k = 0;
        while k < comp.len() {
            let v = comp[k];
            for &w in &adj[v] {
                if within[w] && !seen[w] && e[w] == e[v] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
            k += 1;
        }
        let stable = comp
            .iter()
            .all(|&v| adj[v].iter().filter(|&&w| within[w]).all(|&w| e[w] >= e[s]));
        if stable {
            comp.sort();
            out.push(comp);
        }
    }
    out.sort();
    out
}

#[derive(Clone, Debug)]
pub struct OracleCycle {
    pub states: Vec<usize>,
    pub depth: i64,
    pub bottom: Vec<usize>,
}

pub fn oracle_cycle(e: &[i64], adj: &[Vec<usize>], within: &[bool], states: Vec<usize>) -> OracleCycle {
    let inside: BTreeSet<usize> = states.iter().copied().collect();
    let min_in = states.iter().map(|&s| e[s]).min().unwrap();
    let min_boundary = states
        .iter()
        .flat_map(|&s| adj[s].iter().copied())
        .filter(|w| within[*w] && !inside.contains(w))
        .map(|w| e[w])
        .min()
        .unwrap();
    let bottom = states.iter().copied().filter(|&s| e[s] == min_in).collect();
    OracleCycle { states, depth: min_boundary - min_in, bottom }
}

/// Trace rates by Eq. definitions: build the induced chain densely and solve
/// the absorption problem by Gauss–Jordan over rationals. Returns the rate
/// matrix between star cycles (indices into `cycles` restricted to the star
/// ones, in order).
pub fn oracle_trace(
    e: &[i64],
    adj: &[Vec<usize>],
    within: &[bool],
    cycles: &[OracleCycle],
    gamma_star: i64,
) -> Vec<Vec<BigRational>> {
    let n = e.len();
    let mut node = vec![usize::MAX; n];
    let mut delta = Vec::new();
    let mut in_cycle = vec![usize::MAX; n];
    for (c, cy) in cycles.iter().enumerate() {
        for &s in &cy.states {
            in_cycle[s] = c;
        }
    }
    for s in 0..n {
        if within[s] && in_cycle[s] == usize::MAX {
            node[s] = delta.len();
            delta.push(s);
        }
    }
    let m = delta.len() + cycles.len();
    let cnode = |c: usize| delta.len() + c;
    let mut r = vec![vec![BigRational::zero(); m]; m];
    for (u, &s) in delta.iter().enumerate() {
        for &t in &adj[s] {
            if !within[t] {
                continue;
            }
            if node[t] != usize::MAX && e[t] <= e[s] {
                r[u][node[t]] = BigRational::one();
            }
        }
        for (c, cy) in cycles.iter().enumerate() {
            let contacts = cy.states.iter().filter(|&&z| adj[s].contains(&z)).count();
            if contacts > 0 {
                r[u][cnode(c)] = BigRational::from_integer(BigInt::from(contacts));
            }
        }
    }
    for (c, cy) in cycles.iter().enumerate() {
        if cy.depth > gamma_star {
            continue;
        }
        let inside: BTreeSet<usize> = cy.states.iter().copied().collect();
        let boundary: BTreeSet<usize> = cy
            .states
            .iter()
            .flat_map(|&s| adj[s].iter().copied())
            .filter(|w| within[*w] && !inside.contains(w))
            .collect();
        let min_b = boundary.iter().map(|&w| e[w]).min().unwrap();
        for &w in boundary.iter().filter(|&&w| e[w] == min_b) {
            if node[w] == usize::MAX {
                continue;
            }
            let contacts = cy.states.iter().filter(|&&z| adj[w].contains(&z)).count();
            r[cnode(c)][node[w]] =
                BigRational::new(BigInt::from(contacts), BigInt::from(cy.bottom.len()));
        }
    }
    let star: Vec<usize> = (0..cycles.len()).filter(|&c| cycles[c].depth >= gamma_star).collect();
    let is_star: Vec<bool> = (0..m).map(|v| v >= delta.len() && star.contains(&(v - delta.len()))).collect();
    let trans: Vec<usize> = (0..m).filter(|&v| !is_star[v]).collect();
    let k = trans.len();
    // (D - R_TT) X = R_TS, solved for the hitting law of each star node
    let mut a = vec![vec![BigRational::zero(); k + star.len()]; k];
    for (i, &u) in trans.iter().enumerate() {
        let total: BigRational = (0..m).filter(|&v| v != u).fold(BigRational::zero(), |acc, v| acc + &r[u][v]);
        a[i][i] = total;
        for (j, &v) in trans.iter().enumerate() {
            if v != u {
                a[i][j] = &a[i][j] - &r[u][v];
            }
        }
        for (j, &c) in star.iter().enumerate() {
            a[i][k + j] = r[u][cnode(c)].clone();
        }
    }
    for col in 0..k {
        let piv = (col..k).find(|&i| !a[i][col].is_zero()).expect("absorption reachable");
        a.swap(col, piv);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = &*x / &p;
        }
        for i in 0..k {
            if i != col && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for j in 0..k + star.len() {
                    let sub = &f * &a[col][j];
                    a[i][j] = &a[i][j] - &sub;
                }
            }
        }
    }
    let hit = |v: usize, j: usize| -> BigRational {
        if is_star[v] {
            if v == cnode(star[j]) { BigRational::one() } else { BigRational::zero() }
        } else {
            a[trans.iter().position(|&t| t == v).unwrap()][k + j].clone()
        }
    };
    star.iter()
        .map(|&c| {
            (0..star.len())
                .map(|j| {
                    (0..delta.len()).fold(BigRational::zero(), |acc, u| {
                        if r[cnode(c)][u].is_zero() { acc } else { acc + &r[cnode(c)][u] * hit(u, j) }
                    })
                })
                .collect()
        })
        .collect()
}

/// Closed classes of the chain with the given positive off-diagonal rates,
/// via transitive closure; sorted by smallest member.
pub fn closed_classes(rates: &[Vec<BigRational>]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = rates.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if i != j && rates[i][j].is_positive() {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut classes = Vec::new();
    let mut transient = Vec::new();
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        let closed = (0..n).all(|j| !reach[i][j] || reach[j][i]);
        for &j in &class {
            done[j] = true;
        }
        if closed {
            classes.push(class);
        } else {
            transient.extend(class);
        }
    }
    transient.sort();
    (classes, transient)
}

#[derive(Clone, Debug)]
pub struct OracleLevel {
    pub plateaux: Vec<Vec<usize>>,
    pub depths: Vec<i64>,
    pub gamma_star: i64,
    pub valleys: Vec<OracleCycle>,
    pub sharp: Vec<Vec<usize>>,
    pub rates: Vec<Vec<BigRational>>,
    pub components: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
}

pub struct OracleHierarchy {
    pub phi_bar: i64,
    pub omega_bar: Vec<usize>,
    pub levels: Vec<OracleLevel>,
}

/// The whole construction from the definitions, on original state ids.
/// `None` when the landscape has a single stable plateau.
pub fn oracle_hierarchy(l: &Landscape) -> Option<OracleHierarchy> {
    let e = energies(l);
    let adj = adjacency(l);
    let n = e.len();
    let phi = minimax(&e, &adj);
    let min = *e.iter().min().unwrap();
    let ground: Vec<usize> = (0..n).filter(|&i| e[i] == min).collect();
    // pairs include s = s', so a single ground state gives Φ̄ = H(s)
    let phi_bar = ground.iter().flat_map(|&a| ground.iter().map(|&b| phi[a][b]).collect::<Vec<_>>()).max().unwrap();
    let within: Vec<bool> = (0..n).map(|i| ground.iter().any(|&s| phi[s][i] <= phi_bar)).collect();
    let first = brute_plateaux(&e, &adj, &within);
    if first.len() < 2 {
        return None;
    }
    let omega_bar: Vec<usize> = (0..n).filter(|&i| within[i]).collect();
    let mut levels: Vec<OracleLevel> = Vec::new();
    let mut plateaux = first;
    let mut carried: Vec<OracleCycle> = Vec::new();
    loop {
        plateaux.sort();
        let depths: Vec<i64> = (0..plateaux.len())
            .map(|i| {
                let others: Vec<usize> = plateaux.iter().enumerate().filter(|&(j, _)| j != i).flat_map(|(_, p)| p.iter().copied()).collect();
                set_height(&phi, &plateaux[i], &others) - e[plateaux[i][0]]
            })
            .collect();
        let gamma_star = *depths.iter().min().unwrap();
        let valleys: Vec<OracleCycle> = plateaux
            .iter()
            .zip(&depths)
            .map(|(p, &d)| {
                let hp = e[p[0]];
                let states: Vec<usize> = (0..n).filter(|&x| within[x] && p.iter().any(|&a| phi[a][x] - hp < d)).collect();
                oracle_cycle(&e, &adj, &within, states)
            })
            .collect();
        let covered: BTreeSet<usize> = valleys.iter().flat_map(|v| v.states.iter().copied()).collect();
        let sharp: Vec<OracleCycle> = carried
            .into_iter()
            .filter(|c| c.states.iter().all(|s| !covered.contains(s)))
            .collect();
        let mut cycles = valleys.clone();
        cycles.extend(sharp.iter().cloned());
        let rates = oracle_trace(&e, &adj, &within, &cycles, gamma_star);
        let (components, transient) = closed_classes(&rates);
        let level = OracleLevel {
            plateaux: plateaux.clone(),
            depths,
            gamma_star,
            valleys: valleys.clone(),
            sharp: sharp.iter().map(|c| c.states.clone()).collect(),
            rates,
            components: components.clone(),
            transient: transient.clone(),
        };
        levels.push(level);
        if components.len() == 1 || levels.len() > n {
            break;
        }
        plateaux = components
            .iter()
            .map(|comp| {
                let mut p: Vec<usize> = comp.iter().flat_map(|&i| plateaux[i].iter().copied()).collect();
                p.sort();
                p
            })
            .collect();
        carried = transient.iter().map(|&i| valleys[i].clone()).chain(sharp).collect();
    }
    Some(OracleHierarchy { phi_bar, omega_bar, levels })
}

pub fn ids(set: &metastable::StateSet) -> Vec<usize> {
    set.iter().map(StateId::index).collect()
}

use metastable::hierarchy::Hierarchy;
use metastable::plateaux::{stable_plateaux, validate_cycle, Cycle};
use metastable::StateSet;

fn sorted_sets(mut v: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for s in v.iter_mut() {
        s.sort();
    }
    v.sort();
    v
}

/// Compares a library hierarchy with [`oracle_hierarchy`], level by level.
pub fn compare_with_oracle(l: &Landscape, h: &Hierarchy) -> Result<(), String> {
    let o = oracle_hierarchy(l).ok_or("oracle sees a single plateau")?;
    if h.restriction.phi_bar.0 != o.phi_bar {
        return Err(format!("Φ̄ {} vs {}", h.restriction.phi_bar.0, o.phi_bar));
    }
    let kept: Vec<usize> = h.restriction.original.iter().map(|s| s.index()).collect();
    if kept != o.omega_bar {
        return Err("Ω̄ differs".into());
    }
    if h.levels.len() != o.levels.len() {
        return Err(format!("{} levels vs {}", h.levels.len(), o.levels.len()));
    }
    let orig = |s: &StateSet| -> Vec<usize> { ids(&h.to_original(s)) };
    for (lv, ol) in h.levels.iter().zip(&o.levels) {
        let tag = |what: &str| format!("level {}: {what}", lv.h);
        let plateaux: Vec<Vec<usize>> = lv.plateaux.iter().map(orig).collect();
        if plateaux != ol.plateaux {
            return Err(tag("plateaux"));
        }
        if lv.depths != ol.depths || lv.gamma_star != ol.gamma_star {
            return Err(tag("depths"));
        }
        for (v, ov) in lv.valleys.iter().zip(&ol.valleys) {
            if orig(&v.states) != ov.states || v.depth != ov.depth || orig(&v.bottom) != ov.bottom {
                return Err(tag("valleys"));
            }
        }
        let sharp = sorted_sets(lv.sharp.iter().map(|c| orig(&c.states)).collect());
        if sharp != sorted_sets(ol.sharp.clone()) {
            return Err(tag("sharp cycles"));
        }
        for i in 0..plateaux.len() {
            for j in 0..plateaux.len() {
                let got = lv.limit.exact_rate(i, j);
                if got != ol.rates[i][j] {
                    return Err(tag(&format!("rate ({i},{j}) {got} vs {}", ol.rates[i][j])));
                }
            }
        }
        if lv.classification.components != ol.components || lv.classification.transient != ol.transient {
            return Err(tag("classification"));
        }
    }
    Ok(())
}

fn check_cycle(l: &Landscape, c: &Cycle, plateaux: &[StateSet]) -> Result<(), String> {
    let again = validate_cycle(l, &c.states).map_err(|e| e.to_string())?;
    if again.depth != c.depth || again.bottom != c.bottom {
        return Err("cycle record differs from revalidation".into());
    }
    let mut rebuilt: Vec<StateId> = plateaux
        .iter()
        .filter(|p| p.is_subset(&c.bottom))
        .flat_map(|p| p.iter())
        .collect();
    rebuilt.sort();
    if rebuilt != c.bottom.as_slice() {
        return Err("bottom is not a union of stable plateaux".into());
    }
    Ok(())
}

/// The structural invariants of a hierarchy, checked with brute-force
/// heights on its own landscape.
pub fn check_invariants(h: &Hierarchy) -> Result<(), String> {
    let l = h.landscape();
    let e = energies(l);
    let phi = minimax(&e, &adjacency(l));
    let stable: Vec<StateSet> = stable_plateaux(l).into_iter().map(|p| p.states).collect();
    let ground = l.ground_states();
    let mut prev_nu = stable.len();
    let mut prev_gamma = 0;
    let mut all_cycles: Vec<StateSet> = Vec::new();
    for (lv, diag) in h.levels.iter().zip(&h.diagnostics) {
        let tag = |what: &str| format!("level {}: {what}", lv.h);
        let n = lv.plateaux.len();
        let total: usize = lv.plateaux.iter().map(StateSet::len).sum();
        if StateSet::from_ids(lv.plateaux.iter().flat_map(|p| p.iter())).len() != total {
            return Err(tag("plateaux overlap"));
        }
        if lv.nu() >= prev_nu || lv.gamma_star <= prev_gamma {
            return Err(tag("ν or Γ⋆ not monotone"));
        }
        prev_nu = lv.nu();
        prev_gamma = lv.gamma_star;
        for (i, v) in lv.valleys.iter().enumerate() {
            check_cycle(l, v, &stable).map_err(|m| tag(&m))?;
            if v.bottom != lv.plateaux[i] || v.depth != lv.depths[i] {
                return Err(tag("valley bottom or depth"));
            }
            for w in &lv.valleys[i + 1..] {
                if !v.states.is_disjoint(&w.states) {
                    return Err(tag("valleys overlap"));
                }
            }
        }
        for c in &lv.sharp {
            check_cycle(l, c, &stable).map_err(|m| tag(&m))?;
        }
        all_cycles.extend(lv.valleys.iter().chain(&lv.sharp).map(|c| c.states.clone()));
        // ground states recurrent
        let recurrent: Vec<StateId> = lv
            .classification
            .components
            .iter()
            .flatten()
            .flat_map(|&i| lv.plateaux[i].iter())
            .collect();
        if ground.iter().any(|g| !recurrent.contains(&g)) {
            return Err(tag("a ground state is transient"));
        }
        // trichotomy
        let energy = |i: usize| e[lv.plateaux[i].first().unwrap().index()];
        let barrier = |i: usize, j: usize| set_height(&phi, &ids(&lv.plateaux[i]), &ids(&lv.plateaux[j])) - energy(i);
        for comp in &lv.classification.components {
            for &i in comp {
                if comp.len() == 1 {
                    if lv.depths[i] <= lv.gamma_star {
                        return Err(tag("singleton class not deeper than Γ⋆"));
                    }
                    continue;
                }
                if lv.depths[i] != lv.gamma_star {
                    return Err(tag("shared class off Γ⋆"));
                }
                let partners: Vec<usize> = (0..n).filter(|&j| j != i && barrier(i, j) == lv.gamma_star).collect();
                if partners.iter().any(|&j| energy(j) != energy(i)) {
                    return Err(tag("barrier partner at another energy"));
                }
                let rest: Vec<usize> = comp.iter().copied().filter(|&j| j != i).collect();
                if rest != partners {
                    return Err(tag("class differs from barrier partners"));
                }
            }
        }
        for &i in &lv.classification.transient {
            if lv.depths[i] != lv.gamma_star {
                return Err(tag("transient off Γ⋆"));
            }
            if !(0..n).any(|j| barrier(i, j) == lv.gamma_star && energy(j) < energy(i)) {
                return Err(tag("transient without a lower partner"));
            }
        }
        // rate sums and deep rows, exact
        for i in 0..n {
            let node = lv.induced.cycle_node(i);
            let into_delta: num_rational::Rational64 = (0..lv.induced.delta.len()).map(|u| lv.induced.rate(node, u)).sum();
            let into_delta = q(*into_delta.numer(), *into_delta.denom());
            let out = (0..n).fold(BigRational::zero(), |acc, j| acc + lv.limit.exact_rate(i, j));
            if out != into_delta {
                return Err(tag("rate-sum identity"));
            }
            if lv.depths[i] > lv.gamma_star && !lv.limit.rows[i].is_empty() {
                return Err(tag("deep cycle has outgoing rate"));
            }
        }
        if diag.rate_sum_gap != 0.0 {
            return Err(tag("nonzero rate-sum gap on an exact chain"));
        }
    }
    for (a, c) in all_cycles.iter().enumerate() {
        for d in &all_cycles[a + 1..] {
            if !c.is_disjoint(d) && !c.is_subset(d) && !d.is_subset(c) {
                return Err("two cycles overlap without nesting".into());
            }
        }
    }
    let last = h.levels.last().unwrap();
    let class = StateSet::from_ids(last.classification.components[0].iter().flat_map(|&i| last.plateaux[i].iter()));
    if last.nu() != 1 || class != ground {
        return Err("terminal class is not the ground states".into());
    }
    Ok(())
}
