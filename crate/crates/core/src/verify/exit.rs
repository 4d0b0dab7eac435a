//! Exit distributions from cycles: the contact-count limit and the
//! finite-β absorption law.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::landscape::{Landscape, StateId, StateSet};
use crate::plateaux::Cycle;
use crate::reduction::{reduce_onto, trace_rates_float};

/// Cycles up to this size are solved over rationals.
pub const EXACT_EXIT_LIMIT: usize = 64;

/// Bits of the fixed-point representation of `e^{-β}`; about 96 decimal
/// digits.
const EXP_BITS: u64 = 320;

#[derive(Clone, Debug, Serialize)]
pub struct ExitDistribution {
    /// Boundary states with their probability, sorted by id.
    pub probabilities: Vec<(StateId, f64)>,
    /// Whether the solve ran on rationals (with `e^{-β}` rounded to
    /// [`EXP_BITS`] bits) rather than floats.
    pub high_precision: bool,
}

impl ExitDistribution {
    pub fn get(&self, s: StateId) -> f64 {
        self.probabilities
            .iter()
            .find(|(t, _)| *t == s)
            .map_or(0.0, |&(_, p)| p)
    }
}

/// Contact count of each minimal boundary state: the number of cycle states
/// adjacent to it.
pub fn contact_counts(l: &Landscape, c: &Cycle) -> Result<Vec<(StateId, usize)>> {
    let (_, min_boundary) = l.boundary_sets(&c.states)?;
    Ok(min_boundary
        .iter()
        .map(|xi| (xi, l.neighbors(xi).iter().filter(|&&t| c.states.contains(t)).count()))
        .collect())
}

/// Limit law of the exit point: proportional to contact counts on the
/// minimal boundary.
pub fn exit_distribution_limit(l: &Landscape, c: &Cycle) -> Result<Vec<(StateId, BigRational)>> {
    let counts = contact_counts(l, c)?;
    let total: usize = counts.iter().map(|&(_, a)| a).sum();
    Ok(counts
        .into_iter()
        .map(|(s, a)| (s, BigRational::new(BigInt::from(a), BigInt::from(total))))
        .collect())
}

/// `e^{-β}` as a rational with relative error below `2^-300` for β ≤ 100.
pub fn exp_neg(beta: f64) -> BigRational {
    assert!(beta.is_finite() && beta >= 0.0);
    let one = BigInt::one() << EXP_BITS;
    let x = BigRational::from_float(beta).expect("finite");
    let mut halvings = 0u32;
    while beta / 2f64.powi(halvings as i32) > 0.5 {
        halvings += 1;
    }
    let scaled = x * BigRational::from_integer(one.clone()) / BigRational::from_integer(BigInt::one() << halvings);
    let xs = scaled.to_integer();
    let mut sum = one.clone();
    let mut term = one.clone();
    let mut k = 1u32;
    loop {
        term = ((term * &xs) >> EXP_BITS) / BigInt::from(k);
        if term.is_zero() {
            break;
        }
        sum += &term;
        k += 1;
    }
    for _ in 0..halvings {
        sum = (&sum * &sum) >> EXP_BITS;
    }
    BigRational::new(one, sum)
}

/// Absorption law on `∂C` of the chain started uniformly on `start`
/// (default: the bottom of `c`).
pub fn exit_distribution_exact(
    l: &Landscape,
    c: &Cycle,
    beta: f64,
    start: Option<&StateSet>,
) -> Result<ExitDistribution> {
    let start = start.unwrap_or(&c.bottom);
    if start.is_empty() || !start.is_subset(&c.states) {
        return Err(Error::InvalidParams("start states must lie in the cycle".into()));
    }
    let (boundary, _) = l.boundary_sets(&c.states)?;
    // local numbering: cycle states, then boundary, then a virtual source
    let mut local = vec![usize::MAX; l.n_states()];
    let nodes: Vec<StateId> = c.states.iter().chain(boundary.iter()).collect();
    for (k, s) in nodes.iter().enumerate() {
        local[s.index()] = k;
    }
    let n_cycle = c.states.len();
    let source = nodes.len();
    let n = source + 1;
    let mut keep = vec![true; n];
    keep[..n_cycle].iter_mut().for_each(|k| *k = false);

    let mut arcs: Vec<(usize, usize, i64)> = Vec::new();
    for s in c.states.iter() {
        for &t in l.neighbors(s) {
            let up = (l.energy(t).0 - l.energy(s).0).max(0);
            arcs.push((local[s.index()], local[t.index()], up));
        }
    }
    let high_precision = n_cycle <= EXACT_EXIT_LIMIT;
    let row: Vec<(usize, f64)> = if high_precision {
        let q = exp_neg(beta);
        let max_up = arcs.iter().map(|a| a.2).max().unwrap_or(0);
        let mut powers = vec![BigRational::one()];
        for _ in 0..max_up {
            let next = powers.last().expect("nonempty") * &q;
            powers.push(next);
        }
        let w = BigRational::new(BigInt::one(), BigInt::from(start.len()));
        let mut edges: Vec<(usize, usize, BigRational)> =
            arcs.iter().map(|&(u, v, up)| (u, v, powers[up as usize].clone())).collect();
        edges.extend(start.iter().map(|s| (source, local[s.index()], w.clone())));
        let rows = reduce_onto(n, &edges, &keep)?;
        rows[source]
            .iter()
            .map(|(t, p)| (*t, p.to_f64().expect("finite")))
            .collect()
    } else {
        let w = 1.0 / start.len() as f64;
        let mut edges: Vec<(usize, usize, f64)> = arcs
            .iter()
            .map(|&(u, v, up)| (u, v, (-beta * up as f64).exp()))
            .collect();
        edges.extend(start.iter().map(|s| (source, local[s.index()], w)));
        trace_rates_float(n, &edges, &keep, &[source])?.remove(0)
    };
    let total: f64 = row.iter().map(|&(_, p)| p).sum();
    let mut probabilities: Vec<(StateId, f64)> = row
        .into_iter()
        .filter(|&(t, _)| t != source)
        .map(|(t, p)| (nodes[t], p / total))
        .collect();
    probabilities.sort_by_key(|&(s, _)| s);
    Ok(ExitDistribution { probabilities, high_precision })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::build_landscape;
    use crate::plateaux::validate_cycle;

    /// a, b flat at 0; x1 touches a; x2 touches a and b.
    fn fork() -> Landscape {
        build_landscape(
            vec![("a".into(), 0), ("b".into(), 0), ("x1".into(), 1), ("x2".into(), 1)],
            &[(0, 1), (0, 2), (0, 3), (1, 3)],
        )
        .unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn limit_is_proportional_to_contacts() {
        let l = fork();
        let c = validate_cycle(&l, &StateSet::from_indices([0, 1])).unwrap();
        let d = exit_distribution_limit(&l, &c).unwrap();
        assert_eq!(d, vec![(StateId(2), q(1, 3)), (StateId(3), q(2, 3))]);
    }

    #[test]
    fn exp_neg_is_accurate() {
        for beta in [0.0, 0.3, 1.0, 5.0, 20.0, 37.5] {
            let r = exp_neg(beta).to_f64().unwrap();
            assert!((r / (-beta).exp() - 1.0).abs() < 1e-14, "{beta}");
        }
        // e^{-1} against 40 known digits
        let e1 = exp_neg(1.0);
        let digits = (e1 * BigRational::from_integer(BigInt::from(10).pow(40))).to_integer();
        assert_eq!(digits.to_string(), "3678794411714423215955237701614608674458");
    }

    #[test]
    fn fork_converges_to_the_limit() {
        let l = fork();
        let c = validate_cycle(&l, &StateSet::from_indices([0, 1])).unwrap();
        let mut prev = f64::INFINITY;
        for beta in [2.0, 5.0, 10.0, 20.0] {
            let d = exit_distribution_exact(&l, &c, beta, None).unwrap();
            assert!(d.high_precision);
            let gap = (d.get(StateId(2)) - 1.0 / 3.0).abs().max((d.get(StateId(3)) - 2.0 / 3.0).abs());
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn matches_a_hand_solved_chain() {
        // from a: b at 1, x1 and x2 at e; from b: a at 1, x2 at e
        let l = fork();
        let c = validate_cycle(&l, &StateSet::from_indices([0, 1])).unwrap();
        let beta = 3.0f64;
        let e = (-beta).exp();
        // exit at x1: h_a = (h_b + e) / (1 + 2e), h_b = h_a / (1 + e)
        let h_a = e / (1.0 + 2.0 * e - 1.0 / (1.0 + e));
        let h_b = h_a / (1.0 + e);
        let d = exit_distribution_exact(&l, &c, beta, None).unwrap();
        assert!((d.get(StateId(2)) - (h_a + h_b) / 2.0).abs() < 1e-14);
        let from_a = exit_distribution_exact(&l, &c, beta, Some(&StateSet::from_indices([0]))).unwrap();
        assert!((from_a.get(StateId(2)) - h_a).abs() < 1e-14);
    }

    #[test]
    fn non_minimal_boundary_mass_decays() {
        // cycle {a} with boundary minima b (1) and c (2)
        let l = build_landscape(
            vec![("a".into(), 0), ("b".into(), 1), ("c".into(), 2), ("d".into(), -1)],
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        let c = validate_cycle(&l, &StateSet::from_indices([0])).unwrap();
        for beta in [5.0, 10.0, 20.0] {
            let d = exit_distribution_exact(&l, &c, beta, None).unwrap();
            assert!(d.get(StateId(2)) <= 2.0 * (-beta).exp());
        }
    }
}
