//! Absorption computations on finite rate graphs.
//!
//! [`reduce_onto`] eliminates non-kept nodes one at a time (state
//! reduction): removing `v` adds `r(u,v)·r(v,w)/q(v)` to every `r(u,w)`,
//! where `q(v)` is the total rate out of `v`. The result is the trace of the
//! chain on the kept nodes, self-loops included. It works over any field, so
//! the same code runs on exact rationals and on floats.
//!
//! [`trace_rates_float`] computes the same quantity for large graphs with a
//! sparse LU factorization.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_traits::Num;

use crate::error::{Error, Result};

/// Relative residual accepted from the floating-point solver.
pub const FLOAT_RESIDUAL_TOL: f64 = 1e-10;

/// A directed edge with a positive weight.
pub type WeightedEdge<T> = (usize, usize, T);

/// Nodes that cannot reach any node of `target` along positive edges.
pub fn cannot_reach(n: usize, edges: &[(usize, usize)], target: &[bool]) -> Vec<usize> {
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in edges {
        incoming[v].push(u);
    }
    let mut seen = target.to_vec();
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| target[v]).collect();
    while let Some(v) = queue.pop_front() {
        for &u in &incoming[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    (0..n).filter(|&v| !seen[v]).collect()
}

/// Eliminates every node with `keep[v] == false`; returns the outgoing rows
/// of the kept nodes (indexed by node, empty for eliminated nodes), sorted by
/// target.
pub fn reduce_onto<T>(n: usize, edges: &[WeightedEdge<T>], keep: &[bool]) -> Result<Vec<Vec<(usize, T)>>>
where
    T: Clone + Num,
{
    let mut out: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n];
    let mut inc: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (u, v, r) in edges {
        if r.is_zero() || (u == v && !keep[*u]) {
            continue;
        }
        let slot = out[*u].entry(*v).or_insert_with(T::zero);
        *slot = slot.clone() + r.clone();
        inc[*v].insert(*u);
    }
    let mut alive: BTreeSet<usize> = (0..n).filter(|&v| !keep[v]).collect();
    while !alive.is_empty() {
        // cheapest fill first; ties broken by index for determinism
        let v = *alive
            .iter()
            .min_by_key(|&&v| (inc[v].len() * out[v].len(), v))
            .expect("nonempty");
        alive.remove(&v);
        let row = std::mem::take(&mut out[v]);
        let q = row
            .iter()
            .filter(|(&w, _)| w != v)
            .fold(T::zero(), |acc, (_, r)| acc + r.clone());
        if q.is_zero() {
            return Err(Error::UnreachableTarget(v));
        }
        let preds: Vec<usize> = std::mem::take(&mut inc[v]).into_iter().filter(|&u| u != v).collect();
        for w in row.keys() {
            inc[*w].remove(&v);
        }
        for u in preds {
            let r_uv = out[u].remove(&v).expect("edge present");
            let factor = r_uv / q.clone();
            for (&w, r_vw) in row.iter() {
                if w == v || (w == u && !keep[u]) {
                    continue;
                }
                let add = factor.clone() * r_vw.clone();
                let slot = out[u].entry(w).or_insert_with(T::zero);
                *slot = slot.clone() + add;
                inc[w].insert(u);
            }
        }
    }
    Ok(out
        .into_iter()
        .enumerate()
        .map(|(v, row)| if keep[v] { row.into_iter().collect() } else { Vec::new() })
        .collect())
}

/// Sparse LU factorization of a square real matrix.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseLu {
    /// Factors the matrix given by `(row, col, value)` entries; duplicates are
    /// summed.
    pub fn new(n: usize, entries: &[(usize, usize, f64)]) -> Result<SparseLu> {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(r, c, v) in entries {
            *merged.entry((c, r)).or_insert(0.0) += v;
        }
        let entries: Vec<(usize, usize, f64)> = merged.into_iter().map(|((c, r), v)| (r, c, v)).collect();
        let triplets: Vec<Triplet<usize, usize, f64>> =
            entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|_| Error::SingularSystem)?;
        let lu = a.sp_lu().map_err(|_| Error::SingularSystem)?;
        Ok(SparseLu { n, lu, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` (or `Aᵀ x = b`) for each column of `rhs` in place and
    /// checks the relative residual.
    pub fn solve(&self, rhs: &mut Mat<f64>, transpose: bool) -> Result<()> {
        let b = rhs.clone();
        if transpose {
            self.lu.solve_transpose_in_place(rhs.as_mut());
        } else {
            self.lu.solve_in_place(rhs.as_mut());
        }
        let a_norm = self.inf_norm(transpose);
        for j in 0..rhs.ncols() {
            let mut resid = vec![0.0; self.n];
            for &(r, c, v) in &self.entries {
                let (r, c) = if transpose { (c, r) } else { (r, c) };
                resid[r] += v * rhs[(c, j)];
            }
            let mut err = 0.0f64;
            let mut x_norm = 0.0f64;
            let mut b_norm = 0.0f64;
            for i in 0..self.n {
                let x = rhs[(i, j)];
                if !x.is_finite() {
                    return Err(Error::SingularSystem);
                }
                err = err.max((resid[i] - b[(i, j)]).abs());
                x_norm = x_norm.max(x.abs());
                b_norm = b_norm.max(b[(i, j)].abs());
            }
            let scale = a_norm * x_norm + b_norm;
            if scale > 0.0 && err > FLOAT_RESIDUAL_TOL * scale {
                return Err(Error::SingularSystem);
            }
        }
        Ok(())
    }

    fn inf_norm(&self, transpose: bool) -> f64 {
        let mut rows = vec![0.0f64; self.n];
        for &(r, c, v) in &self.entries {
            rows[if transpose { c } else { r }] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

/// Trace rates from each of `sources` onto the target nodes, in floating
/// point. Row `k` of the result lists `(target, rate)` for `sources[k]`,
/// including targets reached with rate zero only when a direct edge exists.
pub fn trace_rates_float(
    n: usize,
    edges: &[WeightedEdge<f64>],
    target: &[bool],
    sources: &[usize],
) -> Result<Vec<Vec<(usize, f64)>>> {
    let mut pos = vec![usize::MAX; n];
    let mut inner = Vec::new();
    for v in 0..n {
        if !target[v] {
            pos[v] = inner.len();
            inner.push(v);
        }
    }
    let m = inner.len();
    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(u, v, r) in edges {
        if u != v && r != 0.0 {
            out[u].push((v, r));
        }
    }
    let mut entries = Vec::new();
    for &v in &inner {
        let q: f64 = out[v].iter().map(|&(_, r)| r).sum();
        if q == 0.0 {
            return Err(Error::UnreachableTarget(v));
        }
        entries.push((pos[v], pos[v], q));
        for &(w, r) in &out[v] {
            if !target[w] {
                entries.push((pos[v], pos[w], -r));
            }
        }
    }
    let lu = if m > 0 { Some(SparseLu::new(m, &entries)?) } else { None };
    let mut result = Vec::with_capacity(sources.len());
    const BATCH: usize = 64;
    for chunk in sources.chunks(BATCH) {
        let mut z = Mat::<f64>::zeros(m, chunk.len());
        for (k, &s) in chunk.iter().enumerate() {
            for &(w, r) in &out[s] {
                if !target[w] {
                    z[(pos[w], k)] += r;
                }
            }
        }
        if let Some(lu) = &lu {
            lu.solve(&mut z, true)?;
        }
        for (k, &s) in chunk.iter().enumerate() {
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            for &(w, r) in &out[s] {
                if target[w] {
                    *row.entry(w).or_insert(0.0) += r;
                }
            }
            for (i, &v) in inner.iter().enumerate() {
                let zv = z[(i, k)];
                if zv == 0.0 {
                    continue;
                }
                for &(w, r) in &out[v] {
                    if target[w] {
                        *row.entry(w).or_insert(0.0) += zv * r;
                    }
                }
            }
            result.push(row.into_iter().collect());
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn gamblers_ruin_exact() {
        // 0 <- 1 <-> 2 -> 3 with unit rates; start at 1
        let edges: Vec<_> = [(1, 0), (1, 2), (2, 1), (2, 3), (4, 1)]
            .iter()
            .map(|&(u, v)| (u, v, q(1, 1)))
            .collect();
        let keep = [true, false, false, true, true];
        let rows = reduce_onto(5, &edges, &keep).unwrap();
        assert_eq!(rows[4], vec![(0, q(2, 3)), (3, q(1, 3))]);
    }

    #[test]
    fn self_loops_survive_on_kept_nodes() {
        // a -> m, m -> a, m -> b
        let edges = vec![(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0)];
        let rows = reduce_onto(3, &edges, &[true, false, true]).unwrap();
        assert_eq!(rows[0], vec![(0, 0.5), (2, 0.5)]);
    }

    #[test]
    fn closed_class_is_reported() {
        let edges = vec![(0, 1, 1.0), (1, 2, 1.0), (2, 1, 1.0)];
        assert!(matches!(
            reduce_onto(3, &edges, &[true, false, false]),
            Err(Error::UnreachableTarget(_))
        ));
        assert_eq!(cannot_reach(3, &[(0, 1), (1, 2), (2, 1)], &[true, false, false]), vec![1, 2]);
    }

    #[test]
    fn float_route_matches_exact_route() {
        let pairs = [(0, 2, 3), (2, 0, 1), (2, 3, 2), (3, 2, 1), (3, 1, 1), (1, 3, 5), (3, 4, 1), (4, 3, 2)];
        let exact: Vec<_> = pairs.iter().map(|&(u, v, r)| (u, v, q(r, 1))).collect();
        let float: Vec<_> = pairs.iter().map(|&(u, v, r)| (u, v, r as f64)).collect();
        let keep = [true, true, false, false, true];
        let rows = reduce_onto(5, &exact, &keep).unwrap();
        let approx = trace_rates_float(5, &float, &keep, &[0, 1, 4]).unwrap();
        for (k, &s) in [0usize, 1, 4].iter().enumerate() {
            assert_eq!(rows[s].len(), approx[k].len());
            for ((t1, r1), (t2, r2)) in rows[s].iter().zip(&approx[k]) {
                assert_eq!(t1, t2);
                let r1: f64 = num_traits::ToPrimitive::to_f64(r1).unwrap();
                assert!((r1 - r2).abs() < 1e-12, "{r1} vs {r2}");
            }
        }
    }
}
