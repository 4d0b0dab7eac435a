//! Resolvent equations at finite β versus the limit chain.
//!
//! The microscopic equation `(λ − e^{Γ⋆β} L_β) F = G` is solved on the
//! landscape, with `G` equal to `g(P_i)` on the valley of `P_i` and zero
//! elsewhere. The macroscopic equation `(λ − 𝔏) f = g` is solved on the
//! limit chain. Convergence means `F` is close to `f(P_i)` throughout each
//! valley.

use faer::Mat;

use crate::error::{Error, Result};
use crate::hierarchy::Level;
use crate::landscape::{Landscape, StateId};
use crate::reduction::SparseLu;

/// Solves `(λ − 𝔏) f = g` on the limit chain of `level`, one column per `g`.
pub fn macroscopic_resolvent(level: &Level, lambda: f64, gs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = level.plateaux.len();
    let mut entries = Vec::new();
    for i in 0..n {
        let mut out = 0.0;
        for (j, r) in &level.limit.rows[i] {
            if *j != i {
                let r = r.to_f64();
                out += r;
                entries.push((i, *j, -r));
            }
        }
        entries.push((i, i, lambda + out));
    }
    solve_columns(n, &entries, gs)
}

/// Solves `(λ − e^{Γβ} L_β) F = G` on `l`, one column per `g`.
pub fn microscopic_resolvent(
    l: &Landscape,
    level: &Level,
    lambda: f64,
    gs: &[Vec<f64>],
    beta: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = l.n_states();
    let scale = level.gamma_star as f64 * beta;
    let mut entries = Vec::new();
    for i in 0..n {
        let s = StateId::from(i);
        let mut out = 0.0;
        for &t in l.neighbors(s) {
            let up = (l.energy(t).0 - l.energy(s).0).max(0) as f64;
            let r = (scale - beta * up).exp();
            out += r;
            entries.push((i, t.index(), -r));
        }
        entries.push((i, i, lambda + out));
    }
    let owner = valley_owner(n, level);
    let lifted: Vec<Vec<f64>> = gs
        .iter()
        .map(|g| owner.iter().map(|o| o.map_or(0.0, |k| g[k])).collect())
        .collect();
    solve_columns(n, &entries, &lifted)
}

/// `sup` over each valley of `|F − f(P_i)|`, for one `g` at one β.
pub fn resolvent_deviation(l: &Landscape, level: &Level, lambda: f64, g: &[f64], beta: f64) -> Result<Vec<f64>> {
    Ok(resolvent_deviations(l, level, lambda, &[g.to_vec()], beta)?.remove(0))
}

/// [`resolvent_deviation`] for several `g` sharing one factorization.
pub fn resolvent_deviations(
    l: &Landscape,
    level: &Level,
    lambda: f64,
    gs: &[Vec<f64>],
    beta: f64,
) -> Result<Vec<Vec<f64>>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParams(format!("lambda must be positive, got {lambda}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParams(format!("beta must be positive, got {beta}")));
    }
    let n = level.plateaux.len();
    if let Some(g) = gs.iter().find(|g| g.len() != n) {
        return Err(Error::InvalidParams(format!("g has {} entries, level has {n} plateaux", g.len())));
    }
    let f = macroscopic_resolvent(level, lambda, gs)?;
    let big_f = microscopic_resolvent(l, level, lambda, gs, beta)?;
    Ok(f.iter()
        .zip(&big_f)
        .map(|(f, big_f)| {
            level
                .valleys
                .iter()
                .enumerate()
                .map(|(i, v)| v.states.iter().map(|s| (big_f[s.index()] - f[i]).abs()).fold(0.0, f64::max))
                .collect()
        })
        .collect())
}

fn valley_owner(n: usize, level: &Level) -> Vec<Option<usize>> {
    let mut owner = vec![None; n];
    for (i, v) in level.valleys.iter().enumerate() {
        for s in v.states.iter() {
            owner[s.index()] = Some(i);
        }
    }
    owner
}

fn solve_columns(n: usize, entries: &[(usize, usize, f64)], columns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if columns.is_empty() {
        return Ok(Vec::new());
    }
    let lu = SparseLu::new(n, entries)?;
    let mut rhs = Mat::<f64>::from_fn(n, columns.len(), |i, j| columns[j][i]);
    lu.solve(&mut rhs, false)?;
    Ok((0..columns.len()).map(|j| (0..n).map(|i| rhs[(i, j)]).collect()).collect())
}
