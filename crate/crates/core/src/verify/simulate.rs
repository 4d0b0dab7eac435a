//! Seeded continuous-time Metropolis trajectories.
//!
//! Each trajectory draws from its own ChaCha stream selected by
//! `(seed, index)`, so results do not depend on how trajectories are
//! scheduled or aggregated.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::landscape::{Landscape, StateId, StateSet};
use crate::verify::rates::RateSystem;

/// When a trajectory ends.
#[derive(Clone, Debug, Default)]
pub struct Stop {
    /// Stop on entering this set (the start itself does not count).
    pub hit: Option<StateSet>,
    /// Stop once this much time has elapsed.
    pub time_budget: Option<f64>,
    /// Safety bound on the number of jumps.
    pub max_jumps: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Hit,
    TimeBudget,
    MaxJumps,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    /// Visited states with the time spent in each; the last holding time is
    /// truncated at the budget, or zero when stopped by a hit.
    pub jumps: Vec<(StateId, f64)>,
    pub seed: u64,
    pub index: u64,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn last(&self) -> StateId {
        self.jumps.last().expect("nonempty").0
    }
}

/// Independent generator for trajectory `index` under master `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn pick(rs: &RateSystem, i: usize, rng: &mut ChaCha8Rng) -> usize {
    let rates = rs.rates_from(i);
    let mut u = rng.gen::<f64>() * rs.total(i);
    for (k, &r) in rates.iter().enumerate() {
        if u < r {
            return k;
        }
        u -= r;
    }
    rates.len() - 1
}

fn holding(rs: &RateSystem, i: usize, rng: &mut ChaCha8Rng) -> f64 {
    // 1 - u lies in (0, 1]
    -(1.0 - rng.gen::<f64>()).ln() / rs.total(i)
}

pub fn simulate(l: &Landscape, rs: &RateSystem, start: StateId, stop: &Stop, seed: u64, index: u64) -> Result<Trajectory> {
    if start.index() >= l.n_states() {
        return Err(Error::UnknownState(start));
    }
    if stop.hit.is_none() && stop.time_budget.is_none() && stop.max_jumps.is_none() {
        return Err(Error::InvalidParams("a stopping rule is required".into()));
    }
    let mut rng = stream(seed, index);
    let hit = stop.hit.as_ref().map(|h| h.mask(l.n_states()));
    let budget = stop.time_budget.unwrap_or(f64::INFINITY);
    let max_jumps = stop.max_jumps.unwrap_or(u64::MAX);
    let mut jumps = Vec::new();
    let mut t = 0.0;
    let mut cur = start.index();
    let mut n_jumps = 0u64;
    let reason = loop {
        let dt = holding(rs, cur, &mut rng);
        if t + dt >= budget {
            jumps.push((StateId::from(cur), budget - t));
            break StopReason::TimeBudget;
        }
        jumps.push((StateId::from(cur), dt));
        t += dt;
        if n_jumps == max_jumps {
            break StopReason::MaxJumps;
        }
        cur = l.neighbors_of(cur)[pick(rs, cur, &mut rng)].index();
        n_jumps += 1;
        if hit.as_ref().is_some_and(|h| h[cur]) {
            jumps.push((StateId::from(cur), 0.0));
            break StopReason::Hit;
        }
    };
    Ok(Trajectory { jumps, seed, index, stop: reason })
}

/// First state of `target` reached by the jump chain from `start` (holding
/// times are irrelevant for hitting laws and are skipped).
pub fn first_hit(l: &Landscape, rs: &RateSystem, start: StateId, target: &[bool], seed: u64, index: u64) -> StateId {
    let mut rng = stream(seed, index);
    let mut cur = start.index();
    loop {
        cur = l.neighbors_of(cur)[pick(rs, cur, &mut rng)].index();
        if target[cur] {
            return StateId::from(cur);
        }
    }
}

/// Which valley the jump chain enters first after leaving the valley of
/// `start`; `valleys` must be disjoint and `start` must lie in one of them.
pub fn next_valley(
    l: &Landscape,
    rs: &RateSystem,
    valleys: &[StateSet],
    start: StateId,
    seed: u64,
    index: u64,
) -> Result<usize> {
    let mut owner = vec![usize::MAX; l.n_states()];
    for (k, v) in valleys.iter().enumerate() {
        for s in v.iter() {
            owner[s.index()] = k;
        }
    }
    let home = owner[start.index()];
    if home == usize::MAX {
        return Err(Error::InvalidParams(format!("{start} is in no valley")));
    }
    let mut rng = stream(seed, index);
    let mut cur = start.index();
    let mut outside = false;
    loop {
        cur = l.neighbors_of(cur)[pick(rs, cur, &mut rng)].index();
        match owner[cur] {
            usize::MAX => outside = true,
            k if k != home || outside => return Ok(k),
            _ => {}
        }
    }
}

/// Time spent outside `set` divided by `horizon`, for one trajectory.
pub fn occupation_outside(
    l: &Landscape,
    rs: &RateSystem,
    set: &StateSet,
    start: StateId,
    horizon: f64,
    seed: u64,
    index: u64,
) -> Result<f64> {
    let stop = Stop { time_budget: Some(horizon), ..Stop::default() };
    let tr = simulate(l, rs, start, &stop, seed, index)?;
    let outside: f64 = tr.jumps.iter().filter(|(s, _)| !set.contains(*s)).map(|&(_, dt)| dt).sum();
    Ok(outside / horizon)
}
