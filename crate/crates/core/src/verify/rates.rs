//! Metropolis rates and Gibbs weights at a fixed inverse temperature.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::landscape::{Landscape, StateId};

/// Inverse temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaParams {
    pub beta: f64,
}

impl BetaParams {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta > 0.0 {
            Ok(BetaParams { beta })
        } else {
            Err(Error::InvalidParams(format!("beta must be positive, got {beta}")))
        }
    }
}

/// Rates `exp(-β·max(ΔH, 0))` on every directed edge, laid out parallel to
/// the landscape's neighbor lists, plus normalized log Gibbs weights.
#[derive(Clone, Debug)]
pub struct RateSystem {
    pub beta: f64,
    log_weights: Vec<f64>,
    /// `rates[i][k]` is the rate from `i` to its `k`-th neighbor.
    rates: Vec<Vec<f64>>,
    totals: Vec<f64>,
}

/// Energy exponent of `μ(η)·r(η,ξ)` up to the common `-β` factor and `Z`:
/// `H(η) + max(H(ξ) - H(η), 0)`. Detailed balance is the symmetry of this
/// integer in its two arguments.
pub fn flux_exponent(l: &Landscape, from: StateId, to: StateId) -> i64 {
    let (a, b) = (l.energy(from).0, l.energy(to).0);
    a + (b - a).max(0)
}

pub fn rate_system(l: &Landscape, beta: BetaParams) -> RateSystem {
    let b = beta.beta;
    let n = l.n_states();
    let min = l.min_energy().0;
    // log Z with the ground energy factored out, so exp never overflows
    let shifted: Vec<f64> = (0..n).map(|i| -b * (l.energy_of(i).0 - min) as f64).collect();
    let log_z_shifted = shifted.iter().map(|&x| x.exp()).sum::<f64>().ln();
    let log_weights = shifted.iter().map(|&x| x - log_z_shifted).collect();
    let mut rates = Vec::with_capacity(n);
    let mut totals = Vec::with_capacity(n);
    for i in 0..n {
        let s = StateId::from(i);
        debug_assert!(l
            .neighbors(s)
            .iter()
            .all(|&t| flux_exponent(l, s, t) == flux_exponent(l, t, s)));
        let row: Vec<f64> = l
            .neighbors(s)
            .iter()
            .map(|&t| (-b * (l.energy(t).0 - l.energy(s).0).max(0) as f64).exp())
            .collect();
        totals.push(row.iter().sum());
        rates.push(row);
    }
    RateSystem { beta: b, log_weights, rates, totals }
}

impl RateSystem {
    pub fn rates_from(&self, i: usize) -> &[f64] {
        &self.rates[i]
    }

    /// Total jump rate out of `i`.
    pub fn total(&self, i: usize) -> f64 {
        self.totals[i]
    }

    pub fn log_gibbs(&self, i: usize) -> f64 {
        self.log_weights[i]
    }

    pub fn gibbs(&self) -> Vec<f64> {
        self.log_weights.iter().map(|x| x.exp()).collect()
    }

    /// Largest `|log μ(η) + log r(η,ξ) − log μ(ξ) − log r(ξ,η)|` over edges.
    pub fn detailed_balance_gap(&self, l: &Landscape) -> f64 {
        let mut gap = 0.0f64;
        for (a, b) in l.edges() {
            let (i, j) = (a.index(), b.index());
            let ka = l.neighbors(a).iter().position(|&t| t == b).expect("edge");
            let kb = l.neighbors(b).iter().position(|&t| t == a).expect("edge");
            let lhs = self.log_weights[i] + self.rates[i][ka].ln();
            let rhs = self.log_weights[j] + self.rates[j][kb].ln();
            gap = gap.max((lhs - rhs).abs());
        }
        gap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::build_landscape;

    fn w() -> Landscape {
        let e = [0, 3, 1, 2, 1, 3, 0];
        let states = e.iter().enumerate().map(|(i, &x)| (format!("s{i}"), x)).collect();
        let edges: Vec<_> = (0..6).map(|i| (i, i + 1)).collect();
        build_landscape(states, &edges).unwrap()
    }

    #[test]
    fn metropolis_rates() {
        let l = build_landscape(vec![("a".into(), 0), ("b".into(), 2), ("c".into(), 2)], &[(0, 1), (1, 2)]).unwrap();
        let rs = rate_system(&l, BetaParams::new(1.0).unwrap());
        assert_eq!(rs.rates_from(0), &[(-2.0f64).exp()]);
        assert_eq!(rs.rates_from(1), &[1.0, 1.0]);
        assert_eq!(rs.rates_from(2), &[1.0]);
    }

    #[test]
    fn gibbs_peaks_on_ground_states() {
        let l = w();
        let rs = rate_system(&l, BetaParams::new(2.0).unwrap());
        let mu = rs.gibbs();
        assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in [1, 2, 3, 4, 5] {
            assert!(mu[0] > mu[i] && mu[6] > mu[i]);
        }
        assert_eq!(mu[0], mu[6]);
    }

    #[test]
    fn detailed_balance() {
        let l = w();
        for beta in [0.5, 4.0, 20.0] {
            let rs = rate_system(&l, BetaParams::new(beta).unwrap());
            assert!(rs.detailed_balance_gap(&l) < 1e-12 * beta.max(1.0));
        }
        for (a, b) in l.edges() {
            assert_eq!(flux_exponent(&l, a, b), flux_exponent(&l, b, a));
        }
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(BetaParams::new(0.0).is_err());
        assert!(BetaParams::new(f64::NAN).is_err());
    }
}
