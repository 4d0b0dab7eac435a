//! Kawasaki lattice gas on the K×L torus.
//!
//! A configuration is a bit pattern over the K·L sites, site `(col, row)` at
//! bit `row·K + col`, with exactly `L·N0` particles. The energy is minus the
//! number of occupied nearest-neighbor bonds; a move exchanges a particle
//! with an adjacent vacancy.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::landscape::{Energy, Landscape};

/// Default cap on the number of enumerated states.
pub const DEFAULT_ENUMERATION_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KawasakiParams {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N0")]
    pub n0: usize,
}

impl KawasakiParams {
    /// Requires K > L, L/4 < N0 < K/2 and at most 64 sites.
    pub fn new(k: usize, l: usize, n0: usize) -> Result<Self> {
        if l < 2 || k <= l {
            return Err(Error::InvalidParams(format!("need K > L >= 2, got K={k}, L={l}")));
        }
        if 4 * n0 <= l || 2 * n0 >= k {
            return Err(Error::InvalidParams(format!("need L/4 < N0 < K/2, got N0={n0}")));
        }
        if k * l > 64 {
            return Err(Error::InvalidParams(format!("{} sites exceed the 64-site limit", k * l)));
        }
        Ok(KawasakiParams { k, l, n0 })
    }

    pub fn n_sites(&self) -> usize {
        self.k * self.l
    }

    pub fn n_particles(&self) -> u32 {
        (self.l * self.n0) as u32
    }

    /// Ground-state energy ℍ₀ = −2·L·N0 + L.
    pub fn h0(&self) -> Energy {
        Energy(-2 * (self.l * self.n0) as i64 + self.l as i64)
    }

    pub fn site(&self, col: usize, row: usize) -> usize {
        (row % self.l) * self.k + col % self.k
    }

    fn right(&self, s: usize) -> usize {
        let (col, row) = (s % self.k, s / self.k);
        self.site(col + 1, row)
    }

    fn up(&self, s: usize) -> usize {
        let (col, row) = (s % self.k, s / self.k);
        self.site(col, row + 1)
    }

    /// Hex label width for a bit pattern.
    fn label_width(&self) -> usize {
        self.n_sites().div_ceil(4)
    }
}

/// Occupancy bit pattern with a cached particle count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeConfig {
    bits: u64,
    count: u32,
}

impl LatticeConfig {
    pub fn from_bits(p: &KawasakiParams, bits: u64) -> Result<Self> {
        if p.n_sites() < 64 && bits >> p.n_sites() != 0 {
            return Err(Error::IndexOutOfRange(format!("bits beyond site {}", p.n_sites())));
        }
        let count = bits.count_ones();
        if count != p.n_particles() {
            return Err(Error::WrongParticleCount {
                found: count,
                expected: p.n_particles(),
            });
        }
        Ok(LatticeConfig { bits, count })
    }

    /// Parses a hexadecimal label as produced by [`LatticeConfig::label`].
    pub fn from_label(p: &KawasakiParams, label: &str) -> Result<Self> {
        let bits = u64::from_str_radix(label, 16).map_err(|e| Error::InvalidParams(format!("bad label {label}: {e}")))?;
        Self::from_bits(p, bits)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn occupied(&self, p: &KawasakiParams, col: usize, row: usize) -> bool {
        self.bits >> p.site(col, row) & 1 == 1
    }

    pub fn label(&self, p: &KawasakiParams) -> String {
        format!("{:0w$x}", self.bits, w = p.label_width())
    }

    /// Translation by `(dx, dy)` on the torus.
    pub fn translate(&self, p: &KawasakiParams, dx: usize, dy: usize) -> Self {
        let mut bits = 0u64;
        for s in set_bits(self.bits) {
            let (col, row) = (s % p.k, s / p.k);
            bits |= 1 << p.site(col + dx, row + dy);
        }
        LatticeConfig { bits, count: self.count }
    }

    /// Row-by-row picture, top row last, `#` for particles.
    pub fn render(&self, p: &KawasakiParams) -> String {
        let mut out = String::new();
        for row in 0..p.l {
            for col in 0..p.k {
                out.push(if self.occupied(p, col, row) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

fn set_bits(mut bits: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (bits != 0).then(|| {
            let s = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            s
        })
    })
}

fn check_count(p: &KawasakiParams, c: &LatticeConfig) -> Result<()> {
    if c.count != p.n_particles() {
        return Err(Error::WrongParticleCount {
            found: c.count,
            expected: p.n_particles(),
        });
    }
    Ok(())
}

fn bond_energy(p: &KawasakiParams, bits: u64) -> i64 {
    let mut bonds = 0i64;
    for s in set_bits(bits) {
        bonds += (bits >> p.right(s) & 1) as i64 + (bits >> p.up(s) & 1) as i64;
    }
    -bonds
}

/// ℍ = −(number of occupied–occupied bonds).
pub fn hamiltonian(p: &KawasakiParams, c: &LatticeConfig) -> Result<Energy> {
    check_count(p, c)?;
    Ok(Energy(bond_energy(p, c.bits)))
}

/// Number of bonds joining an occupied and a vacant site.
pub fn interface(p: &KawasakiParams, c: &LatticeConfig) -> u32 {
    let mut count = 0;
    for s in 0..p.n_sites() {
        let here = c.bits >> s & 1;
        count += (here != c.bits >> p.right(s) & 1) as u32;
        count += (here != c.bits >> p.up(s) & 1) as u32;
    }
    count
}

fn neighbor_bits(p: &KawasakiParams, bits: u64, out: &mut Vec<u64>) {
    out.clear();
    for s in 0..p.n_sites() {
        for t in [p.right(s), p.up(s)] {
            if t != s && (bits >> s & 1) != (bits >> t & 1) {
                out.push(bits ^ (1 << s) ^ (1 << t));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
}

/// All configurations reachable by one particle–vacancy exchange.
pub fn kawasaki_neighbors(p: &KawasakiParams, c: &LatticeConfig) -> Vec<LatticeConfig> {
    let mut out = Vec::new();
    neighbor_bits(p, c.bits, &mut out);
    out.into_iter()
        .map(|bits| LatticeConfig { bits, count: c.count })
        .collect()
}

fn column_bits(p: &KawasakiParams, col: usize) -> u64 {
    (0..p.l).fold(0, |acc, row| acc | 1 << p.site(col, row))
}

/// Sites `{col} × [start, start + len − 1]` (rows mod L).
pub fn stick(p: &KawasakiParams, col: usize, len: usize, start: usize) -> u64 {
    (0..len).fold(0, |acc, i| acc | 1 << p.site(col, start + i))
}

fn check_index(name: &str, v: usize, bound: usize) -> Result<()> {
    if v >= bound {
        return Err(Error::IndexOutOfRange(format!("{name} = {v} not below {bound}")));
    }
    Ok(())
}

/// σᵏ: columns k, …, k+N0−1 full.
pub fn ground_state(p: &KawasakiParams, k: usize) -> Result<LatticeConfig> {
    check_index("k", k, p.k)?;
    let bits = (k..k + p.n0).fold(0, |acc, col| acc | column_bits(p, col));
    LatticeConfig::from_bits(p, bits)
}

/// σᵏ_{m;ℓ,ℓ′}: columns k+1, …, k+N0−1 full, a stick of length L−m from
/// row ℓ in column k and a stick of length m from row ℓ′ in column k+N0.
pub fn shallow_bottom(p: &KawasakiParams, k: usize, m: usize, l1: usize, l2: usize) -> Result<LatticeConfig> {
    check_index("k", k, p.k)?;
    if m == 0 || m >= p.l {
        return Err(Error::IndexOutOfRange(format!("m = {m} outside [1, {}]", p.l - 1)));
    }
    check_index("ℓ", l1, p.l)?;
    check_index("ℓ′", l2, p.l)?;
    let full = (k + 1..k + p.n0).fold(0, |acc, col| acc | column_bits(p, col));
    let bits = full | stick(p, k, p.l - m, l1) | stick(p, k + p.n0, m, l2);
    LatticeConfig::from_bits(p, bits)
}

/// Path σᵏ → σᵏ⁺¹ that shifts one row at a time: step `n = p + N0·q`
/// exchanges sites (k+N0−p−1, q) and (k+N0−p, q).
pub fn reference_path(p: &KawasakiParams, k: usize) -> Result<Vec<LatticeConfig>> {
    let mut current = ground_state(p, k)?;
    let mut path = vec![current];
    for q in 0..p.l {
        for step in 0..p.n0 {
            let a = p.site(k + p.n0 - step - 1, q);
            let b = p.site(k + p.n0 - step, q);
            current.bits ^= (1 << a) | (1 << b);
            path.push(current);
        }
    }
    Ok(path)
}

/// The states reachable from the ground states through configurations of
/// energy at most ℍ₀ + 4, as a landscape sorted by bit pattern and labelled
/// in hex. This contains Ω̄; the hierarchy restricts further when the
/// tunneling barrier is lower (it is ℍ₀ + 3 when N0 = 2).
pub fn enumerate_omega_bar(p: &KawasakiParams, cap: usize) -> Result<Landscape> {
    enumerate_sublevel(p, p.h0() + 4, cap)
}

/// Like [`enumerate_omega_bar`] with an arbitrary energy ceiling.
pub fn enumerate_sublevel(p: &KawasakiParams, ceiling: Energy, cap: usize) -> Result<Landscape> {
    let mut seen: HashSet<u64> = HashSet::new();
    let mut queue = VecDeque::new();
    for k in 0..p.k {
        let g = ground_state(p, k)?.bits;
        if seen.insert(g) {
            queue.push_back(g);
        }
    }
    let mut buf = Vec::new();
    while let Some(bits) = queue.pop_front() {
        neighbor_bits(p, bits, &mut buf);
        for &nb in &buf {
            if !seen.contains(&nb) && bond_energy(p, nb) <= ceiling.0 {
                if seen.len() >= cap {
                    return Err(Error::CapExceeded { cap });
                }
                seen.insert(nb);
                queue.push_back(nb);
            }
        }
    }
    let mut states: Vec<u64> = seen.into_iter().collect();
    states.sort_unstable();
    let mut edges = Vec::new();
    for (i, &bits) in states.iter().enumerate() {
        neighbor_bits(p, bits, &mut buf);
        for nb in &buf {
            if let Ok(j) = states.binary_search(nb) {
                if j > i {
                    edges.push((i, j));
                }
            }
        }
    }
    let width = p.label_width();
    let labelled = states
        .iter()
        .map(|&b| (format!("{b:0width$x}"), bond_energy(p, b)))
        .collect();
    Landscape::build_with(
        labelled,
        &edges,
        crate::landscape::BuildOptions {
            state_cap: cap.max(crate::landscape::DEFAULT_STATE_CAP),
        },
    )
}
