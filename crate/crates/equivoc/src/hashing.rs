//! Finite weighted hash families f_X: A → {0..M} and their collision bound.
//!
//! A family is ε-almost universal₂ when every pair of distinct inputs
//! collides with probability at most ε/M under the member weights.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const FAMILY_LIMIT: f64 = 1e6;
const EXACT_PAIR_LIMIT: f64 = 1e9;
const TOEPLITZ_DOMAIN_BITS: u32 = 20;
const SAMPLED_PAIRS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct HashFamily {
    a_size: usize,
    m_size: usize,
    members: Vec<Vec<u32>>,
    weights: Vec<f64>,
    certified_epsilon: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct FamilyFile {
    m: usize,
    members: Vec<Vec<u32>>,
    weights: Vec<f64>,
}

impl HashFamily {
    /// Validates an explicit family. The collision bound is certified by
    /// exact pair enumeration when that is affordable.
    pub fn new(m_size: usize, members: Vec<Vec<u32>>, weights: Vec<f64>) -> Result<Self> {
        if members.is_empty() || m_size == 0 {
            return Err(domain("a hash family needs at least one member and M ≥ 1"));
        }
        if members.len() != weights.len() {
            return Err(domain("members and weights differ in length"));
        }
        let a_size = members[0].len();
        if a_size == 0 {
            return Err(domain("members must be defined on a nonempty alphabet"));
        }
        for (i, f) in members.iter().enumerate() {
            if f.len() != a_size {
                return Err(domain(format!("member {i} has domain size {}", f.len())));
            }
            if let Some(&y) = f.iter().find(|&&y| y as usize >= m_size) {
                return Err(domain(format!("member {i} maps to {y} outside 0..{m_size}")));
            }
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(domain("weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain(format!("weights sum to {total}, not 1")));
        }
        let mut fam = HashFamily { a_size, m_size, members, weights, certified_epsilon: None };
        if exact_pairs_feasible(&fam) {
            fam.certified_epsilon = Some(verify_epsilon(&fam).epsilon);
        }
        Ok(fam)
    }

    /// A single deterministic map with weight one.
    pub fn single(f: Vec<u32>, m_size: usize) -> Result<Self> {
        Self::new(m_size, vec![f], vec![1.0])
    }

    fn uniform(a_size: usize, m_size: usize, members: Vec<Vec<u32>>) -> Self {
        let w = 1.0 / members.len() as f64;
        let weights = vec![w; members.len()];
        HashFamily { a_size, m_size, members, weights, certified_epsilon: None }
    }

    pub fn a_size(&self) -> usize {
        self.a_size
    }

    pub fn m_size(&self) -> usize {
        self.m_size
    }

    pub fn members(&self) -> &[Vec<u32>] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The exactly verified ε, absent for sampled families.
    pub fn certified_epsilon(&self) -> Option<f64> {
        self.certified_epsilon
    }

    #[inline]
    pub fn apply(&self, member: usize, a: usize) -> usize {
        self.members[member][a] as usize
    }

    pub fn to_json_string(&self) -> String {
        let f = FamilyFile { m: self.m_size, members: self.members.clone(), weights: self.weights.clone() };
        serde_json::to_string(&f).expect("family serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: FamilyFile = serde_json::from_str(s)?;
        Self::new(f.m, f.members, f.weights)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

fn exact_pairs_feasible(f: &HashFamily) -> bool {
    (f.a_size as f64).powi(2) * f.members.len() as f64 <= EXACT_PAIR_LIMIT
}

/// Uniform random binning: all M^{|A|} functions with equal weight.
pub fn all_functions_family(a_size: usize, m: usize) -> Result<HashFamily> {
    if a_size == 0 || m == 0 {
        return Err(domain("alphabet and range must be nonempty"));
    }
    let count = (m as f64).powi(a_size as i32);
    if count > FAMILY_LIMIT {
        return Err(Error::SizeOverflow { what: "function family", size: count, limit: FAMILY_LIMIT });
    }
    let count = count as usize;
    let members = (0..count)
        .map(|mut k| {
            (0..a_size)
                .map(|_| {
                    let d = (k % m) as u32;
                    k /= m;
                    d
                })
                .collect()
        })
        .collect();
    let mut fam = HashFamily::uniform(a_size, m, members);
    fam.certified_epsilon = Some(1.0);
    Ok(fam)
}

/// y = T x over GF(2), T the out×in Toeplitz matrix with T[i][j] = d[i − j + in − 1].
fn toeplitz_map(diag: u64, in_bits: u32, out_bits: u32) -> Vec<u32> {
    // Row i of T, as a bit mask over input positions j.
    let rows: Vec<u64> = (0..out_bits)
        .map(|i| {
            (0..in_bits).fold(0u64, |acc, j| {
                let k = i + in_bits - 1 - j;
                acc | (((diag >> k) & 1) << j)
            })
        })
        .collect();
    (0..1u64 << in_bits)
        .map(|x| {
            rows.iter()
                .enumerate()
                .fold(0u32, |y, (i, r)| y | ((((r & x).count_ones() & 1) as u32) << i))
        })
        .collect()
}

/// Binary Toeplitz hashing from `in_bits` to `out_bits`. With `sample_count`
/// of `None` all 2^{in+out−1} matrices are enumerated and ε is certified;
/// otherwise the members are a seeded uniform sample and ε is left
/// uncertified.
pub fn toeplitz_family(
    in_bits: u32,
    out_bits: u32,
    seed: u64,
    sample_count: Option<usize>,
) -> Result<HashFamily> {
    if out_bits == 0 || out_bits > in_bits {
        return Err(domain(format!("need 1 ≤ out_bits ≤ in_bits, got {out_bits} > {in_bits}")));
    }
    if in_bits > TOEPLITZ_DOMAIN_BITS {
        return Err(Error::SizeOverflow {
            what: "toeplitz domain",
            size: 2f64.powi(in_bits as i32),
            limit: 2f64.powi(TOEPLITZ_DOMAIN_BITS as i32),
        });
    }
    let diag_bits = in_bits + out_bits - 1;
    let a_size = 1usize << in_bits;
    let m = 1usize << out_bits;
    match sample_count {
        None => {
            let count = 2f64.powi(diag_bits as i32);
            if count > FAMILY_LIMIT {
                return Err(Error::SizeOverflow { what: "toeplitz family", size: count, limit: FAMILY_LIMIT });
            }
            let members = (0..1u64 << diag_bits)
                .map(|d| toeplitz_map(d, in_bits, out_bits))
                .collect();
            let mut fam = HashFamily::uniform(a_size, m, members);
            fam.certified_epsilon = Some(verify_epsilon(&fam).epsilon);
            Ok(fam)
        }
        Some(k) => {
            if k == 0 {
                return Err(domain("sample count must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let members = (0..k)
                .map(|_| {
                    let d = rng.random::<u64>() & ((1u64 << diag_bits) - 1);
                    toeplitz_map(d, in_bits, out_bits)
                })
                .collect();
            Ok(HashFamily::uniform(a_size, m, members))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonCheck {
    /// M · max over checked pairs of the collision probability.
    pub epsilon: f64,
    /// True when every distinct pair was enumerated.
    pub exact: bool,
    pub pairs_checked: usize,
}

/// Collision probability of two inputs under the family weights.
pub fn collision_probability(family: &HashFamily, a1: usize, a2: usize) -> f64 {
    family
        .members
        .iter()
        .zip(&family.weights)
        .filter(|(f, _)| f[a1] == f[a2])
        .map(|(_, w)| w)
        .sum()
}

/// M · max_{a₁≠a₂} Pr[f_X(a₁) = f_X(a₂)]. Large families fall back to a
/// fixed-seed sample of pairs, flagged by `exact = false`.
pub fn verify_epsilon(family: &HashFamily) -> EpsilonCheck {
    let a = family.a_size;
    let m = family.m_size as f64;
    if exact_pairs_feasible(family) {
        let mut worst = 0.0f64;
        let mut pairs = 0;
        for a1 in 0..a {
            for a2 in a1 + 1..a {
                worst = worst.max(collision_probability(family, a1, a2));
                pairs += 1;
            }
        }
        return EpsilonCheck { epsilon: m * worst, exact: true, pairs_checked: pairs };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    let mut pairs = 0;
    while pairs < SAMPLED_PAIRS {
        let a1 = rng.random_range(0..a);
        let a2 = rng.random_range(0..a);
        if a1 == a2 {
            continue;
        }
        worst = worst.max(collision_probability(family, a1, a2));
        pairs += 1;
    }
    EpsilonCheck { epsilon: m * worst, exact: false, pairs_checked: pairs }
}
