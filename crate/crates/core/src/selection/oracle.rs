//! Exact expected spread by enumerating every live-edge outcome, with the
//! brute-force optimum and exact-objective greedy used to check the greedy
//! approximation guarantee on small instances.
//!
//! Each probability `p` is a binary fraction `a / 2^d`, so every outcome
//! probability is an integer over a common power of two and the expectation
//! is accumulated without rounding.

use std::cmp::Ordering;
use std::ops::Add;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::greedy::{argmax_first, check_p};
use super::{NormalizedSimilarityMatrix, SelectionError};

/// Largest number of uncertain edges (0 < p < 1) that will be enumerated.
pub const MAX_ENUMERATED_EDGES: usize = 22;
/// Largest number of candidate subsets the brute-force optimum will score.
pub const MAX_BRUTE_FORCE_SUBSETS: u128 = 100_000;

/// A nonnegative value `numer / 2^scale`, compared and added exactly.
#[derive(Debug, Clone)]
pub struct ExactSpread {
    numer: BigUint,
    scale: u32,
}

impl ExactSpread {
    pub fn from_count(count: u64) -> Self {
        ExactSpread {
            numer: BigUint::from(count),
            scale: 0,
        }
    }

    fn aligned(&self, scale: u32) -> BigUint {
        &self.numer << (scale - self.scale)
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.numer.bits();
        let shift = bits.saturating_sub(64);
        let top = (&self.numer >> shift).to_u64().expect("at most 64 bits") as f64;
        top * 2f64.powi(shift as i32 - self.scale as i32)
    }
}

impl PartialEq for ExactSpread {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExactSpread {}

impl PartialOrd for ExactSpread {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactSpread {
    fn cmp(&self, other: &Self) -> Ordering {
        let scale = self.scale.max(other.scale);
        self.aligned(scale).cmp(&other.aligned(scale))
    }
}

impl Add for &ExactSpread {
    type Output = ExactSpread;

    fn add(self, other: &ExactSpread) -> ExactSpread {
        let scale = self.scale.max(other.scale);
        ExactSpread {
            numer: self.aligned(scale) + other.aligned(scale),
            scale,
        }
    }
}

/// `p = mantissa / 2^exponent` with an odd mantissa, for `0 < p < 1`.
fn binary_fraction(p: f64) -> (u64, u32) {
    let bits = p.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mantissa, exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), raw_exp - 1075)
    };
    let mut denom_exp = (-exp) as u32;
    while mantissa & 1 == 0 {
        mantissa >>= 1;
        denom_exp -= 1;
    }
    (mantissa, denom_exp)
}

struct UncertainEdge {
    from: usize,
    to: usize,
    live: BigUint,
    dead: BigUint,
    scale: u32,
}

struct Enumeration<'a> {
    edges: &'a [UncertainEdge],
    seeds: u64,
    acc: BigUint,
}

impl Enumeration<'_> {
    fn reach(&self, adjacency: &[u64]) -> u32 {
        let mut reached = self.seeds;
        let mut frontier = self.seeds;
        while frontier != 0 {
            let mut next = 0u64;
            let mut f = frontier;
            while f != 0 {
                let u = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= adjacency[u];
            }
            next &= !reached;
            reached |= next;
            frontier = next;
        }
        reached.count_ones()
    }

    fn walk(&mut self, k: usize, adjacency: &mut Vec<u64>, weight: &BigUint) {
        if k == self.edges.len() {
            let count = self.reach(adjacency);
            self.acc += weight * count;
            return;
        }
        let edge = &self.edges[k];
        let bit = 1u64 << edge.to;
        let had = adjacency[edge.from] & bit;
        adjacency[edge.from] |= bit;
        self.walk(k + 1, adjacency, &(weight * &edge.live));
        adjacency[edge.from] = (adjacency[edge.from] & !bit) | had;
        self.walk(k + 1, adjacency, &(weight * &edge.dead));
    }
}

fn check_enumerable(mn: &NormalizedSimilarityMatrix) -> Result<(), SelectionError> {
    if mn.len() > 64 {
        return Err(SelectionError::TooLarge(format!("{} samples (limit 64)", mn.len())));
    }
    let uncertain = (0..mn.len())
        .flat_map(|u| mn.row(u).iter().enumerate().filter(move |(v, _)| *v != u))
        .filter(|(_, &p)| p > 0.0 && p < 1.0)
        .count();
    if uncertain > MAX_ENUMERATED_EDGES {
        return Err(SelectionError::TooLarge(format!(
            "{uncertain} uncertain edges (limit {MAX_ENUMERATED_EDGES})"
        )));
    }
    Ok(())
}

/// Expected number of samples reached from `subset`: the sum over every
/// live-edge outcome of its probability times the reachable-set size.
/// Edges with probability one are always live and need no enumeration.
pub fn exact_expected_spread(subset: &[usize], mn: &NormalizedSimilarityMatrix) -> Result<ExactSpread, SelectionError> {
    let subset = super::diffusion::canonical_subset(subset, mn)?;
    check_enumerable(mn)?;
    let n = mn.len();
    let mut adjacency = vec![0u64; n];
    let mut edges = Vec::new();
    for (u, adj) in adjacency.iter_mut().enumerate() {
        for (v, &p) in mn.row(u).iter().enumerate() {
            if u == v || p <= 0.0 {
                continue;
            }
            if p >= 1.0 {
                *adj |= 1 << v;
            } else {
                let (a, scale) = binary_fraction(p);
                let live = BigUint::from(a);
                let dead = (BigUint::from(1u8) << scale) - &live;
                edges.push(UncertainEdge {
                    from: u,
                    to: v,
                    live,
                    dead,
                    scale,
                });
            }
        }
    }
    let scale = edges.iter().map(|e| e.scale).sum();
    let mut run = Enumeration {
        edges: &edges,
        seeds: subset.iter().fold(0u64, |m, &s| m | (1 << s)),
        acc: BigUint::zero(),
    };
    run.walk(0, &mut adjacency, &BigUint::from(1u8));
    Ok(ExactSpread { numer: run.acc, scale })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Best subset of size `p` by exhaustive search over the eligible samples;
/// the lexicographically first subset wins ties.
pub fn brute_force_optimum(
    p: usize,
    mn: &NormalizedSimilarityMatrix,
) -> Result<(Vec<usize>, ExactSpread), SelectionError> {
    let pool = check_p(p, mn)?;
    check_enumerable(mn)?;
    let count = binomial(pool.len(), p);
    if count > MAX_BRUTE_FORCE_SUBSETS {
        return Err(SelectionError::TooLarge(format!(
            "{count} subsets of size {p} (limit {MAX_BRUTE_FORCE_SUBSETS})"
        )));
    }
    let mut pick: Vec<usize> = (0..p).collect();
    let mut best: Option<(Vec<usize>, ExactSpread)> = None;
    loop {
        let subset: Vec<usize> = pick.iter().map(|&i| pool[i]).collect();
        let value = exact_expected_spread(&subset, mn)?;
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((subset, value));
        }
        // Next combination in lexicographic order.
        let Some(i) = (0..p).rev().find(|&i| pick[i] < pool.len() - p + i) else {
            break;
        };
        pick[i] += 1;
        for j in i + 1..p {
            pick[j] = pick[j - 1] + 1;
        }
    }
    Ok(best.expect("at least one subset"))
}

/// Greedy selection on the exact objective, lowest index on ties.
pub fn greedy_exact(p: usize, mn: &NormalizedSimilarityMatrix) -> Result<(Vec<usize>, ExactSpread), SelectionError> {
    let mut remaining = check_p(p, mn)?;
    check_enumerable(mn)?;
    let mut chosen = Vec::with_capacity(p);
    let mut value = ExactSpread::from_count(0);
    for _ in 0..p {
        let scores = remaining
            .iter()
            .map(|&c| {
                let mut trial = chosen.clone();
                trial.push(c);
                exact_expected_spread(&trial, mn)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let best = argmax_first(&scores).expect("candidates remain");
        chosen.push(remaining.remove(best));
        value = scores.into_iter().nth(best).expect("index in range");
    }
    Ok((chosen, value))
}

/// Worst-case fraction of the optimum the greedy choice is guaranteed to
/// reach for subsets of size `p`: `1 - (1 - 1/p)^p`.
pub fn greedy_bound_factor(p: usize) -> f64 {
    assert!(p >= 1, "subset size must be positive");
    1.0 - (1.0 - 1.0 / p as f64).powi(p as i32)
}

/// A random sparse probability matrix on 2..=6 samples with at most three
/// outgoing edges per sample, small enough to enumerate exactly. About half
/// of the rows are normalized to sum to one.
pub fn random_enumerable(rng: &mut impl Rng) -> NormalizedSimilarityMatrix {
    let n = rng.gen_range(2..=6);
    let mut rows = vec![vec![0.0; n]; n];
    for (u, row) in rows.iter_mut().enumerate() {
        let degree = rng.gen_range(0..=(n - 1).min(3));
        let mut targets: Vec<usize> = (0..n).filter(|&v| v != u).collect();
        for _ in 0..degree {
            let pick = rng.gen_range(0..targets.len());
            let v = targets.swap_remove(pick);
            row[v] = rng.gen_range(0.05..1.0);
        }
        if rng.gen_bool(0.5) {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|x| *x /= sum);
            }
        }
    }
    NormalizedSimilarityMatrix::from_rows(rows).expect("generated entries are probabilities")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckSummary {
    pub fixtures: usize,
    pub checks: usize,
    pub violations: usize,
    /// Smallest observed greedy/optimum ratio.
    pub min_ratio: f64,
}

/// Compares exact-objective greedy against the brute-force optimum for every
/// feasible subset size on `fixtures` random enumerable instances.
pub fn bound_check(fixtures: usize, seed: u64) -> Result<BoundCheckSummary, SelectionError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut summary = BoundCheckSummary {
        fixtures,
        checks: 0,
        violations: 0,
        min_ratio: 1.0,
    };
    for _ in 0..fixtures {
        let mn = random_enumerable(&mut rng);
        for p in 1..=mn.eligible().len() {
            let (_, greedy) = greedy_exact(p, &mn)?;
            let (_, best) = brute_force_optimum(p, &mn)?;
            let (r, r_star) = (greedy.to_f64(), best.to_f64());
            summary.checks += 1;
            if r < greedy_bound_factor(p) * r_star {
                summary.violations += 1;
            }
            summary.min_ratio = summary.min_ratio.min(r / r_star);
        }
    }
    Ok(summary)
}
