//! Harmonic numbers, Shapley cost shares, the potential, and usage partitions.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Game, PlayerSet, StrategyProfile};
use crate::rational::Rational;

/// Exact harmonic numbers `H_1, H_2, ...`, each in lowest terms.
///
/// Going from `a/b` to `(a k + b) / (b k)`, any prime dividing both new
/// terms divides `gcd(b, k)`, so the reduction only needs small primes.
#[derive(Debug, Clone)]
pub struct HarmonicSeq {
    k: u64,
    num: BigUint,
    den: BigUint,
}

impl HarmonicSeq {
    pub fn new() -> Self {
        HarmonicSeq {
            k: 0,
            num: BigUint::zero(),
            den: BigUint::one(),
        }
    }

    /// The index of the last value produced.
    pub fn index(&self) -> u64 {
        self.k
    }

    pub fn current(&self) -> Rational {
        Rational::new_raw(BigInt::from(self.num.clone()), BigInt::from(self.den.clone()))
    }

    pub fn advance(&mut self) {
        self.k += 1;
        let k = self.k;
        let shared = (&self.den % k).to_u64().expect("remainder below k").gcd(&k);
        let mut num = &self.num * k + &self.den;
        let mut den = &self.den * k;
        if shared > 1 {
            for p in prime_factors(shared) {
                while (&num % p).is_zero() && (&den % p).is_zero() {
                    num /= p;
                    den /= p;
                }
            }
        }
        self.num = num;
        self.den = den;
    }
}

impl Default for HarmonicSeq {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for HarmonicSeq {
    type Item = Rational;

    fn next(&mut self) -> Option<Rational> {
        self.advance();
        Some(self.current())
    }
}

fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            out.push(p);
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// Exact `H_k`, with `H_0 = 0`.
pub fn harmonic_int(k: u64) -> Rational {
    let mut seq = HarmonicSeq::new();
    for _ in 0..k {
        seq.advance();
    }
    seq.current()
}

/// `[H_0, H_1, ..., H_k_max]`.
pub fn harmonic_table(k_max: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(Rational::zero());
    out.extend(HarmonicSeq::new().take(k_max));
    out
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `H(k) = ∫₀¹ (1 − x^k)/(1 − x) dx` for real `k ≥ 0`.
///
/// Evaluated as `ψ(k + 1) + γ`: shift the argument above 20 with the
/// recurrence `H(k) = H(k + 1) − 1/(k + 1)`, then use the asymptotic
/// expansion, whose first omitted term is below 1e-17 there.
pub fn harmonic_real(k: f64) -> Result<f64> {
    if k.is_nan() || k < 0.0 || !k.is_finite() {
        return Err(Error::Domain(format!("H(k) needs a finite k >= 0, got {k}")));
    }
    if k == 0.0 {
        return Ok(0.0);
    }
    let mut y = k;
    let mut correction = 0.0;
    while y < 20.0 {
        y += 1.0;
        correction += 1.0 / y;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    // Bernoulli terms B_2j / (2j y^2j) for j = 1..6.
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    Ok(y.ln() + EULER_GAMMA + 0.5 * inv - tail - correction)
}

/// `cost_i(P) = Σ_{e ∈ P_i} c_e / k_e(P)`.
pub fn player_cost(game: &Game, profile: &StrategyProfile, i: usize) -> Rational {
    profile.path(i).edges().iter().fold(Rational::zero(), |acc, &e| {
        acc + &game.edge(e).cost / BigInt::from(profile.usage(e))
    })
}

/// `cost(P) = Σ_{e ∈ E(P)} c_e`; checked against the sum of player costs in
/// debug builds.
pub fn social_cost(game: &Game, profile: &StrategyProfile) -> Rational {
    let total = game.cost_of(&profile.used_edges());
    debug_assert_eq!(
        total,
        (0..game.num_players()).fold(Rational::zero(), |acc, i| acc + player_cost(game, profile, i))
    );
    total
}

/// `Φ(P) = Σ_{e ∈ E(P)} H_{k_e(P)} c_e`.
pub fn potential(game: &Game, profile: &StrategyProfile) -> Rational {
    let h = harmonic_table(game.num_players());
    profile
        .used_edges()
        .into_iter()
        .fold(Rational::zero(), |acc, e| acc + &h[profile.usage(e)] * &game.edge(e).cost)
}

/// Edges grouped by the exact set of players using them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UsagePartition {
    /// `U ↦ P_U`, edges ascending.
    pub blocks: BTreeMap<PlayerSet, Vec<usize>>,
    /// `U ↦ |P_U|`.
    #[serde(serialize_with = "ser_set_costs")]
    pub block_costs: BTreeMap<PlayerSet, Rational>,
    /// `l ↦ |P^l|`, only for levels with edges.
    #[serde(serialize_with = "ser_level_costs")]
    pub levels: BTreeMap<usize, Rational>,
}

fn ser_set_costs<S: serde::Serializer>(m: &BTreeMap<PlayerSet, Rational>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k.to_string(), v.to_string())))
}

fn ser_level_costs<S: serde::Serializer>(m: &BTreeMap<usize, Rational>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k.to_string(), v.to_string())))
}

impl UsagePartition {
    /// `|P_U|`, zero when no edge has exactly these users.
    pub fn weight(&self, set: PlayerSet) -> Rational {
        self.block_costs.get(&set).cloned().unwrap_or_else(Rational::zero)
    }

    /// `|P^l|`.
    pub fn level(&self, l: usize) -> Rational {
        self.levels.get(&l).cloned().unwrap_or_else(Rational::zero)
    }

    /// `Σ_U H_{|U|} |P_U|`, equal to the potential of the profile.
    pub fn potential(&self, harmonic: &[Rational]) -> Rational {
        self.levels
            .iter()
            .fold(Rational::zero(), |acc, (&l, w)| acc + &harmonic[l] * w)
    }

    pub fn total(&self) -> Rational {
        self.levels.values().fold(Rational::zero(), |acc, w| acc + w)
    }
}

pub fn usage_partition(game: &Game, profile: &StrategyProfile) -> UsagePartition {
    let mut blocks: BTreeMap<PlayerSet, Vec<usize>> = BTreeMap::new();
    for e in profile.used_edges() {
        blocks.entry(profile.users(e)).or_default().push(e);
    }
    let mut block_costs = BTreeMap::new();
    let mut levels: BTreeMap<usize, Rational> = BTreeMap::new();
    for (set, edges) in &blocks {
        let w = game.cost_of(edges);
        *levels.entry(set.len()).or_insert_with(Rational::zero) += &w;
        block_costs.insert(*set, w);
    }
    UsagePartition {
        blocks,
        block_costs,
        levels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::*;
    use crate::rational::{from_frac, from_int};

    #[test]
    fn harmonic_int_small_values() {
        assert_eq!(harmonic_int(0), from_int(0));
        assert_eq!(harmonic_int(1), from_int(1));
        assert_eq!(harmonic_int(4), from_frac(25, 12));
        assert_eq!(harmonic_int(6), from_frac(49, 20));
    }

    #[test]
    fn harmonic_seq_stays_reduced() {
        let mut brute = Rational::zero();
        for (k, h) in HarmonicSeq::new().take(300).enumerate() {
            brute += Rational::new(BigInt::one(), BigInt::from(k + 1));
            assert_eq!(h.numer(), brute.numer(), "k = {}", k + 1);
            assert_eq!(h.denom(), brute.denom(), "k = {}", k + 1);
        }
    }

    #[test]
    fn harmonic_real_basics() {
        assert_eq!(harmonic_real(0.0).unwrap(), 0.0);
        assert!((harmonic_real(1.0).unwrap() - 1.0).abs() < 1e-15);
        let half = 2.0 - 2.0 * std::f64::consts::LN_2;
        assert!((harmonic_real(0.5).unwrap() - half).abs() < 1e-14);
        assert!(harmonic_real(-0.1).is_err());
        assert!(harmonic_real(f64::NAN).is_err());
    }

    #[test]
    fn instance_a_costs() {
        let g = instance_a();
        let both_e1 = profile(&g, &[&["e1"], &["e1"]]);
        let both_e2 = profile(&g, &[&["e2"], &["e2"]]);
        let split = profile(&g, &[&["e1"], &["e2"]]);
        assert_eq!(player_cost(&g, &both_e1, 0), from_int(1));
        assert_eq!(player_cost(&g, &both_e2, 1), from_frac(3, 2));
        assert_eq!(social_cost(&g, &both_e1), from_int(2));
        assert_eq!(social_cost(&g, &split), from_int(5));
        assert_eq!(potential(&g, &both_e1), from_int(3));
        assert_eq!(potential(&g, &both_e2), from_frac(9, 2));
    }

    #[test]
    fn single_player_cost_and_potential_match_path_cost() {
        let g = single_player_triangle();
        let p = profile(&g, &[&["ac", "cb"]]);
        assert_eq!(player_cost(&g, &p, 0), from_int(3));
        assert_eq!(social_cost(&g, &p), from_int(3));
        assert_eq!(potential(&g, &p), from_int(3));
    }

    #[test]
    fn instance_a_partitions() {
        let g = instance_a();
        let both = usage_partition(&g, &profile(&g, &[&["e1"], &["e1"]]));
        assert_eq!(both.blocks, BTreeMap::from([(PlayerSet(0b11), vec![0])]));
        assert_eq!(both.levels, BTreeMap::from([(2, from_int(2))]));

        let split = usage_partition(&g, &profile(&g, &[&["e1"], &["e2"]]));
        assert_eq!(
            split.blocks,
            BTreeMap::from([(PlayerSet(0b01), vec![0]), (PlayerSet(0b10), vec![1])])
        );
        assert_eq!(split.levels, BTreeMap::from([(1, from_int(5))]));
        assert_eq!(split.potential(&harmonic_table(2)), from_int(5));
    }

    #[test]
    fn disjoint_players_have_singleton_blocks() {
        let g = disjoint_players();
        let part = usage_partition(&g, &profile(&g, &[&["e1"], &["e2"]]));
        assert!(part.blocks.keys().all(|u| u.len() == 1));
    }

    #[test]
    fn zero_cost_graph_has_zero_social_cost() {
        let g = Game::new(
            false,
            names(&["a", "b"]),
            vec![spec("e1", "a", "b", from_int(0))],
            vec![player("1", "a", "b"), player("2", "a", "b")],
        )
        .unwrap();
        let p = profile(&g, &[&["e1"], &["e1"]]);
        assert_eq!(social_cost(&g, &p), from_int(0));
        assert_eq!(potential(&g, &p), from_int(0));
    }
}
