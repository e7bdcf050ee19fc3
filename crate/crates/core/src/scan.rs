//! Exhaustive profile scan over scaled integer costs.
//!
//! All shares `c_e / m` are multiplied by a common scale (the lcm of the cost
//! denominators times `lcm(1..n)`), so potentials, player costs and deviation
//! costs become exact integer sums. `i128` is used when every value provably
//! fits; otherwise the scan falls back to `BigInt`.
//!
//! The space is split on the first player's path index and the chunks are
//! scanned in parallel; partial results are merged in chunk order, so every
//! list comes out in lexicographic profile order.

use std::fmt::Debug;
use std::ops::AddAssign;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::enumeration::StrategySpace;
use crate::forest::is_acyclic;
use crate::game::Game;
use crate::rational::Rational;

pub(crate) trait Scalar:
    Clone + Ord + Zero + Send + Sync + Debug + for<'a> AddAssign<&'a Self>
{
    fn from_big(v: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
}

impl Scalar for i128 {
    fn from_big(v: &BigInt) -> Option<Self> {
        v.to_i128()
    }

    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Scalar for BigInt {
    fn from_big(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }

    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

struct CostTable<T> {
    scale: BigInt,
    /// `share[e][m] = scale · c_e / m`, index 0 unused.
    share: Vec<Vec<T>>,
    /// `cumulative[e][k] = Σ_{m ≤ k} share[e][m] = scale · H_k · c_e`.
    cumulative: Vec<Vec<T>>,
}

impl<T: Scalar> CostTable<T> {
    fn new(game: &Game, headroom: &BigInt) -> Option<Self> {
        let n = game.num_players();
        let counts = (1..=n as u64).fold(BigInt::one(), |acc, m| acc.lcm(&BigInt::from(m)));
        let denoms = game.edges().iter().fold(BigInt::one(), |acc, e| acc.lcm(e.cost.denom()));
        let scale = counts * denoms;
        let mut share = Vec::with_capacity(game.num_edges());
        let mut cumulative = Vec::with_capacity(game.num_edges());
        let mut grand_total = BigInt::zero();
        for e in game.edges() {
            let whole = e.cost.numer() * &scale / e.cost.denom();
            let mut s = vec![T::zero()];
            let mut c = vec![T::zero()];
            let mut running = BigInt::zero();
            for m in 1..=n {
                let (v, rem) = whole.div_rem(&BigInt::from(m));
                debug_assert!(rem.is_zero());
                running += &v;
                s.push(T::from_big(&v)?);
                c.push(T::from_big(&running)?);
            }
            grand_total += running;
            share.push(s);
            cumulative.push(c);
        }
        // Every sum the scan forms is bounded by the grand total times the
        // number of players; require that bound to be representable.
        let bound = grand_total * BigInt::from(n + 1) * headroom;
        T::from_big(&bound)?;
        Some(CostTable {
            scale,
            share,
            cumulative,
        })
    }

    fn rational(&self, v: &T) -> Rational {
        Rational::new(v.to_big(), self.scale.clone())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ScanOptions {
    pub nash: bool,
    pub all_forest_optima: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct ScanOutcome {
    pub min_potential: Rational,
    pub minimizers: Vec<Vec<usize>>,
    /// Nash equilibria with their social costs; empty unless requested.
    pub nash: Vec<(Vec<usize>, Rational)>,
    pub min_social: Rational,
    /// Lexicographically first profile of minimum social cost.
    pub first_optimum: Vec<usize>,
    /// Minimum-cost profiles with acyclic edge union (undirected games
    /// only); just the first one unless all were requested.
    pub forest_optima: Vec<Vec<usize>>,
}

struct Partial<T> {
    min_potential: Option<T>,
    minimizers: Vec<Vec<usize>>,
    nash: Vec<(Vec<usize>, T)>,
    min_social: Option<T>,
    first_optimum: Option<Vec<usize>>,
    forest_optima: Vec<Vec<usize>>,
}

impl<T: Scalar> Partial<T> {
    fn empty() -> Self {
        Partial {
            min_potential: None,
            minimizers: Vec::new(),
            nash: Vec::new(),
            min_social: None,
            first_optimum: None,
            forest_optima: Vec::new(),
        }
    }

    fn offer_potential(&mut self, phi: T, choice: &[usize]) {
        match self.min_potential.as_ref().map(|m| phi.cmp(m)) {
            Some(std::cmp::Ordering::Greater) => {}
            Some(std::cmp::Ordering::Equal) => self.minimizers.push(choice.to_vec()),
            _ => {
                self.min_potential = Some(phi);
                self.minimizers = vec![choice.to_vec()];
            }
        }
    }

    fn offer_social(&mut self, social: &T, choice: &[usize], forest: impl FnOnce() -> bool, all: bool) {
        match self.min_social.as_ref().map(|m| social.cmp(m)) {
            Some(std::cmp::Ordering::Greater) => {}
            Some(std::cmp::Ordering::Equal) => {
                if (all || self.forest_optima.is_empty()) && forest() {
                    self.forest_optima.push(choice.to_vec());
                }
            }
            _ => {
                self.min_social = Some(social.clone());
                self.first_optimum = Some(choice.to_vec());
                self.forest_optima.clear();
                if forest() {
                    self.forest_optima.push(choice.to_vec());
                }
            }
        }
    }

    fn merge(mut self, other: Partial<T>, all: bool) -> Self {
        if let Some(phi) = other.min_potential {
            match self.min_potential.as_ref().map(|m| phi.cmp(m)) {
                Some(std::cmp::Ordering::Greater) => {}
                Some(std::cmp::Ordering::Equal) => self.minimizers.extend(other.minimizers),
                _ => {
                    self.min_potential = Some(phi);
                    self.minimizers = other.minimizers;
                }
            }
        }
        self.nash.extend(other.nash);
        if let Some(social) = other.min_social {
            match self.min_social.as_ref().map(|m| social.cmp(m)) {
                Some(std::cmp::Ordering::Greater) => {}
                Some(std::cmp::Ordering::Equal) => {
                    if all || self.forest_optima.is_empty() {
                        let take = if all { other.forest_optima.len() } else { 1 };
                        self.forest_optima.extend(other.forest_optima.into_iter().take(take));
                    }
                }
                _ => {
                    self.min_social = Some(social);
                    self.first_optimum = other.first_optimum;
                    self.forest_optima = other.forest_optima;
                }
            }
        }
        self
    }
}

pub(crate) fn scan(game: &Game, space: &StrategySpace, options: ScanOptions) -> ScanOutcome {
    let headroom = BigInt::from(4);
    match CostTable::<i128>::new(game, &headroom) {
        Some(table) => run(game, space, &table, options),
        None => {
            let table = CostTable::<BigInt>::new(game, &headroom).expect("BigInt never overflows");
            run(game, space, &table, options)
        }
    }
}

fn run<T: Scalar>(game: &Game, space: &StrategySpace, table: &CostTable<T>, options: ScanOptions) -> ScanOutcome {
    let n = space.num_players();
    assert!(n >= 1 && (0..n).all(|i| !space.paths(i).is_empty()));
    let merged = (0..space.paths(0).len())
        .into_par_iter()
        .map(|first| scan_chunk(game, space, table, options, first))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Partial::empty(), |acc, p| acc.merge(p, options.all_forest_optima));
    ScanOutcome {
        min_potential: table.rational(merged.min_potential.as_ref().expect("space is nonempty")),
        minimizers: merged.minimizers,
        nash: merged
            .nash
            .into_iter()
            .map(|(c, s)| (c, table.rational(&s)))
            .collect(),
        min_social: table.rational(merged.min_social.as_ref().expect("space is nonempty")),
        first_optimum: merged.first_optimum.expect("space is nonempty"),
        forest_optima: merged.forest_optima,
    }
}

fn scan_chunk<T: Scalar>(
    game: &Game,
    space: &StrategySpace,
    table: &CostTable<T>,
    options: ScanOptions,
    first: usize,
) -> Partial<T> {
    let n = space.num_players();
    let m = game.num_edges();
    let mut counts = vec![0usize; m];
    let mut members = vec![0u64; m];
    let mut choice = vec![0usize; n];
    choice[0] = first;
    let place = |counts: &mut [usize], members: &mut [u64], i: usize, k: usize, add: bool| {
        for &e in space.paths(i)[k].edges() {
            if add {
                counts[e] += 1;
                members[e] |= 1 << i;
            } else {
                counts[e] -= 1;
                members[e] &= !(1 << i);
            }
        }
    };
    for i in 0..n {
        place(&mut counts, &mut members, i, choice[i], true);
    }
    let mut partial = Partial::empty();
    loop {
        let mut phi = T::zero();
        let mut social = T::zero();
        for e in 0..m {
            if counts[e] > 0 {
                phi += &table.cumulative[e][counts[e]];
                social += &table.share[e][1];
            }
        }
        partial.offer_potential(phi, &choice);
        let used = || (0..m).filter(|&e| counts[e] > 0);
        if !game.is_directed() {
            partial.offer_social(&social, &choice, || is_acyclic(game, used()), options.all_forest_optima);
        } else {
            partial.offer_social(&social, &choice, || false, false);
        }
        if options.nash && is_nash(space, table, &counts, &members, &choice) {
            partial.nash.push((choice.clone(), social));
        }

        // Odometer over players 1..n, last player fastest.
        let mut i = n;
        loop {
            if i == 1 {
                return partial;
            }
            i -= 1;
            place(&mut counts, &mut members, i, choice[i], false);
            choice[i] += 1;
            if choice[i] < space.paths(i).len() {
                place(&mut counts, &mut members, i, choice[i], true);
                break;
            }
            choice[i] = 0;
            place(&mut counts, &mut members, i, 0, true);
        }
    }
}

fn is_nash<T: Scalar>(
    space: &StrategySpace,
    table: &CostTable<T>,
    counts: &[usize],
    members: &[u64],
    choice: &[usize],
) -> bool {
    for (i, &k) in choice.iter().enumerate() {
        let mut current = T::zero();
        for &e in space.paths(i)[k].edges() {
            current += &table.share[e][counts[e]];
        }
        'alternatives: for (q, path) in space.paths(i).iter().enumerate() {
            if q == k {
                continue;
            }
            let mut cost = T::zero();
            for &e in path.edges() {
                let others = counts[e] - (members[e] >> i & 1) as usize;
                cost += &table.share[e][others + 1];
                if cost >= current {
                    continue 'alternatives;
                }
            }
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::*;
    use crate::rational::{from_frac, from_int};

    #[test]
    fn instance_a_scan() {
        let g = instance_a();
        let space = StrategySpace::new(&g).unwrap();
        let out = scan(
            &g,
            &space,
            ScanOptions {
                nash: true,
                all_forest_optima: true,
            },
        );
        assert_eq!(out.min_potential, from_int(3));
        assert_eq!(out.minimizers, vec![vec![0, 0]]);
        assert_eq!(out.nash, vec![(vec![0, 0], from_int(2)), (vec![1, 1], from_int(3))]);
        assert_eq!(out.min_social, from_int(2));
        assert_eq!(out.first_optimum, vec![0, 0]);
        assert_eq!(out.forest_optima, vec![vec![0, 0]]);
    }

    #[test]
    fn bigint_fallback_agrees_with_i128() {
        let g = Game::new(
            false,
            names(&["a", "b"]),
            vec![
                spec("e1", "a", "b", from_frac(2, 7)),
                spec("e2", "a", "b", from_frac(1, 3)),
            ],
            vec![player("1", "a", "b"), player("2", "a", "b"), player("3", "a", "b")],
        )
        .unwrap();
        let space = StrategySpace::new(&g).unwrap();
        let opts = ScanOptions {
            nash: true,
            all_forest_optima: true,
        };
        let headroom = BigInt::from(4);
        let small = run(&g, &space, &CostTable::<i128>::new(&g, &headroom).unwrap(), opts);
        let big = run(&g, &space, &CostTable::<BigInt>::new(&g, &headroom).unwrap(), opts);
        assert_eq!(small.min_potential, big.min_potential);
        assert_eq!(small.minimizers, big.minimizers);
        assert_eq!(small.nash, big.nash);
        assert_eq!(small.forest_optima, big.forest_optima);
    }

    #[test]
    fn huge_denominators_use_bigint() {
        let huge = Rational::new(BigInt::one(), BigInt::from(10).pow(40u32));
        let g = Game::new(
            false,
            names(&["a", "b"]),
            vec![spec("e1", "a", "b", huge.clone()), spec("e2", "a", "b", from_int(1))],
            vec![player("1", "a", "b")],
        )
        .unwrap();
        assert!(CostTable::<i128>::new(&g, &BigInt::from(4)).is_none());
        let space = StrategySpace::new(&g).unwrap();
        let out = scan(&g, &space, ScanOptions::default());
        assert_eq!(out.min_social, huge);
    }

    #[test]
    fn shares_stay_exact_when_denominators_share_factors() {
        // 11/10 split two ways needs a factor 2 beyond lcm(10, 2).
        let g = Game::new(
            false,
            names(&["a", "b"]),
            vec![spec("e1", "a", "b", from_frac(11, 10)), spec("e2", "a", "b", from_frac(1, 2))],
            vec![player("1", "a", "b"), player("2", "a", "b")],
        )
        .unwrap();
        let table = CostTable::<i128>::new(&g, &BigInt::from(4)).unwrap();
        assert_eq!(table.rational(&table.share[0][2]), from_frac(11, 20));
        let space = StrategySpace::new(&g).unwrap();
        let out = scan(
            &g,
            &space,
            ScanOptions {
                nash: true,
                ..Default::default()
            },
        );
        // Sharing e1 costs 11/20 each, more than e2 alone.
        assert!(!out.nash.iter().any(|(c, _)| c == &vec![0, 0]));
    }
}
