//! Random and structured game instances.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{EdgeSpec, Game, PlayerSpec, MAX_PLAYERS};
use crate::rational::Rational;

/// Attempts made before random generation gives up.
pub const MAX_ATTEMPTS: usize = 1000;
/// Largest denominator of a random edge cost.
pub const MAX_DENOMINATOR: i64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomParams {
    pub players: usize,
    pub vertices: usize,
    pub edges: usize,
    /// Inclusive integer range that edge costs are drawn from.
    pub cost_range: (u32, u32),
}

/// A random undirected multigraph game, determined by `seed`.
///
/// Vertices are `v1..`, edges `e1..` with distinct endpoints, players `1..`
/// with distinct terminals. Costs are `p/q` with `q ≤ 10` drawn uniformly
/// from the cost range. Draws are repeated until every player's terminals
/// are connected.
pub fn random_instance(params: RandomParams, seed: u64) -> Result<Game> {
    let RandomParams {
        players,
        vertices,
        edges,
        cost_range: (lo, hi),
    } = params;
    if players == 0 || players > MAX_PLAYERS {
        return Err(Error::Generation(format!("player count {players} outside 1..={MAX_PLAYERS}")));
    }
    if vertices < 2 || edges == 0 {
        return Err(Error::Generation(format!(
            "{vertices} vertices and {edges} edges cannot connect a terminal pair"
        )));
    }
    if lo > hi {
        return Err(Error::Generation(format!("empty cost range [{lo}, {hi}]")));
    }
    let names: Vec<String> = (1..=vertices).map(|k| format!("v{k}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let edge_specs: Vec<EdgeSpec> = (1..=edges)
            .map(|k| {
                let u = rng.gen_range(0..vertices);
                let mut v = rng.gen_range(0..vertices - 1);
                if v >= u {
                    v += 1;
                }
                let q = rng.gen_range(1..=MAX_DENOMINATOR);
                let p = rng.gen_range(i64::from(lo) * q..=i64::from(hi) * q);
                EdgeSpec {
                    id: format!("e{k}"),
                    u: names[u].clone(),
                    v: names[v].clone(),
                    cost: Rational::new(BigInt::from(p), BigInt::from(q)),
                }
            })
            .collect();
        let player_specs: Vec<PlayerSpec> = (1..=players)
            .map(|k| {
                let pair: Vec<&String> = names.choose_multiple(&mut rng, 2).collect();
                PlayerSpec {
                    id: k.to_string(),
                    source: pair[0].clone(),
                    target: pair[1].clone(),
                }
            })
            .collect();
        match Game::new(false, names.clone(), edge_specs, player_specs) {
            Ok(game) => return Ok(game),
            Err(Error::Validation { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Generation(format!(
        "no instance with connected terminals after {MAX_ATTEMPTS} attempts"
    )))
}

fn edge(id: String, u: &str, v: &str, cost: Rational) -> EdgeSpec {
    EdgeSpec {
        id,
        u: u.into(),
        v: v.into(),
        cost,
    }
}

/// Directed game where every player `i` may pay `1/i` alone on a direct
/// edge `s_i → t`, or reach a relay `v` for free and share `v → t` of cost
/// `1 + eps`. Edges are `d{i}`, `f{i}` and `vt`.
pub fn directed_harmonic_family(n: usize, eps: &Rational) -> Result<Game> {
    if !(2..=MAX_PLAYERS).contains(&n) {
        return Err(Error::Domain(format!("family needs 2..={MAX_PLAYERS} players, got {n}")));
    }
    if !eps.is_positive() {
        return Err(Error::Domain("eps must be positive".into()));
    }
    let mut vertices = vec!["t".to_string(), "v".to_string()];
    let mut edges = vec![edge("vt".into(), "v", "t", Rational::one() + eps)];
    let mut players = Vec::new();
    for i in 1..=n {
        let s = format!("s{i}");
        edges.push(edge(format!("d{i}"), &s, "t", Rational::new(BigInt::one(), BigInt::from(i))));
        edges.push(edge(format!("f{i}"), &s, "v", Rational::zero()));
        players.push(PlayerSpec {
            id: i.to_string(),
            source: s.clone(),
            target: "t".into(),
        });
        vertices.push(s);
    }
    Game::new(true, vertices, edges, players)
}

/// Undirected game with a left star `a`–`s_i`, a right star `b`–`t_i` and a
/// bridge `a`–`b`. `spoke_costs` lists the left spokes then the right ones.
pub fn shared_bridge_family(n: usize, bridge_cost: &Rational, spoke_costs: &[Rational]) -> Result<Game> {
    if !(2..=MAX_PLAYERS).contains(&n) {
        return Err(Error::Domain(format!("family needs 2..={MAX_PLAYERS} players, got {n}")));
    }
    if spoke_costs.len() != 2 * n {
        return Err(Error::Domain(format!(
            "expected {} spoke costs, got {}",
            2 * n,
            spoke_costs.len()
        )));
    }
    let mut vertices = vec!["a".to_string(), "b".to_string()];
    let mut edges = vec![edge("ab".into(), "a", "b", bridge_cost.clone())];
    let mut players = Vec::new();
    for i in 1..=n {
        let (s, t) = (format!("s{i}"), format!("t{i}"));
        edges.push(edge(format!("as{i}"), "a", &s, spoke_costs[i - 1].clone()));
        edges.push(edge(format!("bt{i}"), "b", &t, spoke_costs[n + i - 1].clone()));
        players.push(PlayerSpec {
            id: i.to_string(),
            source: s.clone(),
            target: t.clone(),
        });
        vertices.push(s);
        vertices.push(t);
    }
    Game::new(false, vertices, edges, players)
}
