//! Best responses, Nash equilibria, potential minimizers and price ratios.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::arithmetic::{player_cost, potential, social_cost};
use crate::enumeration::StrategySpace;
use crate::error::{Error, Result};
use crate::game::{Game, Path, StrategyProfile};
use crate::rational::Rational;
use crate::scan::{scan, ScanOptions, ScanOutcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestResponse {
    pub path: Path,
    /// Cost of `path` for the player once switched to it.
    pub cost: Rational,
}

/// A cheapest path for player `i` against the other players' paths.
///
/// Shortest path under `c_e / (k_e^{-i} + 1)` with exact arithmetic. Among
/// cheapest simple paths the lexicographically smallest edge sequence wins:
/// walk from the source over tight edges, taking the smallest edge from which
/// the target stays reachable without revisiting a vertex.
pub fn best_response(game: &Game, profile: &StrategyProfile, i: usize) -> BestResponse {
    let player = game.player(i);
    let own = profile.path(i);
    let weight: Vec<Rational> = (0..game.num_edges())
        .map(|e| {
            let others = profile.usage(e) - usize::from(own.contains(e));
            &game.edge(e).cost / BigInt::from(others + 1)
        })
        .collect();

    // Distances to the target, searching along reversed edges.
    let nv = game.num_vertices();
    let mut entering: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for v in 0..nv {
        for &e in game.exits(v) {
            let w = game.traverse(e, v).expect("exit edge is traversable");
            entering[w].push((v, e));
        }
    }
    let mut dist: Vec<Option<Rational>> = vec![None; nv];
    let mut heap = BinaryHeap::new();
    dist[player.target] = Some(Rational::zero());
    heap.push(Reverse((Rational::zero(), player.target)));
    while let Some(Reverse((d, w))) = heap.pop() {
        if dist[w].as_ref().is_some_and(|best| *best < d) {
            continue;
        }
        for &(v, e) in &entering[w] {
            let cand = &d + &weight[e];
            if dist[v].as_ref().is_none_or(|best| cand < *best) {
                dist[v] = Some(cand.clone());
                heap.push(Reverse((cand, v)));
            }
        }
    }

    let tight = |v: usize, e: usize| -> Option<usize> {
        let w = game.traverse(e, v)?;
        match (&dist[v], &dist[w]) {
            (Some(dv), Some(dw)) if *dv == dw + &weight[e] => Some(w),
            _ => None,
        }
    };
    let reaches_target = |from: usize, blocked: &[bool]| -> bool {
        let mut seen = blocked.to_vec();
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == player.target {
                return true;
            }
            for &e in game.exits(v) {
                if let Some(w) = tight(v, e) {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        false
    };

    let mut visited = vec![false; nv];
    visited[player.source] = true;
    let mut at = player.source;
    let mut edges = Vec::new();
    while at != player.target {
        let (e, w) = game
            .exits(at)
            .iter()
            .find_map(|&e| {
                let w = tight(at, e)?;
                (!visited[w] && reaches_target(w, &visited)).then_some((e, w))
            })
            .expect("a tight simple path to the target exists");
        edges.push(e);
        visited[w] = true;
        at = w;
    }
    BestResponse {
        path: Path::new(edges),
        cost: dist[player.source].clone().expect("target reachable from source"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NashVerdict {
    Nash,
    /// The lowest-index player with a strictly improving deviation.
    Improvable {
        player: usize,
        path: Path,
        current: Rational,
        improved: Rational,
    },
}

impl NashVerdict {
    pub fn is_nash(&self) -> bool {
        matches!(self, NashVerdict::Nash)
    }
}

pub fn is_nash(game: &Game, profile: &StrategyProfile) -> NashVerdict {
    for i in 0..game.num_players() {
        let current = player_cost(game, profile, i);
        let br = best_response(game, profile, i);
        if br.cost < current {
            return NashVerdict::Improvable {
                player: i,
                path: br.path,
                current,
                improved: br.cost,
            };
        }
    }
    NashVerdict::Nash
}

pub(crate) fn scan_game(game: &Game, budget: u128, options: ScanOptions) -> Result<(StrategySpace, ScanOutcome)> {
    let space = StrategySpace::new(game)?;
    space.check_budget(budget)?;
    let outcome = scan(game, &space, options);
    Ok((space, outcome))
}

/// All pure Nash equilibria, in profile order.
pub fn enumerate_nash(game: &Game, budget: u128) -> Result<Vec<StrategyProfile>> {
    let (space, out) = scan_game(
        game,
        budget,
        ScanOptions {
            nash: true,
            ..Default::default()
        },
    )?;
    Ok(out.nash.iter().map(|(c, _)| space.profile(c)).collect())
}

#[derive(Debug, Clone)]
pub struct Minimizers {
    pub potential: Rational,
    pub profiles: Vec<StrategyProfile>,
}

/// Every profile attaining the minimum potential. Each is checked to be a
/// Nash equilibrium through [`is_nash`].
pub fn potential_minimizers(game: &Game, budget: u128) -> Result<Minimizers> {
    let (space, out) = scan_game(game, budget, ScanOptions::default())?;
    let profiles: Vec<StrategyProfile> = out.minimizers.iter().map(|c| space.profile(c)).collect();
    for p in &profiles {
        if !is_nash(game, p).is_nash() {
            return Err(Error::Invariant(format!(
                "potential minimizer {} is not a Nash equilibrium",
                game.format_profile(p)
            )));
        }
    }
    Ok(Minimizers {
        potential: out.min_potential,
        profiles,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrdMove {
    pub player: usize,
    pub old_cost: Rational,
    pub new_cost: Rational,
    /// Potential after the move.
    pub potential: Rational,
}

/// Runs best-response dynamics, cycling through `schedule`, until a full
/// pass produces no strictly improving move.
pub fn best_response_dynamics(
    game: &Game,
    start: &StrategyProfile,
    schedule: &[usize],
) -> Result<(StrategyProfile, Vec<BrdMove>)> {
    let n = game.num_players();
    if schedule.iter().any(|&p| p >= n) || (0..n).any(|p| !schedule.contains(&p)) {
        return Err(Error::Precondition("schedule must name every player and only players".into()));
    }
    let mut profile = start.clone();
    let mut phi = potential(game, &profile);
    let mut trace = Vec::new();
    let mut idle = 0;
    for &p in schedule.iter().cycle() {
        if idle == schedule.len() {
            break;
        }
        let current = player_cost(game, &profile, p);
        let br = best_response(game, &profile, p);
        if br.cost < current {
            profile = profile.with_path(p, br.path);
            let next = potential(game, &profile);
            if next >= phi || &phi - &next != &current - &br.cost {
                return Err(Error::Invariant(format!(
                    "potential moved from {phi} to {next} on a move saving {}",
                    &current - &br.cost
                )));
            }
            phi = next;
            trace.push(BrdMove {
                player: p,
                old_cost: current,
                new_cost: br.cost,
                potential: phi.clone(),
            });
            idle = 0;
        } else {
            idle += 1;
        }
    }
    Ok((profile, trace))
}

#[derive(Debug, Clone)]
pub struct ProfileValue {
    pub choice: Vec<usize>,
    pub profile: StrategyProfile,
    pub cost: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PriceRatios {
    Defined {
        pos: Rational,
        poa: Rational,
        popoa: Rational,
        /// Indices into the report's `nash` list.
        pos_witness: usize,
        poa_witness: usize,
        /// Index into the report's `minimizers` list.
        popoa_witness: usize,
    },
    /// The optimum costs nothing, so ratios are undefined.
    Undefined,
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub profile_count: u128,
    pub nash: Vec<ProfileValue>,
    pub minimizers: Vec<ProfileValue>,
    pub min_potential: Rational,
    pub optimum: ProfileValue,
    pub min_nash_cost: Rational,
    pub max_nash_cost: Rational,
    pub ratios: PriceRatios,
}

pub fn price_ratios(game: &Game, budget: u128) -> Result<EquilibriumReport> {
    let (space, out) = scan_game(
        game,
        budget,
        ScanOptions {
            nash: true,
            ..Default::default()
        },
    )?;
    let value = |choice: &Vec<usize>| {
        let profile = space.profile(choice);
        ProfileValue {
            choice: choice.clone(),
            cost: social_cost(game, &profile),
            profile,
        }
    };
    let nash: Vec<ProfileValue> = out.nash.iter().map(|(c, _)| value(c)).collect();
    let minimizers: Vec<ProfileValue> = out.minimizers.iter().map(value).collect();
    for m in &minimizers {
        if !nash.iter().any(|n| n.choice == m.choice) {
            return Err(Error::Invariant(format!(
                "potential minimizer {} missing from the Nash set",
                game.format_profile(&m.profile)
            )));
        }
    }
    let optimum_choice = if game.is_directed() {
        &out.first_optimum
    } else {
        out.forest_optima.first().ok_or_else(|| Error::Invariant("no forest optimum found".into()))?
    };
    let optimum = value(optimum_choice);

    let argmin = |list: &[ProfileValue]| {
        (0..list.len()).fold(0, |best, k| if list[k].cost < list[best].cost { k } else { best })
    };
    let argmax = |list: &[ProfileValue]| {
        (0..list.len()).fold(0, |best, k| if list[k].cost > list[best].cost { k } else { best })
    };
    let (pos_witness, poa_witness) = (argmin(&nash), argmax(&nash));
    let popoa_witness = argmax(&minimizers);
    let min_nash_cost = nash[pos_witness].cost.clone();
    let max_nash_cost = nash[poa_witness].cost.clone();
    let ratios = if optimum.cost.is_zero() {
        PriceRatios::Undefined
    } else {
        let pos = &min_nash_cost / &optimum.cost;
        let poa = &max_nash_cost / &optimum.cost;
        let popoa = &minimizers[popoa_witness].cost / &optimum.cost;
        if !(pos <= popoa && popoa <= poa) {
            return Err(Error::Invariant(format!("ratios out of order: {pos}, {popoa}, {poa}")));
        }
        PriceRatios::Defined {
            pos,
            poa,
            popoa,
            pos_witness,
            poa_witness,
            popoa_witness,
        }
    };
    Ok(EquilibriumReport {
        profile_count: space.size(),
        nash,
        minimizers,
        min_potential: out.min_potential,
        optimum,
        min_nash_cost,
        max_nash_cost,
        ratios,
    })
}
