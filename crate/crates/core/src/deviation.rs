//! Deviation profiles that route every player through one pivot's
//! equilibrium path, and exact checks of the potential bounds they give.
//!
//! Two constructions are provided:
//!
//! * [`shared_edge_deviation`] needs edges used by all players in the optimum
//!   and walks each player `j` from its source through the lower tree to the
//!   pivot's source, along the pivot's equilibrium path, then through the
//!   upper tree to its target.
//! * [`forest_deviation`] works for any forest optimum: player `j` joins the
//!   pivot's path through optimum tree paths when that avoids reusing an
//!   optimum edge, and otherwise keeps its optimum path.
//!
//! Walks are simplified by splicing out the loop closed at each revisited
//! vertex.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::arithmetic::{harmonic_table, usage_partition, UsagePartition};
use crate::error::{Error, Result};
use crate::game::{Game, Path, PlayerSet, StrategyProfile};
use crate::optimum::OptimumDecomposition;
use crate::rational::{serde_str, Rational};

/// How a player's route in a deviation profile was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteTag {
    /// The pivot itself, on its equilibrium path.
    Pivot,
    /// Lower tree, pivot path, upper tree.
    ThroughShared,
    /// Source to pivot source, pivot path forward, pivot target to target.
    Forward,
    /// Source to pivot target, pivot path backward, pivot source to target.
    Backward,
    /// The player's own optimum path.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub tag: RouteTag,
    /// Vertex the walk starts from (the oriented source for shared routes).
    pub start: usize,
    /// The walk before loop removal, split into its construction steps.
    pub segments: Vec<Vec<usize>>,
    /// The simple source-target path the player is given.
    pub path: Path,
}

impl Route {
    pub fn walk(&self) -> Vec<usize> {
        self.segments.concat()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviationKind {
    SharedEdge,
    Forest,
}

#[derive(Debug, Clone)]
pub struct DeviationProfile {
    pub kind: DeviationKind,
    pub pivot: usize,
    pub routes: Vec<Route>,
    pub profile: StrategyProfile,
    /// For each optimum block `U`: players outside `U` that left their
    /// optimum path. Only filled for forest deviations.
    pub occupancy: BTreeMap<PlayerSet, usize>,
}

/// Removes loops from a walk: whenever a vertex is revisited, the segment
/// since its first visit is dropped.
pub fn simplify_walk(game: &Game, start: usize, walk: &[usize]) -> Result<Path> {
    let mut vertices = vec![start];
    let mut edges: Vec<usize> = Vec::with_capacity(walk.len());
    let mut position: HashMap<usize, usize> = HashMap::from([(start, 0)]);
    for &e in walk {
        let at = *vertices.last().expect("walk has a current vertex");
        let next = game
            .traverse(e, at)
            .ok_or_else(|| Error::Invariant(format!("walk breaks at edge {}", game.edge(e).id)))?;
        if let Some(&k) = position.get(&next) {
            for v in vertices.drain(k + 1..) {
                position.remove(&v);
            }
            edges.truncate(k);
        } else {
            position.insert(next, vertices.len());
            vertices.push(next);
            edges.push(e);
        }
    }
    Ok(Path::new(edges))
}

fn tree_path(dec: &OptimumDecomposition, a: usize, b: usize) -> Result<Vec<usize>> {
    dec.tree_path(a, b)
        .map(|p| p.edges().to_vec())
        .ok_or_else(|| Error::Invariant("terminals expected in one optimum component".into()))
}

fn check_inputs(game: &Game, equilibrium: &StrategyProfile, dec: &OptimumDecomposition, pivot: usize) -> Result<()> {
    if game.is_directed() {
        return Err(Error::Precondition("deviation profiles need an undirected game".into()));
    }
    let n = game.num_players();
    if equilibrium.paths().len() != n || dec.optimum.paths().len() != n {
        return Err(Error::Precondition("profiles do not match the game".into()));
    }
    if pivot >= n {
        return Err(Error::Precondition(format!("pivot {pivot} out of range")));
    }
    Ok(())
}

fn assemble(
    game: &Game,
    kind: DeviationKind,
    pivot: usize,
    routes: Vec<Route>,
    occupancy: BTreeMap<PlayerSet, usize>,
) -> Result<DeviationProfile> {
    let paths = routes.iter().map(|r| r.path.clone()).collect();
    let profile = StrategyProfile::new(game, paths).map_err(|e| Error::Invariant(e.to_string()))?;
    Ok(DeviationProfile {
        kind,
        pivot,
        routes,
        profile,
        occupancy,
    })
}

/// The deviation profile built around the edges every player uses.
pub fn shared_edge_deviation(
    game: &Game,
    equilibrium: &StrategyProfile,
    dec: &OptimumDecomposition,
    pivot: usize,
) -> Result<DeviationProfile> {
    check_inputs(game, equilibrium, dec, pivot)?;
    let split = dec
        .split
        .as_ref()
        .ok_or_else(|| Error::Structure("no edge is used by every player in the optimum".into()))?;
    let i = pivot;
    let pivot_path = if split.swapped[i] {
        equilibrium.path(i).reversed()
    } else {
        equilibrium.path(i).clone()
    };
    let mut routes = Vec::with_capacity(game.num_players());
    for j in 0..game.num_players() {
        if j == i {
            routes.push(Route {
                tag: RouteTag::Pivot,
                start: game.player(i).source,
                segments: vec![equilibrium.path(i).edges().to_vec()],
                path: equilibrium.path(i).clone(),
            });
            continue;
        }
        let entry = split.entry_vertex(game, i, j);
        let exit = split.exit_vertex(game, i, j);
        let segments = vec![
            tree_path(dec, split.sources[j], entry)?,
            tree_path(dec, entry, split.sources[i])?,
            pivot_path.edges().to_vec(),
            tree_path(dec, split.targets[i], exit)?,
            tree_path(dec, exit, split.targets[j])?,
        ];
        let oriented = simplify_walk(game, split.sources[j], &segments.concat())?;
        let path = if split.swapped[j] { oriented.reversed() } else { oriented };
        routes.push(Route {
            tag: RouteTag::ThroughShared,
            start: split.sources[j],
            segments,
            path,
        });
    }
    assemble(game, DeviationKind::SharedEdge, i, routes, BTreeMap::new())
}

fn disjoint(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|e| !b.contains(e))
}

/// The deviation profile for a general forest optimum.
pub fn forest_deviation(
    game: &Game,
    equilibrium: &StrategyProfile,
    dec: &OptimumDecomposition,
    pivot: usize,
) -> Result<DeviationProfile> {
    check_inputs(game, equilibrium, dec, pivot)?;
    let i = pivot;
    let (si, ti) = (game.player(i).source, game.player(i).target);
    let ni = equilibrium.path(i);
    let mut routes = Vec::with_capacity(game.num_players());
    for (j, pj) in game.players().iter().enumerate() {
        let (sj, tj) = (pj.source, pj.target);
        if j == i {
            routes.push(Route {
                tag: RouteTag::Pivot,
                start: si,
                segments: vec![ni.edges().to_vec()],
                path: ni.clone(),
            });
            continue;
        }
        let fallback = Route {
            tag: RouteTag::Fallback,
            start: sj,
            segments: vec![dec.optimum.path(j).edges().to_vec()],
            path: dec.optimum.path(j).clone(),
        };
        if dec.group_of(j) != dec.group_of(i) {
            routes.push(fallback);
            continue;
        }
        let (to_si, ti_to_tj) = (tree_path(dec, sj, si)?, tree_path(dec, ti, tj)?);
        let (to_ti, si_to_tj) = (tree_path(dec, sj, ti)?, tree_path(dec, si, tj)?);
        let (tag, segments) = if disjoint(&to_si, &ti_to_tj) {
            (RouteTag::Forward, vec![to_si, ni.edges().to_vec(), ti_to_tj])
        } else if disjoint(&to_ti, &si_to_tj) {
            (RouteTag::Backward, vec![to_ti, ni.reversed().edges().to_vec(), si_to_tj])
        } else {
            routes.push(fallback);
            continue;
        };
        let path = simplify_walk(game, sj, &segments.concat())?;
        routes.push(Route {
            tag,
            start: sj,
            segments,
            path,
        });
    }
    let occupancy = dec
        .partition
        .blocks
        .keys()
        .map(|&u| {
            let moved = routes
                .iter()
                .enumerate()
                .filter(|&(j, r)| !u.contains(j) && r.path != *dec.optimum.path(j))
                .count();
            (u, moved)
        })
        .collect();
    assemble(game, DeviationKind::Forest, i, routes, occupancy)
}

/// Which potential bound a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// Shared-edge deviation; coefficient `H_{n-|U|}` on the pivot's blocks.
    SharedEdge,
    /// Forest deviation on a connected optimum; coefficient `H_{o_i(U)}`.
    Connected,
    /// Forest deviation, grouped by optimum component.
    Forest,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::SharedEdge => "shared-edge",
            BoundKind::Connected => "connected",
            BoundKind::Forest => "forest",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermGroup {
    /// `H_n |N_U|` over equilibrium blocks containing the pivot.
    Equilibrium,
    /// Optimum blocks containing the pivot.
    PivotOptimum,
    /// `H_{|U|} |O_U|` over optimum blocks without the pivot.
    OtherOptimum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundTerm {
    pub group: TermGroup,
    pub players: PlayerSet,
    /// Optimum component holding the block, for optimum terms.
    pub component: Option<usize>,
    /// Index `k` of the harmonic coefficient `H_k`.
    pub harmonic_index: usize,
    #[serde(with = "serde_str")]
    pub weight: Rational,
    #[serde(with = "serde_str")]
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub bound: BoundKind,
    pub pivot: usize,
    #[serde(with = "serde_str")]
    pub phi_equilibrium: Rational,
    #[serde(with = "serde_str")]
    pub phi_deviation: Rational,
    #[serde(with = "serde_str")]
    pub rhs: Rational,
    pub terms: Vec<BoundTerm>,
    /// Occupancy counts that exceeded their allowed maximum, as
    /// `(block, measured, allowed)`.
    pub occupancy_overflows: Vec<(PlayerSet, usize, usize)>,
    pub holds: bool,
}

impl LemmaReport {
    pub fn is_tight(&self) -> bool {
        self.holds && self.phi_deviation == self.rhs
    }
}

impl fmt::Display for LemmaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} bound, pivot {}: phi(N) = {}, phi(dev) = {}, rhs = {}: {}",
            self.bound,
            self.pivot + 1,
            self.phi_equilibrium,
            self.phi_deviation,
            self.rhs,
            if self.holds { "PASS" } else { "FAIL" }
        )?;
        for (u, got, max) in &self.occupancy_overflows {
            write!(f, "; occupancy of {u} is {got} > {max}")?;
        }
        Ok(())
    }
}

fn partition_potential(part: &UsagePartition, h: &[Rational]) -> Rational {
    part.block_costs
        .iter()
        .fold(Rational::zero(), |acc, (u, w)| acc + &h[u.len()] * w)
}

/// Counts players outside each block whose deviation path differs from
/// their optimum path, measured afresh from the paths.
fn measure_occupancy(dec: &OptimumDecomposition, dev: &DeviationProfile) -> BTreeMap<PlayerSet, usize> {
    let n = dec.optimum.paths().len();
    let moved: Vec<bool> = (0..n).map(|j| dev.profile.path(j) != dec.optimum.path(j)).collect();
    dec.partition
        .blocks
        .keys()
        .map(|&u| (u, (0..n).filter(|&j| !u.contains(j) && moved[j]).count()))
        .collect()
}

fn verify(
    game: &Game,
    equilibrium: &StrategyProfile,
    dec: &OptimumDecomposition,
    dev: &DeviationProfile,
    bound: BoundKind,
) -> Result<LemmaReport> {
    let n = game.num_players();
    let i = dev.pivot;
    let h = harmonic_table(n);
    let eq_part = usage_partition(game, equilibrium);
    let dev_part = usage_partition(game, &dev.profile);
    let phi_equilibrium = partition_potential(&eq_part, &h);
    let phi_deviation = partition_potential(&dev_part, &h);

    let occupancy = match bound {
        BoundKind::SharedEdge => BTreeMap::new(),
        _ => {
            let measured = measure_occupancy(dec, dev);
            if measured != dev.occupancy {
                return Err(Error::Invariant(format!(
                    "builder occupancy {:?} differs from measured {:?}",
                    dev.occupancy, measured
                )));
            }
            measured
        }
    };
    let group_size = dec.groups[dec.group_of(i)].len();

    let mut terms = Vec::new();
    let mut occupancy_overflows = Vec::new();
    for (&u, w) in &eq_part.block_costs {
        if u.contains(i) {
            terms.push(BoundTerm {
                group: TermGroup::Equilibrium,
                players: u,
                component: None,
                harmonic_index: n,
                weight: w.clone(),
                value: &h[n] * w,
            });
        }
    }
    for (&u, w) in &dec.partition.block_costs {
        let edge = dec.partition.blocks[&u][0];
        let component = dec.forest.component_of(game.edge(edge).u);
        let (group, k) = if u.contains(i) {
            let k = match bound {
                BoundKind::SharedEdge => n - u.len(),
                BoundKind::Connected | BoundKind::Forest => {
                    let o = occupancy[&u];
                    let allowed = match bound {
                        BoundKind::Connected => n - u.len(),
                        _ => group_size - u.len(),
                    };
                    if o > allowed {
                        occupancy_overflows.push((u, o, allowed));
                    }
                    o
                }
            };
            (TermGroup::PivotOptimum, k)
        } else {
            (TermGroup::OtherOptimum, u.len())
        };
        terms.push(BoundTerm {
            group,
            players: u,
            component,
            harmonic_index: k,
            weight: w.clone(),
            value: &h[k] * w,
        });
    }
    let rhs = terms.iter().fold(Rational::zero(), |acc, t| acc + &t.value);
    let holds = phi_equilibrium <= phi_deviation && phi_deviation <= rhs && occupancy_overflows.is_empty();
    let report = LemmaReport {
        bound,
        pivot: i,
        phi_equilibrium,
        phi_deviation,
        rhs,
        terms,
        occupancy_overflows,
        holds,
    };
    if holds {
        Ok(report)
    } else {
        Err(Error::LemmaViolation(Box::new(report)))
    }
}

/// Checks `Φ(N) ≤ Φ(S^i) ≤ Σ_{U∋i} H_n|N_U| + Σ_{U∋i} H_{n-|U|}|O_U| +
/// Σ_{U∌i} H_{|U|}|O_U|` for the shared-edge deviation around pivot `i`.
pub fn verify_shared_edge_bound(
    game: &Game,
    equilibrium: &StrategyProfile,
    dec: &OptimumDecomposition,
    pivot: usize,
) -> Result<LemmaReport> {
    let dev = shared_edge_deviation(game, equilibrium, dec, pivot)?;
    verify(game, equilibrium, dec, &dev, BoundKind::SharedEdge)
}

/// Checks the forest-deviation bound with coefficients `H_{o_i(U)}` on a
/// connected optimum, and `o_i(U) ≤ n - |U|`.
pub fn verify_connected_bound(
    game: &Game,
    equilibrium: &StrategyProfile,
    dec: &OptimumDecomposition,
    pivot: usize,
) -> Result<LemmaReport> {
    if !dec.is_connected() {
        return Err(Error::Precondition("the optimum edge set is not connected".into()));
    }
    let dev = forest_deviation(game, equilibrium, dec, pivot)?;
    verify(game, equilibrium, dec, &dev, BoundKind::Connected)
}

/// Checks the forest-deviation bound grouped by optimum component, with
/// `o_i(U) ≤ |R_k| - |U|` where `R_k` is the pivot's group.
pub fn verify_forest_bound(
    game: &Game,
    equilibrium: &StrategyProfile,
    dec: &OptimumDecomposition,
    pivot: usize,
) -> Result<LemmaReport> {
    let dev = forest_deviation(game, equilibrium, dec, pivot)?;
    verify(game, equilibrium, dec, &dev, BoundKind::Forest)
}

/// Every bound that applies to the optimum's shape, for one pivot.
pub fn verify_applicable(
    game: &Game,
    equilibrium: &StrategyProfile,
    dec: &OptimumDecomposition,
    pivot: usize,
) -> Vec<Result<LemmaReport>> {
    let mut out = Vec::new();
    if dec.split.is_some() {
        out.push(verify_shared_edge_bound(game, equilibrium, dec, pivot));
    }
    if dec.is_connected() {
        out.push(verify_connected_bound(game, equilibrium, dec, pivot));
    }
    out.push(verify_forest_bound(game, equilibrium, dec, pivot));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraversalCase {
    /// Pivot outside the block, player inside.
    PlayerOnly,
    /// Neither pivot nor player in the block.
    Neither,
    /// Both in the block.
    Both,
    /// Pivot inside, player outside and rerouted.
    PivotOnlyRerouted,
    /// Pivot inside, player outside on its optimum path.
    PivotOnlyKept,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraversalVerdict {
    pub case: TraversalCase,
    pub may_traverse: bool,
}

/// Whether an optimum edge used by exactly `block` may appear in player
/// `j`'s forest-deviation route around pivot `i`. The pivot's own
/// equilibrium edges are exempt from the verdict.
pub fn classify_edge_traversal(block: PlayerSet, i: usize, j: usize, tag: RouteTag) -> TraversalVerdict {
    let case = match (block.contains(i), block.contains(j)) {
        (false, true) => TraversalCase::PlayerOnly,
        (false, false) => TraversalCase::Neither,
        (true, true) => TraversalCase::Both,
        (true, false) if tag == RouteTag::Fallback => TraversalCase::PivotOnlyKept,
        (true, false) => TraversalCase::PivotOnlyRerouted,
    };
    let may_traverse = matches!(case, TraversalCase::PlayerOnly | TraversalCase::PivotOnlyRerouted);
    TraversalVerdict { case, may_traverse }
}

/// Optimum edges that a forest deviation uses against its verdict, as
/// `(player, edge)` pairs.
pub fn traversal_violations(
    equilibrium: &StrategyProfile,
    dec: &OptimumDecomposition,
    dev: &DeviationProfile,
) -> Vec<(usize, usize)> {
    let pivot_path = equilibrium.path(dev.pivot);
    let mut out = Vec::new();
    for (j, route) in dev.routes.iter().enumerate() {
        if j == dev.pivot {
            continue;
        }
        for (&u, edges) in &dec.partition.blocks {
            let verdict = classify_edge_traversal(u, dev.pivot, j, route.tag);
            if verdict.may_traverse {
                continue;
            }
            for &e in edges {
                if route.path.contains(e) && !pivot_path.contains(e) {
                    out.push((j, e));
                }
            }
        }
    }
    out
}
