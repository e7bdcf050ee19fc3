//! Forest social optima and their decomposition into shared and side parts.

use crate::arithmetic::{usage_partition, UsagePartition};
use crate::enumeration::StrategySpace;
use crate::equilibrium::scan_game;
use crate::error::{Error, Result};
use crate::forest::{find_cycle, Forest};
use crate::game::{Game, Path, PlayerSet, StrategyProfile};
use crate::scan::ScanOptions;

/// A minimum-cost profile. For undirected games it is the first (in profile
/// order) minimum-cost profile whose edge union is a forest; for directed
/// games simply the first minimum-cost profile.
pub fn social_optimum(game: &Game, budget: u128) -> Result<StrategyProfile> {
    let (space, out) = scan_game(game, budget, ScanOptions::default())?;
    if game.is_directed() {
        return Ok(space.profile(&out.first_optimum));
    }
    first_forest(&space, &out.forest_optima)
}

/// Every minimum-cost profile with acyclic edge union, in profile order.
pub fn forest_optima(game: &Game, budget: u128) -> Result<Vec<StrategyProfile>> {
    if game.is_directed() {
        return Err(Error::Precondition("forest optima are defined for undirected games".into()));
    }
    let (space, out) = scan_game(
        game,
        budget,
        ScanOptions {
            all_forest_optima: true,
            ..Default::default()
        },
    )?;
    first_forest(&space, &out.forest_optima)?;
    Ok(out.forest_optima.iter().map(|c| space.profile(c)).collect())
}

fn first_forest(space: &StrategySpace, optima: &[Vec<usize>]) -> Result<StrategyProfile> {
    optima
        .first()
        .map(|c| space.profile(c))
        .ok_or_else(|| Error::Invariant("no minimum-cost profile has an acyclic edge union".into()))
}

/// Breaks every cycle of `E(P)` and reroutes each player along the forest.
///
/// Repeatedly deletes the most expensive edge of the first cycle found
/// (largest index on ties), then gives each player its unique tree path.
pub fn forest_normalize(game: &Game, profile: &StrategyProfile) -> Result<StrategyProfile> {
    if game.is_directed() {
        return Err(Error::Precondition("forest normalization needs an undirected game".into()));
    }
    let mut edges = profile.used_edges();
    while let Some(cycle) = find_cycle(game, &edges) {
        let drop = *cycle
            .iter()
            .max_by(|&&a, &&b| game.edge(a).cost.cmp(&game.edge(b).cost).then(a.cmp(&b)))
            .expect("cycles are nonempty");
        edges.retain(|&e| e != drop);
    }
    let forest = Forest::new(game, &edges)?;
    let paths = game
        .players()
        .iter()
        .map(|p| {
            forest
                .path(p.source, p.target)
                .ok_or_else(|| Error::Invariant(format!("player {} lost its route while breaking cycles", p.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    StrategyProfile::new(game, paths).map_err(|e| Error::Invariant(e.to_string()))
}

/// The two trees left after deleting the edges every player uses.
///
/// Everything here is in the oriented frame: a player whose source lies on
/// the upper side has its terminals swapped so that all sources are lower.
#[derive(Debug, Clone)]
pub struct SharedSplit {
    pub lower_vertices: Vec<usize>,
    pub lower_edges: Vec<usize>,
    pub upper_vertices: Vec<usize>,
    pub upper_edges: Vec<usize>,
    pub swapped: Vec<bool>,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    /// Each optimum path walked from the oriented source.
    pub oriented_paths: Vec<Path>,
    /// `first_shared[i][j]`: first edge of `O_i ∩ O_j` along oriented `O_i`.
    pub first_shared: Vec<Vec<usize>>,
    /// `last_shared[i][j]`: last edge of `O_i ∩ O_j` along oriented `O_i`.
    pub last_shared: Vec<Vec<usize>>,
}

impl SharedSplit {
    /// Vertex at which oriented `O_i` enters `first_shared[i][j]`.
    pub fn entry_vertex(&self, game: &Game, i: usize, j: usize) -> usize {
        self.boundary_vertex(game, i, self.first_shared[i][j], false)
    }

    /// Vertex at which oriented `O_i` leaves `last_shared[i][j]`.
    pub fn exit_vertex(&self, game: &Game, i: usize, j: usize) -> usize {
        self.boundary_vertex(game, i, self.last_shared[i][j], true)
    }

    fn boundary_vertex(&self, game: &Game, i: usize, e: usize, after: bool) -> usize {
        let path = &self.oriented_paths[i];
        let vertices = game
            .walk_vertices(self.sources[i], path.edges())
            .expect("optimum path walks");
        let k = path.position(e).expect("boundary edge lies on the path");
        vertices[if after { k + 1 } else { k }]
    }
}

#[derive(Debug, Clone)]
pub struct OptimumDecomposition {
    pub optimum: StrategyProfile,
    pub forest: Forest,
    /// `groups[m]`: players with both terminals in component `m`.
    pub groups: Vec<PlayerSet>,
    pub player_component: Vec<usize>,
    pub partition: UsagePartition,
    /// Edges used by every player, ascending.
    pub shared: Vec<usize>,
    /// Present exactly when `shared` is nonempty.
    pub split: Option<SharedSplit>,
}

impl OptimumDecomposition {
    pub fn is_connected(&self) -> bool {
        self.forest.is_connected()
    }

    /// The unique forest path between two vertices of one component.
    pub fn tree_path(&self, a: usize, b: usize) -> Option<Path> {
        self.forest.path(a, b)
    }

    /// Index `m` of the group `R_m` containing player `i`.
    pub fn group_of(&self, i: usize) -> usize {
        self.player_component[i]
    }
}

pub fn decompose_optimum(game: &Game, optimum: &StrategyProfile) -> Result<OptimumDecomposition> {
    if game.is_directed() {
        return Err(Error::Precondition("optimum decomposition needs an undirected game".into()));
    }
    let n = game.num_players();
    let forest = Forest::new(game, &optimum.used_edges())?;
    let player_component: Vec<usize> = game
        .players()
        .iter()
        .map(|p| forest.component_of(p.source).expect("every path has an edge"))
        .collect();
    let mut groups = vec![PlayerSet::EMPTY; forest.components().len()];
    for (i, &m) in player_component.iter().enumerate() {
        groups[m].insert(i);
    }
    let partition = usage_partition(game, optimum);
    let everyone = PlayerSet::all(n);
    let shared = partition.blocks.get(&everyone).cloned().unwrap_or_default();
    let split = if shared.is_empty() {
        None
    } else {
        Some(split_at_shared(game, optimum, &forest, &shared)?)
    };
    Ok(OptimumDecomposition {
        optimum: optimum.clone(),
        forest,
        groups,
        player_component,
        partition,
        shared,
        split,
    })
}

fn split_at_shared(game: &Game, optimum: &StrategyProfile, forest: &Forest, shared: &[usize]) -> Result<SharedSplit> {
    let n = game.num_players();
    let rest: Vec<usize> = forest.edges().iter().copied().filter(|e| !shared.contains(e)).collect();
    let side_forest = Forest::new(game, &rest)?;
    let lower_anchor = game.player(0).source;
    let upper_anchor = game.player(0).target;
    let side_of = |v: usize| -> Option<bool> {
        if v == lower_anchor || side_forest.path(lower_anchor, v).is_some() {
            Some(false)
        } else if v == upper_anchor || side_forest.path(upper_anchor, v).is_some() {
            Some(true)
        } else {
            None
        }
    };
    let mut swapped = Vec::with_capacity(n);
    let mut sources = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut oriented_paths = Vec::with_capacity(n);
    for (i, p) in game.players().iter().enumerate() {
        let (s, t) = (side_of(p.source), side_of(p.target));
        let swap = match (s, t) {
            (Some(false), Some(true)) => false,
            (Some(true), Some(false)) => true,
            _ => {
                return Err(Error::Invariant(format!(
                    "player {} does not cross the shared edges",
                    p.id
                )))
            }
        };
        swapped.push(swap);
        let path = optimum.path(i);
        if swap {
            sources.push(p.target);
            targets.push(p.source);
            oriented_paths.push(path.reversed());
        } else {
            sources.push(p.source);
            targets.push(p.target);
            oriented_paths.push(path.clone());
        }
    }

    let mut lower_vertices = Vec::new();
    let mut upper_vertices = Vec::new();
    for v in 0..game.num_vertices() {
        match side_of(v) {
            Some(false) => lower_vertices.push(v),
            Some(true) => upper_vertices.push(v),
            None => {}
        }
    }
    let on_side = |vs: &[usize], e: usize| vs.binary_search(&game.edge(e).u).is_ok();
    let lower_edges = rest.iter().copied().filter(|&e| on_side(&lower_vertices, e)).collect();
    let upper_edges = rest.iter().copied().filter(|&e| on_side(&upper_vertices, e)).collect();

    let mut first_shared = vec![vec![0; n]; n];
    let mut last_shared = vec![vec![0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let common: Vec<usize> = oriented_paths[i]
                .edges()
                .iter()
                .copied()
                .filter(|&e| optimum.path(j).contains(e))
                .collect();
            first_shared[i][j] = *common.first().expect("paths share the common edges");
            last_shared[i][j] = *common.last().expect("paths share the common edges");
        }
    }
    Ok(SharedSplit {
        lower_vertices,
        lower_edges,
        upper_vertices,
        upper_edges,
        swapped,
        sources,
        targets,
        oriented_paths,
        first_shared,
        last_shared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::social_cost;
    use crate::game::fixtures::*;
    use crate::generators::{directed_harmonic_family, shared_bridge_family};
    use crate::rational::{from_frac, from_int};

    const BUDGET: u128 = 1_000_000;

    #[test]
    fn optimum_of_instance_a() {
        let g = instance_a();
        let o = social_optimum(&g, BUDGET).unwrap();
        assert_eq!(o, profile(&g, &[&["e1"], &["e1"]]));
        assert_eq!(social_cost(&g, &o), from_int(2));
    }

    #[test]
    fn optimum_of_disjoint_players() {
        let g = disjoint_players();
        let o = social_optimum(&g, BUDGET).unwrap();
        assert_eq!(social_cost(&g, &o), from_int(2));
    }

    #[test]
    fn directed_optimum_uses_shared_edge() {
        let g = directed_harmonic_family(2, &from_frac(1, 10)).unwrap();
        let o = social_optimum(&g, BUDGET).unwrap();
        assert_eq!(social_cost(&g, &o), from_frac(11, 10));
        assert!(o.users(g.edge_index("vt").unwrap()).len() == 2);
        assert!(forest_optima(&g, BUDGET).is_err());
    }

    fn triangle_two_players() -> Game {
        Game::new(
            false,
            names(&["a", "b", "c"]),
            vec![
                spec("ab", "a", "b", from_int(1)),
                spec("bc", "b", "c", from_int(2)),
                spec("ca", "c", "a", from_int(2)),
            ],
            vec![player("1", "a", "b"), player("2", "b", "c")],
        )
        .unwrap()
    }

    #[test]
    fn normalize_breaks_a_triangle() {
        let g = triangle_two_players();
        // a->b via c and b->c via a together use all three edges.
        let p = StrategyProfile::new(&g, vec![Path::new(vec![2, 1]), Path::new(vec![0, 2])]).unwrap();
        assert_eq!(p.used_edges().len(), 3);
        let out = forest_normalize(&g, &p).unwrap();
        assert!(social_cost(&g, &out) <= social_cost(&g, &p));
        assert_eq!(out.used_edges(), vec![0, 1]);
        assert_eq!(social_cost(&g, &out), from_int(3));
    }

    #[test]
    fn normalize_keeps_forests_and_zero_cycles() {
        let g = instance_a();
        let p = profile(&g, &[&["e1"], &["e1"]]);
        assert_eq!(forest_normalize(&g, &p).unwrap(), p);

        let z = Game::new(
            false,
            names(&["a", "b"]),
            vec![spec("e1", "a", "b", from_int(0)), spec("e2", "a", "b", from_int(0))],
            vec![player("1", "a", "b"), player("2", "a", "b")],
        )
        .unwrap();
        let p = profile(&z, &[&["e1"], &["e2"]]);
        let out = forest_normalize(&z, &p).unwrap();
        assert_eq!(out, profile(&z, &[&["e1"], &["e1"]]));
        assert_eq!(social_cost(&z, &out), from_int(0));
    }

    #[test]
    fn decomposes_instance_a() {
        let g = instance_a();
        let d = decompose_optimum(&g, &profile(&g, &[&["e1"], &["e1"]])).unwrap();
        assert_eq!(d.shared, vec![0]);
        let s = d.split.unwrap();
        assert_eq!(s.lower_vertices, vec![g.vertex_index("a").unwrap()]);
        assert_eq!(s.upper_vertices, vec![g.vertex_index("b").unwrap()]);
        assert!(s.lower_edges.is_empty() && s.upper_edges.is_empty());
        assert_eq!((s.first_shared[0][1], s.last_shared[0][1]), (0, 0));
        assert_eq!(s.swapped, vec![false, false]);
    }

    #[test]
    fn decomposes_disjoint_players() {
        let g = disjoint_players();
        let d = decompose_optimum(&g, &profile(&g, &[&["e1"], &["e2"]])).unwrap();
        assert_eq!(d.groups, vec![PlayerSet(0b01), PlayerSet(0b10)]);
        assert!(d.shared.is_empty() && d.split.is_none());
        assert!(!d.is_connected());
    }

    #[test]
    fn decomposes_path_graph() {
        let g = Game::new(
            false,
            names(&["a", "b", "c"]),
            vec![spec("ab", "a", "b", from_int(1)), spec("bc", "b", "c", from_int(1))],
            vec![player("1", "a", "b"), player("2", "a", "c")],
        )
        .unwrap();
        let d = decompose_optimum(&g, &profile(&g, &[&["ab"], &["ab", "bc"]])).unwrap();
        assert_eq!(d.partition.blocks.get(&PlayerSet(0b11)), Some(&vec![0]));
        assert_eq!(d.partition.blocks.get(&PlayerSet(0b10)), Some(&vec![1]));
        assert_eq!(d.shared, vec![0]);
        assert_eq!(d.partition.level(2), from_int(1));
    }

    #[test]
    fn bridge_family_split_and_swaps() {
        let g = shared_bridge_family(2, &from_int(1), &vec![from_int(1); 4]).unwrap();
        let o = social_optimum(&g, BUDGET).unwrap();
        let d = decompose_optimum(&g, &o).unwrap();
        assert_eq!(d.shared, vec![g.edge_index("ab").unwrap()]);
        let s = d.split.as_ref().unwrap();
        let names = |vs: &[usize]| vs.iter().map(|&v| g.vertices()[v].clone()).collect::<Vec<_>>();
        assert_eq!(names(&s.lower_vertices), vec!["a", "s1", "s2"]);
        assert_eq!(names(&s.upper_vertices), vec!["b", "t1", "t2"]);
        assert_eq!(s.lower_edges.len(), 2);
        assert_eq!(s.entry_vertex(&g, 0, 1), g.vertex_index("a").unwrap());
        assert_eq!(s.exit_vertex(&g, 0, 1), g.vertex_index("b").unwrap());
    }

    #[test]
    fn swapped_players_are_reoriented() {
        let g = Game::new(
            false,
            names(&["a", "b"]),
            vec![spec("e1", "a", "b", from_int(1))],
            vec![player("1", "a", "b"), player("2", "b", "a")],
        )
        .unwrap();
        let d = decompose_optimum(&g, &profile(&g, &[&["e1"], &["e1"]])).unwrap();
        let s = d.split.unwrap();
        assert_eq!(s.swapped, vec![false, true]);
        assert_eq!(s.sources, vec![0, 0]);
        assert_eq!(s.targets, vec![1, 1]);
    }

    #[test]
    fn cyclic_union_is_a_structure_error() {
        let g = instance_a();
        let p = profile(&g, &[&["e1"], &["e2"]]);
        assert!(matches!(decompose_optimum(&g, &p), Err(Error::Structure(_))));
    }
}
