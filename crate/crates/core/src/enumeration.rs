//! Strategy sets and exhaustive iteration over the profile space.

use crate::error::{Error, Result};
use crate::game::{Game, Path, StrategyProfile};

/// Default cap on the number of profiles an exhaustive scan may visit.
pub const DEFAULT_PROFILE_BUDGET: u128 = 10_000_000;
/// Default cap on the number of simple paths listed for one player.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

/// All simple `s_i`-`t_i` paths, in lexicographic order of edge indices.
///
/// Depth-first search trying exits in ascending edge order emits paths in
/// lexicographic order, since no `s_i`-`t_i` path is a prefix of another.
pub fn enumerate_paths(game: &Game, i: usize, cap: usize) -> Result<Vec<Path>> {
    let player = game.player(i);
    let mut out = Vec::new();
    let mut on_path = vec![false; game.num_vertices()];
    let mut edges = Vec::new();
    on_path[player.source] = true;
    dfs(game, player.source, player.target, cap, &mut on_path, &mut edges, &mut out)?;
    Ok(out)
}

fn dfs(
    game: &Game,
    at: usize,
    target: usize,
    cap: usize,
    on_path: &mut [bool],
    edges: &mut Vec<usize>,
    out: &mut Vec<Path>,
) -> Result<()> {
    if at == target {
        if out.len() == cap {
            return Err(Error::Budget {
                what: "simple path list",
                size: cap as u128 + 1,
                budget: cap as u128,
            });
        }
        out.push(Path::new(edges.clone()));
        return Ok(());
    }
    for &e in game.exits(at) {
        let next = game.traverse(e, at).expect("exit edge is traversable");
        if on_path[next] {
            continue;
        }
        on_path[next] = true;
        edges.push(e);
        dfs(game, next, target, cap, on_path, edges, out)?;
        edges.pop();
        on_path[next] = false;
    }
    Ok(())
}

/// Per-player strategy sets `𝒫_i`.
#[derive(Debug, Clone)]
pub struct StrategySpace {
    paths: Vec<Vec<Path>>,
    num_edges: usize,
}

impl StrategySpace {
    pub fn new(game: &Game) -> Result<Self> {
        Self::with_path_cap(game, DEFAULT_PATH_CAP)
    }

    pub fn with_path_cap(game: &Game, cap: usize) -> Result<Self> {
        let paths = (0..game.num_players())
            .map(|i| enumerate_paths(game, i, cap))
            .collect::<Result<Vec<_>>>()?;
        Ok(StrategySpace {
            paths,
            num_edges: game.num_edges(),
        })
    }

    pub fn num_players(&self) -> usize {
        self.paths.len()
    }

    pub fn paths(&self, i: usize) -> &[Path] {
        &self.paths[i]
    }

    /// `Π |𝒫_i|`, saturating.
    pub fn size(&self) -> u128 {
        self.paths
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128))
    }

    pub fn check_budget(&self, budget: u128) -> Result<()> {
        let size = self.size();
        if size > budget {
            return Err(Error::Budget {
                what: "profile space",
                size,
                budget,
            });
        }
        Ok(())
    }

    pub fn profile(&self, choice: &[usize]) -> StrategyProfile {
        let paths = choice
            .iter()
            .enumerate()
            .map(|(i, &k)| self.paths[i][k].clone())
            .collect();
        StrategyProfile::from_valid_paths(self.num_edges, paths)
    }

    /// Path indices of `profile`, if all of its paths are listed.
    pub fn choice_of(&self, profile: &StrategyProfile) -> Option<Vec<usize>> {
        profile
            .paths()
            .iter()
            .enumerate()
            .map(|(i, p)| self.paths[i].binary_search(p).ok())
            .collect()
    }
}

/// Profiles in lexicographic order of path indices, last player fastest.
#[derive(Debug, Clone)]
pub struct ProfileIter<'a> {
    space: &'a StrategySpace,
    next: Option<Vec<usize>>,
}

impl ProfileIter<'_> {
    /// Advances and returns the path indices instead of a built profile.
    pub fn next_choice(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        self.next = loop {
            if i == 0 {
                break None;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.space.paths[i].len() {
                break Some(succ);
            }
            succ[i] = 0;
        };
        Some(current)
    }
}

impl Iterator for ProfileIter<'_> {
    type Item = StrategyProfile;

    fn next(&mut self) -> Option<StrategyProfile> {
        self.next_choice().map(|c| self.space.profile(&c))
    }
}

pub fn iterate_profiles(space: &StrategySpace, budget: u128) -> Result<ProfileIter<'_>> {
    space.check_budget(budget)?;
    let empty = space.paths.iter().any(|p| p.is_empty());
    Ok(ProfileIter {
        space,
        next: (!empty).then(|| vec![0; space.num_players()]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::*;
    use crate::rational::from_int;

    fn ids(game: &Game, paths: &[Path]) -> Vec<Vec<String>> {
        paths
            .iter()
            .map(|p| p.edges().iter().map(|&e| game.edge(e).id.clone()).collect())
            .collect()
    }

    #[test]
    fn parallel_edges_give_two_paths() {
        let g = instance_a();
        let paths = enumerate_paths(&g, 0, 100).unwrap();
        assert_eq!(ids(&g, &paths), vec![vec!["e1"], vec!["e2"]]);
    }

    #[test]
    fn triangle_has_two_paths_in_edge_order() {
        let g = single_player_triangle();
        let paths = enumerate_paths(&g, 0, 100).unwrap();
        assert_eq!(ids(&g, &paths), vec![vec!["ab"], vec!["ac", "cb"]]);
    }

    #[test]
    fn path_graph_has_unique_path() {
        let g = Game::new(
            false,
            names(&["a", "b", "c"]),
            vec![spec("ab", "a", "b", from_int(1)), spec("bc", "b", "c", from_int(1))],
            vec![player("1", "a", "c")],
        )
        .unwrap();
        assert_eq!(ids(&g, &enumerate_paths(&g, 0, 100).unwrap()), vec![vec!["ab", "bc"]]);
    }

    #[test]
    fn path_cap_is_enforced() {
        let g = instance_a();
        assert!(matches!(enumerate_paths(&g, 0, 1), Err(Error::Budget { .. })));
    }

    #[test]
    fn instance_a_profiles_in_order() {
        let g = instance_a();
        let space = StrategySpace::new(&g).unwrap();
        assert_eq!(space.size(), 4);
        let got: Vec<String> = iterate_profiles(&space, 100)
            .unwrap()
            .map(|p| g.format_profile(&p))
            .collect();
        assert_eq!(got, vec!["1:[e1] 2:[e1]", "1:[e1] 2:[e2]", "1:[e2] 2:[e1]", "1:[e2] 2:[e2]"]);
    }

    #[test]
    fn single_profile_space() {
        let g = disjoint_players();
        let space = StrategySpace::new(&g).unwrap();
        assert_eq!(iterate_profiles(&space, 10).unwrap().count(), 1);
    }

    #[test]
    fn profile_budget_error_reports_size() {
        let g = instance_a();
        let space = StrategySpace::new(&g).unwrap();
        match iterate_profiles(&space, 3) {
            Err(Error::Budget { size, budget, .. }) => assert_eq!((size, budget), (4, 3)),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn choice_round_trip() {
        let g = instance_a();
        let space = StrategySpace::new(&g).unwrap();
        let p = space.profile(&[1, 0]);
        assert_eq!(space.choice_of(&p), Some(vec![1, 0]));
    }
}
