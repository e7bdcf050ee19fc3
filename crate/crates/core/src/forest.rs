//! Undirected forests over a subset of a game's edges.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::game::{Game, Path};

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets; false if already merged.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Whether the edges, viewed as undirected, contain no cycle.
pub fn is_acyclic(game: &Game, edges: impl IntoIterator<Item = usize>) -> bool {
    let mut sets = DisjointSets::new(game.num_vertices());
    edges.into_iter().all(|e| {
        let edge = game.edge(e);
        sets.union(edge.u, edge.v)
    })
}

/// The first cycle met when adding `edges` in ascending order, as the edge
/// that closes it followed by the forest path between its endpoints.
pub fn find_cycle(game: &Game, edges: &[usize]) -> Option<Vec<usize>> {
    let mut sorted = edges.to_vec();
    sorted.sort_unstable();
    let mut sets = DisjointSets::new(game.num_vertices());
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); game.num_vertices()];
    for e in sorted {
        let edge = game.edge(e);
        if !sets.union(edge.u, edge.v) {
            let mut cycle = vec![e];
            if edge.u != edge.v {
                cycle.extend(bfs_path(&adjacency, edge.u, edge.v).expect("endpoints are connected"));
            }
            return Some(cycle);
        }
        adjacency[edge.u].push((edge.v, e));
        adjacency[edge.v].push((edge.u, e));
    }
    None
}

fn bfs_path(adjacency: &[Vec<(usize, usize)>], from: usize, to: usize) -> Option<Vec<usize>> {
    let mut via: Vec<Option<(usize, usize)>> = vec![None; adjacency.len()];
    let mut seen = vec![false; adjacency.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = Vec::new();
            let mut at = to;
            while let Some((prev, e)) = via[at] {
                path.push(e);
                at = prev;
            }
            path.reverse();
            return Some(path);
        }
        for &(w, e) in &adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                via[w] = Some((v, e));
                queue.push_back(w);
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestComponent {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

/// A rooted view of an acyclic edge set supporting unique-path queries.
#[derive(Debug, Clone)]
pub struct Forest {
    edges: Vec<usize>,
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
    component: Vec<Option<usize>>,
    components: Vec<ForestComponent>,
}

impl Forest {
    /// Components only cover vertices touched by at least one edge.
    pub fn new(game: &Game, edges: &[usize]) -> Result<Forest> {
        let mut edges = edges.to_vec();
        edges.sort_unstable();
        edges.dedup();
        if !is_acyclic(game, edges.iter().copied()) {
            return Err(Error::Structure("edge set contains a cycle".into()));
        }
        let nv = game.num_vertices();
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
        for &e in &edges {
            let edge = game.edge(e);
            adjacency[edge.u].push((edge.v, e));
            adjacency[edge.v].push((edge.u, e));
        }
        let mut parent = vec![None; nv];
        let mut depth = vec![0; nv];
        let mut component = vec![None; nv];
        let mut components = Vec::new();
        for root in 0..nv {
            if adjacency[root].is_empty() || component[root].is_some() {
                continue;
            }
            let id = components.len();
            let mut comp = ForestComponent {
                vertices: Vec::new(),
                edges: Vec::new(),
            };
            component[root] = Some(id);
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                comp.vertices.push(v);
                for &(w, e) in &adjacency[v] {
                    if component[w].is_none() {
                        component[w] = Some(id);
                        parent[w] = Some((v, e));
                        depth[w] = depth[v] + 1;
                        comp.edges.push(e);
                        queue.push_back(w);
                    }
                }
            }
            comp.vertices.sort_unstable();
            comp.edges.sort_unstable();
            components.push(comp);
        }
        Ok(Forest {
            edges,
            parent,
            depth,
            component,
            components,
        })
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn components(&self) -> &[ForestComponent] {
        &self.components
    }

    pub fn component_of(&self, v: usize) -> Option<usize> {
        self.component[v]
    }

    pub fn is_connected(&self) -> bool {
        self.components.len() <= 1
    }

    /// The unique forest path from `a` to `b`, empty when `a == b`.
    pub fn path(&self, a: usize, b: usize) -> Option<Path> {
        if a == b {
            return Some(Path::default());
        }
        if self.component[a].is_none() || self.component[a] != self.component[b] {
            return None;
        }
        let (mut x, mut y) = (a, b);
        let mut up = Vec::new();
        let mut down = Vec::new();
        while self.depth[x] > self.depth[y] {
            let (p, e) = self.parent[x].expect("non-root has a parent");
            up.push(e);
            x = p;
        }
        while self.depth[y] > self.depth[x] {
            let (p, e) = self.parent[y].expect("non-root has a parent");
            down.push(e);
            y = p;
        }
        while x != y {
            let (px, ex) = self.parent[x].expect("non-root has a parent");
            let (py, ey) = self.parent[y].expect("non-root has a parent");
            up.push(ex);
            down.push(ey);
            x = px;
            y = py;
        }
        up.extend(down.into_iter().rev());
        Some(Path::new(up))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::*;
    use crate::rational::from_int;

    fn square() -> Game {
        Game::new(
            false,
            names(&["a", "b", "c", "d"]),
            vec![
                spec("ab", "a", "b", from_int(1)),
                spec("bc", "b", "c", from_int(1)),
                spec("cd", "c", "d", from_int(1)),
                spec("da", "d", "a", from_int(1)),
            ],
            vec![player("1", "a", "c")],
        )
        .unwrap()
    }

    #[test]
    fn detects_cycles() {
        let g = square();
        assert!(is_acyclic(&g, [0, 1, 2]));
        assert!(!is_acyclic(&g, [0, 1, 2, 3]));
        let mut cycle = find_cycle(&g, &[3, 2, 1, 0]).unwrap();
        assert_eq!(cycle[0], 3);
        cycle.sort_unstable();
        assert_eq!(cycle, vec![0, 1, 2, 3]);
        assert!(find_cycle(&g, &[0, 1]).is_none());
    }

    #[test]
    fn parallel_edges_form_a_cycle() {
        let g = instance_a();
        assert!(!is_acyclic(&g, [0, 1]));
        assert_eq!(find_cycle(&g, &[0, 1]).map(|c| c.len()), Some(2));
    }

    #[test]
    fn tree_paths() {
        let g = square();
        let f = Forest::new(&g, &[0, 1, 2]).unwrap();
        assert!(f.is_connected());
        let a = g.vertex_index("a").unwrap();
        let d = g.vertex_index("d").unwrap();
        assert_eq!(f.path(a, d).unwrap().edges(), &[0, 1, 2]);
        assert_eq!(f.path(d, a).unwrap().edges(), &[2, 1, 0]);
        assert!(f.path(a, a).unwrap().is_empty());
        assert!(Forest::new(&g, &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn components_of_disjoint_edges() {
        let g = disjoint_players();
        let f = Forest::new(&g, &[0, 1]).unwrap();
        assert_eq!(f.components().len(), 2);
        assert!(f.path(0, 2).is_none());
        assert_ne!(f.component_of(0), f.component_of(2));
    }
}
