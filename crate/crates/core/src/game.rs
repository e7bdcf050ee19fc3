//! Game instances and strategy profiles.
//!
//! Vertices, edges and players are addressed by dense indices into the
//! canonically ordered lists held by [`Game`]. The canonical order of each list
//! is the natural (digit-aware) order of the declared ids, so edge index order
//! is also the tie-breaking order used everywhere else in the crate.

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest supported player count; player sets are `u64` bitmasks.
pub const MAX_PLAYERS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub u: usize,
    pub v: usize,
    pub cost: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Player {
    pub id: String,
    pub source: usize,
    pub target: usize,
}

/// Edge declaration by vertex name, as it appears in an instance document.
#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub id: String,
    pub u: String,
    pub v: String,
    pub cost: Rational,
}

#[derive(Debug, Clone)]
pub struct PlayerSpec {
    pub id: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    directed: bool,
    vertices: Vec<String>,
    edges: Vec<Edge>,
    players: Vec<Player>,
    // Per vertex, the edges that can be left from it, ascending by index.
    exits: Vec<Vec<usize>>,
}

/// Orders strings so that embedded numbers compare by value ("e2" < "e10").
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let bytes = s.as_bytes();
        let mut start = 0;
        while start < bytes.len() {
            let digit = bytes[start].is_ascii_digit();
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() == digit {
                end += 1;
            }
            out.push((digit, &s[start..end]));
            start = end;
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let ord = match (x, y) {
            ((true, x), (true, y)) => {
                let (tx, ty) = (x.trim_start_matches('0'), y.trim_start_matches('0'));
                tx.len().cmp(&ty.len()).then_with(|| tx.cmp(ty))
            }
            ((_, x), (_, y)) => x.cmp(y),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.len().cmp(&b.len())).then_with(|| a.cmp(b))
}

impl Game {
    /// Builds and validates a game. Lists are reordered canonically by id.
    pub fn new(
        directed: bool,
        vertices: Vec<String>,
        edges: Vec<EdgeSpec>,
        players: Vec<PlayerSpec>,
    ) -> Result<Game> {
        let mut vertices = vertices;
        vertices.sort_by(|a, b| natural_cmp(a, b));
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::validation("vertices", format!("duplicate vertex {:?}", w[0])));
            }
        }
        let lookup: BTreeMap<&str, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let vertex = |field: String, name: &str| {
            lookup
                .get(name)
                .copied()
                .ok_or_else(|| Error::validation(field, format!("unknown vertex {name:?}")))
        };

        let mut edges = edges;
        edges.sort_by(|a, b| natural_cmp(&a.id, &b.id));
        let mut built = Vec::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            if k > 0 && edges[k - 1].id == e.id {
                return Err(Error::validation("edges", format!("duplicate edge id {:?}", e.id)));
            }
            let field = format!("edges[{}]", e.id);
            if e.cost.is_negative() {
                return Err(Error::validation(format!("{field}.cost"), "negative cost"));
            }
            built.push(Edge {
                id: e.id.clone(),
                u: vertex(format!("{field}.u"), &e.u)?,
                v: vertex(format!("{field}.v"), &e.v)?,
                cost: e.cost.clone(),
            });
        }

        let mut players = players;
        players.sort_by(|a, b| natural_cmp(&a.id, &b.id));
        if players.is_empty() {
            return Err(Error::validation("players", "at least one player is required"));
        }
        if players.len() > MAX_PLAYERS {
            return Err(Error::validation(
                "players",
                format!("{} players exceeds the supported maximum of {MAX_PLAYERS}", players.len()),
            ));
        }
        let mut built_players = Vec::with_capacity(players.len());
        for (k, p) in players.iter().enumerate() {
            if k > 0 && players[k - 1].id == p.id {
                return Err(Error::validation("players", format!("duplicate player id {:?}", p.id)));
            }
            let field = format!("players[{}]", p.id);
            let source = vertex(format!("{field}.source"), &p.source)?;
            let target = vertex(format!("{field}.target"), &p.target)?;
            if source == target {
                return Err(Error::validation(field, "source equals target"));
            }
            built_players.push(Player {
                id: p.id.clone(),
                source,
                target,
            });
        }

        let mut exits = vec![Vec::new(); vertices.len()];
        for (k, e) in built.iter().enumerate() {
            exits[e.u].push(k);
            if !directed && e.v != e.u {
                exits[e.v].push(k);
            }
        }
        let game = Game {
            directed,
            vertices,
            edges: built,
            players: built_players,
            exits,
        };
        for p in &game.players {
            if !game.reachable(p.source, p.target) {
                return Err(Error::validation(
                    format!("players[{}]", p.id),
                    format!(
                        "unreachable terminal pair {:?} -> {:?}",
                        game.vertices[p.source], game.vertices[p.target]
                    ),
                ));
            }
        }
        Ok(game)
    }

    fn reachable(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(v) = queue.pop_front() {
            if v == to {
                return true;
            }
            for &e in &self.exits[v] {
                let w = self.traverse(e, v).expect("exit edge is traversable");
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        false
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &Player {
        &self.players[i]
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn player_index(&self, id: &str) -> Option<usize> {
        self.players.iter().position(|p| p.id == id)
    }

    /// Edges that may be taken out of `v`, ascending by index.
    pub fn exits(&self, v: usize) -> &[usize] {
        &self.exits[v]
    }

    /// The vertex reached by taking edge `e` from `from`, if allowed.
    pub fn traverse(&self, e: usize, from: usize) -> Option<usize> {
        let edge = &self.edges[e];
        if edge.u == from {
            Some(edge.v)
        } else if !self.directed && edge.v == from {
            Some(edge.u)
        } else {
            None
        }
    }

    /// Vertex sequence of `path` walked from `start`, or `None` if it breaks.
    pub fn walk_vertices(&self, start: usize, path: &[usize]) -> Option<Vec<usize>> {
        let mut out = Vec::with_capacity(path.len() + 1);
        out.push(start);
        let mut at = start;
        for &e in path {
            at = self.traverse(e, at)?;
            out.push(at);
        }
        Some(out)
    }

    /// Sum of edge costs over a set of edges, `|F|`.
    pub fn cost_of<'a>(&self, edges: impl IntoIterator<Item = &'a usize>) -> Rational {
        edges
            .into_iter()
            .fold(Rational::zero(), |acc, &e| acc + &self.edges[e].cost)
    }

    pub fn format_path(&self, path: &Path) -> String {
        let ids: Vec<&str> = path.edges().iter().map(|&e| self.edges[e].id.as_str()).collect();
        format!("[{}]", ids.join(","))
    }

    pub fn format_set(&self, set: PlayerSet) -> String {
        let ids: Vec<&str> = set.iter().map(|i| self.players[i].id.as_str()).collect();
        format!("{{{}}}", ids.join(","))
    }

    pub fn format_profile(&self, profile: &StrategyProfile) -> String {
        profile
            .paths()
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{}:{}", self.players[i].id, self.format_path(p)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Declarations that rebuild this game through [`Game::new`].
    pub fn specs(&self) -> (Vec<EdgeSpec>, Vec<PlayerSpec>) {
        let name = |v: usize| self.vertices[v].clone();
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeSpec {
                id: e.id.clone(),
                u: name(e.u),
                v: name(e.v),
                cost: e.cost.clone(),
            })
            .collect();
        let players = self
            .players
            .iter()
            .map(|p| PlayerSpec {
                id: p.id.clone(),
                source: name(p.source),
                target: name(p.target),
            })
            .collect();
        (edges, players)
    }
}

/// An ordered sequence of edge indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Path(Vec<usize>);

impl Path {
    pub fn new(edges: Vec<usize>) -> Self {
        Path(edges)
    }

    pub fn edges(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.0.contains(&e)
    }

    pub fn reversed(&self) -> Path {
        Path(self.0.iter().rev().copied().collect())
    }

    pub fn position(&self, e: usize) -> Option<usize> {
        self.0.iter().position(|&x| x == e)
    }

    /// True when `self` visits each vertex at most once starting at `start`
    /// and ends at `end`.
    pub fn is_simple_between(&self, game: &Game, start: usize, end: usize) -> bool {
        match game.walk_vertices(start, &self.0) {
            None => false,
            Some(vs) => {
                let mut seen = vec![false; game.num_vertices()];
                for &v in &vs {
                    if std::mem::replace(&mut seen[v], true) {
                        return false;
                    }
                }
                vs.last() == Some(&end)
            }
        }
    }
}

impl From<Vec<usize>> for Path {
    fn from(v: Vec<usize>) -> Self {
        Path(v)
    }
}

/// A set of players as a bitmask over player indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PlayerSet(pub u64);

impl PlayerSet {
    pub const EMPTY: PlayerSet = PlayerSet(0);

    pub fn singleton(i: usize) -> Self {
        PlayerSet(1 << i)
    }

    pub fn all(n: usize) -> Self {
        if n >= 64 {
            PlayerSet(u64::MAX)
        } else {
            PlayerSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: PlayerSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }
}

/// Serialized as its display form, `{1,3}`.
impl serde::Serialize for PlayerSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for PlayerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// One simple path per player plus the derived edge users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyProfile {
    paths: Vec<Path>,
    users: Vec<PlayerSet>,
}

impl StrategyProfile {
    /// Validates that path `i` is a simple `s_i`-`t_i` path for every player.
    pub fn new(game: &Game, paths: Vec<Path>) -> Result<Self> {
        if paths.len() != game.num_players() {
            return Err(Error::Structure(format!(
                "profile has {} paths for {} players",
                paths.len(),
                game.num_players()
            )));
        }
        for (i, p) in paths.iter().enumerate() {
            if p.edges().iter().any(|&e| e >= game.num_edges()) {
                return Err(Error::Structure(format!("path of player {i} names an unknown edge")));
            }
            let pl = game.player(i);
            if !p.is_simple_between(game, pl.source, pl.target) {
                return Err(Error::Structure(format!(
                    "path {} of player {} is not a simple source-target path",
                    game.format_path(p),
                    pl.id
                )));
            }
        }
        Ok(Self::from_valid_paths(game.num_edges(), paths))
    }

    /// Builds a profile from paths already known to be valid.
    pub(crate) fn from_valid_paths(num_edges: usize, paths: Vec<Path>) -> Self {
        let mut users = vec![PlayerSet::EMPTY; num_edges];
        for (i, p) in paths.iter().enumerate() {
            for &e in p.edges() {
                users[e].insert(i);
            }
        }
        StrategyProfile { paths, users }
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn path(&self, i: usize) -> &Path {
        &self.paths[i]
    }

    /// `k_e(P)`.
    pub fn usage(&self, e: usize) -> usize {
        self.users[e].len()
    }

    pub fn users(&self, e: usize) -> PlayerSet {
        self.users[e]
    }

    /// `E(P)` in ascending edge order.
    pub fn used_edges(&self) -> Vec<usize> {
        (0..self.users.len()).filter(|&e| !self.users[e].is_empty()).collect()
    }

    /// The profile with player `i` switched to `path`; `path` must be valid.
    pub fn with_path(&self, i: usize, path: Path) -> StrategyProfile {
        let mut paths = self.paths.clone();
        paths[i] = path;
        StrategyProfile::from_valid_paths(self.users.len(), paths)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::rational::from_int;

    #[test]
    fn natural_order_compares_numbers_by_value() {
        let mut ids = vec!["e10", "e2", "e1", "a", "e02"];
        ids.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(ids, vec!["a", "e1", "e2", "e02", "e10"]);
    }

    #[test]
    fn instance_a_shape() {
        let g = instance_a();
        assert_eq!(g.num_players(), 2);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.exits(0), &[0, 1]);
    }

    #[test]
    fn rejects_negative_cost() {
        let err = Game::new(
            false,
            names(&["a", "b"]),
            vec![spec("e1", "a", "b", from_int(-1))],
            vec![player("1", "a", "b")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("negative cost"), "{err}");
    }

    #[test]
    fn rejects_unknown_vertex_and_unreachable_pair() {
        let err = Game::new(
            false,
            names(&["a", "b"]),
            vec![spec("e1", "a", "b", from_int(1))],
            vec![player("1", "a", "z")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("unknown vertex"), "{err}");

        let err = Game::new(
            false,
            names(&["a", "b", "c"]),
            vec![spec("e1", "a", "b", from_int(1))],
            vec![player("1", "a", "c")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("unreachable"), "{err}");
    }

    #[test]
    fn directed_reachability_respects_orientation() {
        let err = Game::new(
            true,
            names(&["a", "b"]),
            vec![spec("e1", "b", "a", from_int(1))],
            vec![player("1", "a", "b")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("unreachable"));
    }

    #[test]
    fn profile_usage_counts() {
        let g = instance_a();
        let p = profile(&g, &[&["e1"], &["e1"]]);
        assert_eq!(p.usage(0), 2);
        assert_eq!(p.usage(1), 0);
        assert_eq!(p.users(0), PlayerSet(0b11));
        assert_eq!(p.used_edges(), vec![0]);
    }

    #[test]
    fn profile_rejects_non_simple_paths() {
        let g = single_player_triangle();
        // a -ab-> b -ab-> a ... not ending at b and repeating a vertex
        let bad = StrategyProfile::new(&g, vec![Path::new(vec![0, 0, 0])]);
        assert!(bad.is_err());
        let ok = StrategyProfile::new(&g, vec![Path::new(vec![1, 2])]);
        assert!(ok.is_ok());
    }

    #[test]
    fn player_set_display_and_subset() {
        let s = PlayerSet(0b101);
        assert_eq!(s.to_string(), "{1,3}");
        assert!(PlayerSet(0b1).is_subset(s));
        assert!(!PlayerSet(0b10).is_subset(s));
        assert_eq!(PlayerSet::all(3), PlayerSet(0b111));
    }
}
