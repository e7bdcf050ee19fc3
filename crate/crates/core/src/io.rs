//! The JSON instance format.
//!
//! ```json
//! {
//!   "directed": false,
//!   "vertices": ["a", "b"],
//!   "edges": [{"id": "e1", "u": "a", "v": "b", "cost": "7/3"}],
//!   "players": [{"id": "1", "source": "a", "target": "b"}]
//! }
//! ```
//!
//! Ids may be strings or integers. Costs may be JSON integers or strings
//! holding an integer or `p/q`; they are always written back as strings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{EdgeSpec, Game, PlayerSpec};
use crate::rational::{format_rational, parse_rational};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Token {
    Int(i64),
    Text(String),
}

impl Token {
    fn into_string(self) -> String {
        match self {
            Token::Int(v) => v.to_string(),
            Token::Text(s) => s,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: Token,
    u: String,
    v: String,
    cost: Token,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayerDoc {
    id: Token,
    source: String,
    target: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(default)]
    directed: bool,
    vertices: Vec<String>,
    edges: Vec<EdgeDoc>,
    players: Vec<PlayerDoc>,
}

pub fn load_game(document: &str) -> Result<Game> {
    let doc: InstanceDoc = serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (k, e) in doc.edges.into_iter().enumerate() {
        let id = e.id.into_string();
        let cost = match e.cost {
            Token::Int(v) => parse_rational(&v.to_string()),
            Token::Text(s) => parse_rational(&s),
        }
        .ok_or_else(|| {
            Error::validation(format!("edges[{k}].cost"), "cost must be an integer or a p/q rational")
        })?;
        edges.push(EdgeSpec { id, u: e.u, v: e.v, cost });
    }
    let players = doc
        .players
        .into_iter()
        .map(|p| PlayerSpec {
            id: p.id.into_string(),
            source: p.source,
            target: p.target,
        })
        .collect();
    Game::new(doc.directed, doc.vertices, edges, players)
}

pub fn save_game(game: &Game) -> String {
    let name = |v: usize| game.vertices()[v].clone();
    let doc = InstanceDoc {
        directed: game.is_directed(),
        vertices: game.vertices().to_vec(),
        edges: game
            .edges()
            .iter()
            .map(|e| EdgeDoc {
                id: Token::Text(e.id.clone()),
                u: name(e.u),
                v: name(e.v),
                cost: Token::Text(format_rational(&e.cost)),
            })
            .collect(),
        players: game
            .players()
            .iter()
            .map(|p| PlayerDoc {
                id: Token::Text(p.id.clone()),
                source: name(p.source),
                target: name(p.target),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("instance document serializes");
    out.push('\n');
    out
}
