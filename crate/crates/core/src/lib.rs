//! Exact analysis of Shapley network design games.
//!
//! Players each pick a path between their terminals in an edge-weighted
//! graph and split every edge's cost equally among its users. This crate
//! enumerates strategy profiles exhaustively over exact rationals to find
//! Nash equilibria, potential minimizers and forest social optima, builds
//! the deviation profiles used to bound the price of stability, and checks
//! the resulting inequalities on concrete instances.
//!
//! ```
//! use netdesign::{load_game, price_ratios, PriceRatios};
//!
//! let game = load_game(r#"{
//!     "vertices": ["a", "b"],
//!     "edges": [
//!         {"id": "e1", "u": "a", "v": "b", "cost": 2},
//!         {"id": "e2", "u": "a", "v": "b", "cost": 3}
//!     ],
//!     "players": [
//!         {"id": 1, "source": "a", "target": "b"},
//!         {"id": 2, "source": "a", "target": "b"}
//!     ]
//! }"#).unwrap();
//! let report = price_ratios(&game, 1000).unwrap();
//! match report.ratios {
//!     PriceRatios::Defined { pos, poa, .. } => {
//!         assert_eq!(pos.to_string(), "1");
//!         assert_eq!(poa.to_string(), "3/2");
//!     }
//!     PriceRatios::Undefined => unreachable!(),
//! }
//! ```

pub mod arithmetic;
pub mod bounds;
pub mod campaign;
pub mod deviation;
pub mod enumeration;
pub mod equilibrium;
pub mod error;
pub mod forest;
pub mod game;
pub mod generators;
pub mod io;
pub mod optimum;
pub mod rational;
mod scan;

pub use arithmetic::{
    harmonic_int, harmonic_real, harmonic_table, player_cost, potential, social_cost, usage_partition,
    HarmonicSeq, UsagePartition,
};
pub use bounds::{
    bound_gap_table, mixing_weight, pos_upper_bound, verify_aggregate, AggregateReport, BoundContext, BoundTable,
};
pub use campaign::{run_campaign, verify_instance, Campaign, FuzzConfig, InstanceVerification, VerifyOptions};
pub use deviation::{
    classify_edge_traversal, forest_deviation, shared_edge_deviation, verify_applicable, verify_connected_bound,
    verify_forest_bound, verify_shared_edge_bound, BoundKind, DeviationProfile, LemmaReport, RouteTag,
};
pub use enumeration::{enumerate_paths, iterate_profiles, StrategySpace, DEFAULT_PROFILE_BUDGET};
pub use equilibrium::{
    best_response, best_response_dynamics, enumerate_nash, is_nash, potential_minimizers, price_ratios,
    EquilibriumReport, NashVerdict, PriceRatios,
};
pub use error::{Error, Result};
pub use game::{Edge, EdgeSpec, Game, Path, Player, PlayerSet, PlayerSpec, StrategyProfile};
pub use generators::{directed_harmonic_family, random_instance, shared_bridge_family, RandomParams};
pub use io::{load_game, save_game};
pub use optimum::{decompose_optimum, forest_normalize, forest_optima, social_optimum, OptimumDecomposition};
pub use rational::Rational;
