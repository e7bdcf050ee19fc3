//! Fixed workloads shared by the benchmarks in `benches/`.

use netdesign::{random_instance, Game, RandomParams, StrategyProfile, StrategySpace};

/// A random instance large enough for scans to dominate setup cost.
pub fn scan_workload(players: usize, seed: u64) -> Game {
    random_instance(
        RandomParams {
            players,
            vertices: 5,
            edges: 8,
            cost_range: (0, 3),
        },
        seed,
    )
    .expect("workload parameters generate")
}

/// The game with the last profile of its space, a typical best-response input.
pub fn response_workload(seed: u64) -> (Game, StrategyProfile) {
    let game = scan_workload(3, seed);
    let space = StrategySpace::new(&game).expect("paths enumerate");
    let last: Vec<usize> = (0..game.num_players()).map(|i| space.paths(i).len() - 1).collect();
    let profile = space.profile(&last);
    (game, profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_are_deterministic() {
        assert_eq!(scan_workload(3, 11), scan_workload(3, 11));
        let (g, p) = response_workload(5);
        assert_eq!(p.paths().len(), g.num_players());
    }
}
