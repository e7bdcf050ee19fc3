//! The per-instance verification pipeline and seeded fuzz campaigns.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arithmetic::social_cost;
use crate::bounds::{pos_upper_bound, verify_aggregate, AggregateReport, REAL_SLACK};
use crate::deviation::{
    forest_deviation, shared_edge_deviation, traversal_violations, verify_applicable, BoundKind, LemmaReport,
    RouteTag,
};
use crate::enumeration::{StrategySpace, DEFAULT_PROFILE_BUDGET};
use crate::equilibrium::is_nash;
use crate::error::{Error, Result};
use crate::game::{Game, PlayerSet, StrategyProfile};
use crate::generators::{random_instance, RandomParams};
use crate::optimum::{decompose_optimum, OptimumDecomposition};
use crate::rational::{decimal12, format_rational, le_with_slack, Rational};
use crate::scan::{scan, ScanOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub budget: u128,
    /// Check every potential minimizer instead of the first.
    pub all_minimizers: bool,
    /// Check against every forest optimum instead of the first.
    pub all_optima: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            budget: DEFAULT_PROFILE_BUDGET,
            all_minimizers: false,
            all_optima: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OptimumShape {
    /// Some edge is used by every player.
    SharedEdge,
    Connected,
    Disconnected,
}

impl OptimumShape {
    fn of(dec: &OptimumDecomposition) -> Self {
        if dec.split.is_some() {
            OptimumShape::SharedEdge
        } else if dec.is_connected() {
            OptimumShape::Connected
        } else {
            OptimumShape::Disconnected
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FailureKind {
    Nash,
    Bound,
    Traversal,
    CrossCheck,
    Aggregate,
    Ratio,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::Nash => "nash",
            FailureKind::Bound => "bound",
            FailureKind::Traversal => "traversal",
            FailureKind::CrossCheck => "cross-check",
            FailureKind::Aggregate => "aggregate",
            FailureKind::Ratio => "ratio",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub kind: FailureKind,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct InstanceVerification {
    pub profile_count: u128,
    pub minimizers: Vec<StrategyProfile>,
    pub optima: Vec<StrategyProfile>,
    /// Shape of the first (canonical) optimum.
    pub shape: OptimumShape,
    pub bound_reports: Vec<LemmaReport>,
    pub aggregates: Vec<AggregateReport>,
    /// Largest `cost(N)/cost(O)` seen over the checked pairs.
    pub max_ratio: Option<Rational>,
    pub bound: Option<f64>,
    pub failures: Vec<Failure>,
}

impl InstanceVerification {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Collector {
    failures: Vec<Failure>,
}

impl Collector {
    fn fail(&mut self, kind: FailureKind, detail: String) {
        self.failures.push(Failure { kind, detail });
    }
}

/// Runs the full pipeline on one undirected instance: optimum, potential
/// minimizers and their Nash check, every applicable deviation bound for
/// every pivot, the traversal discipline, the aggregate inequalities and the
/// ratio bound.
pub fn verify_instance(game: &Game, options: VerifyOptions) -> Result<InstanceVerification> {
    if game.is_directed() {
        return Err(Error::Precondition(
            "the deviation bounds are stated for undirected games; directed instances are not verified".into(),
        ));
    }
    let space = StrategySpace::new(game)?;
    space.check_budget(options.budget)?;
    let out = scan(
        game,
        &space,
        ScanOptions {
            nash: false,
            all_forest_optima: options.all_optima,
        },
    );
    let minimizers: Vec<StrategyProfile> = out.minimizers.iter().map(|c| space.profile(c)).collect();
    let optima: Vec<StrategyProfile> = out.forest_optima.iter().map(|c| space.profile(c)).collect();
    if optima.is_empty() {
        return Err(Error::Invariant("no forest optimum found".into()));
    }
    if social_cost(game, &optima[0]) != out.min_social {
        return Err(Error::Invariant("forest optimum is dearer than the minimum social cost".into()));
    }
    let mut c = Collector { failures: Vec::new() };
    for m in &minimizers {
        if !is_nash(game, m).is_nash() {
            c.fail(
                FailureKind::Nash,
                format!("potential minimizer {} is not a Nash equilibrium", game.format_profile(m)),
            );
        }
    }

    let n = game.num_players();
    let bound = (n >= 2).then(|| pos_upper_bound(n)).transpose()?;
    let checked_minimizers = if options.all_minimizers { &minimizers[..] } else { &minimizers[..1] };
    let mut bound_reports = Vec::new();
    let mut aggregates = Vec::new();
    let mut max_ratio: Option<Rational> = None;
    let mut shape = None;
    for o in &optima {
        let dec = decompose_optimum(game, o)?;
        shape.get_or_insert(OptimumShape::of(&dec));
        let cost_o = social_cost(game, o);
        for eq in checked_minimizers {
            let label = format!("N = {}, O = {}", game.format_profile(eq), game.format_profile(o));
            for pivot in 0..n {
                let mut shared_rhs = None;
                for result in verify_applicable(game, eq, &dec, pivot) {
                    match result {
                        Ok(r) => {
                            if r.bound == BoundKind::SharedEdge {
                                shared_rhs = Some(r.rhs.clone());
                            }
                            bound_reports.push(r);
                        }
                        Err(Error::LemmaViolation(r)) => {
                            c.fail(FailureKind::Bound, format!("{label}: {r}"));
                            bound_reports.push(*r);
                        }
                        Err(e) => c.fail(FailureKind::Bound, format!("{label}, pivot {}: {e}", pivot + 1)),
                    }
                }
                check_routes(game, eq, &dec, pivot, shared_rhs.as_ref(), &label, &mut c)?;
            }
            match verify_aggregate(game, eq, o) {
                Ok(r) => aggregates.push(r),
                Err(Error::AggregateViolation(r)) => {
                    c.fail(FailureKind::Aggregate, format!("{label}: {r}"));
                    aggregates.push(*r);
                }
                Err(e) => return Err(e),
            }
            if !cost_o.is_zero() {
                let ratio = social_cost(game, eq) / &cost_o;
                if let Some(b) = bound {
                    if !le_with_slack(&ratio, b, REAL_SLACK) {
                        c.fail(
                            FailureKind::Ratio,
                            format!("{label}: cost ratio {} exceeds bound {b}", format_rational(&ratio)),
                        );
                    }
                }
                if max_ratio.as_ref().is_none_or(|m| ratio > *m) {
                    max_ratio = Some(ratio);
                }
            }
        }
    }
    Ok(InstanceVerification {
        profile_count: space.size(),
        minimizers,
        optima,
        shape: shape.expect("at least one optimum"),
        bound_reports,
        aggregates,
        max_ratio,
        bound,
        failures: c.failures,
    })
}

/// Route-level checks: the traversal discipline of the forest deviation,
/// and with shared edges the step classes of the shared-edge walk plus its
/// agreement with the forest deviation.
fn check_routes(
    game: &Game,
    eq: &StrategyProfile,
    dec: &OptimumDecomposition,
    pivot: usize,
    shared_rhs: Option<&Rational>,
    label: &str,
    c: &mut Collector,
) -> Result<()> {
    let forest = forest_deviation(game, eq, dec, pivot)?;
    for (j, e) in traversal_violations(eq, dec, &forest) {
        c.fail(
            FailureKind::Traversal,
            format!(
                "{label}, pivot {}: player {} crosses {} against its verdict",
                pivot + 1,
                game.player(j).id,
                game.edge(e).id
            ),
        );
    }
    let Some(_) = dec.split else {
        return Ok(());
    };
    for (j, r) in forest.routes.iter().enumerate() {
        if j != pivot && r.tag == RouteTag::Fallback {
            c.fail(
                FailureKind::CrossCheck,
                format!(
                    "{label}, pivot {}: player {} kept its optimum path despite shared edges",
                    pivot + 1,
                    game.player(j).id
                ),
            );
        }
    }
    if let Some(rhs) = shared_rhs {
        let phi = crate::arithmetic::potential(game, &forest.profile);
        if phi > *rhs {
            c.fail(
                FailureKind::CrossCheck,
                format!("{label}, pivot {}: forest deviation potential {phi} above {rhs}", pivot + 1),
            );
        }
    }
    let shared = shared_edge_deviation(game, eq, dec, pivot)?;
    let block_of = |e: usize| -> Option<PlayerSet> {
        dec.partition
            .blocks
            .iter()
            .find(|(_, edges)| edges.contains(&e))
            .map(|(&u, _)| u)
    };
    for (j, r) in shared.routes.iter().enumerate() {
        if j == pivot {
            continue;
        }
        // Outer steps use blocks with j but not the pivot, inner tree steps
        // blocks with the pivot but not j.
        let wanted = [(0, false, true), (1, true, false), (3, true, false), (4, false, true)];
        for (step, with_pivot, with_player) in wanted {
            for &e in &r.segments[step] {
                let ok = block_of(e).is_some_and(|u| u.contains(pivot) == with_pivot && u.contains(j) == with_player);
                if !ok {
                    c.fail(
                        FailureKind::CrossCheck,
                        format!(
                            "{label}, pivot {}: step {} of player {} uses {} outside its class",
                            pivot + 1,
                            step + 1,
                            game.player(j).id,
                            game.edge(e).id
                        ),
                    );
                }
            }
        }
    }
    Ok(())
}

/// An inclusive size range for one instance parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeRange {
    pub min: usize,
    pub max: usize,
}

impl SizeRange {
    pub fn exactly(v: usize) -> Self {
        SizeRange { min: v, max: v }
    }

    pub fn between(min: usize, max: usize) -> Self {
        SizeRange { min, max }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

impl fmt::Display for SizeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.min == self.max {
            write!(f, "{}", self.min)
        } else {
            write!(f, "{}-{}", self.min, self.max)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzConfig {
    pub players: SizeRange,
    pub vertices: SizeRange,
    pub edges: SizeRange,
    pub cost_range: (u32, u32),
    pub count: usize,
    pub seed: u64,
    pub verify: VerifyOptions,
}

impl FuzzConfig {
    fn check(&self) -> Result<()> {
        for (name, r) in [("players", self.players), ("vertices", self.vertices), ("edges", self.edges)] {
            if r.min > r.max || r.min == 0 {
                return Err(Error::Precondition(format!("invalid {name} range {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CampaignInstance {
    pub index: usize,
    pub seed: u64,
    pub params: RandomParams,
    pub game: Option<Game>,
    pub outcome: std::result::Result<InstanceVerification, String>,
}

impl CampaignInstance {
    pub fn failed(&self) -> bool {
        !matches!(&self.outcome, Ok(v) if v.passed())
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub config: FuzzConfig,
    pub instances: Vec<CampaignInstance>,
}

/// Generates and verifies `count` instances. Instance `k` is drawn from a
/// seed derived from the campaign seed, so results do not depend on thread
/// scheduling.
pub fn run_campaign(config: FuzzConfig) -> Result<Campaign> {
    config.check()?;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..config.count).map(|_| master.gen()).collect();
    let instances = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = RandomParams {
                players: config.players.draw(&mut rng),
                vertices: config.vertices.draw(&mut rng),
                edges: config.edges.draw(&mut rng),
                cost_range: config.cost_range,
            };
            let (game, outcome) = match random_instance(params, seed) {
                Ok(g) => {
                    let outcome = verify_instance(&g, config.verify).map_err(|e| e.to_string());
                    (Some(g), outcome)
                }
                Err(e) => (None, Err(e.to_string())),
            };
            CampaignInstance {
                index,
                seed,
                params,
                game,
                outcome,
            }
        })
        .collect();
    Ok(Campaign { config, instances })
}

impl Campaign {
    pub fn failing(&self) -> impl Iterator<Item = &CampaignInstance> {
        self.instances.iter().filter(|i| i.failed())
    }

    pub fn violation_count(&self) -> usize {
        self.instances
            .iter()
            .filter_map(|i| i.outcome.as_ref().ok())
            .map(|v| v.failures.len())
            .sum()
    }

    pub fn error_count(&self) -> usize {
        self.instances.iter().filter(|i| i.outcome.is_err()).count()
    }

    pub fn summary(&self) -> CampaignSummary {
        let mut s = CampaignSummary {
            config: self.config,
            ..Default::default()
        };
        for inst in &self.instances {
            s.instances += 1;
            let v = match &inst.outcome {
                Ok(v) => v,
                Err(_) => {
                    s.errors += 1;
                    continue;
                }
            };
            s.profiles += v.profile_count;
            s.minimizers += v.minimizers.len();
            s.optima += v.optima.len();
            *s.shapes.entry(v.shape).or_default() += 1;
            for r in &v.bound_reports {
                let e = s.bound_checks.entry(r.bound).or_default();
                e.0 += 1;
                if r.is_tight() {
                    e.1 += 1;
                }
            }
            s.aggregate_checks += v.aggregates.len();
            for f in &v.failures {
                *s.failures.entry(f.kind).or_default() += 1;
            }
            if let (Some(r), Some(b)) = (&v.max_ratio, v.bound) {
                let slack = b - crate::rational::to_f64(r);
                if s.min_bound_slack.is_none_or(|m| slack < m) {
                    s.min_bound_slack = Some(slack);
                }
                if s.max_ratio.as_ref().is_none_or(|m| r > m) {
                    s.max_ratio = Some(r.clone());
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct CampaignSummary {
    pub config: FuzzConfig,
    pub instances: usize,
    pub errors: usize,
    pub profiles: u128,
    pub minimizers: usize,
    pub optima: usize,
    pub shapes: BTreeMap<OptimumShape, usize>,
    /// Per bound kind: checks run and checks holding with equality.
    pub bound_checks: BTreeMap<BoundKind, (usize, usize)>,
    pub aggregate_checks: usize,
    pub failures: BTreeMap<FailureKind, usize>,
    pub max_ratio: Option<Rational>,
    /// Smallest `B(n) − cost(N)/cost(O)` over the campaign.
    pub min_bound_slack: Option<f64>,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            players: SizeRange::between(2, 3),
            vertices: SizeRange::between(3, 5),
            edges: SizeRange::between(3, 8),
            cost_range: (0, 3),
            count: 1000,
            seed: 0,
            verify: VerifyOptions::default(),
        }
    }
}

impl CampaignSummary {
    pub fn violations(&self) -> usize {
        self.failures.values().sum()
    }
}

impl fmt::Display for CampaignSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(f, "seed                 {}", c.seed)?;
        writeln!(
            f,
            "parameters           players {}, vertices {}, edges {}, costs [{}, {}]",
            c.players, c.vertices, c.edges, c.cost_range.0, c.cost_range.1
        )?;
        writeln!(
            f,
            "options              all minimizers: {}, all optima: {}",
            c.verify.all_minimizers, c.verify.all_optima
        )?;
        writeln!(f, "instances            {}", self.instances)?;
        writeln!(f, "errors               {}", self.errors)?;
        writeln!(f, "profiles scanned     {}", self.profiles)?;
        writeln!(f, "potential minimizers {}", self.minimizers)?;
        writeln!(f, "forest optima        {}", self.optima)?;
        let shape = |k| self.shapes.get(&k).copied().unwrap_or(0);
        writeln!(
            f,
            "optimum shapes       shared-edge {}, connected {}, disconnected {}",
            shape(OptimumShape::SharedEdge),
            shape(OptimumShape::Connected),
            shape(OptimumShape::Disconnected)
        )?;
        for kind in [BoundKind::SharedEdge, BoundKind::Connected, BoundKind::Forest] {
            let (runs, tight) = self.bound_checks.get(&kind).copied().unwrap_or((0, 0));
            writeln!(f, "{:<20} {runs} checks, {tight} tight", format!("{kind} bound"))?;
        }
        writeln!(f, "aggregate checks     {}", self.aggregate_checks)?;
        match &self.max_ratio {
            Some(r) => writeln!(f, "max cost ratio       {} ({})", format_rational(r), decimal12(r))?,
            None => writeln!(f, "max cost ratio       -")?,
        }
        match self.min_bound_slack {
            Some(s) => writeln!(f, "min bound slack      {}", crate::rational::decimal12_f64(s))?,
            None => writeln!(f, "min bound slack      -")?,
        }
        for kind in [
            FailureKind::Nash,
            FailureKind::Bound,
            FailureKind::Traversal,
            FailureKind::CrossCheck,
            FailureKind::Aggregate,
            FailureKind::Ratio,
        ] {
            writeln!(
                f,
                "{:<20} {}",
                format!("{kind} failures"),
                self.failures.get(&kind).copied().unwrap_or(0)
            )?;
        }
        writeln!(f, "violations           {}", self.violations())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::*;
    use crate::generators::shared_bridge_family;
    use crate::rational::{from_frac, from_int};

    #[test]
    fn instance_a_passes() {
        let v = verify_instance(&instance_a(), VerifyOptions::default()).unwrap();
        assert!(v.passed(), "{:?}", v.failures);
        assert_eq!(v.shape, OptimumShape::SharedEdge);
        // Both pivots: shared-edge, connected and forest bounds.
        assert_eq!(v.bound_reports.len(), 6);
        assert_eq!(v.max_ratio, Some(from_int(1)));
    }

    #[test]
    fn disjoint_players_take_the_forest_branch() {
        let v = verify_instance(&disjoint_players(), VerifyOptions::default()).unwrap();
        assert!(v.passed());
        assert_eq!(v.shape, OptimumShape::Disconnected);
        assert!(v.bound_reports.iter().all(|r| r.bound == BoundKind::Forest));
    }

    #[test]
    fn bridge_with_alternative_has_two_equilibria() {
        let base = shared_bridge_family(2, &from_int(1), &vec![from_int(1); 4]).unwrap();
        let (mut edges, players) = base.specs();
        edges.push(crate::game::EdgeSpec {
            id: "alt".into(),
            u: "s1".into(),
            v: "t1".into(),
            cost: from_frac(5, 2),
        });
        let g = Game::new(false, base.vertices().to_vec(), edges, players).unwrap();
        assert_eq!(crate::equilibrium::enumerate_nash(&g, 1000).unwrap().len(), 2);
        let v = verify_instance(
            &g,
            VerifyOptions {
                all_minimizers: true,
                all_optima: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(v.passed(), "{:?}", v.failures);
    }

    #[test]
    fn directed_is_refused() {
        let d = crate::generators::directed_harmonic_family(2, &from_frac(1, 10)).unwrap();
        assert!(matches!(verify_instance(&d, VerifyOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn small_campaign_is_clean_and_deterministic() {
        let config = FuzzConfig {
            count: 40,
            seed: 3,
            ..Default::default()
        };
        let a = run_campaign(config).unwrap();
        assert_eq!(a.violation_count(), 0);
        assert_eq!(a.error_count(), 0);
        let b = run_campaign(config).unwrap();
        assert_eq!(a.summary().to_string(), b.summary().to_string());
    }

    #[test]
    fn empty_campaign() {
        let c = run_campaign(FuzzConfig {
            count: 0,
            ..Default::default()
        })
        .unwrap();
        assert!(c.instances.is_empty());
        assert!(c.summary().to_string().contains("violations           0"));
    }
}
