use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netdesign::campaign::{CampaignSummary, SizeRange};
use netdesign::deviation::traversal_violations;
use netdesign::rational::{decimal12, decimal12_f64, format_rational, parse_rational};
use netdesign::*;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "netdesign", version, about = "Exact analysis of Shapley network design games")]
struct Cli {
    /// Largest number of strategy profiles an exhaustive scan may visit.
    #[arg(long, global = true, default_value_t = DEFAULT_PROFILE_BUDGET)]
    max_profiles: u128,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for random generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the output to this file (for `fuzz`, a directory for failing instances).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibria, potential minimizers, optimum and price ratios of an instance.
    Analyze { instance: PathBuf },
    /// Checks every applicable deviation bound and the aggregate bound.
    VerifyLemmas {
        instance: PathBuf,
        /// Check every potential minimizer, not only the first.
        #[arg(long)]
        all_minimizers: bool,
        /// Check against every forest optimum, not only the first.
        #[arg(long)]
        all_optima: bool,
    },
    /// Tabulates the closed-form bound and its gap to H(n/2).
    Bounds(BoundsArgs),
    /// Runs a seeded campaign of random instances through the full pipeline.
    Fuzz(FuzzArgs),
    /// Writes a generated instance.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct BoundsArgs {
    /// Tabulate n = 2..=N.
    #[arg(long, default_value_t = 10, conflicts_with = "n")]
    n_max: usize,
    /// Tabulate only these n (repeatable).
    #[arg(long)]
    n: Vec<usize>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    /// Also report the least tabulated n whose gap is below this value.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct FuzzArgs {
    /// Players per instance, `k` or `lo-hi`.
    #[arg(long, default_value = "2-3", value_parser = parse_range)]
    players: SizeRange,
    /// Vertices per instance, `k` or `lo-hi`.
    #[arg(long, default_value = "3-5", value_parser = parse_range)]
    vertices: SizeRange,
    /// Edges per instance, `k` or `lo-hi`.
    #[arg(long, default_value = "3-8", value_parser = parse_range)]
    edges: SizeRange,
    /// Integer range edge costs are drawn from, `lo-hi`.
    #[arg(long, default_value = "0-3", value_parser = parse_range)]
    costs: SizeRange,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long)]
    all_minimizers: bool,
    #[arg(long)]
    all_optima: bool,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Random undirected instance (uses --seed).
    Random {
        #[arg(long)]
        players: usize,
        #[arg(long)]
        vertices: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value = "0-3", value_parser = parse_range)]
        costs: SizeRange,
    },
    /// Directed family with a unique, expensive equilibrium.
    Directed {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_rational_arg)]
        eps: Rational,
    },
    /// Two stars joined by a bridge every player must cross.
    Bridge {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1", value_parser = parse_rational_arg)]
        bridge_cost: Rational,
        /// Cost of every spoke, unless `--spokes` is given.
        #[arg(long, default_value = "1", value_parser = parse_rational_arg)]
        spoke_cost: Rational,
        /// Comma-separated costs: left spokes, then right spokes.
        #[arg(long, value_delimiter = ',', value_parser = parse_rational_arg)]
        spokes: Vec<Rational>,
    },
}

fn parse_range(s: &str) -> Result<SizeRange, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once('-') {
        Some((lo, hi)) => Ok(SizeRange::between(num(lo)?, num(hi)?)),
        None => Ok(SizeRange::exactly(num(s)?)),
    }
}

fn parse_rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("{s:?} is not an integer or p/q"))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        Error::Parse(_) => 2,
        Error::Validation { .. } => 3,
        Error::Budget { .. } => 4,
        Error::LemmaViolation(_) | Error::AggregateViolation(_) | Error::Invariant(_) => 5,
        Error::Precondition(_) | Error::Domain(_) | Error::Structure(_) | Error::Generation(_) => 6,
    }
}

const VERIFICATION_FAILED: u8 = 5;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Analyze { instance } => analyze(cli, instance),
        Command::VerifyLemmas {
            instance,
            all_minimizers,
            all_optima,
        } => verify_lemmas(cli, instance, *all_minimizers, *all_optima),
        Command::Bounds(args) => bounds(cli, args),
        Command::Fuzz(args) => fuzz(cli, args),
        Command::Gen(g) => generate(cli, g),
    }
}

fn read_instance(path: &FsPath) -> Result<Game> {
    let text = fs::read_to_string(path)?;
    load_game(&text)
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json(cli: &Cli, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    emit(cli, &text)
}

fn exact(r: &Rational) -> Value {
    json!({ "exact": format_rational(r), "decimal": decimal12(r) })
}

fn shown(r: &Rational) -> String {
    format!("{} ({})", format_rational(r), decimal12(r))
}

fn profile_json(game: &Game, p: &StrategyProfile) -> Value {
    let paths: Vec<Value> = game
        .players()
        .iter()
        .zip(p.paths())
        .map(|(pl, path)| {
            let ids: Vec<&str> = path.edges().iter().map(|&e| game.edge(e).id.as_str()).collect();
            json!({ "player": pl.id, "path": ids })
        })
        .collect();
    Value::Array(paths)
}

fn shape_name(dec: &OptimumDecomposition) -> &'static str {
    if dec.split.is_some() {
        "shared-edge"
    } else if dec.is_connected() {
        "connected"
    } else {
        "disconnected"
    }
}

fn describe(game: &Game) -> String {
    format!(
        "{} players, {} vertices, {} edges, {}",
        game.num_players(),
        game.num_vertices(),
        game.num_edges(),
        if game.is_directed() { "directed" } else { "undirected" }
    )
}

fn analyze(cli: &Cli, path: &FsPath) -> Result<u8> {
    let game = read_instance(path)?;
    let r = price_ratios(&game, cli.max_profiles)?;
    let ratios = match &r.ratios {
        PriceRatios::Defined { pos, poa, popoa, .. } => Some((pos, poa, popoa)),
        PriceRatios::Undefined => None,
    };
    if cli.json {
        let values = |list: &[equilibrium::ProfileValue]| -> Vec<Value> {
            list.iter()
                .map(|v| json!({ "profile": profile_json(&game, &v.profile), "cost": exact(&v.cost) }))
                .collect()
        };
        let (pos, poa, popoa) = match ratios {
            Some((a, b, c)) => (exact(a), exact(b), exact(c)),
            None => (Value::Null, Value::Null, Value::Null),
        };
        return emit_json(
            cli,
            &json!({
                "directed": game.is_directed(),
                "players": game.num_players(),
                "vertices": game.num_vertices(),
                "edges": game.num_edges(),
                "profiles": r.profile_count.to_string(),
                "nash_count": r.nash.len(),
                "nash": values(&r.nash),
                "min_potential": exact(&r.min_potential),
                "minimizers": values(&r.minimizers),
                "optimum": { "profile": profile_json(&game, &r.optimum.profile), "cost": exact(&r.optimum.cost) },
                "pos": pos,
                "poa": poa,
                "popoa": popoa,
            }),
        )
        .map(|_| 0);
    }
    let mut s = String::new();
    let list = |s: &mut String, items: &[equilibrium::ProfileValue]| {
        for v in items {
            let _ = writeln!(s, "  {}  cost {}", game.format_profile(&v.profile), shown(&v.cost));
        }
    };
    let _ = writeln!(s, "instance           {}", describe(&game));
    let _ = writeln!(s, "profiles           {}", r.profile_count);
    let _ = writeln!(s, "nash equilibria    {}", r.nash.len());
    list(&mut s, &r.nash);
    let _ = writeln!(s, "potential minimum  {}", shown(&r.min_potential));
    let _ = writeln!(s, "minimizers         {}", r.minimizers.len());
    list(&mut s, &r.minimizers);
    let _ = writeln!(
        s,
        "optimum            {}  cost {}",
        game.format_profile(&r.optimum.profile),
        shown(&r.optimum.cost)
    );
    match ratios {
        Some((pos, poa, popoa)) => {
            let _ = writeln!(s, "PoS                {}", shown(pos));
            let _ = writeln!(s, "PoA                {}", shown(poa));
            let _ = writeln!(s, "POPoA              {}", shown(popoa));
        }
        None => {
            let _ = writeln!(s, "ratios             undefined (optimum costs 0)");
        }
    }
    emit(cli, &s)?;
    Ok(0)
}

fn verify_lemmas(cli: &Cli, path: &FsPath, all_minimizers: bool, all_optima: bool) -> Result<u8> {
    let game = read_instance(path)?;
    if game.is_directed() {
        return Err(Error::Precondition(
            "the deviation bounds are stated for undirected games; refusing a directed instance".into(),
        ));
    }
    let budget = cli.max_profiles;
    let mut minimizers = potential_minimizers(&game, budget)?.profiles;
    if !all_minimizers {
        minimizers.truncate(1);
    }
    let optima = if all_optima {
        forest_optima(&game, budget)?
    } else {
        vec![social_optimum(&game, budget)?]
    };

    let mut all_hold = true;
    let mut text = format!("instance  {}\n", describe(&game));
    let mut pairs = Vec::new();
    for o in &optima {
        let dec = decompose_optimum(&game, o)?;
        for eq in &minimizers {
            let _ = writeln!(text, "\nN = {}", game.format_profile(eq));
            let _ = writeln!(text, "O = {}  ({} optimum)", game.format_profile(o), shape_name(&dec));
            let mut bounds = Vec::new();
            let mut traversal = Vec::new();
            for pivot in 0..game.num_players() {
                for result in verify_applicable(&game, eq, &dec, pivot) {
                    let report = match result {
                        Ok(r) => r,
                        Err(Error::LemmaViolation(r)) => *r,
                        Err(e) => return Err(e),
                    };
                    all_hold &= report.holds;
                    let _ = writeln!(
                        text,
                        "  pivot {:<3} {:<12} phi(N) = {}  phi(dev) = {}  rhs = {}  {}{}",
                        game.player(pivot).id,
                        report.bound.to_string(),
                        format_rational(&report.phi_equilibrium),
                        format_rational(&report.phi_deviation),
                        format_rational(&report.rhs),
                        if report.holds { "PASS" } else { "FAIL" },
                        if report.is_tight() { " (tight)" } else { "" }
                    );
                    for (set, got, allowed) in &report.occupancy_overflows {
                        let _ = writeln!(
                            text,
                            "    occupancy of {} is {got}, allowed {allowed}",
                            game.format_set(*set)
                        );
                    }
                    let mut v = serde_json::to_value(&report).expect("reports serialize");
                    v["pivot_id"] = json!(game.player(pivot).id);
                    bounds.push(v);
                }
                let dev = forest_deviation(&game, eq, &dec, pivot)?;
                for (j, e) in traversal_violations(eq, &dec, &dev) {
                    all_hold = false;
                    let (pid, eid) = (&game.player(j).id, &game.edge(e).id);
                    let _ = writeln!(
                        text,
                        "  pivot {:<3} traversal    player {pid} crosses {eid}  FAIL",
                        game.player(pivot).id
                    );
                    traversal.push(json!({ "pivot": game.player(pivot).id, "player": pid, "edge": eid }));
                }
            }
            let aggregate = match verify_aggregate(&game, eq, o) {
                Ok(r) => r,
                Err(Error::AggregateViolation(r)) => *r,
                Err(e) => return Err(e),
            };
            all_hold &= aggregate.holds;
            for c in &aggregate.checks {
                let _ = writeln!(
                    text,
                    "  aggregate {:<15} {} <= {}  {}",
                    c.name,
                    c.lhs,
                    c.rhs,
                    if c.holds { "PASS" } else { "FAIL" }
                );
            }
            pairs.push(json!({
                "equilibrium": profile_json(&game, eq),
                "optimum": profile_json(&game, o),
                "shape": shape_name(&dec),
                "bounds": bounds,
                "traversal_violations": traversal,
                "aggregate": aggregate,
            }));
        }
    }
    let _ = writeln!(text, "\nresult  {}", if all_hold { "PASS" } else { "FAIL" });
    if cli.json {
        emit_json(cli, &json!({ "pairs": pairs, "holds": all_hold }))?;
    } else {
        emit(cli, &text)?;
    }
    Ok(if all_hold { 0 } else { VERIFICATION_FAILED })
}

fn bounds(cli: &Cli, args: &BoundsArgs) -> Result<u8> {
    let ns: Vec<usize> = if args.n.is_empty() {
        (2..=args.n_max).collect()
    } else {
        args.n.clone()
    };
    let table = bound_gap_table(&ns)?;
    let json = cli.json || matches!(args.format, TableFormat::Json);
    emit(cli, &if json { table.to_json() } else { table.to_csv() })?;
    if let Some(eps) = args.epsilon {
        match table.least_n_below(eps) {
            Some(n) => eprintln!("least tabulated n with gap < {eps}: {n}"),
            None => eprintln!("no tabulated n has gap < {eps}"),
        }
    }
    Ok(0)
}

fn summary_json(s: &CampaignSummary) -> Value {
    let c = &s.config;
    json!({
        "seed": c.seed,
        "players": c.players.to_string(),
        "vertices": c.vertices.to_string(),
        "edges": c.edges.to_string(),
        "costs": [c.cost_range.0, c.cost_range.1],
        "instances": s.instances,
        "errors": s.errors,
        "profiles": s.profiles.to_string(),
        "minimizers": s.minimizers,
        "optima": s.optima,
        "bound_checks": s.bound_checks.iter().map(|(k, (runs, tight))| {
            (k.to_string(), json!({ "checks": runs, "tight": tight }))
        }).collect::<serde_json::Map<_, _>>(),
        "aggregate_checks": s.aggregate_checks,
        "failures": s.failures.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "max_ratio": s.max_ratio.as_ref().map(exact),
        "min_bound_slack": s.min_bound_slack.map(decimal12_f64),
        "violations": s.violations(),
    })
}

fn fuzz(cli: &Cli, args: &FuzzArgs) -> Result<u8> {
    let cost_range = (
        u32::try_from(args.costs.min).map_err(|_| Error::Domain("cost bound too large".into()))?,
        u32::try_from(args.costs.max).map_err(|_| Error::Domain("cost bound too large".into()))?,
    );
    let config = FuzzConfig {
        players: args.players,
        vertices: args.vertices,
        edges: args.edges,
        cost_range,
        count: args.count,
        seed: cli.seed,
        verify: VerifyOptions {
            budget: cli.max_profiles,
            all_minimizers: args.all_minimizers,
            all_optima: args.all_optima,
        },
    };
    let campaign = run_campaign(config)?;
    let summary = campaign.summary();
    if cli.json {
        let mut text = serde_json::to_string_pretty(&summary_json(&summary)).expect("json values serialize");
        text.push('\n');
        print!("{text}");
    } else {
        print!("{summary}");
    }
    let failing: Vec<_> = campaign.failing().collect();
    if let Some(dir) = &cli.out {
        if !failing.is_empty() {
            fs::create_dir_all(dir)?;
        }
        for inst in &failing {
            let stem = format!("instance-{:05}-seed-{}", inst.index, inst.seed);
            if let Some(g) = &inst.game {
                fs::write(dir.join(format!("{stem}.json")), save_game(g))?;
            }
            let mut detail = format!(
                "index {}\nseed {}\nplayers {}, vertices {}, edges {}\n",
                inst.index, inst.seed, inst.params.players, inst.params.vertices, inst.params.edges
            );
            match &inst.outcome {
                Ok(v) => {
                    for f in &v.failures {
                        let _ = writeln!(detail, "{}: {}", f.kind, f.detail);
                    }
                }
                Err(e) => {
                    let _ = writeln!(detail, "error: {e}");
                }
            }
            fs::write(dir.join(format!("{stem}.failures.txt")), detail)?;
        }
        if !failing.is_empty() {
            eprintln!("wrote {} failing instances to {}", failing.len(), dir.display());
        }
    }
    Ok(if failing.is_empty() { 0 } else { VERIFICATION_FAILED })
}

fn generate(cli: &Cli, command: &GenCommand) -> Result<u8> {
    let game = match command {
        GenCommand::Random {
            players,
            vertices,
            edges,
            costs,
        } => {
            let bound = |v: usize| u32::try_from(v).map_err(|_| Error::Domain("cost bound too large".into()));
            let params = RandomParams {
                players: *players,
                vertices: *vertices,
                edges: *edges,
                cost_range: (bound(costs.min)?, bound(costs.max)?),
            };
            random_instance(params, cli.seed)?
        }
        GenCommand::Directed { n, eps } => directed_harmonic_family(*n, eps)?,
        GenCommand::Bridge {
            n,
            bridge_cost,
            spoke_cost,
            spokes,
        } => {
            let spokes = if spokes.is_empty() {
                vec![spoke_cost.clone(); 2 * n]
            } else {
                spokes.clone()
            };
            shared_bridge_family(*n, bridge_cost, &spokes)?
        }
    };
    emit(cli, &save_game(&game))?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use netdesign::rational::from_frac;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("3").unwrap(), SizeRange::exactly(3));
        assert_eq!(parse_range("2-5").unwrap(), SizeRange::between(2, 5));
        assert!(parse_range("2-x").is_err());
        assert!(parse_range("").is_err());
    }

    #[test]
    fn rational_arguments() {
        assert_eq!(parse_rational_arg("1/10").unwrap(), from_frac(1, 10));
        assert!(parse_rational_arg("0.1").is_err());
    }

    #[test]
    fn error_classes_have_distinct_codes() {
        let codes = [
            exit_code(&Error::Parse(String::new())),
            exit_code(&Error::Validation {
                field: String::new(),
                reason: String::new(),
            }),
            exit_code(&Error::Budget {
                what: "profile space",
                size: 2,
                budget: 1,
            }),
            exit_code(&Error::Invariant(String::new())),
            exit_code(&Error::Precondition(String::new())),
        ];
        assert_eq!(codes, [2, 3, 4, 5, 6]);
    }

    #[test]
    fn command_line_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
