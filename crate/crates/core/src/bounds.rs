//! The closed-form price-of-stability bound and the level inequalities it is
//! assembled from.
//!
//! With `x = (n − H_n)/(H_n − 1)`:
//!
//! * `α(l) = (n + x) H_l − l H_n`
//! * `β(l) = l H_{n−l} + (n + x − l) H_l`
//! * `θ(l) = l H_{n−l} + (n − l) H_l`
//! * `B(n) = (n + x)/(n + x − H_n) · H((n + x)/2)`
//!
//! Everything except `B(n)` and `H` at a non-integer argument is exact.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::arithmetic::{harmonic_real, harmonic_table, social_cost, usage_partition, HarmonicSeq};
use crate::error::{Error, Result};
use crate::game::{Game, StrategyProfile};
use crate::rational::{format_rational, le_with_slack, serde_str, to_f64, Rational};

/// Slack allowed when an exact quantity is compared with a real bound.
pub const REAL_SLACK: f64 = 1e-9;

/// Largest `n` for which tables carry exact `H_n` and `x(n)`.
pub const EXACT_TABLE_LIMIT: usize = 10_000;

fn require_game_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("bound formulas need n >= 2, got {n}")));
    }
    Ok(())
}

fn mixing(n: usize, hn: &Rational) -> Rational {
    let n = Rational::from(BigInt::from(n));
    (&n - hn) / (hn - Rational::one())
}

/// `x(n) = (n − H_n)/(H_n − 1)`.
pub fn mixing_weight(n: usize) -> Result<Rational> {
    require_game_size(n)?;
    Ok(mixing(n, &harmonic_table(n)[n]))
}

/// Exact `H_0..H_n` and `x` for one `n`, for evaluating α, β, θ.
#[derive(Debug, Clone)]
pub struct BoundContext {
    n: usize,
    harmonic: Vec<Rational>,
    x: Rational,
}

impl BoundContext {
    pub fn new(n: usize) -> Result<Self> {
        require_game_size(n)?;
        let harmonic = harmonic_table(n);
        let x = mixing(n, &harmonic[n]);
        Ok(BoundContext { n, harmonic, x })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &Rational {
        &self.x
    }

    pub fn harmonic(&self, k: usize) -> &Rational {
        &self.harmonic[k]
    }

    /// `n + x`.
    pub fn shifted(&self) -> Rational {
        Rational::from(BigInt::from(self.n)) + &self.x
    }

    fn level(&self, l: usize) -> Result<Rational> {
        if l == 0 || l > self.n {
            return Err(Error::Domain(format!("level {l} outside 1..={}", self.n)));
        }
        Ok(Rational::from(BigInt::from(l)))
    }

    pub fn alpha(&self, l: usize) -> Result<Rational> {
        let lr = self.level(l)?;
        Ok(self.shifted() * &self.harmonic[l] - lr * &self.harmonic[self.n])
    }

    pub fn beta(&self, l: usize) -> Result<Rational> {
        let lr = self.level(l)?;
        Ok(&lr * &self.harmonic[self.n - l] + (self.shifted() - lr) * &self.harmonic[l])
    }

    pub fn theta(&self, l: usize) -> Result<Rational> {
        let lr = self.level(l)?;
        let rest = Rational::from(BigInt::from(self.n - l));
        Ok(lr * &self.harmonic[self.n - l] + rest * &self.harmonic[l])
    }

    /// `n H_l − l H_n`, the equilibrium coefficient summed over pivots.
    pub fn centered(&self, l: usize) -> Result<Rational> {
        let lr = self.level(l)?;
        let n = Rational::from(BigInt::from(self.n));
        Ok(n * &self.harmonic[l] - lr * &self.harmonic[self.n])
    }

    /// `(n + x) · H((n + x)/2)`.
    pub fn beta_ceiling(&self) -> Result<f64> {
        let s = to_f64(&self.shifted());
        Ok(s * harmonic_real(s / 2.0)?)
    }

    pub fn pos_upper_bound(&self) -> Result<f64> {
        let s = self.shifted();
        let ratio = to_f64(&(&s / (&s - &self.harmonic[self.n])));
        Ok(ratio * harmonic_real(to_f64(&s) / 2.0)?)
    }
}

pub fn alpha(l: usize, n: usize) -> Result<Rational> {
    BoundContext::new(n)?.alpha(l)
}

pub fn beta(l: usize, n: usize) -> Result<Rational> {
    BoundContext::new(n)?.beta(l)
}

pub fn theta(l: usize, n: usize) -> Result<Rational> {
    BoundContext::new(n)?.theta(l)
}

/// `B(n)` in floating point. `H_n` and `x` are evaluated as reals so that
/// very large `n` stays cheap.
pub fn pos_upper_bound(n: usize) -> Result<f64> {
    require_game_size(n)?;
    let hn = harmonic_real(n as f64)?;
    let nf = n as f64;
    let s = nf + (nf - hn) / (hn - 1.0);
    Ok(s / (s - hn) * harmonic_real(s / 2.0)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Quantity {
    Exact(#[serde(with = "serde_str")] Rational),
    Real(f64),
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Exact(r) => write!(f, "{}", format_rational(r)),
            Quantity::Real(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateCheck {
    pub name: &'static str,
    pub lhs: Quantity,
    pub rhs: Quantity,
    pub holds: bool,
}

impl AggregateCheck {
    fn exact(name: &'static str, lhs: Rational, rhs: Rational) -> Self {
        let holds = lhs <= rhs;
        AggregateCheck {
            name,
            lhs: Quantity::Exact(lhs),
            rhs: Quantity::Exact(rhs),
            holds,
        }
    }

    fn real(name: &'static str, lhs: Rational, rhs: f64) -> Self {
        let holds = le_with_slack(&lhs, rhs, REAL_SLACK);
        AggregateCheck {
            name,
            lhs: Quantity::Exact(lhs),
            rhs: Quantity::Real(rhs),
            holds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub n: usize,
    #[serde(serialize_with = "ser_levels")]
    pub equilibrium_levels: BTreeMap<usize, Rational>,
    #[serde(serialize_with = "ser_levels")]
    pub optimum_levels: BTreeMap<usize, Rational>,
    pub checks: Vec<AggregateCheck>,
    /// `cost(N)/cost(O)`, absent when the optimum is free.
    #[serde(serialize_with = "ser_opt_rational")]
    pub ratio: Option<Rational>,
    /// `B(n)`, absent for a single player.
    pub bound: Option<f64>,
    pub holds: bool,
}

fn ser_levels<S: serde::Serializer>(m: &BTreeMap<usize, Rational>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k.to_string(), format_rational(v))))
}

fn ser_opt_rational<S: serde::Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    serde_str::option::serialize(r, s)
}

impl fmt::Display for AggregateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "aggregate (n = {}): {}", self.n, if self.holds { "PASS" } else { "FAIL" })?;
        for c in &self.checks {
            write!(f, "; {} {} <= {} {}", c.name, c.lhs, c.rhs, if c.holds { "ok" } else { "FAILED" })?;
        }
        Ok(())
    }
}

/// Checks the level inequalities linking an equilibrium `N` (a potential
/// minimizer) to a forest optimum `O`, and `cost(N)/cost(O) ≤ B(n)`.
///
/// For a single player only `Φ(N) ≤ Φ(O)` is checked.
pub fn verify_aggregate(game: &Game, equilibrium: &StrategyProfile, optimum: &StrategyProfile) -> Result<AggregateReport> {
    if game.is_directed() {
        return Err(Error::Precondition("aggregate bounds apply to undirected games".into()));
    }
    let n = game.num_players();
    let nl = usage_partition(game, equilibrium).levels;
    let ol = usage_partition(game, optimum).levels;
    let h = harmonic_table(n);
    let sum = |levels: &BTreeMap<usize, Rational>, coef: &dyn Fn(usize) -> Result<Rational>| -> Result<Rational> {
        levels
            .iter()
            .try_fold(Rational::zero(), |acc, (&l, w)| Ok(acc + coef(l)? * w))
    };
    let phi = |levels: &BTreeMap<usize, Rational>| sum(levels, &|l| Ok(h[l].clone()));
    let mut checks = vec![AggregateCheck::exact("potential", phi(&nl)?, phi(&ol)?)];
    let cost_n = social_cost(game, equilibrium);
    let cost_o = social_cost(game, optimum);
    let mut bound = None;
    if n >= 2 {
        let ctx = BoundContext::new(n)?;
        checks.insert(
            0,
            AggregateCheck::exact("centered-levels", sum(&nl, &|l| ctx.centered(l))?, sum(&ol, &|l| ctx.theta(l))?),
        );
        let alpha_sum = sum(&nl, &|l| ctx.alpha(l))?;
        let beta_sum = sum(&ol, &|l| ctx.beta(l))?;
        checks.push(AggregateCheck::exact("mixed-levels", alpha_sum.clone(), beta_sum.clone()));
        let floor = ctx.shifted() - &h[n];
        checks.push(AggregateCheck::exact("alpha-floor", &floor * &cost_n, alpha_sum));
        let ceiling = ctx.beta_ceiling()?;
        checks.push(AggregateCheck::real("beta-ceiling", beta_sum, ceiling * to_f64(&cost_o)));
        checks.push(AggregateCheck::real("cost-chain", &floor * &cost_n, ceiling * to_f64(&cost_o)));
        let b = ctx.pos_upper_bound()?;
        if !cost_o.is_zero() {
            checks.push(AggregateCheck::real("ratio", &cost_n / &cost_o, b));
        }
        bound = Some(b);
    }
    let holds = checks.iter().all(|c| c.holds);
    let report = AggregateReport {
        n,
        equilibrium_levels: nl,
        optimum_levels: ol,
        checks,
        ratio: (!cost_o.is_zero()).then(|| &cost_n / &cost_o),
        bound,
        holds,
    };
    if holds {
        Ok(report)
    } else {
        Err(Error::AggregateViolation(Box::new(report)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: usize,
    /// Exact `H_n`, present for `n ≤ EXACT_TABLE_LIMIT`.
    #[serde(serialize_with = "ser_opt_rational")]
    pub harmonic: Option<Rational>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub x: Option<Rational>,
    pub bound: f64,
    pub half_harmonic: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTable {
    pub rows: Vec<BoundRow>,
}

pub fn bound_gap_table(ns: &[usize]) -> Result<BoundTable> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if let Some(&n) = ns.first() {
        require_game_size(n)?;
    }
    let mut seq = HarmonicSeq::new();
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        let (harmonic, x) = if n <= EXACT_TABLE_LIMIT {
            while (seq.index() as usize) < n {
                seq.advance();
            }
            let hn = seq.current();
            let x = mixing(n, &hn);
            (Some(hn), Some(x))
        } else {
            (None, None)
        };
        let bound = pos_upper_bound(n)?;
        let half_harmonic = harmonic_real(n as f64 / 2.0)?;
        rows.push(BoundRow {
            n,
            harmonic,
            x,
            bound,
            half_harmonic,
            gap: bound - half_harmonic,
        });
    }
    Ok(BoundTable { rows })
}

fn real_field(v: f64) -> String {
    format!("{v:.12}")
}

impl BoundTable {
    /// Least tabulated `n` whose gap is below `eps`.
    pub fn least_n_below(&self, eps: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.gap < eps).map(|r| r.n)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "H_n", "x", "B(n)", "H(n/2)", "gap"])
            .expect("writing to memory");
        let opt = |r: &Option<Rational>| r.as_ref().map(format_rational).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                opt(&r.harmonic),
                opt(&r.x),
                real_field(r.bound),
                real_field(r.half_harmonic),
                real_field(r.gap),
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "n": r.n,
                    "H_n": r.harmonic.as_ref().map(format_rational),
                    "x": r.x.as_ref().map(format_rational),
                    "B(n)": r.bound,
                    "H(n/2)": r.half_harmonic,
                    "gap": r.gap,
                })
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&rows).expect("table serializes");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::*;
    use crate::rational::{from_frac, from_int};

    #[test]
    fn mixing_weights() {
        assert_eq!(mixing_weight(2).unwrap(), from_int(1));
        assert_eq!(mixing_weight(3).unwrap(), from_frac(7, 5));
        assert_eq!(mixing_weight(4).unwrap(), from_frac(23, 13));
        assert!(matches!(mixing_weight(1), Err(Error::Domain(_))));
    }

    #[test]
    fn level_functions() {
        assert_eq!(alpha(1, 4).unwrap(), from_frac(575, 156));
        assert_eq!(alpha(4, 4).unwrap(), from_frac(575, 156));
        assert_eq!(theta(2, 4).unwrap(), from_int(6));
        assert_eq!(alpha(1, 2).unwrap(), from_frac(3, 2));
        assert!(alpha(0, 3).is_err() && theta(4, 3).is_err());
        let c = BoundContext::new(4).unwrap();
        for l in 1..=4 {
            // β(l) = θ(l) + x H_l, α(l) = centered(l) + x H_l.
            assert_eq!(c.beta(l).unwrap(), c.theta(l).unwrap() + c.x() * c.harmonic(l));
            assert_eq!(c.alpha(l).unwrap(), c.centered(l).unwrap() + c.x() * c.harmonic(l));
        }
    }

    #[test]
    fn bound_for_two_players() {
        let exact = 2.0 * (8.0 / 3.0 - 2.0 * std::f64::consts::LN_2);
        assert!((pos_upper_bound(2).unwrap() - exact).abs() < 1e-12);
        let ctx = BoundContext::new(2).unwrap();
        assert!((ctx.pos_upper_bound().unwrap() - exact).abs() < 1e-12);
        assert!(pos_upper_bound(1).is_err());
    }

    #[test]
    fn bound_exceeds_half_harmonic() {
        for n in [2, 3, 5, 10, 100, 1000] {
            assert!(pos_upper_bound(n).unwrap() > harmonic_real(n as f64 / 2.0).unwrap());
        }
    }

    #[test]
    fn aggregate_on_instance_a() {
        let g = instance_a();
        let n = profile(&g, &[&["e1"], &["e1"]]);
        let r = verify_aggregate(&g, &n, &n).unwrap();
        assert!(r.holds);
        let centered = &r.checks[0];
        assert_eq!(centered.name, "centered-levels");
        assert_eq!(centered.lhs, Quantity::Exact(from_int(0)));
        assert_eq!(centered.rhs, Quantity::Exact(from_int(0)));
        assert_eq!(r.ratio, Some(from_int(1)));
    }

    #[test]
    fn aggregate_single_player_only_checks_potential() {
        let g = single_player_triangle();
        let p = profile(&g, &[&["ac", "cb"]]);
        let r = verify_aggregate(&g, &p, &p).unwrap();
        assert_eq!(r.checks.len(), 1);
        assert_eq!(r.bound, None);
    }

    #[test]
    fn aggregate_refuses_directed() {
        let d = crate::generators::directed_harmonic_family(2, &from_frac(1, 10)).unwrap();
        let o = crate::optimum::social_optimum(&d, 100).unwrap();
        assert!(matches!(verify_aggregate(&d, &o, &o), Err(Error::Precondition(_))));
    }

    #[test]
    fn gap_table_rows() {
        let t = bound_gap_table(&(2..=10).collect::<Vec<_>>()).unwrap();
        assert_eq!(t.rows.len(), 9);
        assert_eq!(t.rows[2].harmonic, Some(from_frac(25, 12)));
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,H_n,x,B(n),H(n/2),gap"));
        assert!(lines.next().unwrap().starts_with("2,3/2,1,2.560744611"));
        assert_eq!(t.least_n_below(0.0), None);
        assert!(bound_gap_table(&[1, 2]).is_err());
        let big = bound_gap_table(&[EXACT_TABLE_LIMIT + 1]).unwrap();
        assert_eq!(big.rows[0].harmonic, None);
        assert!(big.to_csv().lines().nth(1).unwrap().starts_with(&format!("{},,,", EXACT_TABLE_LIMIT + 1)));
    }
}
