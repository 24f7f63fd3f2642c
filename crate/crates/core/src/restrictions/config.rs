//! TOML restriction configuration.
//!
//! ```toml
//! shocks = ["MP", "D", "S"]          # optional; defaults to the variable names
//!
//! [[traditional]]
//! variable = "FFR"
//! shock = "MP"
//! horizons = [0, 5]                  # inclusive range; or `horizon = 0`
//! sign = "+"
//!
//! [[narrative]]
//! kind = "shock_sign"                # shock_sign | hist_decomp | shock_rank
//! shock = "MP"
//! period = "1979-10"                 # date (exact or unique prefix) or data row index
//! sign = "+"
//! ```

use toml::{Table, Value};

use super::{
    Comparison, ContributionMode, NarrativeRestriction, RankMode, RestrictionSet, Sign,
    TraditionalSignRestriction,
};
use crate::error::{Error, Result};

/// Context needed to turn names and dates into indices.
#[derive(Debug, Clone, Copy)]
pub struct NameResolver<'a> {
    pub variables: &'a [String],
    /// One label per data row, if the data carry a date column.
    pub dates: Option<&'a [String]>,
    pub lags: usize,
    /// Number of data rows (before dropping initial conditions).
    pub rows: usize,
}

impl NameResolver<'_> {
    fn periods(&self) -> usize {
        self.rows.saturating_sub(self.lags)
    }
}

fn perr(key: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        key: key.into(),
        message: message.into(),
    }
}

struct Entry<'t> {
    path: String,
    table: &'t Table,
}

impl<'t> Entry<'t> {
    fn key(&self, k: &str) -> String {
        format!("{}.{}", self.path, k)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.table.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(perr(self.key(k), format!("unknown key (expected one of {allowed:?})")));
            }
        }
        Ok(())
    }

    fn get(&self, k: &str) -> Option<&'t Value> {
        self.table.get(k)
    }

    fn req(&self, k: &str) -> Result<&'t Value> {
        self.get(k).ok_or_else(|| perr(self.key(k), "missing required key"))
    }

    fn str(&self, k: &str) -> Result<&'t str> {
        self.req(k)?
            .as_str()
            .ok_or_else(|| perr(self.key(k), "expected a string"))
    }

    fn uint(&self, k: &str, v: &Value) -> Result<usize> {
        match v {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            Value::Integer(_) => Err(perr(self.key(k), "expected a non-negative integer")),
            other => Err(perr(self.key(k), format!("expected an integer, got {}", other.type_str()))),
        }
    }
}

fn resolve_name(key: &str, v: &Value, names: &[String], what: &str) -> Result<usize> {
    match v {
        Value::String(s) => names
            .iter()
            .position(|n| n == s)
            .ok_or_else(|| perr(key, format!("unknown {what} `{s}` (known: {names:?})"))),
        Value::Integer(i) if *i >= 0 && (*i as usize) < names.len() => Ok(*i as usize),
        Value::Integer(i) => Err(perr(key, format!("{what} index {i} out of range 0..{}", names.len()))),
        other => Err(perr(key, format!("expected a {what} name, got {}", other.type_str()))),
    }
}

fn resolve_period(key: &str, v: &Value, ctx: &NameResolver) -> Result<usize> {
    let row = match v {
        Value::Integer(i) if *i >= 0 => *i as usize,
        Value::Integer(i) => return Err(perr(key, format!("negative row index {i}"))),
        Value::String(s) => {
            let dates = ctx
                .dates
                .ok_or_else(|| perr(key, format!("date `{s}` given but the data have no date column")))?;
            match dates.iter().position(|d| d == s) {
                Some(r) => r,
                None => {
                    let hits: Vec<usize> = dates
                        .iter()
                        .enumerate()
                        .filter(|(_, d)| d.starts_with(s.as_str()))
                        .map(|(r, _)| r)
                        .collect();
                    match hits.as_slice() {
                        [r] => *r,
                        [] => return Err(perr(key, format!("date `{s}` not found in the data"))),
                        _ => return Err(perr(key, format!("date `{s}` matches {} rows", hits.len()))),
                    }
                }
            }
        }
        other => return Err(perr(key, format!("expected a date string or row index, got {}", other.type_str()))),
    };
    if row >= ctx.rows {
        return Err(perr(key, format!("row {row} beyond the {} data rows", ctx.rows)));
    }
    if row < ctx.lags {
        return Err(perr(
            key,
            format!("row {row} falls in the first {} rows used as initial conditions", ctx.lags),
        ));
    }
    Ok(row - ctx.lags)
}

fn parse_sign(e: &Entry, k: &str) -> Result<Sign> {
    match e.str(k)? {
        "+" | "positive" | "pos" => Ok(Sign::Positive),
        "-" | "negative" | "neg" => Ok(Sign::Negative),
        s => Err(perr(e.key(k), format!("invalid sign `{s}` (use \"+\" or \"-\")"))),
    }
}

fn tables<'t>(root: &'t Table, name: &str) -> Result<Vec<Entry<'t>>> {
    let Some(v) = root.get(name) else {
        return Ok(Vec::new());
    };
    let arr = v
        .as_array()
        .ok_or_else(|| perr(name, "expected an array of tables ([[...]])"))?;
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            let path = format!("{name}[{i}]");
            v.as_table()
                .map(|table| Entry {
                    path: path.clone(),
                    table,
                })
                .ok_or_else(|| perr(path, "expected a table"))
        })
        .collect()
}

pub fn parse_restrictions(text: &str, ctx: &NameResolver) -> Result<RestrictionSet> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| perr("<document>", e.message().to_string()))?;
    for k in root.keys() {
        if !["shocks", "traditional", "narrative"].contains(&k.as_str()) {
            return Err(perr(k, "unknown top-level key"));
        }
    }
    let n = ctx.variables.len();
    let shock_names: Vec<String> = match root.get("shocks") {
        None => ctx.variables.to_vec(),
        Some(Value::Array(a)) => {
            let names = a
                .iter()
                .map(|v| v.as_str().map(str::to_owned).ok_or_else(|| perr("shocks", "expected strings")))
                .collect::<Result<Vec<_>>>()?;
            if names.len() != n {
                return Err(perr("shocks", format!("{} names for {n} shocks", names.len())));
            }
            names
        }
        Some(_) => return Err(perr("shocks", "expected an array of names")),
    };

    let mut set = RestrictionSet::new();
    for e in tables(&root, "traditional")? {
        e.check_keys(&["variable", "shock", "horizons", "horizon", "sign"])?;
        let variable = resolve_name(&e.key("variable"), e.req("variable")?, ctx.variables, "variable")?;
        let shock = resolve_name(&e.key("shock"), e.req("shock")?, &shock_names, "shock")?;
        let sign = parse_sign(&e, "sign")?;
        let (lo, hi) = match (e.get("horizons"), e.get("horizon")) {
            (Some(Value::Array(a)), None) if a.len() == 2 => {
                let lo = e.uint("horizons", &a[0])?;
                let hi = e.uint("horizons", &a[1])?;
                if lo > hi {
                    return Err(perr(e.key("horizons"), format!("empty range [{lo}, {hi}]")));
                }
                (lo, hi)
            }
            (Some(_), None) => return Err(perr(e.key("horizons"), "expected [first, last]")),
            (None, Some(v)) => {
                let h = e.uint("horizon", v)?;
                (h, h)
            }
            (None, None) => return Err(perr(e.key("horizons"), "missing `horizons` or `horizon`")),
            (Some(_), Some(_)) => return Err(perr(e.key("horizon"), "give either `horizons` or `horizon`")),
        };
        for horizon in lo..=hi {
            set.traditional.push(TraditionalSignRestriction {
                variable,
                shock,
                horizon,
                sign,
            });
        }
    }

    for e in tables(&root, "narrative")? {
        let kind = e.str("kind")?;
        let shock = |e: &Entry| resolve_name(&e.key("shock"), e.req("shock")?, &shock_names, "shock");
        let period = |e: &Entry| resolve_period(&e.key("period"), e.req("period")?, ctx);
        let r = match kind {
            "shock_sign" => {
                e.check_keys(&["kind", "shock", "period", "sign"])?;
                NarrativeRestriction::ShockSign {
                    shock: shock(&e)?,
                    period: period(&e)?,
                    sign: parse_sign(&e, "sign")?,
                }
            }
            "hist_decomp" => {
                e.check_keys(&["kind", "variable", "shock", "period", "span", "mode"])?;
                let mode = match e.str("mode")? {
                    "most_important" => ContributionMode::MostImportant,
                    "overwhelming" => ContributionMode::Overwhelming,
                    s => {
                        return Err(perr(
                            e.key("mode"),
                            format!("invalid mode `{s}` (use most_important or overwhelming)"),
                        ))
                    }
                };
                let span = match e.get("span") {
                    Some(v) => e.uint("span", v)?,
                    None => 0,
                };
                let start = period(&e)?;
                if start + span >= ctx.periods() {
                    return Err(perr(e.key("span"), "window runs past the end of the sample"));
                }
                NarrativeRestriction::HistDecomp {
                    variable: resolve_name(&e.key("variable"), e.req("variable")?, ctx.variables, "variable")?,
                    shock: shock(&e)?,
                    start,
                    span,
                    mode,
                }
            }
            "shock_rank" => {
                e.check_keys(&["kind", "shock", "period", "mode", "comparison"])?;
                let mode = match e.str("mode")? {
                    "largest_positive" => RankMode::LargestPositive,
                    "largest_magnitude" => RankMode::LargestMagnitude,
                    s => {
                        return Err(perr(
                            e.key("mode"),
                            format!("invalid mode `{s}` (use largest_positive or largest_magnitude)"),
                        ))
                    }
                };
                let k = period(&e)?;
                let comparison = match e.get("comparison") {
                    None => Comparison::All,
                    Some(Value::String(s)) if s == "all" => Comparison::All,
                    Some(Value::Array(a)) => {
                        let key = e.key("comparison");
                        let ts = a
                            .iter()
                            .map(|v| resolve_period(&key, v, ctx))
                            .collect::<Result<Vec<_>>>()?;
                        if ts.contains(&k) {
                            return Err(perr(key, "comparison set contains the restricted period"));
                        }
                        Comparison::Periods(ts)
                    }
                    Some(_) => return Err(perr(e.key("comparison"), "expected \"all\" or a list of periods")),
                };
                NarrativeRestriction::ShockRank {
                    shock: shock(&e)?,
                    period: k,
                    comparison,
                    mode,
                }
            }
            other => {
                return Err(perr(
                    e.key("kind"),
                    format!("unknown restriction kind `{other}` (use shock_sign, hist_decomp or shock_rank)"),
                ))
            }
        };
        set.narrative.push(r);
    }
    set.validate(n, ctx.periods())?;
    Ok(set)
}
