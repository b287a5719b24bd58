//! JSON parameters shared by `run`, `verify` and `filter-demo`.

use anyhow::{bail, Context, Result};
use dpv_core::mechanisms::{Adjacency, Query};
use dpv_core::rational::{parse_rational, Rational};
use serde::{Deserialize, Deserializer};

/// A rational given as `"num/den"`, a decimal string, or a JSON number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rat(pub Rational);

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(serde_json::Number),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(s) => s,
            Raw::Number(n) => n.to_string(),
        };
        parse_rational(&text).map(Rat).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub eps: Option<Rat>,
    #[serde(rename = "T")]
    pub threshold: Option<i64>,
    /// Number of `true` releases for Sparse Vector.
    #[serde(rename = "N")]
    pub releases: Option<u64>,
    pub db: Option<Vec<i64>>,
    pub queries: Option<Vec<String>>,
    pub bounds: Option<Vec<i64>>,
    /// Filter budget for adaptive counting.
    pub budget: Option<Rat>,
    pub eps_coarse: Option<Rat>,
    pub eps_precise: Option<Rat>,
    pub max_queries: Option<usize>,
    /// Ledger cap for `run`; defaults to the mechanism's declared budget.
    pub ledger: Option<Rat>,
    /// Universe of databases for `verify`.
    pub max_len: Option<usize>,
    pub lo: Option<i64>,
    pub hi: Option<i64>,
    pub adjacency: Option<Adjacency>,
}

impl Params {
    pub fn parse(raw: &str) -> Result<(Self, serde_json::Value)> {
        let value: serde_json::Value = serde_json::from_str(raw).context("--params is not valid JSON")?;
        let params = serde_json::from_value(value.clone()).context("invalid --params")?;
        Ok((params, value))
    }
}

/// Queries the CLI can name.
///
/// `count`, `even`, `odd`, `ge:K`, `le:K`, `eq:K`, `clip_sum:B`,
/// `clip_drop:B`, `const:V`.
pub fn parse_query(spec: &str) -> Result<Query> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => {
            let v: i64 = a.trim().parse().with_context(|| format!("bad argument in query {spec:?}"))?;
            (n.trim(), Some(v))
        }
        None => (spec.trim(), None),
    };
    let key = spec.trim().to_string();
    let q = match (name, arg) {
        ("count", None) => Query::count_rows(),
        ("even", None) => Query::count(key, |x| x % 2 == 0),
        ("odd", None) => Query::count(key, |x| x % 2 != 0),
        ("ge", Some(k)) => Query::count(key, move |x| x >= k),
        ("le", Some(k)) => Query::count(key, move |x| x <= k),
        ("eq", Some(k)) => Query::count(key, move |x| x == k),
        ("clip_sum", Some(b)) if b > 0 => Query::clip_sum(b),
        ("clip_drop", Some(b)) => Query::clip_drop(b),
        ("const", Some(v)) => Query::constant(v),
        _ => bail!("unknown query {spec:?}"),
    };
    Ok(q)
}

pub fn parse_queries(specs: &[String]) -> Result<Vec<Query>> {
    specs.iter().map(|s| parse_query(s)).collect()
}

/// Default query family; `verify --n k` takes the first `k`.
pub const DEFAULT_QUERIES: [&str; 6] = ["ge:1", "eq:0", "ge:3", "even", "count", "odd"];
