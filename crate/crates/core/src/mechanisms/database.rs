use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::MechanismError;
use crate::rational::{format_rational, Rational};

/// A database as a list of integer rows.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Database {
    rows: Vec<i64>,
}

impl Database {
    pub fn new(rows: Vec<i64>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[i64] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Every database with at most `max_len` rows drawn from `lo..=hi`.
    ///
    /// With `ordered == false` only sorted row lists are produced, one per
    /// multiset; that suffices for mechanisms whose queries ignore row order.
    pub fn universe(max_len: usize, lo: i64, hi: i64, ordered: bool) -> Vec<Database> {
        let mut out = vec![Database::default()];
        let mut frontier = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for rows in &frontier {
                let start = if ordered { lo } else { rows.last().copied().unwrap_or(lo) };
                for v in start..=hi {
                    let mut grown: Vec<i64> = rows.clone();
                    grown.push(v);
                    next.push(grown);
                }
            }
            out.extend(next.iter().cloned().map(Database::new));
            frontier = next;
        }
        out
    }
}

impl From<Vec<i64>> for Database {
    fn from(rows: Vec<i64>) -> Self {
        Self::new(rows)
    }
}

impl fmt::Display for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rows)
    }
}

/// Neighbouring-database relation. Both variants are symmetric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adjacency {
    /// The row multisets differ by one substitution, addition, or removal.
    #[default]
    RowHamming,
    /// Same length, and the rows differ by at most 1 in total absolute value.
    ValueBounded,
}

impl Adjacency {
    pub fn adjacent(&self, x: &Database, y: &Database) -> bool {
        match self {
            Adjacency::RowHamming => {
                let (only_x, only_y) = multiset_difference(x.rows(), y.rows());
                matches!((only_x, only_y), (0, 0) | (1, 1) | (1, 0) | (0, 1))
            }
            Adjacency::ValueBounded => {
                x.len() == y.len()
                    && x.rows()
                        .iter()
                        .zip(y.rows())
                        .map(|(a, b)| a.abs_diff(*b))
                        .try_fold(0u64, |acc, d| acc.checked_add(d))
                        .is_some_and(|total| total <= 1)
            }
        }
    }

    /// All unordered pairs `(x, y)` with `x < y` of distinct adjacent
    /// databases from `universe`, in a deterministic order.
    pub fn pairs(&self, universe: &[Database]) -> Vec<(Database, Database)> {
        let mut sorted = universe.to_vec();
        sorted.sort();
        sorted.dedup();
        let mut out = Vec::new();
        for (i, x) in sorted.iter().enumerate() {
            for y in &sorted[i + 1..] {
                if self.adjacent(x, y) {
                    out.push((x.clone(), y.clone()));
                }
            }
        }
        out
    }
}

/// Sizes of `x \ y` and `y \ x` as multisets.
fn multiset_difference(x: &[i64], y: &[i64]) -> (usize, usize) {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_unstable();
    ys.sort_unstable();
    let (mut i, mut j) = (0, 0);
    let (mut only_x, mut only_y) = (0, 0);
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
            Ordering::Less => {
                only_x += 1;
                i += 1;
            }
            Ordering::Greater => {
                only_y += 1;
                j += 1;
            }
        }
    }
    (only_x + xs.len() - i, only_y + ys.len() - j)
}

type Eval = Arc<dyn Fn(&Database) -> i64 + Send + Sync>;

/// An integer-valued query with a stable identity key and a declared
/// sensitivity.
#[derive(Clone)]
pub struct Query {
    key: String,
    sensitivity: Rational,
    eval: Eval,
}

impl fmt::Debug for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Query")
            .field("key", &self.key)
            .field("sensitivity", &format_rational(&self.sensitivity))
            .finish()
    }
}

impl Query {
    pub fn new<F>(key: impl Into<String>, sensitivity: Rational, eval: F) -> Self
    where
        F: Fn(&Database) -> i64 + Send + Sync + 'static,
    {
        Self { key: key.into(), sensitivity, eval: Arc::new(eval) }
    }

    /// Number of rows satisfying `pred`; 1-sensitive.
    pub fn count<P>(key: impl Into<String>, pred: P) -> Self
    where
        P: Fn(i64) -> bool + Send + Sync + 'static,
    {
        Self::new(key, Rational::one(), move |db| {
            db.rows().iter().filter(|&&x| pred(x)).count() as i64
        })
    }

    /// Number of rows; 1-sensitive under add/remove adjacency.
    pub fn count_rows() -> Self {
        Self::new("count", Rational::one(), |db| db.len() as i64)
    }

    /// Sum of rows clipped to `[0, bound]`; `bound`-sensitive.
    pub fn clip_sum(bound: i64) -> Self {
        Self::new(format!("clip_sum:{bound}"), Rational::from_integer(bound), move |db| {
            clip_sum(bound, db)
        })
    }

    /// `clip_sum(b) - clip_sum(b + 1)`: minus the number of rows above `b`.
    pub fn clip_drop(b: i64) -> Self {
        Self::new(format!("clip_drop:{b}"), Rational::one(), move |db| {
            clip_sum(b, db) - clip_sum(b + 1, db)
        })
    }

    pub fn constant(value: i64) -> Self {
        Self::new(format!("const:{value}"), Rational::zero(), move |_| value)
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn sensitivity(&self) -> Rational {
        self.sensitivity
    }

    pub fn eval(&self, db: &Database) -> i64 {
        (self.eval)(db)
    }

    pub(crate) fn require_sensitivity_at_most(&self, limit: Rational) -> Result<(), MechanismError> {
        if self.sensitivity > limit {
            return Err(MechanismError::Sensitivity {
                key: self.key.clone(),
                declared: format_rational(&self.sensitivity),
                limit: format_rational(&limit),
            });
        }
        Ok(())
    }
}

/// Sum of `db` after clamping every row to `[0, bound]`.
pub fn clip_sum(bound: i64, db: &Database) -> i64 {
    db.rows().iter().map(|&x| x.clamp(0, bound.max(0))).sum()
}
