use crate::nat::{len, Nat};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

/// A total function `N -> N` given by a finite table and a default value,
/// with a log of the points queried through [`Oracle::query`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Oracle {
    table: BTreeMap<Nat, Nat>,
    default: Nat,
    log: Vec<Nat>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("oracle line {line}: {msg}")]
pub struct OracleParseError {
    pub line: usize,
    pub msg: String,
}

impl Oracle {
    pub fn new(table: BTreeMap<Nat, Nat>, default: Nat) -> Oracle {
        Oracle { table, default, log: Vec::new() }
    }

    /// The constant function.
    pub fn constant(v: Nat) -> Oracle {
        Oracle::new(BTreeMap::new(), v)
    }

    pub fn from_pairs<I: IntoIterator<Item = (u64, u64)>>(pairs: I, default: u64) -> Oracle {
        let table = pairs.into_iter().map(|(k, v)| (Nat::from(k), Nat::from(v))).collect();
        Oracle::new(table, Nat::from(default))
    }

    /// `f(y) = y` on `[0, n)`.
    pub fn identity_on(n: u64, default: u64) -> Oracle {
        Oracle::from_pairs((0..n).map(|y| (y, y)), default)
    }

    pub fn table(&self) -> &BTreeMap<Nat, Nat> {
        &self.table
    }

    pub fn default_value(&self) -> &Nat {
        &self.default
    }

    /// Looks up `f(x)` without logging.
    pub fn value(&self, x: &Nat) -> Nat {
        self.table.get(x).unwrap_or(&self.default).clone()
    }

    /// Looks up `f(x)` and records `x` in the query log.
    pub fn query(&mut self, x: &Nat) -> Nat {
        self.log.push(x.clone());
        self.value(x)
    }

    pub fn log(&self) -> &[Nat] {
        &self.log
    }

    pub fn clear_log(&mut self) {
        self.log.clear();
    }

    pub fn take_log(&mut self) -> Vec<Nat> {
        std::mem::take(&mut self.log)
    }

    /// The function agreeing with `self` on `points` and equal to `default`
    /// everywhere else.
    pub fn restrict<'a, I: IntoIterator<Item = &'a Nat>>(&self, points: I, default: Nat) -> Oracle {
        let table = points.into_iter().map(|p| (p.clone(), self.value(p))).collect();
        Oracle::new(table, default)
    }

    /// Distinct points in the query log.
    pub fn queried_points(&self) -> BTreeSet<Nat> {
        self.log.iter().cloned().collect()
    }

    /// `|f|(x)` computed from the table: the maximum of `|f(y)|` over table
    /// keys with `|y| <= x`, together with `|default|` whenever some `y` with
    /// `|y| <= x` lies outside the table. Exact for every table oracle, with
    /// no enumeration of the `2^x` candidate points.
    pub fn norm_exact(&self, x: u64) -> u64 {
        let mut best = 0;
        let mut inside = 0u64;
        for (k, v) in &self.table {
            if len(k) <= x {
                inside += 1;
                best = best.max(len(v));
            }
        }
        let candidates = if x >= 64 { u64::MAX } else { 1u64 << x };
        if inside < candidates {
            best = best.max(len(&self.default));
        }
        best
    }
}

impl FromStr for Oracle {
    type Err = OracleParseError;

    /// `default <v>` header followed by `key value` lines; `#` comments.
    fn from_str(s: &str) -> Result<Oracle, OracleParseError> {
        let mut default = None;
        let mut table = BTreeMap::new();
        let err = |line: usize, msg: String| OracleParseError { line, msg };
        for (i, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(err(i + 1, format!("expected two fields, got '{line}'")));
            }
            let num = |t: &str| Nat::from_str(t).map_err(|_| err(i + 1, format!("not a natural: '{t}'")));
            if parts[0] == "default" {
                if default.is_some() {
                    return Err(err(i + 1, "duplicate default".into()));
                }
                if !table.is_empty() {
                    return Err(err(i + 1, "default must be the header line".into()));
                }
                default = Some(num(parts[1])?);
            } else {
                if default.is_none() {
                    return Err(err(i + 1, "missing 'default <v>' header".into()));
                }
                let k = num(parts[0])?;
                if table.insert(k, num(parts[1])?).is_some() {
                    return Err(err(i + 1, format!("duplicate key {}", parts[0])));
                }
            }
        }
        let default = default.ok_or_else(|| err(1, "missing 'default <v>' header".into()))?;
        Ok(Oracle::new(table, default))
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "default {}", self.default)?;
        for (k, v) in &self.table {
            writeln!(f, "{k} {v}")?;
        }
        Ok(())
    }
}
