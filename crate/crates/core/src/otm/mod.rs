//! Multi-tape oracle Turing machines.
//!
//! Machine files are line oriented; `;` starts a comment.
//!
//! ```text
//! states: copy ask out done
//! alphabet: #                 ; optional symbols beyond _ 0 1
//! tapes: input, output, oracle-in 0, oracle-out 0
//! init: copy
//! halt: done
//! query 0: ask -> out         ; entering `ask` queries oracle 0, then `out`
//! delta:
//! (copy, 1 * * *) -> (* * 1 *, R S R S, copy)
//! ```
//!
//! A transition reads one symbol per tape (`*` matches anything), writes one
//! symbol per tape (`*` leaves the cell alone) and moves each head `L`, `R`
//! or `S`. Tapes are infinite to the right only; `L` at cell 0 stays put.
//! Numbers on tapes are binary, most significant bit first; an empty tape
//! is 0.

mod check;
mod sim;

pub use check::{check_time_bound, TimeBoundConfig, TimeBoundReport, TimeViolation, TimeViolationKind};
pub use sim::{run, run_observed, Configuration, Halt, OtmError, RunResult, StepEvent};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub const BLANK: u8 = b'_';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TapeKind {
    Input,
    Work,
    Output,
    OracleIn(usize),
    OracleOut(usize),
}

impl fmt::Display for TapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TapeKind::Input => f.write_str("input"),
            TapeKind::Work => f.write_str("work"),
            TapeKind::Output => f.write_str("output"),
            TapeKind::OracleIn(j) => write!(f, "oracle-in {j}"),
            TapeKind::OracleOut(j) => write!(f, "oracle-out {j}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    L,
    R,
    S,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub line: usize,
    /// `None` matches any symbol.
    pub reads: Vec<Option<u8>>,
    /// `None` leaves the cell unchanged.
    pub writes: Vec<Option<u8>>,
    pub moves: Vec<Move>,
    pub next: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    pub states: Vec<String>,
    pub alphabet: BTreeSet<u8>,
    pub tapes: Vec<TapeKind>,
    pub init: usize,
    pub halting: BTreeSet<usize>,
    /// Query state to `(oracle, return state)`.
    pub queries: BTreeMap<usize, (usize, usize)>,
    /// Transitions per state, in file order.
    pub delta: BTreeMap<usize, Vec<Transition>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}", .errors.iter().map(|(l, m)| format!("line {l}: {m}")).collect::<Vec<_>>().join("\n"))]
pub struct MachineParseError {
    pub errors: Vec<(usize, String)>,
}

impl Machine {
    pub fn oracle_count(&self) -> usize {
        self.tapes.iter().filter(|t| matches!(t, TapeKind::OracleIn(_))).count()
    }

    pub fn tape(&self, kind: TapeKind) -> Option<usize> {
        self.tapes.iter().position(|&t| t == kind)
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.states[q]
    }

    fn lookup(&self, q: usize, symbols: &[u8]) -> Option<&Transition> {
        self.delta.get(&q)?.iter().find(|t| t.reads.iter().zip(symbols).all(|(r, s)| r.is_none_or(|r| r == *s)))
    }
}

/// The bundled machines: `ap` copies its input to the oracle, queries and
/// copies the answer out; `twice` computes `f(f(x))` by recopying the first
/// answer; `inc` adds one; `halt` stops after one step.
pub fn bundled(name: &str) -> Option<&'static str> {
    Some(match name {
        "ap" => include_str!("../../fixtures/ap.otm"),
        "twice" => include_str!("../../fixtures/twice.otm"),
        "inc" => include_str!("../../fixtures/inc.otm"),
        "halt" => include_str!("../../fixtures/halt.otm"),
        _ => return None,
    })
}

/// Time-bound polynomials frozen for the bundled machines.
pub fn bundled_bound(name: &str) -> Option<&'static str> {
    Some(match name {
        "ap" => include_str!("../../fixtures/ap.sop"),
        "twice" => include_str!("../../fixtures/twice.sop"),
        "inc" => include_str!("../../fixtures/inc.sop"),
        "halt" => include_str!("../../fixtures/halt.sop"),
        _ => return None,
    })
}

pub const BUNDLED: [&str; 4] = ["ap", "twice", "inc", "halt"];

fn parse_tape(s: &str) -> Result<TapeKind, String> {
    let words: Vec<&str> = s.split_whitespace().collect();
    let index = |w: Option<&&str>| -> Result<usize, String> {
        w.and_then(|w| w.parse().ok()).ok_or_else(|| format!("tape `{s}` needs an oracle index"))
    };
    match words.first().copied() {
        Some("input") if words.len() == 1 => Ok(TapeKind::Input),
        Some("work") if words.len() == 1 => Ok(TapeKind::Work),
        Some("output") if words.len() == 1 => Ok(TapeKind::Output),
        Some("oracle-in") if words.len() == 2 => Ok(TapeKind::OracleIn(index(words.get(1))?)),
        Some("oracle-out") if words.len() == 2 => Ok(TapeKind::OracleOut(index(words.get(1))?)),
        _ => Err(format!("unknown tape `{s}`")),
    }
}

struct RawTransition {
    line: usize,
    state: String,
    reads: Vec<String>,
    writes: Vec<String>,
    moves: Vec<String>,
    next: String,
}

fn split_tuple(s: &str) -> Option<Vec<String>> {
    let inner = s.trim().strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(|p| p.trim().to_string()).collect())
}

fn parse_transition(line: usize, text: &str) -> Result<RawTransition, String> {
    let (lhs, rhs) = text.split_once("->").ok_or("expected `(state, reads) -> (writes, moves, state)`")?;
    let l = split_tuple(lhs).filter(|l| l.len() == 2).ok_or("left side must be `(state, reads)`")?;
    let r = split_tuple(rhs).filter(|r| r.len() == 3).ok_or("right side must be `(writes, moves, state)`")?;
    let words = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
    Ok(RawTransition {
        line,
        state: l[0].clone(),
        reads: words(&l[1]),
        writes: words(&r[0]),
        moves: words(&r[1]),
        next: r[2].clone(),
    })
}

pub fn parse_machine(text: &str) -> Result<Machine, MachineParseError> {
    let mut errors: Vec<(usize, String)> = Vec::new();
    let mut states: Vec<String> = Vec::new();
    let mut alphabet: BTreeSet<u8> = [BLANK, b'0', b'1'].into_iter().collect();
    let mut tapes: Vec<TapeKind> = Vec::new();
    let mut init: Option<(usize, String)> = None;
    let mut halt: Vec<(usize, String)> = Vec::new();
    let mut queries: Vec<(usize, usize, String, String)> = Vec::new();
    let mut raw: Vec<RawTransition> = Vec::new();
    let mut in_delta = false;
    let mut seen_sections: BTreeMap<&str, usize> = BTreeMap::new();

    for (i, full) in text.lines().enumerate() {
        let line = i + 1;
        let content = full.split(';').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some((key, value)) = content.split_once(':').filter(|(k, _)| !k.contains('(')) {
            in_delta = false;
            let key = key.trim();
            let value = value.trim();
            for section in ["states", "alphabet", "tapes", "init", "halt", "delta"] {
                if key == section {
                    if let Some(prev) = seen_sections.insert(section, line) {
                        errors.push((line, format!("duplicate `{section}:` section (first on line {prev})")));
                    }
                }
            }
            match key {
                "states" => states.extend(value.split_whitespace().map(str::to_string)),
                "alphabet" => {
                    for sym in value.split_whitespace() {
                        match sym.as_bytes() {
                            [c] if !b"*(),;:".contains(c) => {
                                alphabet.insert(*c);
                            }
                            _ => errors.push((line, format!("bad alphabet symbol `{sym}`"))),
                        }
                    }
                }
                "tapes" => {
                    for t in value.split(',') {
                        match parse_tape(t.trim()) {
                            Ok(k) => tapes.push(k),
                            Err(e) => errors.push((line, e)),
                        }
                    }
                }
                "init" => init = Some((line, value.to_string())),
                "halt" => halt.extend(value.split_whitespace().map(|s| (line, s.to_string()))),
                "delta" => {
                    in_delta = true;
                    if !value.is_empty() {
                        errors.push((line, "transitions go on the lines after `delta:`".into()));
                    }
                }
                k if k.starts_with("query") => {
                    let j = k["query".len()..].trim().parse::<usize>();
                    match (j, value.split_once("->")) {
                        (Ok(j), Some((ask, ret))) => {
                            queries.push((line, j, ask.trim().to_string(), ret.trim().to_string()))
                        }
                        _ => errors.push((line, "expected `query <j>: <state> -> <state>`".into())),
                    }
                }
                other => errors.push((line, format!("unknown section `{other}`"))),
            }
            continue;
        }
        if !in_delta {
            errors.push((line, format!("unexpected line `{content}`")));
            continue;
        }
        match parse_transition(line, content) {
            Ok(t) => raw.push(t),
            Err(e) => errors.push((line, e)),
        }
    }

    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, s) in states.iter().enumerate() {
        if index.insert(s.as_str(), i).is_some() {
            errors.push((seen_sections.get("states").copied().unwrap_or(0), format!("state `{s}` declared twice")));
        }
    }
    let state = |line: usize, name: &str, errors: &mut Vec<(usize, String)>| -> Option<usize> {
        let q = index.get(name).copied();
        if q.is_none() {
            errors.push((line, format!("unknown state `{name}`")));
        }
        q
    };

    let tapes_line = seen_sections.get("tapes").copied().unwrap_or(0);
    let count = |k: TapeKind| tapes.iter().filter(|&&t| t == k).count();
    if count(TapeKind::Input) != 1 {
        errors.push((tapes_line, "need exactly one input tape".into()));
    }
    if count(TapeKind::Output) != 1 {
        errors.push((tapes_line, "need exactly one output tape".into()));
    }
    let oracle_ins: BTreeSet<usize> =
        tapes.iter().filter_map(|t| if let TapeKind::OracleIn(j) = t { Some(*j) } else { None }).collect();
    let oracle_outs: BTreeSet<usize> =
        tapes.iter().filter_map(|t| if let TapeKind::OracleOut(j) = t { Some(*j) } else { None }).collect();
    for j in oracle_ins.union(&oracle_outs) {
        if count(TapeKind::OracleIn(*j)) != 1 || count(TapeKind::OracleOut(*j)) != 1 {
            errors.push((tapes_line, format!("oracle {j} needs exactly one oracle-in and one oracle-out tape")));
        }
    }
    if oracle_ins.iter().enumerate().any(|(i, &j)| i != j) {
        errors.push((tapes_line, "oracle indices must be 0, 1, ... without gaps".into()));
    }

    let init = match &init {
        Some((line, name)) => state(*line, name, &mut errors),
        None => {
            errors.push((0, "missing `init:`".into()));
            None
        }
    };
    let halting: BTreeSet<usize> = halt.iter().filter_map(|(l, n)| state(*l, n, &mut errors)).collect();
    let mut query_map = BTreeMap::new();
    for (line, j, ask, ret) in &queries {
        if !oracle_ins.contains(j) {
            errors.push((*line, format!("query on unknown oracle {j}")));
        }
        if let (Some(a), Some(r)) = (state(*line, ask, &mut errors), state(*line, ret, &mut errors)) {
            if halting.contains(&a) {
                errors.push((*line, format!("query state `{ask}` is also halting")));
            }
            if query_map.insert(a, (*j, r)).is_some() {
                errors.push((*line, format!("state `{ask}` queries twice")));
            }
        }
    }

    let n = tapes.len();
    let mut delta: BTreeMap<usize, Vec<Transition>> = BTreeMap::new();
    for t in raw {
        let (line, before) = (t.line, errors.len());
        let q = state(line, &t.state, &mut errors);
        let next = state(line, &t.next, &mut errors);
        for (what, v) in [("reads", &t.reads), ("writes", &t.writes), ("moves", &t.moves)] {
            if v.len() != n {
                errors.push((line, format!("{what} has {} entries for {n} tapes", v.len())));
            }
        }
        if errors.len() > before {
            continue;
        }
        let mut symbol = |s: &str| -> Option<Option<u8>> {
            match s.as_bytes() {
                [b'*'] => Some(None),
                [c] if alphabet.contains(c) => Some(Some(*c)),
                _ => {
                    errors.push((line, format!("unknown symbol `{s}`")));
                    None
                }
            }
        };
        let reads: Option<Vec<_>> = t.reads.iter().map(|s| symbol(s)).collect();
        let writes: Option<Vec<_>> = t.writes.iter().map(|s| symbol(s)).collect();
        let moves: Vec<Option<Move>> = t
            .moves
            .iter()
            .map(|m| match m.as_str() {
                "L" => Some(Move::L),
                "R" => Some(Move::R),
                "S" => Some(Move::S),
                _ => None,
            })
            .collect();
        if moves.iter().any(Option::is_none) {
            errors.push((line, "moves must be L, R or S".into()));
        }
        let (Some(reads), Some(writes), Some(q), Some(next)) = (reads, writes, q, next) else { continue };
        for (k, kind) in tapes.iter().enumerate() {
            match kind {
                TapeKind::OracleOut(_) if writes[k].is_some() => {
                    errors.push((line, format!("writes to read-only tape {kind}")))
                }
                TapeKind::Input if writes[k].is_some() => errors.push((line, format!("writes to read-only tape {kind}"))),
                TapeKind::OracleIn(_) if reads[k].is_some() => {
                    errors.push((line, format!("reads from write-only tape {kind}")))
                }
                _ => {}
            }
        }
        if halting.contains(&q) {
            errors.push((line, format!("transition out of halting state `{}`", t.state)));
        }
        if query_map.contains_key(&q) {
            errors.push((line, format!("transition out of query state `{}`", t.state)));
        }
        let existing = delta.entry(q).or_default();
        for other in existing.iter() {
            let overlap = other.reads.iter().zip(&reads).all(|(a, b)| a.is_none() || b.is_none() || a == b);
            if overlap {
                errors.push((line, format!("nondeterministic: overlaps the transition on line {}", other.line)));
            }
        }
        let moves = moves.into_iter().map(|m| m.unwrap_or(Move::S)).collect();
        existing.push(Transition { line, reads, writes, moves, next });
    }

    if !errors.is_empty() {
        errors.sort();
        errors.dedup();
        return Err(MachineParseError { errors });
    }
    Ok(Machine {
        states,
        alphabet,
        tapes,
        init: init.expect("checked"),
        halting,
        queries: query_map,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_machines_parse() {
        for name in BUNDLED {
            let m = parse_machine(bundled(name).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(crate::sop::parse_sop(bundled_bound(name).unwrap()).is_ok(), "{name}");
            if name == "ap" {
                assert_eq!(m.oracle_count(), 1);
            }
        }
    }

    const HEADER: &str = "states: a b\ntapes: input, output, oracle-in 0, oracle-out 0\ninit: a\nhalt: b\ndelta:\n";

    #[test]
    fn nondeterminism_rejected() {
        let src = format!("{HEADER}(a, 0 * * *) -> (* * * *, S S S S, b)\n(a, * 1 * *) -> (* * * *, S S S S, b)\n");
        let err = parse_machine(&src).unwrap_err();
        assert_eq!(err.errors.len(), 1);
        assert_eq!(err.errors[0].0, 7);
        assert!(err.errors[0].1.contains("nondeterministic"));
    }

    #[test]
    fn oracle_output_is_read_only() {
        let src = format!("{HEADER}(a, * * * *) -> (* * * 1, S S S S, b)\n");
        let err = parse_machine(&src).unwrap_err();
        assert_eq!(err.errors, vec![(6, "writes to read-only tape oracle-out 0".to_string())]);
        let src = format!("{HEADER}(a, * * 1 *) -> (* * * *, S S S S, b)\n");
        assert!(parse_machine(&src).unwrap_err().errors[0].1.contains("write-only"));
    }

    #[test]
    fn unknown_references() {
        let src = "states: a\ntapes: input, output, tape9\ninit: z\nhalt: a\nquery 3: a -> a\n";
        let err = parse_machine(src).unwrap_err();
        let lines: Vec<usize> = err.errors.iter().map(|e| e.0).collect();
        assert!(lines.contains(&2) && lines.contains(&3) && lines.contains(&5), "{err}");
    }
}
