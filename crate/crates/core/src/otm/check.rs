use std::collections::HashMap;

use super::sim::{run_observed, OtmError, StepEvent};
use super::{Machine, TapeKind};
use crate::nat::{len, Nat};
use crate::sop::{norm, sop_eval, NormMethod, Sop, SopEnv, SopError, DEFAULT_NORM_CAP};
use crate::terms::Oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeBoundConfig {
    pub fuel: u64,
    pub method: NormMethod,
    pub norm_cap: u64,
}

impl Default for TimeBoundConfig {
    fn default() -> Self {
        TimeBoundConfig { fuel: 1 << 20, method: NormMethod::BruteForce, norm_cap: DEFAULT_NORM_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimeViolationKind {
    /// `T_unit > P`.
    TimeBound { t_unit: u64, bound: u64 },
    /// A work or oracle-input tape longer than `t + |input|`.
    TapeLength { step: u64, tape: TapeKind, extent: u64, limit: u64 },
    /// An oracle answer longer than the norm at the longest query so far.
    OracleOutput { step: u64, oracle: usize, extent: u64, limit: u64 },
    /// Oracle-input tape not erased, or a head not reset, after a query.
    Protocol { step: u64, oracle: usize },
    FuelExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeViolation {
    pub sample: usize,
    pub input: Nat,
    pub kind: TimeViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TimeBoundReport {
    pub checked: usize,
    /// Samples whose bound could not be evaluated.
    pub skipped: usize,
    pub steps_monitored: u64,
    pub queries: u64,
    pub violations: Vec<TimeViolation>,
}

impl TimeBoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs `m` on every sample, checking `T_unit <= P(|f|, |x|)` and the tape
/// monitors after every step.
pub fn check_time_bound(
    m: &Machine,
    p: &Sop,
    samples: &[(Vec<Oracle>, Nat)],
    cfg: &TimeBoundConfig,
) -> Result<TimeBoundReport, OtmError> {
    let mut report = TimeBoundReport::default();
    for (i, (oracles, input)) in samples.iter().enumerate() {
        if oracles.len() < m.oracle_count() {
            return Err(OtmError::OracleCount { expected: m.oracle_count(), found: oracles.len() });
        }
        let env = SopEnv::new(vec![len(input)], oracles).with_method(cfg.method).with_cap(cfg.norm_cap);
        let bound = match sop_eval(p, &env) {
            Ok(b) => b,
            Err(SopError::NormCapExceeded { .. } | SopError::Overflow) => {
                report.skipped += 1;
                continue;
            }
            Err(e) => panic!("time bound does not fit the machine: {e}"),
        };
        let mut violations = Vec::new();
        let mut norms: HashMap<(usize, u64), u64> = HashMap::new();
        let mut norm_of = |j: usize, x: u64| -> u64 {
            *norms.entry((j, x)).or_insert_with(|| match cfg.method {
                NormMethod::Table => oracles[j].norm_exact(x),
                NormMethod::BruteForce => norm(&oracles[j], x, cfg.norm_cap).unwrap_or(u64::MAX),
            })
        };
        let input_len = len(input);
        let mut os = oracles.clone();
        let result = run_observed(m, &mut os, input, cfg.fuel, |c, ev| {
            let t = c.t_unit;
            for (k, kind) in m.tapes.iter().enumerate() {
                let extent = c.tapes[k].extent() as u64;
                match *kind {
                    TapeKind::Work | TapeKind::OracleIn(_) if extent > t + input_len => {
                        violations.push(TimeViolationKind::TapeLength { step: t, tape: *kind, extent, limit: t + input_len })
                    }
                    TapeKind::OracleOut(j) => {
                        let limit = norm_of(j, c.max_query_bits[j]).max(1);
                        if extent > limit {
                            violations.push(TimeViolationKind::OracleOutput { step: t, oracle: j, extent, limit });
                        }
                    }
                    _ => {}
                }
            }
            if let StepEvent::Queried { oracle, .. } = ev {
                let tin = &c.tapes[m.tape(TapeKind::OracleIn(*oracle)).expect("validated")];
                let tout = &c.tapes[m.tape(TapeKind::OracleOut(*oracle)).expect("validated")];
                if tin.extent() != 0 || tin.head != 0 || tout.head != 0 {
                    violations.push(TimeViolationKind::Protocol { step: t, oracle: *oracle });
                }
            }
        });
        match result {
            Ok(r) => {
                report.steps_monitored += r.t_unit;
                report.queries += r.queries;
                if r.t_unit > bound {
                    violations.push(TimeViolationKind::TimeBound { t_unit: r.t_unit, bound });
                }
            }
            Err(OtmError::FuelExhausted { .. }) => violations.push(TimeViolationKind::FuelExhausted),
            Err(e) => return Err(e),
        }
        report.checked += 1;
        report.violations.extend(violations.into_iter().map(|kind| TimeViolation { sample: i, input: input.clone(), kind }));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nat::nat;
    use crate::otm::{bundled, bundled_bound, parse_machine, BUNDLED};
    use crate::sop::parse_sop;

    fn tables(n: u64) -> Vec<Oracle> {
        (0..n).map(|s| Oracle::from_pairs((0..16).map(|k| (k, (k * 5 + s * 3) % 23)), s % 4)).collect()
    }

    #[test]
    fn bundled_bounds_hold() {
        for name in BUNDLED {
            let m = parse_machine(bundled(name).unwrap()).unwrap();
            let p = parse_sop(bundled_bound(name).unwrap()).unwrap();
            let samples: Vec<_> = tables(4)
                .into_iter()
                .flat_map(|f| (0..64u64).map(move |x| (vec![f.clone()], nat(x))))
                .collect();
            let r = check_time_bound(&m, &p, &samples, &TimeBoundConfig::default()).unwrap();
            assert!(r.passed(), "{name}: {:?}", r.violations.first());
            assert_eq!(r.checked, samples.len());
        }
    }

    #[test]
    fn constant_bound_fails_for_ap() {
        let m = parse_machine(bundled("ap").unwrap()).unwrap();
        let samples = vec![(vec![Oracle::from_pairs([(3, 5)], 0)], nat(3))];
        let r = check_time_bound(&m, &Sop::c(1), &samples, &TimeBoundConfig::default()).unwrap();
        assert!(matches!(r.violations[0].kind, TimeViolationKind::TimeBound { bound: 1, .. }));
        let h = parse_machine(bundled("halt").unwrap()).unwrap();
        let r = check_time_bound(&h, &Sop::c(1), &[(vec![], nat(3))], &TimeBoundConfig::default()).unwrap();
        assert!(r.passed());
    }
}
