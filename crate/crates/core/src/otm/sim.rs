use super::{Machine, Move, TapeKind, BLANK};
use crate::nat::{from_bits, len, to_bits, Nat};
use crate::terms::{CostLedger, Oracle};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OtmError {
    #[error("machine did not halt within {fuel} steps")]
    FuelExhausted { fuel: u64 },
    #[error("machine uses {expected} oracles, {found} supplied")]
    OracleCount { expected: usize, found: usize },
    #[error("machine has already halted")]
    Halted,
    #[error("oracle-in tape {oracle} does not hold a binary numeral")]
    MalformedOracleInput { oracle: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tape {
    cells: Vec<u8>,
    pub head: usize,
}

impl Tape {
    pub fn read(&self) -> u8 {
        self.cells.get(self.head).copied().unwrap_or(BLANK)
    }

    fn write(&mut self, s: u8) {
        if self.head >= self.cells.len() {
            if s == BLANK {
                return;
            }
            self.cells.resize(self.head + 1, BLANK);
        }
        self.cells[self.head] = s;
        while self.cells.last() == Some(&BLANK) {
            self.cells.pop();
        }
    }

    fn shift(&mut self, m: Move) {
        match m {
            Move::L => self.head = self.head.saturating_sub(1),
            Move::R => self.head += 1,
            Move::S => {}
        }
    }

    /// One past the last non-blank cell.
    pub fn extent(&self) -> usize {
        self.cells.len()
    }

    pub fn contents(&self) -> String {
        String::from_utf8_lossy(&self.cells).into_owned()
    }

    fn binary(n: &Nat) -> Tape {
        Tape { cells: to_bits(n).into_iter().map(|b| if b { b'1' } else { b'0' }).collect(), head: 0 }
    }

    /// The leading run of binary digits as a number.
    pub fn numeral(&self) -> Nat {
        let bits: Vec<bool> = self.cells.iter().take_while(|c| matches!(c, b'0' | b'1')).map(|&c| c == b'1').collect();
        from_bits(&bits)
    }

    fn is_binary(&self) -> bool {
        self.cells.iter().all(|c| matches!(c, b'0' | b'1'))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Halt {
    Accept,
    /// No transition matched.
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepEvent {
    Moved,
    Queried { oracle: usize, x: Nat, value: Nat, malformed: bool },
    Halted(Halt),
}

#[derive(Debug, Clone)]
pub struct Configuration {
    pub state: usize,
    pub tapes: Vec<Tape>,
    /// Steps with every query counted as one.
    pub t_unit: u64,
    /// Steps with a query answering `v` counted as `|v|`.
    pub t_len: u64,
    pub queries: u64,
    /// Sum of `|f(z)|` over all queries.
    pub answer_bits: u64,
    /// Longest query argument per oracle, in bits.
    pub max_query_bits: Vec<u64>,
    pub malformed_queries: u64,
    pub peak: Vec<usize>,
    pub halted: Option<Halt>,
    pub ledger: CostLedger,
    /// Fail on non-binary oracle input instead of reading it as 0.
    pub strict: bool,
}

impl Configuration {
    pub fn new(m: &Machine, input: &Nat) -> Configuration {
        let tapes: Vec<Tape> =
            m.tapes.iter().map(|k| if *k == TapeKind::Input { Tape::binary(input) } else { Tape::default() }).collect();
        let peak = tapes.iter().map(Tape::extent).collect();
        Configuration {
            state: m.init,
            tapes,
            t_unit: 0,
            t_len: 0,
            queries: 0,
            answer_bits: 0,
            max_query_bits: vec![0; m.oracle_count()],
            malformed_queries: 0,
            peak,
            halted: m.halting.contains(&m.init).then_some(Halt::Accept),
            ledger: CostLedger::default(),
            strict: false,
        }
    }

    pub fn tape(&self, m: &Machine, kind: TapeKind) -> Option<&Tape> {
        m.tape(kind).map(|i| &self.tapes[i])
    }

    pub fn output(&self, m: &Machine) -> Nat {
        self.tape(m, TapeKind::Output).map(Tape::numeral).unwrap_or_default()
    }

    pub fn step(&mut self, m: &Machine, oracles: &mut [Oracle]) -> Result<StepEvent, OtmError> {
        if self.halted.is_some() {
            return Err(OtmError::Halted);
        }
        if let Some(&(j, ret)) = m.queries.get(&self.state) {
            return self.query(m, oracles, j, ret);
        }
        let symbols: Vec<u8> = self.tapes.iter().map(Tape::read).collect();
        let Some(t) = m.lookup(self.state, &symbols) else {
            self.halted = Some(Halt::Reject);
            return Ok(StepEvent::Halted(Halt::Reject));
        };
        for (k, tape) in self.tapes.iter_mut().enumerate() {
            if let Some(s) = t.writes[k] {
                tape.write(s);
            }
            tape.shift(t.moves[k]);
        }
        self.state = t.next;
        self.t_unit += 1;
        self.t_len += 1;
        self.ledger.builtin_steps += 1;
        self.track_peaks();
        if m.halting.contains(&self.state) {
            self.halted = Some(Halt::Accept);
        }
        Ok(StepEvent::Moved)
    }

    fn query(&mut self, m: &Machine, oracles: &mut [Oracle], j: usize, ret: usize) -> Result<StepEvent, OtmError> {
        let tin = m.tape(TapeKind::OracleIn(j)).expect("validated");
        let tout = m.tape(TapeKind::OracleOut(j)).expect("validated");
        let malformed = !self.tapes[tin].is_binary();
        if malformed && self.strict {
            return Err(OtmError::MalformedOracleInput { oracle: j });
        }
        let x = if malformed { Nat::default() } else { self.tapes[tin].numeral() };
        let value = oracles[j].query(&x);
        let bits = len(&value);
        self.tapes[tout] = if bits == 0 { Tape { cells: vec![b'0'], head: 0 } } else { Tape::binary(&value) };
        self.max_query_bits[j] = self.max_query_bits[j].max(self.tapes[tin].extent() as u64);
        self.tapes[tin] = Tape::default();
        self.state = ret;
        self.t_unit += 1;
        self.t_len += bits;
        self.queries += 1;
        self.answer_bits += bits;
        self.malformed_queries += u64::from(malformed);
        self.ledger.oracle_queries += 1;
        self.ledger.kc_oracle_cost += bits;
        self.ledger.peak_value_bits = self.ledger.peak_value_bits.max(bits);
        self.track_peaks();
        if m.halting.contains(&self.state) {
            self.halted = Some(Halt::Accept);
        }
        Ok(StepEvent::Queried { oracle: j, x, value, malformed })
    }

    fn track_peaks(&mut self) {
        for (p, t) in self.peak.iter_mut().zip(&self.tapes) {
            *p = (*p).max(t.extent());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub output: Nat,
    pub t_unit: u64,
    pub t_len: u64,
    pub queries: u64,
    pub answer_bits: u64,
    pub halt: Halt,
    /// Largest extent reached per tape.
    pub peak: Vec<usize>,
    pub malformed_queries: u64,
    pub ledger: CostLedger,
}

/// Runs to a halt, calling `observe` after every step.
pub fn run_observed(
    m: &Machine,
    oracles: &mut [Oracle],
    input: &Nat,
    fuel: u64,
    mut observe: impl FnMut(&Configuration, &StepEvent),
) -> Result<RunResult, OtmError> {
    if oracles.len() < m.oracle_count() {
        return Err(OtmError::OracleCount { expected: m.oracle_count(), found: oracles.len() });
    }
    let mut c = Configuration::new(m, input);
    while c.halted.is_none() {
        if c.t_unit >= fuel {
            return Err(OtmError::FuelExhausted { fuel });
        }
        let ev = c.step(m, oracles)?;
        observe(&c, &ev);
    }
    Ok(RunResult {
        output: c.output(m),
        t_unit: c.t_unit,
        t_len: c.t_len,
        queries: c.queries,
        answer_bits: c.answer_bits,
        halt: c.halted.expect("loop exit"),
        peak: c.peak.clone(),
        malformed_queries: c.malformed_queries,
        ledger: c.ledger,
    })
}

pub fn run(m: &Machine, oracles: &mut [Oracle], input: &Nat, fuel: u64) -> Result<RunResult, OtmError> {
    run_observed(m, oracles, input, fuel, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nat::nat;
    use crate::otm::{bundled, parse_machine};

    fn machine(name: &str) -> Machine {
        parse_machine(bundled(name).unwrap()).unwrap()
    }

    #[test]
    fn ap_query_step() {
        let m = machine("ap");
        let mut fs = [Oracle::from_pairs([(3, 5)], 0)];
        let mut c = Configuration::new(&m, &nat(3));
        loop {
            if let StepEvent::Queried { x, value, .. } = c.step(&m, &mut fs).unwrap() {
                assert_eq!((x, value), (nat(3), nat(5)));
                break;
            }
        }
        assert_eq!(c.tape(&m, TapeKind::OracleOut(0)).unwrap().contents(), "101");
        assert_eq!(c.tape(&m, TapeKind::OracleIn(0)).unwrap().extent(), 0);
        assert_eq!(c.tape(&m, TapeKind::OracleOut(0)).unwrap().head, 0);
    }

    #[test]
    fn ap_run_costs() {
        let m = machine("ap");
        let mut fs = [Oracle::from_pairs([(3, 5)], 0)];
        let r = run(&m, &mut fs, &nat(3), 1000).unwrap();
        assert_eq!(r.output, nat(5));
        assert_eq!(r.halt, Halt::Accept);
        assert_eq!(r.t_len, r.t_unit + 2);
        assert_eq!(fs[0].log(), &[nat(3)]);
    }

    #[test]
    fn zero_answer_is_free_under_length_cost() {
        let m = machine("ap");
        let mut fs = [Oracle::constant(nat(0))];
        let r = run(&m, &mut fs, &nat(6), 1000).unwrap();
        assert_eq!(r.output, nat(0));
        assert_eq!(r.t_len, r.t_unit - 1);
    }

    #[test]
    fn immediate_halt() {
        let m = machine("halt");
        let r = run(&m, &mut [], &nat(9), 10).unwrap();
        assert_eq!((r.output, r.t_unit), (nat(0), 1));
    }

    #[test]
    fn moves_and_fuel() {
        let m = machine("inc");
        let mut c = Configuration::new(&m, &nat(2));
        assert_eq!(c.step(&m, &mut []).unwrap(), StepEvent::Moved);
        assert_eq!((c.t_unit, c.t_len), (1, 1));
        assert_eq!(run(&m, &mut [], &nat(255), 3), Err(OtmError::FuelExhausted { fuel: 3 }));
    }

    #[test]
    fn missing_transition_rejects() {
        let src = "states: a b\ntapes: input, output\ninit: a\nhalt: b\ndelta:\n(a, 1 *) -> (* 1, R R, b)\n";
        let m = parse_machine(src).unwrap();
        assert_eq!(run(&m, &mut [], &nat(0), 10).unwrap().halt, Halt::Reject);
        assert_eq!(run(&m, &mut [], &nat(1), 10).unwrap().output, nat(1));
    }

    #[test]
    fn malformed_oracle_input() {
        let src = "states: a q b\nalphabet: #\ntapes: input, output, oracle-in 0, oracle-out 0\ninit: a\nhalt: b\n\
                   query 0: q -> b\ndelta:\n(a, * * * *) -> (* * # *, S S S S, q)\n";
        let m = parse_machine(src).unwrap();
        let mut fs = [Oracle::from_pairs([(0, 6)], 1)];
        let r = run(&m, &mut fs, &nat(0), 10).unwrap();
        assert_eq!(r.malformed_queries, 1);
        assert_eq!(fs[0].log(), &[nat(0)]);
        let mut c = Configuration::new(&m, &nat(0));
        c.strict = true;
        c.step(&m, &mut fs).unwrap();
        assert_eq!(c.step(&m, &mut fs), Err(OtmError::MalformedOracleInput { oracle: 0 }));
    }
}
