//! Scheme files: `(mlrn :g1 t :h1 t :k1 t ...)`, `(pbrn :g t :h t :q P)`
//! and `(pbrpl :g t :h t :p P :q Q)`, each with optional `:params m` and
//! `:functions k`.

use std::collections::BTreeMap;

use super::{MlrnSystem, PbrnSystem, PbrplSystem};
use crate::sexpr::{parse_single, Located, ParseError};
use crate::sop::{sop_from_sexpr, Sop};
use crate::terms::{term_from_sexpr, Term};

#[derive(Debug, Clone)]
pub enum Scheme {
    Mlrn(MlrnSystem),
    Pbrn(PbrnSystem),
    Pbrpl(PbrplSystem),
}

pub fn parse_scheme(src: &str) -> Result<Scheme, ParseError> {
    let e = parse_single(src)?;
    let head = e.head().ok_or_else(|| e.err("expected (mlrn ...), (pbrn ...) or (pbrpl ...)"))?;
    let mut kw: BTreeMap<&str, &Located> = BTreeMap::new();
    for (k, v) in e.keywords()? {
        if kw.insert(k, v).is_some() {
            return Err(v.err(format!("duplicate :{k}")));
        }
    }
    let count = |k: &str| -> Result<Option<usize>, ParseError> {
        kw.get(k)
            .map(|v| v.atom().and_then(|a| a.parse().ok()).ok_or_else(|| v.err(format!(":{k} expects a natural"))))
            .transpose()
    };
    let functions = count("functions")?;
    let params = count("params")?;
    let term = |k: &str| -> Result<Term, ParseError> {
        term_from_sexpr(kw.get(k).ok_or_else(|| e.err(format!("missing :{k}")))?)
    };
    let sop = |k: &str| -> Result<Sop, ParseError> {
        sop_from_sexpr(kw.get(k).ok_or_else(|| e.err(format!("missing :{k}")))?)
    };
    let fail = |err: super::SchemeError| e.err(err.to_string());
    let allowed: &[&str] = match head {
        "mlrn" => &[],
        "pbrn" => &["g", "h", "q"],
        "pbrpl" => &["g", "h", "p", "q"],
        other => return Err(e.err(format!("unknown scheme {other}"))),
    };
    for (k, v) in &kw {
        let known = matches!(*k, "functions" | "params") || allowed.contains(k) || (head == "mlrn" && mlrn_key(k).is_some());
        if !known {
            return Err(v.err(format!("unknown keyword :{k} for {head}")));
        }
    }
    match head {
        "mlrn" => {
            let n = kw.keys().filter_map(|k| mlrn_key(k)).map(|(_, i)| i).max().unwrap_or(0);
            if n == 0 {
                return Err(e.err("mlrn needs :g1, :h1 and :k1"));
            }
            let mut g = Vec::new();
            let mut h = Vec::new();
            let mut k = Vec::new();
            for i in 1..=n {
                g.push(term(&format!("g{i}"))?);
                h.push(term(&format!("h{i}"))?);
                k.push(term(&format!("k{i}"))?);
            }
            let all = g.iter().chain(&h).chain(&k);
            let functions = functions.unwrap_or_else(|| all.map(|t| t.rank().functions).max().unwrap_or(0));
            let params = params.unwrap_or_else(|| {
                let from_g = g.iter().map(|t| t.rank().numbers);
                let from_h = h.iter().map(|t| t.rank().numbers.saturating_sub(1 + n));
                let from_k = k.iter().enumerate().map(|(i, t)| t.rank().numbers.saturating_sub(1 + i));
                from_g.chain(from_h).chain(from_k).max().unwrap_or(0)
            });
            MlrnSystem::from_terms(functions, params, g, h, k).map(Scheme::Mlrn).map_err(fail)
        }
        "pbrn" => {
            let (g, h, q) = (term("g")?, term("h")?, sop("q")?);
            let functions = functions.unwrap_or_else(|| g.rank().functions.max(h.rank().functions).max(q.num_functions()));
            let params = params.unwrap_or_else(|| {
                g.rank().numbers.max(h.rank().numbers.saturating_sub(2)).max(q.num_vars().saturating_sub(1))
            });
            PbrnSystem::from_terms(functions, params, g, h, q).map(Scheme::Pbrn).map_err(fail)
        }
        _ => {
            let (g, h, p, q) = (term("g")?, term("h")?, sop("p")?, sop("q")?);
            let functions = functions.unwrap_or_else(|| {
                [g.rank().functions, h.rank().functions, p.num_functions(), q.num_functions()].into_iter().max().unwrap_or(0)
            });
            let params = params.unwrap_or_else(|| {
                [g.rank().numbers, h.rank().numbers.saturating_sub(2), p.num_vars(), q.num_vars()].into_iter().max().unwrap_or(0)
            });
            PbrplSystem::from_terms(functions, params, g, h, p, q).map(Scheme::Pbrpl).map_err(fail)
        }
    }
}

fn mlrn_key(k: &str) -> Option<(char, usize)> {
    let mut chars = k.chars();
    let c = chars.next().filter(|c| matches!(c, 'g' | 'h' | 'k'))?;
    let i: usize = chars.as_str().parse().ok().filter(|&i| i >= 1)?;
    Some((c, i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mlrn_file() {
        let src = "(mlrn :g1 0 :h1 (comp add (x 1) 1) :k1 (comp add (x 0) 1)
                         :g2 1 :h2 (comp mul 2 (x 2)) :k2 (comp smash 1 (x 0)))";
        let Scheme::Mlrn(sys) = parse_scheme(src).unwrap() else { panic!() };
        assert_eq!((sys.len(), sys.functions, sys.params), (2, 0, 0));
    }

    #[test]
    fn pbrn_and_pbrpl_files() {
        let Scheme::Pbrn(s) = parse_scheme("(pbrn :g 0 :h (comp add (x 0) 1) :q (+ (lx 0) (c 1)))").unwrap() else {
            panic!()
        };
        assert_eq!(s.params, 0);
        let src = "(pbrpl :g (x 0) :h (ap 0 (x 1)) :p (+ (nf 0 (lx 0)) (c 1)) :q (c 3))";
        let Scheme::Pbrpl(s) = parse_scheme(src).unwrap() else { panic!() };
        assert_eq!((s.functions, s.params), (1, 1));
    }

    #[test]
    fn errors_carry_lines() {
        let err = parse_scheme("(pbrn :g 0\n :h (x 0) :zz 1 :q (c 1))").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(parse_scheme("(mlrn :g1 0 :h1 0)").is_err());
        assert!(parse_scheme("(mlrn :g1 0 :h1 (x 9) :k1 0 :params 0)").is_err());
        assert!(parse_scheme("(lrn)").is_err());
    }
}
