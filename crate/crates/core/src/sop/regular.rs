use super::{sop_eval, Sop, SopEnv, SopError};
use std::collections::BTreeMap;

/// Distinct `|f_j|(·)` subpolynomials grouped by `(j, depth)`, each group in
/// order of first occurrence.
pub fn norm_apps_by_depth(p: &Sop) -> BTreeMap<(usize, usize), Vec<&Sop>> {
    let mut groups: BTreeMap<(usize, usize), Vec<&Sop>> = BTreeMap::new();
    p.visit(&mut |q| {
        if let Sop::NormApp(j, _) = q {
            let group = groups.entry((*j, q.depth())).or_default();
            if !group.contains(&q) {
                group.push(q);
            }
        }
    });
    groups
}

/// True iff no function variable has two syntactically distinct
/// applications at the same depth. Identical repeated occurrences count once.
///
/// With a single function variable this is the same as demanding exactly one
/// application at every depth `1..=depth(p)`: an application of depth `m`
/// always contains one of depth `m - 1`.
pub fn is_regular(p: &Sop) -> bool {
    norm_apps_by_depth(p).values().all(|g| g.len() == 1)
}

/// Majorizes `p` by a regular polynomial of the same depth: working upwards
/// from depth 1, all distinct arguments of `|f_j|` at one depth are replaced
/// by their sum. Duplicated occurrences are kept as they are.
pub fn regularize(p: &Sop) -> Sop {
    let mut cur = p.clone();
    for m in 1..=p.depth() {
        let merged: BTreeMap<usize, (Vec<Sop>, Sop)> = norm_apps_by_depth(&cur)
            .into_iter()
            .filter(|((_, d), g)| *d == m && g.len() > 1)
            .map(|((j, _), g)| {
                let args: Vec<Sop> = g
                    .iter()
                    .map(|q| match q {
                        Sop::NormApp(_, a) => (**a).clone(),
                        _ => unreachable!(),
                    })
                    .collect();
                let sum = args.iter().cloned().reduce(|a, b| a + b).unwrap();
                (j, (args, Sop::nf(j, sum)))
            })
            .collect();
        if !merged.is_empty() {
            cur = replace_at_depth(&cur, m, &merged);
        }
    }
    cur
}

fn replace_at_depth(p: &Sop, m: usize, merged: &BTreeMap<usize, (Vec<Sop>, Sop)>) -> Sop {
    match p {
        Sop::NormApp(j, a) if p.depth() == m => match merged.get(j) {
            Some((args, repl)) if args.contains(a) => repl.clone(),
            _ => p.clone(),
        },
        Sop::NormApp(j, a) if p.depth() > m => Sop::nf(*j, replace_at_depth(a, m, merged)),
        Sop::Plus(a, b) => replace_at_depth(a, m, merged) + replace_at_depth(b, m, merged),
        Sop::Times(a, b) => replace_at_depth(a, m, merged) * replace_at_depth(b, m, merged),
        _ => p.clone(),
    }
}

/// Checks the pointwise chain condition of a regular polynomial in one
/// environment: for each function variable, the values of its applications
/// do not decrease with depth.
pub fn chain_holds(p: &Sop, env: &SopEnv) -> Result<bool, SopError> {
    let mut last: BTreeMap<usize, u64> = BTreeMap::new();
    for ((j, _), group) in norm_apps_by_depth(p) {
        for q in group {
            let v = sop_eval(q, env)?;
            if last.get(&j).is_some_and(|&prev| v < prev) {
                return Ok(false);
            }
            last.insert(j, v);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::Oracle;

    fn f(p: Sop) -> Sop {
        Sop::nf(0, p)
    }

    #[test]
    fn regularity() {
        assert!(is_regular(&f(f(Sop::lx(0)))));
        assert!(!is_regular(&(f(Sop::lx(0)) + f(Sop::lx(1)))));
        assert!(is_regular(&Sop::c(5)));
        assert!(is_regular(&(f(Sop::lx(0)) * f(Sop::lx(0)))));
    }

    #[test]
    fn merges_same_depth_arguments() {
        let p = f(Sop::lx(0)) + f(Sop::lx(1));
        let merged = f(Sop::lx(0) + Sop::lx(1));
        assert_eq!(regularize(&p), merged.clone() + merged);
    }

    #[test]
    fn leaves_regular_polynomials_alone() {
        for p in [f(Sop::lx(0)), Sop::lx(0) + Sop::c(3), f(f(Sop::lx(0))) + f(Sop::lx(0))] {
            assert_eq!(regularize(&p), p);
        }
    }

    #[test]
    fn nested_merge() {
        // depth-1 arguments |x0| and |x1| merge first, then the two distinct
        // depth-2 applications merge.
        let p = f(f(Sop::lx(0)) + Sop::c(1)) + f(f(Sop::lx(1)));
        let r = regularize(&p);
        assert!(is_regular(&r));
        assert_eq!(r.depth(), 2);
        let inner = f(Sop::lx(0) + Sop::lx(1));
        let outer = f((inner.clone() + Sop::c(1)) + inner);
        assert_eq!(r, outer.clone() + outer);
    }

    #[test]
    fn chain_condition() {
        let zero = [Oracle::constant(0u32.into())];
        let p = f(Sop::lx(0)) + f(f(Sop::lx(0)));
        let env = SopEnv::new(vec![3], &zero);
        assert!(chain_holds(&p, &env).unwrap());
        // |g|(0) = 0 but |g|(x) = 8 for x >= 1.
        let g = [Oracle::from_pairs([(0, 0)], 255)];
        let p = f(Sop::lx(0)) + f(Sop::c(0) * f(Sop::lx(0)));
        assert!(is_regular(&p));
        assert!(!chain_holds(&p, &SopEnv::new(vec![3], &g)).unwrap());
    }
}
