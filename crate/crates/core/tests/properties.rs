use bfflab_core::nat::{len, nat, Nat};
use bfflab_core::otm::{bundled, parse_machine, run};
use bfflab_core::schemes::{eval_pbrn, k_bar, kstar, PbrnSystem};
use bfflab_core::bounds::infer_bound;
use bfflab_core::selftest::gen;
use bfflab_core::sop::{norm, parse_sop, sop_eval, NormMethod, Sop, SopEnv};
use bfflab_core::terms::Builtin;
use bfflab_core::terms::{eval, parse_term, CheckedTerm, CostLedger, EvalCtx, EvalOptions, Oracle, Rank, Term};
use num_bigint::BigUint;
use proptest::prelude::*;

fn oracle() -> impl Strategy<Value = Oracle> {
    (prop::collection::vec(0u64..5000, 0..40), 0u64..300)
        .prop_map(|(vals, d)| Oracle::from_pairs(vals.into_iter().enumerate().map(|(k, v)| (k as u64, v)), d))
}

fn big() -> impl Strategy<Value = Nat> {
    prop::collection::vec(any::<u32>(), 0..4).prop_map(BigUint::new)
}

proptest! {
    #[test]
    fn table_norm_matches_brute_force(f in oracle(), x in 0u64..10) {
        prop_assert_eq!(f.norm_exact(x), norm(&f, x, 20).unwrap());
    }

    #[test]
    fn norm_is_monotone(f in oracle(), x in 0u64..60, dx in 0u64..8) {
        prop_assert!(f.norm_exact(x) <= f.norm_exact(x + dx));
    }

    #[test]
    fn kstar_characterizes_length(f in big(), k in big()) {
        prop_assert_eq!(f <= kstar(&k), len(&f) <= len(&k));
    }

    #[test]
    fn k_bar_is_max_over_prefixes(table in prop::collection::vec(0u64..1 << 20, 64), u in 0u64..64) {
        let k1 = CheckedTerm::new(parse_term("(ap 0 (x 0))").unwrap(), Rank::new(1, 1)).unwrap().into_ref();
        let mut fs = [Oracle::from_pairs(table.iter().copied().enumerate().map(|(i, v)| (i as u64, v)), 0)];
        let mut ledger = CostLedger::default();
        let mut ctx = EvalCtx::new(&mut ledger, EvalOptions::default());
        let got = k_bar(&k1, &mut fs, &nat(u), &[], &mut ctx).unwrap();
        let bits = 64 - u.leading_zeros();
        let want = (0..=bits).map(|i| table[(u >> i) as usize]).max().unwrap();
        prop_assert_eq!(got, nat(want));
    }

    #[test]
    fn eval_is_deterministic(f in oracle(), x in 0u64..1000, y in 0u64..1000) {
        let t = parse_term("(comp (lrn1 :g (ap 0 (x 0)) :h (comp add (x 2) (ap 0 (x 1))) :k (comp smash (x 0) (x 1))) (x 0) (x 1))").unwrap();
        let runs: Vec<_> = (0..2)
            .map(|_| {
                let mut fs = [f.clone()];
                let mut ledger = CostLedger::default();
                let v = eval(&t, &mut fs, &[nat(x), nat(y)], &mut ledger, &EvalOptions::default());
                (v, ledger, fs[0].log().to_vec())
            })
            .collect();
        prop_assert_eq!(&runs[0], &runs[1]);
    }

    #[test]
    fn lrn_respects_its_bound(f in oracle(), x in 0u64..256, y in 0u64..4096) {
        let k = "(comp add (x 0) (x 1))";
        let t = parse_term(&format!("(comp (lrn1 :g (ap 0 (x 0)) :h (comp mul (x 2) (ap 0 (x 1))) :k {k}) (x 0) (x 1))")).unwrap();
        let bound = parse_term(k).unwrap();
        let mut fs = [f];
        let mut ledger = CostLedger::default();
        let args = [nat(x), nat(y)];
        let v = eval(&t, &mut fs, &args, &mut ledger, &EvalOptions::default()).unwrap();
        let b = eval(&bound, &mut fs, &args, &mut ledger, &EvalOptions::default()).unwrap();
        prop_assert!(len(&v) <= len(&b));
    }

    #[test]
    fn machines_are_deterministic(f in oracle(), x in 0u64..512) {
        for name in ["ap", "twice", "inc"] {
            let m = parse_machine(bundled(name).unwrap()).unwrap();
            let a = run(&m, &mut [f.clone()], &nat(x), 1 << 16).unwrap();
            let b = run(&m, &mut [f.clone()], &nat(x), 1 << 16).unwrap();
            prop_assert_eq!(a.output, b.output);
            prop_assert_eq!((a.t_unit, a.t_len, a.queries), (b.t_unit, b.t_len, b.queries));
        }
    }
}

/// The same polynomial as a term over the arithmetic builtins, with
/// `|x_i|` passed as argument `i`.
fn as_term(p: &Sop) -> Term {
    match p {
        Sop::Const(n) => Term::lit(*n),
        Sop::LenVar(i) => Term::Var(*i),
        Sop::Plus(a, b) => Term::call(Builtin::Add, vec![as_term(a), as_term(b)]),
        Sop::Times(a, b) => Term::call(Builtin::Mul, vec![as_term(a), as_term(b)]),
        Sop::NormApp(..) => unreachable!("depth 0"),
    }
}

proptest! {
    #[test]
    fn depth_zero_polynomials_are_arithmetic(seed in any::<u64>(), lens in prop::collection::vec(0u64..40, 3)) {
        let p = gen::sop(&mut gen::rng(seed), 0, 3, 0, 9);
        let args: Vec<Nat> = lens.iter().map(|&l| nat(l)).collect();
        let want = eval(&as_term(&p), &mut [], &args, &mut CostLedger::default(), &EvalOptions::default()).unwrap();
        prop_assert_eq!(nat(sop_eval(&p, &SopEnv::new(lens, &[])).unwrap()), want);
    }

    #[test]
    fn composition_bounds_dominate_monotone_arguments(seed in any::<u64>(), lens in prop::collection::vec(0u64..12, 2)) {
        let mut rng = gen::rng(seed);
        let args: Vec<Term> = (0..4).map(|_| gen::term(&mut rng, 1, 2, 2)).collect();
        // heads whose bound is at least the bound of each listed position
        let heads: [(Term, usize, &[usize]); 9] = [
            (Term::SuccZero, 1, &[0]),
            (Term::SuccOne, 1, &[0]),
            (Term::call(Builtin::Add, vec![Term::Var(0), Term::Var(1)]), 2, &[0, 1]),
            (Term::call(Builtin::Mul, vec![Term::Var(0), Term::Var(1)]), 2, &[0, 1]),
            (Term::call(Builtin::Min, vec![Term::Var(0), Term::Var(1)]), 2, &[0]),
            (Term::call(Builtin::Monus, vec![Term::Var(0), Term::Var(1)]), 2, &[0]),
            (Term::call(Builtin::Half, vec![Term::Var(0)]), 1, &[0]),
            (Term::proj(3, 2), 3, &[1]),
            (Term::call(Builtin::CondLe, (0..4).map(Term::Var).collect()), 4, &[2, 3]),
        ];
        let fs = [gen::table(&mut rng, 16, 255, 3)];
        let env = SopEnv::new(lens, &fs).with_method(NormMethod::Table);
        for (head, arity, positions) in heads {
            let comp = Term::comp(head, args[..arity].to_vec());
            let whole = sop_eval(&infer_bound(&comp), &env).unwrap();
            for &i in positions {
                prop_assert!(whole >= sop_eval(&infer_bound(&args[i]), &env).unwrap());
            }
        }
    }
}

/// Naive recursion on notation: `F(0) = G`, `F(y) = H(F(⌊y/2⌋), y)`.
fn naive(g: &Term, h: &Term, fs: &mut [Oracle], x: &Nat, y: u64) -> Nat {
    let mut ledger = CostLedger::default();
    let opts = EvalOptions::default();
    if y == 0 {
        return eval(g, fs, std::slice::from_ref(x), &mut ledger, &opts).unwrap();
    }
    let prev = naive(g, h, fs, x, y / 2);
    eval(h, fs, &[x.clone(), prev, nat(y)], &mut ledger, &opts).unwrap()
}

#[test]
fn pbrn_matches_naive_recursion() {
    let g = parse_term("(ap 0 (x 0))").unwrap();
    let h = parse_term("(comp min (comp add (x 1) (ap 0 (comp len (x 2)))) (comp smash (x 2) (comp s1 (x 0))))").unwrap();
    let q = parse_sop("(+ (* (+ (lx 1) (c 1)) (+ (lx 0) (c 2))) (nf 0 (c 13)))").unwrap();
    let sys = PbrnSystem::from_terms(1, 1, g.clone(), h.clone(), q).unwrap().with_method(NormMethod::Table);
    let mut fs = [Oracle::from_pairs((0..16).map(|k| (k, k * 37 % 251)), 5)];
    for x in [0u64, 3, 200] {
        for y in 0..4096u64 {
            let mut ledger = CostLedger::default();
            let mut ctx = EvalCtx::new(&mut ledger, EvalOptions::strict());
            let got = eval_pbrn(&sys, &mut fs, &[nat(x)], &nat(y), &mut ctx).unwrap();
            assert_eq!(got, naive(&g, &h, &mut fs, &nat(x), y), "x = {x}, y = {y}");
        }
    }
}
