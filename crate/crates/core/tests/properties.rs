use basis_core::coloring::{Color, Coloring};
use basis_core::engine::{run, RunConfig};
use basis_core::intset::{rep_count, rep_count_windowed, rep_profile, sumset};
use basis_core::montecarlo::{chain_enumeration_probability, exact_membership_probability, ComplementModel};
use basis_core::selector::CaseParams;
use basis_core::{ExactProbability, IntegerSet};
use proptest::prelude::*;

fn set(limit: u64, xs: Vec<u64>) -> IntegerSet {
    IntegerSet::from_members(limit, xs.into_iter().map(|x| x % limit)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sumset_is_commutative_and_contains_pair_sums(
        xs in proptest::collection::vec(0u64..500, 0..40),
        ys in proptest::collection::vec(0u64..500, 0..40),
    ) {
        let a = set(500, xs);
        let b = set(500, ys);
        let ab = sumset(&a, &b, 1000);
        prop_assert_eq!(&ab, &sumset(&b, &a, 1000));
        for x in a.iter() {
            for y in b.iter() {
                prop_assert!(ab.contains(x + y));
            }
        }
        prop_assert!(ab.len() <= a.len() * b.len());
    }

    #[test]
    fn windowed_counts_never_exceed_plain_counts(
        xs in proptest::collection::vec(0u64..2000, 0..120),
        rho in 1u64..200,
    ) {
        let a = set(2000, xs);
        let p = rep_profile(&a, 0, 4000, rho);
        for (n, r, w) in p.iter() {
            prop_assert!(w <= r);
            prop_assert_eq!(r as u64, rep_count(&a, n));
            prop_assert_eq!(w as u64, rep_count_windowed(&a, n, rho));
        }
    }

    #[test]
    fn coloring_is_a_pure_function_of_seed_and_index(seed in any::<u64>(), n in 0u64..4000) {
        let c = Coloring::new(seed, 4000);
        prop_assert_eq!(c.color(n), Coloring::color_at(seed, n));
        let classes = Color::ALL.iter().filter(|&&k| c.is(n, k)).count();
        prop_assert_eq!(classes, 1);
    }

    #[test]
    fn membership_oracle_is_a_probability(n in 1u64..(1 << 14)) {
        let p: ExactProbability = exact_membership_probability(n, 6, ComplementModel::Union).unwrap();
        prop_assert!(p >= ExactProbability::from_integer(0));
        prop_assert!(p <= ExactProbability::new(1, 3));
        let chain = chain_enumeration_probability(n, ComplementModel::Union);
        prop_assert_eq!(p, chain.b);
        prop_assert_eq!(chain.b, chain.c);
    }

    #[test]
    fn construction_invariants_hold_for_any_seed(seed in any::<u64>(), case in 0usize..8) {
        let params: CaseParams = CaseParams::ALL[case].parse().unwrap();
        let s = run(&RunConfig::new(params, 5, seed)).unwrap();
        prop_assert!(s.b_cum.is_disjoint(&s.c_cum));
        for st in &s.stages {
            prop_assert!(st.check_invariants().is_ok());
            prop_assert!(st.b_k.is_disjoint(&st.c_k));
            for x in st.b_k.iter() {
                prop_assert!(s.coloring.is(x, Color::One));
            }
            for x in st.c_k.iter() {
                prop_assert!(s.coloring.is(x, Color::Two));
            }
        }
    }
}
