use bosonic_ckp::ckp::{c_lambda_closed, c_lambda_engine, c_parity_check, count_formula_check, kill_odd_times};
use bosonic_ckp::partitions::{enumerate_op, OddPartition, OpFilter};
use proptest::prelude::*;

fn small_partition() -> impl Strategy<Value = OddPartition> {
    let all = enumerate_op(8, OpFilter::All);
    (0..all.len()).prop_map(move |i| all[i].clone())
}

fn even_length_partition() -> impl Strategy<Value = OddPartition> {
    let all = enumerate_op(8, OpFilter::EvenLength);
    (0..all.len()).prop_map(move |i| all[i].clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn engine_equals_closed_form(l in small_partition()) {
        let e = c_lambda_engine(&l);
        let c = c_lambda_closed(&l);
        prop_assert_eq!(kill_odd_times(&e.hat_c), c.hat_c);
        prop_assert_eq!(e.d, c.d);
    }

    #[test]
    fn weight_parity_law(l in small_partition()) {
        prop_assert!(c_parity_check(&l).weight_holds);
    }

    #[test]
    fn counts_agree(l in even_length_partition()) {
        let r = count_formula_check(&l);
        prop_assert!(r.counts_agree());
        prop_assert!(r.corrected_relation);
    }
}
