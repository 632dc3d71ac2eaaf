mod common;

use common::{assert_close, choose_q, rat, to_f64};
use finpop::combinatorics::{binom_pmf, hypergeom_sf_zero};
use finpop::plans::{
    decide, marginal_accept_general, marginal_accept_psp, oc_curve, quality_threshold_k,
};
use finpop::{PlanTable, Prior, SamplingPlan, Verdict};
use proptest::prelude::*;

#[test]
fn oc_point_matches_exact_product() {
    let plan = SamplingPlan::new(125, 0).unwrap();
    let exact = choose_q(3168, 125) / choose_q(3200, 125);
    let product = (0..125i64).fold(rat(1, 1), |acc, i| acc * rat(3168 - i, 3200 - i));
    assert_eq!(exact, product);
    let oc = oc_curve(&plan, 3200, &[32]).unwrap();
    assert_close(oc[0].1, to_f64(&exact), 1e-12, "OC at A=32");
}

#[test]
fn marginal_accept_term_by_term() {
    let direct = 0.9995f64.powi(125);
    assert_close(
        marginal_accept_psp(125, 0.0005).unwrap(),
        direct,
        1e-14,
        "closed form",
    );
    assert!((direct - 0.93939).abs() < 1e-5);

    let sum: f64 = (0..=3200u64)
        .map(|a| hypergeom_sf_zero(3200, a, 125).unwrap() * binom_pmf(3200, 0.0005, a).unwrap())
        .sum();
    assert!((sum - marginal_accept_psp(125, 0.0005).unwrap()).abs() <= 1e-10);
}

#[test]
fn marginal_accept_census_under_uniform() {
    let plan = SamplingPlan::new(10, 0).unwrap();
    let v = marginal_accept_general(&Prior::Uniform, 10, &plan).unwrap();
    assert_close(v, 1.0 / 11.0, 1e-14, "census");
}

#[test]
fn lookup_from_file_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plans.csv");
    std::fs::write(
        &path,
        "lot_min,lot_max,aql,n,ac\n1201,3200,0.001,125,0\n3201,10000,0.004,200,2\n",
    )
    .unwrap();
    let table = PlanTable::from_path(&path).unwrap();
    let p = table.lookup(3200, 0.001).unwrap();
    assert_eq!((p.n, p.ac, p.lot_range), (125, 0, Some((1201, 3200))));
    let p = table.lookup(10_000, 0.004).unwrap();
    assert_eq!((p.n, p.ac), (200, 2));
    assert!(matches!(
        table.lookup(10_001, 0.004),
        Err(finpop::Error::NoPlan {
            lot_size: 10_001,
            ..
        })
    ));
}

proptest! {
    #[test]
    fn eq_marginal_identity(
        (pop, n) in (1u64..=1000).prop_flat_map(|pop| (Just(pop), 1..=pop)),
        delta in prop::sample::select(vec![0.0, 0.0005, 0.01, 0.2, 1.0]),
    ) {
        let plan = SamplingPlan::new(n, 0).unwrap();
        let prior = Prior::binomial_psp(delta).unwrap();
        let general = marginal_accept_general(&prior, pop, &plan).unwrap();
        let closed = marginal_accept_psp(n, delta).unwrap();
        prop_assert!((general - closed).abs() <= 1e-10, "{} vs {}", general, closed);
    }

    #[test]
    fn oc_curve_non_increasing(
        (pop, n, ac) in (1u64..=300)
            .prop_flat_map(|pop| (Just(pop), 1..=pop))
            .prop_flat_map(|(pop, n)| (Just(pop), Just(n), 0..=n)),
    ) {
        let plan = SamplingPlan::new(n, ac).unwrap();
        let counts: Vec<u64> = (0..=pop).collect();
        let oc = oc_curve(&plan, pop, &counts).unwrap();
        prop_assert_eq!(oc[0].1, 1.0);
        for w in oc.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 + 1e-14);
        }
    }

    #[test]
    fn decide_is_monotone((n, ac) in (1u64..500).prop_flat_map(|n| (Just(n), 0..=n))) {
        let plan = SamplingPlan::new(n, ac).unwrap();
        let verdicts: Vec<Verdict> = (0..=n).map(|a| decide(&plan, a).unwrap().verdict).collect();
        for a in 1..verdicts.len() {
            if verdicts[a] == Verdict::Accept {
                prop_assert_eq!(verdicts[a - 1], Verdict::Accept);
            }
        }
        prop_assert_eq!(verdicts[ac as usize], Verdict::Accept);
    }

    #[test]
    fn quality_threshold_brackets_product(pop in 0u64..1_000_000, aql in 1e-5f64..0.5) {
        let k = quality_threshold_k(pop, aql).unwrap() as f64;
        let x = pop as f64 * aql;
        let slack = x.abs() * f64::EPSILON;
        prop_assert!(k <= x + slack && x < k + 1.0);
    }
}
