mod common;

use common::{assert_close, choose, enumerate_samples, ln_big, to_f64};
use finpop::combinatorics::{
    binom_cdf, binom_pmf, hypergeom_pmf, hypergeom_sf_zero, log_choose, log_sum_exp,
};
use proptest::prelude::*;

#[test]
fn log_choose_matches_big_integers_up_to_300() {
    for n in 0..=300u64 {
        for k in 0..=n {
            let exact = ln_big(&choose(n, k));
            let got = log_choose(n, k as i64);
            // exp(got) / C(n, k) - 1 ≈ got - ln C(n, k)
            assert!((got - exact).abs() <= 1e-11, "C({n},{k}): {got} vs {exact}");
        }
    }
}

#[test]
fn log_choose_worked_plans() {
    let exact = ln_big(&choose(3200, 125));
    assert_close(log_choose(3200, 125), exact, 1e-12, "ln C(3200,125)");
    let exact = ln_big(&choose(10_000, 200));
    assert_close(log_choose(10_000, 200), exact, 1e-12, "ln C(10000,200)");
}

#[test]
fn log_choose_is_exactly_symmetric() {
    for n in [0u64, 1, 2, 17, 300, 3200, 10_000, 123_457] {
        for k in 0..=n.min(400) {
            assert_eq!(log_choose(n, k as i64), log_choose(n, (n - k) as i64));
        }
    }
}

#[test]
fn hypergeom_examples_by_enumeration() {
    let (hits, total) = enumerate_samples(10, 2, 5, 0);
    assert_eq!((hits, total), (56, 252));
    assert_close(
        hypergeom_sf_zero(10, 2, 5).unwrap(),
        hits as f64 / total as f64,
        1e-14,
        "sf0",
    );

    let (hits, total) = enumerate_samples(10, 3, 4, 1);
    assert_eq!((hits, total), (105, 210));
    assert_close(hypergeom_pmf(10, 3, 4, 1).unwrap(), 0.5, 1e-14, "pmf");
}

#[test]
fn hypergeom_matches_enumeration_on_small_lots() {
    for marked in 0..=12u32 {
        for sample in 0..=12u32 {
            for observed in 0..=sample {
                let (hits, total) = enumerate_samples(12, marked, sample, observed);
                let expected = hits as f64 / total as f64;
                let got = hypergeom_pmf(12, marked as u64, sample as u64, observed as u64).unwrap();
                assert!(
                    (got - expected).abs() < 1e-14,
                    "{marked} {sample} {observed}"
                );
            }
        }
    }
}

#[test]
fn hypergeom_sums_to_one() {
    for population in 0..=60u64 {
        for sample in 0..=population {
            for marked in 0..=population {
                let total: f64 = (0..=sample)
                    .map(|a| hypergeom_pmf(population, marked, sample, a).unwrap())
                    .sum();
                assert!(
                    (total - 1.0).abs() <= 1e-12,
                    "N={population} n={sample} A={marked}: {total}"
                );
            }
        }
    }
}

#[test]
fn binomial_masses_match_exact_rationals() {
    use common::{binom_pmf_q, rat};
    for (m, num, den) in [
        (50u64, 1i64, 10i64),
        (400, 1, 500),
        (3075, 1, 2000),
        (97, 1, 2),
    ] {
        let p = rat(num, den);
        let pf = num as f64 / den as f64;
        for j in (0..=m).step_by((m as usize / 37).max(1)) {
            let exact = to_f64(&binom_pmf_q(m, &p, j));
            if exact < 1e-300 {
                continue;
            }
            assert_close(binom_pmf(m, pf, j).unwrap(), exact, 1e-12, "binomial mass");
        }
    }
}

proptest! {
    #[test]
    fn binom_cdf_full_support_is_one(m in 0u64..=10_000, p in 1e-6f64..(1.0 - 1e-6)) {
        let v = binom_cdf(m, p, m).unwrap();
        prop_assert!((v - 1.0).abs() <= 1e-12, "m={} p={} -> {}", m, p, v);
    }

    #[test]
    fn log_sum_exp_permutation_invariant(
        mut terms in prop::collection::vec(-700.0f64..50.0, 1..40),
        seed in any::<u64>(),
    ) {
        let forward = log_sum_exp(&terms);
        let n = terms.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            terms.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled = log_sum_exp(&terms);
        prop_assert!((forward - shuffled).abs() <= 1e-13 * forward.abs().max(1.0));
    }
}
