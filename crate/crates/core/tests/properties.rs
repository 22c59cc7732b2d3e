use num_bigint::BigInt;
use proptest::prelude::*;
use std::sync::OnceLock;

use signlab_core::eigenforms::cache::{load_or_generate, read_cache, write_cache};
use signlab_core::eigenforms::{
    generate_coefficients, lambda_power, power_sign_factored, verify_multiplicativity,
    CoefficientTable, FormId,
};
use signlab_core::numtheory::factorize;
use signlab_core::signlab::{interval_moments, power_moment_sums, Sign};

fn delta() -> &'static CoefficientTable {
    static T: OnceLock<CoefficientTable> = OnceLock::new();
    T.get_or_init(|| generate_coefficients(FormId::Delta.spec(), 2500).unwrap())
}

fn n15() -> &'static CoefficientTable {
    static T: OnceLock<CoefficientTable> = OnceLock::new();
    T.get_or_init(|| generate_coefficients(FormId::N15.spec(), 2500).unwrap())
}

fn form() -> impl Strategy<Value = FormId> {
    proptest::sample::select(FormId::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sign_helper_agrees_with_exact_value(n in 1u64..=2500, j in 1u32..=4) {
        for t in [delta(), n15()] {
            let f = factorize(n).unwrap();
            let exact = lambda_power(t, n, j).unwrap();
            prop_assert_eq!(power_sign_factored(t, &f, j).unwrap(), exact.sign);
            prop_assert_eq!(exact.sign, Sign::of(&exact.exact));
        }
    }

    #[test]
    fn corrupting_a_composite_entry_is_detected(n in 2u64..=49, delta_v in 1i64..1000) {
        // n ≤ 49 = 7² keeps some coprime split m·k = n with both factors ≤ 49
        let f = factorize(n).unwrap();
        prop_assume!(f.factors().len() >= 2);
        let mut t = delta().clone();
        let v = t.a(n).unwrap() + BigInt::from(delta_v);
        t.set(n, v).unwrap();
        let r = verify_multiplicativity(&t, 49).unwrap();
        prop_assert!(!r.coprime_violations.is_empty());
        prop_assert!(r.coprime_violations.iter().any(|&(a, b)| a * b == n || a == n || b == n));
    }

    #[test]
    fn corrupting_a_prime_power_is_detected(p in proptest::sample::select(vec![2u64, 3, 5, 7]), delta_v in 1i64..1000) {
        let mut t = n15().clone();
        let n = p * p;
        let v = t.a(n).unwrap() + BigInt::from(delta_v);
        t.set(n, v).unwrap();
        let r = verify_multiplicativity(&t, 40).unwrap();
        prop_assert!(r.recurrence_violations.contains(&(p, 2)));
    }

    #[test]
    fn cache_round_trip(id in form(), limit in 2u64..400) {
        let dir = tempfile::tempdir().unwrap();
        let t = generate_coefficients(id.spec(), limit).unwrap();
        let path = write_cache(&t, dir.path()).unwrap();
        prop_assert_eq!(&read_cache(&path).unwrap(), &t);
        let (again, _) = load_or_generate(id.spec(), limit, Some(dir.path())).unwrap();
        prop_assert_eq!(again, t);
    }

    #[test]
    fn moments_split_at_any_point(split in 1u64..2000, j in 2u32..=4) {
        let t = delta();
        let whole = power_moment_sums(t, j, 2000.0).unwrap();
        let head = power_moment_sums(t, j, split as f64).unwrap();
        let tail = interval_moments(t, j, split as f64, (2000 - split) as f64).unwrap();
        prop_assert!((whole.first - head.first - tail.first).abs() < 1e-9);
        prop_assert!((whole.second - head.second - tail.second).abs() < 1e-9 * whole.second);
    }
}
