mod common;

use common::{binomial_gap, mean_identity_gap, multinomial_gap, multiplicative_gap, shift_gap};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn multiplicative_law(x in -5.0..5.0f64, h in -2.0..2.0f64, n in 0usize..=30, r in 0usize..=30) {
        prop_assert!(multiplicative_gap(x, h, n, r) <= 1e-12);
    }

    #[test]
    fn binomial_formula(x in 0.01..6.0f64, y in 0.01..6.0f64, h in 0.0..2.0f64, n in 0usize..=20) {
        prop_assert!(binomial_gap(x, y, h, n) <= 1e-10);
    }

    #[test]
    fn multinomial_theorem(
        xs in prop::collection::vec(0.01..4.0f64, 1..=4),
        h in 0.0..2.0f64,
        n in 0usize..=10,
    ) {
        prop_assert!(multinomial_gap(&xs, h, n) <= 1e-10);
    }

    #[test]
    fn shift_law(z in 0.01..10.0f64, n in 0usize..=30, m in 1usize..=30) {
        prop_assert!(shift_gap(z, n, m) <= 1e-12);
    }

    #[test]
    fn mean_of_rising_binomial_law(x in 0.01..10.0f64, y in 0.01..10.0f64, m in 0usize..=15) {
        prop_assert!(mean_identity_gap(x, y, m) <= 1e-10);
    }
}
