//! Integer valuation of progress against the schedule of values.

pub const FULL_BP: u32 = 10_000;

/// Pro-rata share of `value_cents` for `delta_bp` basis points, floored to
/// whole cents.
pub fn valuation(delta_bp: u32, value_cents: u64) -> u64 {
    let delta = u128::from(delta_bp.min(FULL_BP));
    (u128::from(value_cents) * delta / u128::from(FULL_BP)) as u64
}

/// Amount owed for one item moving from `paid_bp` to `paid_bp + delta_bp`.
/// The payment that completes the item pays whatever is still outstanding,
/// so lifetime payments for an item sum to exactly `scheduled_cents`.
pub fn item_payment(scheduled_cents: u64, paid_bp: u32, paid_cents: u64, delta_bp: u32) -> u64 {
    if paid_bp + delta_bp >= FULL_BP {
        scheduled_cents.saturating_sub(paid_cents)
    } else {
        valuation(delta_bp, scheduled_cents)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn examples() {
        assert_eq!(valuation(10_000, 12_345), 12_345);
        assert_eq!(valuation(0, 999), 0);
        // 100 * 3333 = 333_300; 333_300 / 10_000 = 33 remainder 3_300
        assert_eq!(valuation(3_333, 100), 33);
    }

    #[test]
    fn completion_tops_up_rounding_residue() {
        // three thirds of 100 cents: 33 + 33 + (100 - 66)
        let mut paid_bp = 0;
        let mut paid_cents = 0;
        for delta in [3_333, 3_333, 3_334] {
            paid_cents += item_payment(100, paid_bp, paid_cents, delta);
            paid_bp += delta;
        }
        assert_eq!(paid_cents, 100);
    }

    #[test]
    fn floor_sum_bound_both_cases() {
        // non-divisible: 3 items of 333 cents at 5000 bp
        let each: u64 = (0..3).map(|_| valuation(5_000, 333)).sum();
        assert_eq!(each, 3 * 166);
        assert_eq!(valuation(5_000, 999), 499);
        assert!(each < valuation(5_000, 999));
        // divisible: products are multiples of 10_000
        let each: u64 = [100u64, 200, 300].iter().map(|v| valuation(5_000, *v)).sum();
        assert_eq!(each, valuation(5_000, 600));
        assert_eq!(each, 300);
    }

    proptest! {
        #[test]
        fn monotone_in_both_arguments(d in 0u32..=10_000, v in 0u64..1u64 << 50, dd in 0u32..100, dv in 0u64..1_000) {
            prop_assert!(valuation(d, v) <= valuation((d + dd).min(10_000), v));
            prop_assert!(valuation(d, v) <= valuation(d, v + dv));
        }

        #[test]
        fn floor_sum_never_exceeds_pooled(d in 0u32..=10_000, vals in prop::collection::vec(0u64..1_000_000, 1..20)) {
            let split: u64 = vals.iter().map(|v| valuation(d, *v)).sum();
            let pooled = valuation(d, vals.iter().sum());
            prop_assert!(split <= pooled);
            prop_assert!(pooled - split < vals.len() as u64);
        }
    }
}
