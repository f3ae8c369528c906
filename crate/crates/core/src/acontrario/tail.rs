use std::f64::consts::{LN_10, SQRT_2};

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

// Below this argument erfc is computed directly; above it through the
// continued fraction for exp(x²)·erfc(x), which never underflows.
const DIRECT_LIMIT: f64 = 10.0;
const CF_TERMS: usize = 120;

/// Natural log of the complementary error function, finite for all finite `x`.
pub fn ln_erfc(x: f64) -> f64 {
    if x < DIRECT_LIMIT {
        return erfc(x).ln();
    }
    // erfc(x) = exp(-x²)/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut tail = x;
    for j in (1..=CF_TERMS).rev() {
        tail = x + (j as f64 / 2.0) / tail;
    }
    -x * x - 0.5 * std::f64::consts::PI.ln() - tail.ln()
}

/// `log10(N · P(|X| ≥ |value|))` for `X ~ N(0, 1)`.
pub fn log_nfa(value: f64, n_tests: u64) -> Result<f64> {
    if value.is_nan() {
        return Err(Error::NonFinite);
    }
    if n_tests == 0 {
        return Err(Error::InvalidParameter(
            "number of tests must be >= 1".into(),
        ));
    }
    let z = value.abs() / SQRT_2;
    Ok((n_tests as f64).log10() + ln_erfc(z) / LN_10)
}

#[cfg(test)]
mod tests {
    use super::*;

    // log10 erfc(v/√2), from 50-digit arithmetic.
    const ORACLE: [(f64, f64); 10] = [
        (0.0, 0.0),
        (1.0, -0.498_515_545_827_989_3),
        (2.0, -1.341_986_084_476_955_9),
        (3.0, -2.568_669_040_265_387_9),
        (5.0, -6.241_615_676_726_673_3),
        (8.0, -14.905_112_555_353_173),
        (10.0, -22.817_023_409_822_095),
        (20.0, -88.259_065_347_411_61),
        (30.0, -197.008_179_265_996_97),
        (38.0, -315.238_759_708_298_53),
    ];

    #[test]
    fn matches_high_precision_tail() {
        for (v, expect) in ORACLE {
            let got = log_nfa(v, 1).unwrap();
            assert!(
                (got - expect).abs() <= 1e-9 * expect.abs().max(1.0),
                "v={v}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn zero_value_is_log_n() {
        assert!((log_nfa(0.0, 1_000_000).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn five_sigma_in_a_million() {
        let v = log_nfa(5.0, 1_000_000).unwrap();
        assert!((v - (-0.241_615_676_726_673_3)).abs() < 1e-9);
        assert!((v - -0.2416).abs() < 1e-4);
    }

    #[test]
    fn two_tailed_and_monotone() {
        assert_eq!(log_nfa(-3.0, 10).unwrap(), log_nfa(3.0, 10).unwrap());
        let mut prev = f64::INFINITY;
        for i in 0..400 {
            let v = i as f64 * 0.1;
            let cur = log_nfa(v, 1000).unwrap();
            assert!(cur < prev, "not decreasing at {v}");
            prev = cur;
        }
    }

    #[test]
    fn continuous_across_branch() {
        let below = ln_erfc(DIRECT_LIMIT - 1e-9);
        let above = ln_erfc(DIRECT_LIMIT);
        assert!((below - above).abs() < 1e-6);
    }

    #[test]
    fn nan_rejected() {
        assert!(log_nfa(f64::NAN, 10).is_err());
        assert!(log_nfa(1.0, 0).is_err());
    }
}
