//! Log-domain arithmetic helpers.

/// `ln(e^a + e^b)`, exact when either side is `-inf`.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + (-(a - b).abs()).exp().ln_1p()
}

/// `ln Σ e^x` over an iterator; `-inf` for an empty input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    if hi == f64::INFINITY {
        return hi;
    }
    hi + values.iter().map(|v| (v - hi).exp()).sum::<f64>().ln()
}

/// `ln(e^a - e^b)` for `a >= b`; `-inf` when the difference vanishes.
pub fn log_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp()).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_and_sum_agree_with_linear_domain() {
        let a = 0.3f64.ln();
        let b = 0.5f64.ln();
        assert!((log_add(a, b).exp() - 0.8).abs() < 1e-12);
        assert!((log_sum_exp([a, b, 0.2f64.ln()]).exp() - 1.0).abs() < 1e-12);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
        assert_eq!(log_add(f64::NEG_INFINITY, a), a);
    }

    #[test]
    fn sub_handles_equal_and_empty() {
        assert!((log_sub(0.8f64.ln(), 0.3f64.ln()).exp() - 0.5).abs() < 1e-12);
        assert_eq!(log_sub(1.0, 1.0), f64::NEG_INFINITY);
        assert_eq!(log_sub(1.0, f64::NEG_INFINITY), 1.0);
    }

    #[test]
    fn large_magnitudes_do_not_overflow() {
        let v = log_sum_exp([1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-9);
    }
}
