//! Log-domain accumulation helpers shared by the tabular solvers.

/// Streaming log-sum-exp with max-shift rescaling.
///
/// Terms equal to `-inf` contribute nothing; an accumulator that saw no
/// finite term evaluates to `-inf`.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogSumExp::new();
    for x in xs {
        acc.push(x);
    }
    acc.value()
}

/// `-log Σ w_i exp(-v_i)` over entries with `w_i > 0`.
pub fn soft_min(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    -log_sum_exp(
        weights
            .iter()
            .zip(values)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, v)| w.ln() - v),
    )
}

/// `Σ w_i v_i` over entries with `w_i > 0`, so that `0 · ∞ = 0`.
pub fn weighted_mean(weights: &[f64], values: &[f64]) -> f64 {
    weights
        .iter()
        .zip(values)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, v)| w * v)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive_on_moderate_values() {
        let xs = [0.3, -1.2, 2.5, 0.0];
        let naive: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(xs) - naive).abs() < 1e-14);
    }

    #[test]
    fn lse_survives_large_magnitudes() {
        let v = log_sum_exp([-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        let v = log_sum_exp([1000.0, 1000.0 - 2f64.ln()]);
        assert!((v - (1000.0 + 1.5f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn lse_of_nothing_is_neg_infinity() {
        assert_eq!(log_sum_exp([]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn soft_min_skips_zero_weights_and_infinite_costs() {
        let v = soft_min(&[0.5, 0.5, 0.0], &[0.0, f64::INFINITY, -5.0]);
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(weighted_mean(&[1.0, 0.0], &[1.0, f64::INFINITY]), 1.0);
    }
}
