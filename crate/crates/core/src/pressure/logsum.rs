use crate::scalar::Real;

/// Streaming log-sum-exp with a running maximum.
///
/// Terms enter as logarithms; `log(0)` terms (negative infinity) are
/// excluded from the sum, matching the convention that vanishing summands
/// of the singular-value-function series are simply dropped. Merging two
/// accumulators is an exact two-term log-sum-exp on the underlying state,
/// so a sharded reduction in fixed order is deterministic.
#[derive(Debug, Clone)]
pub struct LogSumExp<T> {
    max: T,
    sum: T,
    terms: u64,
}

impl<T: Real> Default for LogSumExp<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> LogSumExp<T> {
    pub fn new() -> Self {
        LogSumExp {
            max: T::neg_infinity(),
            sum: T::zero(),
            terms: 0,
        }
    }

    /// Add a term given as `log(x)`; `-inf` (a zero term) is skipped.
    pub fn add_log(&mut self, log_x: T) {
        if log_x == T::neg_infinity() {
            return;
        }
        self.terms += 1;
        if self.max == T::neg_infinity() {
            self.max = log_x;
            self.sum = T::one();
        } else if log_x <= self.max {
            self.sum += (log_x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - log_x).exp() + T::one();
            self.max = log_x;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp<T>) {
        if other.terms == 0 {
            return;
        }
        if self.terms == 0 {
            *self = other.clone();
            return;
        }
        self.terms += other.terms;
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
        } else {
            self.sum = other.sum + self.sum * (self.max - other.max).exp();
            self.max = other.max;
        }
    }

    /// `log` of the accumulated sum; `-inf` when every term was zero.
    pub fn log_total(&self) -> T {
        if self.terms == 0 {
            T::neg_infinity()
        } else {
            self.max + self.sum.ln()
        }
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_sum() {
        let xs = [0.5_f64, 2.0, -3.0, 1.25];
        let mut acc = LogSumExp::new();
        for &x in &xs {
            acc.add_log(x);
        }
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((acc.log_total() - direct).abs() < 1e-14);
    }

    #[test]
    fn survives_underflow() {
        // terms that would underflow exp individually
        let mut acc = LogSumExp::new();
        acc.add_log(-1200.0_f64);
        acc.add_log(-1201.0);
        let expected = -1200.0 + (1.0_f64 + (-1.0_f64).exp()).ln();
        assert!((acc.log_total() - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_terms_excluded() {
        let mut acc = LogSumExp::<f64>::new();
        acc.add_log(f64::NEG_INFINITY);
        assert_eq!(acc.log_total(), f64::NEG_INFINITY);
        acc.add_log(0.0);
        assert!((acc.log_total() - 0.0).abs() < 1e-15);
        assert_eq!(acc.terms(), 1);
    }

    #[test]
    fn merging_empty_accumulators() {
        let mut a = LogSumExp::<f64>::new();
        let b = LogSumExp::<f64>::new();
        a.merge(&b);
        assert_eq!(a.log_total(), f64::NEG_INFINITY);
        let mut c = LogSumExp::new();
        c.add_log(1.5);
        a.merge(&c);
        assert!((a.log_total() - 1.5).abs() < 1e-15);
        let mut d = LogSumExp::new();
        d.merge(&a);
        assert!((d.log_total() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn merge_equals_streaming() {
        let xs: Vec<f64> = (0..40).map(|i| (i as f64) * 0.37 - 7.0).collect();
        let mut whole = LogSumExp::new();
        for &x in &xs {
            whole.add_log(x);
        }
        let mut left = LogSumExp::new();
        let mut right = LogSumExp::new();
        for &x in &xs[..17] {
            left.add_log(x);
        }
        for &x in &xs[17..] {
            right.add_log(x);
        }
        left.merge(&right);
        assert!((left.log_total() - whole.log_total()).abs() < 1e-13);
    }
}
