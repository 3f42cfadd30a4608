//! Log-space arithmetic helpers. A zero weight is carried as `f64::NEG_INFINITY`.

/// Marker for ln 0.
pub const LN_ZERO: f64 = f64::NEG_INFINITY;

/// ln(Σ exp(x_i)) with max-shift. Returns [`LN_ZERO`] for an empty slice or all-zero terms.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let mut acc = LogSum::new();
    for &t in terms {
        acc.add(t);
    }
    acc.value()
}

/// ln(e^a + e^b).
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == LN_ZERO {
        return b;
    }
    if b == LN_ZERO {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Streaming log-sum-exp accumulator.
///
/// Keeps the running maximum and the sum of `exp(x - max)`; rescales when a
/// larger term arrives.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            max: LN_ZERO,
            scaled: 0.0,
        }
    }

    pub fn add(&mut self, term: f64) {
        if term == LN_ZERO {
            return;
        }
        if term > self.max {
            self.scaled = if self.max == LN_ZERO {
                1.0
            } else {
                self.scaled * (self.max - term).exp() + 1.0
            };
            self.max = term;
        } else {
            self.scaled += (term - self.max).exp();
        }
    }

    pub fn merge(&mut self, other: &LogSum) {
        if other.max == LN_ZERO {
            return;
        }
        if self.max == LN_ZERO {
            *self = *other;
            return;
        }
        if other.max > self.max {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        } else {
            self.scaled += other.scaled * (other.max - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == LN_ZERO {
            LN_ZERO
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Natural log that maps 0 to [`LN_ZERO`].
#[inline]
pub fn ln_or_zero(x: f64) -> f64 {
    if x <= 0.0 {
        LN_ZERO
    } else {
        x.ln()
    }
}
