//! Small numeric helpers.

/// Neumaier-compensated accumulator. Evaluation results are compared at
/// 1e-9 tolerances, so weighted sums over many worlds use compensated
/// summation to stay bit-stable regardless of term count.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Rounds to 12 significant digits; used when floats are shown to humans
/// or serialized into CSV so accumulated noise does not leak into output.
pub(crate) fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("rounded float is parseable")
}
