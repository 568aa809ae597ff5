//! Compensated summation for the alternating inclusion-exclusion sums.

use crate::scalar::Real;

/// Neumaier (improved Kahan-Babuska) accumulator.
///
/// Also tracks the sum of absolute values so callers can judge how much
/// cancellation the final value went through.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
    magnitude: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
            magnitude: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, value: T) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
        self.magnitude += value.abs();
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.compensation
    }

    /// Sum of `|term|` over everything added so far.
    #[inline]
    pub fn magnitude(&self) -> T {
        self.magnitude
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

impl<T: Real> Extend<T> for CompensatedSum<T> {
    fn extend<I: IntoIterator<Item = T>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(iter: I) -> T {
    iter.into_iter().collect::<CompensatedSum<T>>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_lost_by_naive_sum() {
        let terms = [1.0_f64, 1e100, 1.0, -1e100];
        let naive: f64 = terms.iter().sum();
        assert_eq!(naive, 0.0);
        assert_eq!(compensated_sum(terms), 2.0);
    }

    #[test]
    fn alternating_harmonic() {
        // ln 2 = 1 - 1/2 + 1/3 - ...; compare partial sums against a
        // pairwise-grouped reference.
        let n = 1_000_000;
        let acc: CompensatedSum<f64> = (1..=n)
            .map(|k| if k % 2 == 1 { 1.0 / k as f64 } else { -1.0 / k as f64 })
            .collect();
        let grouped: f64 = (1..=n / 2)
            .map(|j| {
                let k = (2 * j - 1) as f64;
                1.0 / (k * (k + 1.0))
            })
            .rev()
            .sum();
        assert!((acc.value() - grouped).abs() < 1e-15);
        assert!(acc.magnitude() > 14.0);
    }
}
