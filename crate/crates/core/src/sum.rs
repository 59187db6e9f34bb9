//! Exactly rounded floating-point summation.
//!
//! All reductions in this crate (means, norms, variation seminorms, measure
//! marginals) go through [`ExactSum`], which keeps the running sum as a list
//! of non-overlapping partials and rounds once at the end. The result is the
//! correctly rounded value of the exact real sum, so it is independent of
//! the order of the terms. That gives the reductions two properties at once:
//! bit-for-bit reproducibility across runs and platforms, and exact
//! invariance under rearrangements such as cyclic shifts of the input field.

/// Streaming accumulator holding Shewchuk-style non-overlapping partials.
#[derive(Debug, Default, Clone)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one term.
    pub fn add(&mut self, value: f64) {
        let mut x = value;
        let mut kept = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    /// Correctly rounded value of the accumulated sum.
    ///
    /// Rounds the partials from largest to smallest and applies the
    /// round-half-even correction, as in CPython's `math.fsum`.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // If the residual and the next partial pull in the same direction the
        // rounded sum sits exactly on a halfway point; nudge to even.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

/// Correctly rounded sum of an iterator of terms.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = ExactSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}
