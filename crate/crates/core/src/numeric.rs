//! Small numerical helpers shared across modules: compensated summation and
//! log-domain scalars.

use serde::{Deserialize, Serialize};

/// Neumaier compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// ln(e^a + e^b) without overflow.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Values above this magnitude are reported in the log domain.
pub const LOG_DOMAIN_THRESHOLD: f64 = 1e300;

/// A nonnegative scalar stored by its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScalar {
    pub ln: f64,
}

impl LogScalar {
    pub fn from_ln(ln: f64) -> Self {
        Self { ln }
    }

    pub fn from_value(x: f64) -> Self {
        Self { ln: x.ln() }
    }

    /// The plain value; `inf` once it leaves the double range.
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    pub fn log10(&self) -> f64 {
        self.ln / std::f64::consts::LN_10
    }

    /// True when the value is beyond [`LOG_DOMAIN_THRESHOLD`].
    pub fn is_huge(&self) -> bool {
        self.ln > LOG_DOMAIN_THRESHOLD.ln()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            ln: self.ln + factor.ln(),
        }
    }
}

/// Least-squares line through `(x, y)` points, with x centred for stability.
pub(crate) fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn ln_add_exp_matches_direct() {
        let v = ln_add_exp(2f64.ln(), 3f64.ln());
        assert!((v - 5f64.ln()).abs() < 1e-15);
        assert_eq!(ln_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
        assert!((ln_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn fit_line_exact_on_affine_data() {
        let pts: Vec<_> = (1..10).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        let (s, c) = fit_line(&pts).unwrap();
        assert!((s + 0.5).abs() < 1e-14);
        assert!((c - 3.0).abs() < 1e-13);
    }
}
