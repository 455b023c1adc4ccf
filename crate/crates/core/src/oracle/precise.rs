//! Double-double evaluation of the sinusoidal family, used to re-check orbit
//! residuals at twice the working precision.

use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::systems::{Family, MapSystem};

/// `slope x + sin(x / n) / n` in double-double arithmetic.
pub fn eval_affine_sinusoid(slope: f64, n: usize, x: TwoFloat) -> TwoFloat {
    let nf = TwoFloat::from(n as f64);
    x * slope + (x / nf).sin() / nf
}

/// `|b_{n+1} - F(n, b_n)|` for each `n`, with `F` evaluated in double-double.
///
/// Only the sinusoidal family is supported; linear families are covered by
/// the rational oracle.
pub fn precise_residuals(sys: &MapSystem, b: &[f64]) -> Result<Vec<f64>> {
    let Family::AffineSinusoid { slope } = *sys.family() else {
        return Err(Error::Unsupported(
            "double-double residuals are only provided for the sinusoidal family".into(),
        ));
    };
    Ok((1..b.len())
        .map(|n| {
            let f = eval_affine_sinusoid(slope, n, TwoFloat::from(b[n - 1]));
            (TwoFloat::from(b[n]) - f).abs().hi()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agrees_with_double_evaluation() {
        let sys = MapSystem::sinusoidal_expansion();
        for n in 1..30 {
            for x in [-7.5, -0.1, 0.0, 0.3, 2.0, 123.456] {
                let dd = eval_affine_sinusoid(3.0, n, TwoFloat::from(x));
                let f = sys.eval(n, crate::systems::C64::new(x, 0.0)).re;
                assert!((dd.hi() - f).abs() <= 4.0 * f64::EPSILON * f.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn exact_orbit_residuals_are_rounding_sized() {
        let sys = MapSystem::sinusoidal_expansion();
        let b: Vec<f64> = sys
            .orbit(crate::systems::C64::new(0.7, 0.0), 25)
            .iter()
            .map(|z| z.re)
            .collect();
        let res = precise_residuals(&sys, &b).unwrap();
        for (n, r) in res.iter().enumerate() {
            assert!(*r <= 2.0 * f64::EPSILON * b[n + 1].abs(), "n = {}", n + 1);
        }
    }

    #[test]
    fn linear_family_is_unsupported() {
        assert!(precise_residuals(&MapSystem::alternating_contraction(), &[1.0, 2.0]).is_err());
    }
}
