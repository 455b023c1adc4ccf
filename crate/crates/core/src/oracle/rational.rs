//! Exact rational propagation for the linear families.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::systems::{Family, MapSystem, C64};

pub type Q = BigRational;
pub type CQ = Complex<BigRational>;

#[derive(Debug, Clone, PartialEq)]
pub enum RationalSystem {
    /// `c(n) = coeffs[(n - 1) mod len]`.
    Periodic(Vec<Q>),
    IndexScaled { odd_scale: Q, even_scale: Q },
    PowerTwo { odd_shift: i32, even_shift: i32 },
}

impl RationalSystem {
    /// Coefficients `2` and `1/3`, exactly.
    pub fn alternating_contraction() -> Self {
        RationalSystem::Periodic(vec![q_int(2), Q::new(BigInt::from(1), BigInt::from(3))])
    }

    pub fn coefficient(&self, n: usize) -> Q {
        match self {
            RationalSystem::Periodic(c) => c[(n - 1) % c.len()].clone(),
            RationalSystem::IndexScaled {
                odd_scale,
                even_scale,
            } => {
                let nq = q_int(n as i64);
                if n % 2 == 1 {
                    odd_scale * nq
                } else {
                    (even_scale * nq).recip()
                }
            }
            RationalSystem::PowerTwo {
                odd_shift,
                even_shift,
            } => {
                let n = n as i64;
                let e = if n % 2 == 1 {
                    n + *odd_shift as i64
                } else {
                    -(n + *even_shift as i64)
                };
                let pow = Q::from_integer(BigInt::one() << e.unsigned_abs());
                if e >= 0 {
                    pow
                } else {
                    pow.recip()
                }
            }
        }
    }
}

fn q_int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// Exact value of a double.
pub fn q_from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::InvalidInput(format!("{x} is not finite")))
}

pub fn cq_from_c64(z: C64) -> Result<CQ> {
    Ok(CQ::new(q_from_f64(z.re)?, q_from_f64(z.im)?))
}

pub fn cq_to_c64(z: &CQ) -> C64 {
    C64::new(
        z.re.to_f64().unwrap_or(f64::NAN),
        z.im.to_f64().unwrap_or(f64::NAN),
    )
}

/// The exact rational system carried by the doubles of a linear family.
impl TryFrom<&MapSystem> for RationalSystem {
    type Error = Error;

    fn try_from(sys: &MapSystem) -> Result<Self> {
        match sys.family() {
            Family::PeriodicLinear { coeffs } => Ok(RationalSystem::Periodic(
                coeffs.iter().map(|&c| q_from_f64(c)).collect::<Result<_>>()?,
            )),
            Family::IndexScaledLinear {
                odd_scale,
                even_scale,
            } => Ok(RationalSystem::IndexScaled {
                odd_scale: q_from_f64(*odd_scale)?,
                even_scale: q_from_f64(*even_scale)?,
            }),
            Family::PowerTwoParity {
                odd_shift,
                even_shift,
            } => Ok(RationalSystem::PowerTwo {
                odd_shift: *odd_shift,
                even_shift: *even_shift,
            }),
            Family::AffineSinusoid { .. } => Err(Error::Unsupported(
                "the sinusoidal family has no rational form".into(),
            )),
        }
    }
}

fn scale(z: &CQ, c: &Q) -> CQ {
    CQ::new(&z.re * c, &z.im * c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalOrbit {
    /// `a_1..a_N`.
    pub a: Vec<CQ>,
    /// `r_1..r_{N-1}`.
    pub residuals: Vec<CQ>,
    /// `prod_{j<=n} p_j` at position `n - 1`, for `n = 1..N`.
    pub products: Vec<Q>,
    /// `sum_{j<n} prod_{i=j+1}^{n-1} p_i` at position `n - 1`, for `n = 1..N`.
    pub error_sums: Vec<Q>,
}

impl RationalOrbit {
    /// Largest componentwise relative deviation of `values` from the exact
    /// orbit; components that are exactly zero contribute their absolute value.
    pub fn max_relative_deviation(&self, values: &[C64]) -> f64 {
        self.a
            .iter()
            .zip(values)
            .flat_map(|(e, f)| [(&e.re, f.re), (&e.im, f.im)])
            .map(|(e, f)| {
                if e.is_zero() {
                    return f.abs();
                }
                let diff = (q_from_f64(f).unwrap_or_else(|_| e.clone()) - e).abs();
                let rel = diff / e.abs();
                if f.is_finite() {
                    rel.to_f64().unwrap_or(f64::INFINITY)
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Exact pseudo-orbit with constant residual `eps`.
pub fn exact_propagate(sys: &RationalSystem, a1: &CQ, eps: &Q, horizon: usize) -> Result<RationalOrbit> {
    if horizon == 0 {
        return invalid("horizon must be at least 1");
    }
    let r = vec![CQ::new(eps.clone(), Q::zero()); horizon - 1];
    exact_propagate_with_residuals(sys, a1, &r)
}

/// Exact pseudo-orbit `a_{n+1} = c(n) a_n + r_n`.
pub fn exact_propagate_with_residuals(sys: &RationalSystem, a1: &CQ, residuals: &[CQ]) -> Result<RationalOrbit> {
    let len = residuals.len() + 1;
    let mut a = Vec::with_capacity(len);
    let mut products = Vec::with_capacity(len);
    let mut error_sums = Vec::with_capacity(len);
    a.push(a1.clone());
    let mut prod = Q::one();
    let mut sum = Q::zero();
    for n in 1..=len {
        let c = sys.coefficient(n);
        if c.is_zero() {
            return invalid(format!("coefficient c({n}) is zero"));
        }
        error_sums.push(sum.clone());
        sum = sum * c.abs() + Q::one();
        prod *= c.abs();
        products.push(prod.clone());
        if n < len {
            let next = scale(&a[n - 1], &c) + &residuals[n - 1];
            a.push(next);
        }
    }
    Ok(RationalOrbit {
        a,
        residuals: residuals.to_vec(),
        products,
        error_sums,
    })
}

/// Exact true orbit `b_{n+1} = c(n) b_n`.
pub fn exact_orbit(sys: &RationalSystem, b1: &CQ, len: usize) -> Vec<CQ> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    out.push(b1.clone());
    for n in 1..len {
        let next = scale(&out[n - 1], &sys.coefficient(n));
        out.push(next);
    }
    out
}

/// Exact right-hand side of the telescoping identity at index `n`.
pub fn exact_telescope(sys: &RationalSystem, orbit: &RationalOrbit, b1: &CQ, n: usize) -> Result<CQ> {
    if n == 0 || n > orbit.a.len() {
        return invalid(format!("n must lie in 1..={}", orbit.a.len()));
    }
    let mut prod = Q::one();
    let mut acc = CQ::new(Q::zero(), Q::zero());
    for j in 1..n {
        let c = sys.coefficient(j);
        prod *= &c;
        acc = scale(&acc, &c) + &orbit.residuals[j - 1];
    }
    Ok(scale(&(b1 - &orbit.a[0]), &prod) - acc)
}
