//! Time-indexed map families `z_{n+1} = F(n, z_n)` and pseudo-orbit generation.
//!
//! Indices follow the mathematical convention: `n` starts at 1, and orbit
//! vectors store `a_n` at position `n - 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type C64 = Complex64;

/// Whether `p_n` bounds `|F(n,u) - F(n,v)| / |u - v|` from above or below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    ContractingBound,
    ExpandingBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    ComplexPlane,
    RealLine,
}

/// The built-in map families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `F(n, z) = c(n) z` with `c(n) = coeffs[(n - 1) mod len]`.
    PeriodicLinear { coeffs: Vec<f64> },
    /// `c(n) = odd_scale * n` for odd `n`, `1 / (even_scale * n)` for even `n`.
    IndexScaledLinear { odd_scale: f64, even_scale: f64 },
    /// `c(n) = 2^(n + odd_shift)` for odd `n`, `2^-(n + even_shift)` for even `n`.
    PowerTwoParity { odd_shift: i32, even_shift: i32 },
    /// `F(n, x) = slope * x + sin(x / n) / n` on the real line.
    AffineSinusoid { slope: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::PeriodicLinear { .. } => "periodic_linear",
            Family::IndexScaledLinear { .. } => "index_scaled_linear",
            Family::PowerTwoParity { .. } => "power_two_parity",
            Family::AffineSinusoid { .. } => "affine_sinusoid",
        }
    }

    pub fn default_rate_kind(&self) -> RateKind {
        match self {
            Family::PeriodicLinear { .. } | Family::PowerTwoParity { .. } => {
                RateKind::ContractingBound
            }
            Family::IndexScaledLinear { .. } | Family::AffineSinusoid { .. } => {
                RateKind::ExpandingBound
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Family::PeriodicLinear { coeffs } => {
                if coeffs.is_empty() {
                    return invalid("coeffs: at least one coefficient is required");
                }
                for (i, c) in coeffs.iter().enumerate() {
                    if !c.is_finite() {
                        return invalid(format!("coeffs[{i}]: coefficient must be finite"));
                    }
                    if *c == 0.0 {
                        return invalid(format!("coeffs[{i}]: growth rate must be positive"));
                    }
                }
            }
            Family::IndexScaledLinear {
                odd_scale,
                even_scale,
            } => {
                for (name, v) in [("odd_scale", odd_scale), ("even_scale", even_scale)] {
                    if !v.is_finite() {
                        return invalid(format!("{name}: must be finite"));
                    }
                    if *v == 0.0 {
                        return invalid(format!("{name}: growth rate must be positive"));
                    }
                }
            }
            Family::PowerTwoParity { .. } => {}
            Family::AffineSinusoid { slope } => {
                if !slope.is_finite() {
                    return invalid("slope: must be finite");
                }
                // p_1 = slope - 1
                if *slope <= 1.0 {
                    return invalid("slope: growth rate must be positive (slope > 1)");
                }
            }
        }
        Ok(())
    }
}

/// A validated map family together with the meaning of its growth rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSystem {
    family: Family,
    rate_kind: RateKind,
}

impl MapSystem {
    pub fn new(family: Family, rate_kind: RateKind) -> Result<Self> {
        family.validate()?;
        Ok(Self { family, rate_kind })
    }

    pub fn with_default_rate_kind(family: Family) -> Result<Self> {
        let kind = family.default_rate_kind();
        Self::new(family, kind)
    }

    /// `2z` on odd steps, `z/3` on even steps.
    pub fn alternating_contraction() -> Self {
        Self::new(
            Family::PeriodicLinear {
                coeffs: vec![2.0, 1.0 / 3.0],
            },
            RateKind::ContractingBound,
        )
        .expect("valid built-in")
    }

    /// `3n z` on odd steps, `z/(2n)` on even steps.
    pub fn index_scaled_expansion() -> Self {
        Self::new(
            Family::IndexScaledLinear {
                odd_scale: 3.0,
                even_scale: 2.0,
            },
            RateKind::ExpandingBound,
        )
        .expect("valid built-in")
    }

    /// `2^n z` on odd steps, `z / 2^(n+3)` on even steps.
    pub fn power_two_oscillation() -> Self {
        Self::new(
            Family::PowerTwoParity {
                odd_shift: 0,
                even_shift: 3,
            },
            RateKind::ContractingBound,
        )
        .expect("valid built-in")
    }

    /// `3x + sin(x/n)/n`.
    pub fn sinusoidal_expansion() -> Self {
        Self::new(Family::AffineSinusoid { slope: 3.0 }, RateKind::ExpandingBound)
            .expect("valid built-in")
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn rate_kind(&self) -> RateKind {
        self.rate_kind
    }

    pub fn domain_kind(&self) -> DomainKind {
        match self.family {
            Family::AffineSinusoid { .. } => DomainKind::RealLine,
            _ => DomainKind::ComplexPlane,
        }
    }

    /// Linear families have point-independent quotients with `|q_n| = p_n`,
    /// so their rates are simultaneously contracting and expanding.
    pub fn is_linear(&self) -> bool {
        !matches!(self.family, Family::AffineSinusoid { .. })
    }

    /// True when `p_n` may be used as a Lipschitz upper bound.
    pub fn admits_contracting(&self) -> bool {
        self.is_linear() || self.rate_kind == RateKind::ContractingBound
    }

    /// True when `p_n` may be used as an expansion lower bound.
    pub fn admits_expanding(&self) -> bool {
        self.is_linear() || self.rate_kind == RateKind::ExpandingBound
    }

    /// The multiplier `c(n)` of a linear family.
    pub fn coefficient(&self, n: usize) -> Option<f64> {
        debug_assert!(n >= 1);
        match &self.family {
            Family::PeriodicLinear { coeffs } => Some(coeffs[(n - 1) % coeffs.len()]),
            Family::IndexScaledLinear {
                odd_scale,
                even_scale,
            } => {
                let nf = n as f64;
                if n % 2 == 1 {
                    Some(odd_scale * nf)
                } else {
                    Some(1.0 / (even_scale * nf))
                }
            }
            Family::PowerTwoParity {
                odd_shift,
                even_shift,
            } => Some(pow2(power_two_exponent(n, *odd_shift, *even_shift))),
            Family::AffineSinusoid { .. } => None,
        }
    }

    /// `F(n, z)`.
    pub fn eval(&self, n: usize, z: C64) -> C64 {
        debug_assert!(n >= 1);
        match &self.family {
            Family::AffineSinusoid { slope } => {
                let nf = n as f64;
                if z.im == 0.0 {
                    C64::new(slope * z.re + (z.re / nf).sin() / nf, 0.0)
                } else {
                    z * slope + (z / nf).sin() / nf
                }
            }
            _ => {
                let c = self.coefficient(n).expect("linear family");
                C64::new(c * z.re, c * z.im)
            }
        }
    }

    /// Difference quotient `(F(n,u) - F(n,v)) / (u - v)`, or the derivative at
    /// `u` when `u == v`.
    pub fn quotient(&self, n: usize, u: C64, v: C64) -> C64 {
        debug_assert!(n >= 1);
        match &self.family {
            Family::AffineSinusoid { slope } => {
                // sin A - sin B = 2 cos((A+B)/2) sin((A-B)/2), which stays
                // accurate as u -> v and is symmetric in (u, v).
                let nf = n as f64;
                let inv_n2 = 1.0 / (nf * nf);
                if u.im == 0.0 && v.im == 0.0 {
                    let mid = (u.re + v.re) / (2.0 * nf);
                    let half = ((u.re - v.re) / (2.0 * nf)).abs();
                    C64::new(slope + inv_n2 * mid.cos() * sinc(half), 0.0)
                } else {
                    let mid = (u + v) / (2.0 * nf);
                    let half = (u - v) / (2.0 * nf);
                    let s = if half == C64::new(0.0, 0.0) {
                        C64::new(1.0, 0.0)
                    } else {
                        half.sin() / half
                    };
                    mid.cos() * s * inv_n2 + slope
                }
            }
            _ => C64::new(self.coefficient(n).expect("linear family"), 0.0),
        }
    }

    /// Growth rate `p_n`: `|c(n)|` for linear families and the expansion bound
    /// `slope - 1/n^2` for the sinusoidal family.
    pub fn growth_rate(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        match &self.family {
            Family::AffineSinusoid { slope } => {
                let nf = n as f64;
                slope - 1.0 / (nf * nf)
            }
            _ => self.coefficient(n).expect("linear family").abs(),
        }
    }

    /// `ln p_n`, computed without forming `p_n` where it would overflow.
    pub fn ln_growth_rate(&self, n: usize) -> f64 {
        match &self.family {
            Family::PowerTwoParity {
                odd_shift,
                even_shift,
            } => power_two_exponent(n, *odd_shift, *even_shift) as f64 * std::f64::consts::LN_2,
            _ => self.growth_rate(n).ln(),
        }
    }

    pub fn growth_rates(&self, count: usize) -> Vec<f64> {
        (1..=count).map(|n| self.growth_rate(n)).collect()
    }

    pub fn ln_growth_rates(&self, count: usize) -> Vec<f64> {
        (1..=count).map(|n| self.ln_growth_rate(n)).collect()
    }

    /// Upper bound on `|d q_n(u, v) / du|`.
    pub fn quotient_lipschitz(&self, n: usize) -> f64 {
        match &self.family {
            Family::AffineSinusoid { .. } => {
                let nf = n as f64;
                0.5 / (nf * nf * nf)
            }
            _ => 0.0,
        }
    }

    /// Exact orbit `b_1 = start`, `b_{n+1} = F(n, b_n)` of length `len`.
    /// Non-finite values are propagated, not trimmed.
    pub fn orbit(&self, start: C64, len: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        out.push(start);
        for n in 1..len {
            let next = self.eval(n, out[n - 1]);
            out.push(next);
        }
        out
    }
}

fn power_two_exponent(n: usize, odd_shift: i32, even_shift: i32) -> i64 {
    let n = n as i64;
    if n % 2 == 1 {
        n + odd_shift as i64
    } else {
        -(n + even_shift as i64)
    }
}

fn pow2(e: i64) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e < -1074 {
        0.0
    } else {
        2f64.powi(e as i32)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// How the residuals `r_n = a_{n+1} - F(n, a_n)` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResidualPolicy {
    /// `r_n = eps`.
    ConstantReal,
    /// `r_n = eps * e^{i theta}`.
    ConstantPhase { theta: f64 },
    /// `r_n = eps * e^{2 pi i frac(n phi)}` with `phi = (sqrt 5 - 1) / 2`.
    LowDiscrepancyPhase,
    Zero,
}

impl ResidualPolicy {
    pub fn residual(&self, n: usize, eps: f64) -> C64 {
        match *self {
            ResidualPolicy::ConstantReal => C64::new(eps, 0.0),
            ResidualPolicy::ConstantPhase { theta } => C64::from_polar(eps, theta),
            ResidualPolicy::LowDiscrepancyPhase => {
                let phi = (5f64.sqrt() - 1.0) / 2.0;
                let frac = (n as f64 * phi).fract();
                C64::from_polar(eps, 2.0 * std::f64::consts::PI * frac)
            }
            ResidualPolicy::Zero => C64::new(0.0, 0.0),
        }
    }

    /// True when every residual lies on the real axis.
    pub fn is_real(&self) -> bool {
        match *self {
            ResidualPolicy::ConstantReal | ResidualPolicy::Zero => true,
            ResidualPolicy::ConstantPhase { theta } => theta.sin() == 0.0,
            ResidualPolicy::LowDiscrepancyPhase => false,
        }
    }
}

/// An approximate orbit `a_{n+1} = F(n, a_n) + r_n` with `|r_n| <= epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbit {
    /// `a_1..a_len`.
    pub a: Vec<C64>,
    /// `r_1..r_{len-1}`.
    pub r: Vec<C64>,
    pub epsilon: f64,
    /// Requested horizon; `a.len()` is smaller when `truncated`.
    pub horizon: usize,
    /// `None` when the residuals were supplied explicitly.
    pub policy: Option<ResidualPolicy>,
    /// Set when propagation left the double range before `horizon`.
    pub truncated: bool,
}

impl PseudoOrbit {
    /// Propagates `a_{n+1} = F(n, a_n) + r_n` with residuals drawn from `policy`.
    pub fn generate(
        sys: &MapSystem,
        a1: C64,
        epsilon: f64,
        policy: ResidualPolicy,
        horizon: usize,
    ) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return invalid("epsilon must be a finite nonnegative number");
        }
        if sys.domain_kind() == DomainKind::RealLine && !policy.is_real() {
            return invalid("residual policy must be real-valued for a real-line system");
        }
        let residuals = (1..horizon).map(|n| policy.residual(n, epsilon));
        let mut orbit = Self::propagate(sys, a1, residuals, horizon)?;
        orbit.epsilon = epsilon;
        orbit.policy = Some(policy);
        Ok(orbit)
    }

    /// Builds a pseudo-orbit from an explicit residual list `r_1..r_{N-1}`;
    /// `epsilon` becomes `max |r_n|`.
    pub fn from_residuals(sys: &MapSystem, a1: C64, residuals: &[C64]) -> Result<Self> {
        if sys.domain_kind() == DomainKind::RealLine && residuals.iter().any(|r| r.im != 0.0) {
            return invalid("residuals must be real for a real-line system");
        }
        if residuals.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
            return invalid("residuals must be finite");
        }
        let horizon = residuals.len() + 1;
        let mut orbit = Self::propagate(sys, a1, residuals.iter().copied(), horizon)?;
        orbit.epsilon = residuals.iter().map(|r| r.norm()).fold(0.0, f64::max);
        Ok(orbit)
    }

    fn propagate(
        sys: &MapSystem,
        a1: C64,
        residuals: impl Iterator<Item = C64>,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return invalid("horizon must be at least 1");
        }
        if !a1.re.is_finite() || !a1.im.is_finite() {
            return invalid("a1 must be finite");
        }
        if sys.domain_kind() == DomainKind::RealLine && a1.im != 0.0 {
            return invalid("a1 must be real for a real-line system");
        }
        let mut a = Vec::with_capacity(horizon);
        let mut r = Vec::with_capacity(horizon.saturating_sub(1));
        a.push(a1);
        let mut truncated = false;
        for (n, rn) in (1..horizon).zip(residuals) {
            let next = sys.eval(n, a[n - 1]) + rn;
            if !next.re.is_finite() || !next.im.is_finite() {
                truncated = true;
                break;
            }
            r.push(rn);
            a.push(next);
        }
        Ok(Self {
            a,
            r,
            epsilon: 0.0,
            horizon,
            policy: None,
            truncated,
        })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `a_n` (1-based).
    pub fn a_at(&self, n: usize) -> C64 {
        self.a[n - 1]
    }

    /// `r_n` (1-based).
    pub fn r_at(&self, n: usize) -> C64 {
        self.r[n - 1]
    }
}
