//! True orbits that shadow a pseudo-orbit, and the explicit error bounds that
//! go with them.
//!
//! The contracting construction starts the true orbit at `a_1` and propagates
//! forward. The expanding construction solves the error recurrence
//! `d_{n+1} = q_n d_n - r_n` backwards from a far truncation point, which is
//! the only numerically stable direction when `|q_n|` grows.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::systems::{MapSystem, PseudoOrbit, C64};

/// `p^{n-1} gap + (1 - p^{n-1}) / (1 - p) eps` for a uniform rate `p < 1`.
pub fn geometric_error_bound(p: f64, n: usize, eps: f64, gap: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfHypothesis(format!(
            "uniform contraction rate must lie in (0, 1), got {p}"
        )));
    }
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if !(eps >= 0.0) || !(gap >= 0.0) {
        return invalid("eps and gap must be nonnegative");
    }
    let pw = p.powf((n - 1) as f64);
    Ok(pw * gap + (1.0 - pw) / (1.0 - p) * eps)
}

/// `(prod_{j<n} p_j) gap + S eps` with `S = sum_{j<n} prod_{i=j+1}^{n-1} p_i`.
///
/// `rates[0]` holds `p_1`.
pub fn product_error_bound(rates: &[f64], n: usize, eps: f64, gap: f64) -> Result<f64> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if rates.len() < n - 1 {
        return invalid(format!("need {} rates, got {}", n - 1, rates.len()));
    }
    let (prod, sum) = error_coefficients(&rates[..n - 1]);
    let gap_term = if gap == 0.0 { 0.0 } else { prod * gap };
    let eps_term = if eps == 0.0 { 0.0 } else { sum * eps };
    Ok(gap_term + eps_term)
}

/// Product and error-sum coefficient after the given steps, via `S <- S p + 1`.
fn error_coefficients(rates: &[f64]) -> (f64, f64) {
    let prod = rates.iter().product();
    // p_1 only ever multiplies the empty sum
    let sum = match rates {
        [] => 0.0,
        [_, rest @ ..] => rest.iter().fold(1.0, |s, &p| s * p + 1.0),
    };
    (prod, sum)
}

/// `M eps / (m (K - 1))`, the tail bound when `m <= t_n <= M`.
pub fn expanding_bound_bounded_t(m_low: f64, m_high: f64, k: f64, eps: f64) -> Result<f64> {
    if !(k > 1.0) {
        return Err(Error::OutOfHypothesis(format!("K must exceed 1, got {k}")));
    }
    if !(m_low > 0.0) || !(m_high >= m_low) {
        return invalid("need 0 < m_low <= M_high");
    }
    Ok(m_high * eps / (m_low * (k - 1.0)))
}

/// `eps [sum_{j=N}^{n*} prod_{i=N}^{j} 1/p_i + (prod_{i=N}^{n*} 1/p_i) 2 / ln K]`.
pub fn early_index_bound(rates: &[f64], start: usize, n_star: usize, k: f64, eps: f64) -> Result<f64> {
    if !(k > 1.0) {
        return Err(Error::OutOfHypothesis(format!("K must exceed 1, got {k}")));
    }
    if start == 0 || start >= n_star {
        return invalid("need 1 <= N < n_star");
    }
    if rates.len() < n_star {
        return invalid(format!("need {n_star} rates, got {}", rates.len()));
    }
    let mut prod = 1.0;
    let mut sum = 0.0;
    for &p in &rates[start - 1..n_star] {
        prod /= p;
        sum += prod;
    }
    Ok(eps * (sum + prod * 2.0 / k.ln()))
}

/// Right-hand side of the telescoping identity
/// `b_n - a_n = (prod q_j)(b_1 - a_1) - sum_j r_j prod_{i>j} q_i`, with
/// `q_j = q_j(b_j, a_j)` along the true orbit started at `b1`.
pub fn telescope_difference(sys: &MapSystem, pseudo: &PseudoOrbit, b1: C64, n: usize) -> Result<C64> {
    if n == 0 || n > pseudo.len() {
        return invalid(format!("n must lie in 1..={}", pseudo.len()));
    }
    let mut b = b1;
    let mut prod = C64::new(1.0, 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for j in 1..n {
        let q = sys.quotient(j, b, pseudo.a_at(j));
        prod *= q;
        acc = acc * q + pseudo.r_at(j);
        b = sys.eval(j, b);
        if !is_finite(prod) || !is_finite(acc) {
            return Err(Error::Overflow { n: j + 1 });
        }
    }
    Ok(prod * (b1 - pseudo.a_at(1)) - acc)
}

fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShadowMethod {
    ContractingDirect,
    ExpandingTailSeries,
}

impl ShadowMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ShadowMethod::ContractingDirect => "ContractingDirect",
            ShadowMethod::ExpandingTailSeries => "ExpandingTailSeries",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowMeta {
    /// Last residual index used by the tail series (`len - 1` for forward runs).
    pub truncation: usize,
    pub iterations: usize,
    /// `sup_n |b_{n+1} - F(n, b_n)| / max(1, sup_n |b_n|)`.
    pub residual_sup: f64,
    /// Finite-horizon bound implied by the growth rates alone.
    pub sound_bound: f64,
    /// Smallest `n0` with `|d_n| <= bound` for every `n0 <= n <= len`.
    pub bound_holds_from: Option<usize>,
    /// Set when the truncation hit its cap before the tail target was met.
    pub truncation_capped: bool,
    /// Analytic bound on the neglected part of the tail series.
    pub tail_bound: f64,
    /// Measured Lipschitz constant of the fixed-point map (0 for linear maps).
    pub contraction_modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowResult {
    pub b: Vec<C64>,
    /// `b_n - a_n`.
    pub d: Vec<C64>,
    /// The asymptotic bound `G(eps)` for the regime.
    pub bound: f64,
    pub method: ShadowMethod,
    pub sup_err: f64,
    pub meta: ShadowMeta,
}

impl ShadowResult {
    pub fn abs_errors(&self) -> Vec<f64> {
        self.d.iter().map(|d| d.norm()).collect()
    }
}

fn residual_sup(sys: &MapSystem, b: &[C64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let worst = (1..b.len())
        .map(|n| (b[n] - sys.eval(n, b[n - 1])).norm())
        .fold(0.0, f64::max);
    worst / scale
}

fn holds_from(abs: &[f64], bound: f64) -> Option<usize> {
    match abs.iter().rposition(|&e| e > bound) {
        None => Some(1),
        Some(i) if i + 1 < abs.len() => Some(i + 2),
        Some(_) => None,
    }
}

/// Forward construction `b_1 = a_1` for contracting systems, with asymptotic
/// bound `K eps / (K - 1)`.
///
/// The finite-horizon data is checked against the product bound with zero
/// initial gap; a measured error more than 5% above it means the rates do not
/// bound the map's Lipschitz constants.
pub fn shadow_contracting(sys: &MapSystem, pseudo: &PseudoOrbit, k: f64) -> Result<ShadowResult> {
    if !(k > 1.0) {
        return Err(Error::OutOfHypothesis(format!("K must exceed 1, got {k}")));
    }
    if !sys.admits_contracting() {
        return Err(Error::OutOfHypothesis(
            "growth rates are not Lipschitz upper bounds for this system".into(),
        ));
    }
    let len = pseudo.len();
    let eps = pseudo.epsilon;
    let b = sys.orbit(pseudo.a_at(1), len);
    let d: Vec<C64> = b.iter().zip(&pseudo.a).map(|(b, a)| b - a).collect();
    if let Some(i) = d.iter().position(|z| !is_finite(*z)) {
        return Err(Error::Overflow { n: i + 1 });
    }
    let abs: Vec<f64> = d.iter().map(|z| z.norm()).collect();
    let sup_err = abs.iter().copied().fold(0.0, f64::max);

    let mut coeff = 0.0f64;
    let mut sound = 0.0f64;
    for n in 1..len {
        coeff = if n == 1 { 1.0 } else { coeff * sys.growth_rate(n) + 1.0 };
        sound = sound.max(coeff);
    }
    let sound_bound = sound * eps;
    if sup_err > 1.05 * sound_bound {
        return Err(Error::HypothesisViolation {
            measured: sup_err,
            bound: sound_bound,
        });
    }
    let bound = k * eps / (k - 1.0);
    Ok(ShadowResult {
        meta: ShadowMeta {
            truncation: len - 1,
            iterations: 1,
            residual_sup: residual_sup(sys, &b),
            sound_bound,
            bound_holds_from: holds_from(&abs, bound),
            truncation_capped: false,
            tail_bound: 0.0,
            contraction_modulus: 0.0,
        },
        b,
        d,
        bound,
        method: ShadowMethod::ContractingDirect,
        sup_err,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpandingOptions {
    /// Fixed-point stopping threshold, relative to `max(1, |a_1|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Target for the neglected tail as a fraction of `2 eps / ln K`.
    pub tail_fraction: f64,
}

impl Default for ExpandingOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
            tail_fraction: 1e-3,
        }
    }
}

/// Extra indices allowed past the horizon when choosing the truncation.
pub const TRUNCATION_SLACK: usize = 200;

/// Accumulated expansion after which the bound multiplier is treated as fully
/// summed.
const LOG_TAIL_CUTOFF: f64 = 45.0;
const MAX_TAIL_TERMS: usize = 1_000_000;

/// `E_n = sum_{j>=n} prod_{i=n}^{j} 1/p_i` for `n = 1..=upto`, with `E` at
/// position `n - 1`. The recursion `E_n = (1 + E_{n+1}) / p_n` is started far
/// enough out that the omitted remainder is below `e^-45` relative.
fn bound_multipliers(sys: &MapSystem, upto: usize) -> Result<Vec<f64>> {
    let mut end = upto;
    let mut acc = 0.0;
    while acc < LOG_TAIL_CUTOFF {
        end += 1;
        if end - upto > MAX_TAIL_TERMS {
            return Err(Error::OutOfHypothesis(
                "growth rates do not accumulate expansion".into(),
            ));
        }
        acc += sys.ln_growth_rate(end);
    }
    let mut e = vec![0.0; upto];
    let mut next = 0.0;
    for n in (1..=end).rev() {
        next = (1.0 + next) / sys.growth_rate(n);
        if n <= upto {
            e[n - 1] = next;
        }
    }
    Ok(e)
}

/// Analytic bound on `max_{n<=horizon} |d_n - d_n^{(J)}|` from dropping the
/// terms `j > J` of the tail series: `eps max_n prod_{i=n}^{J} (1/p_i) E_{J+1}`.
pub fn expanding_tail_bound(sys: &MapSystem, horizon: usize, truncation: usize, eps: f64) -> Result<f64> {
    if horizon == 0 || truncation + 1 < horizon {
        return invalid("need truncation >= horizon - 1 >= 0");
    }
    let e = bound_multipliers(sys, truncation + 1)?;
    Ok(eps * tail_factor(sys, horizon, truncation, e[truncation]))
}

fn tail_factor(sys: &MapSystem, horizon: usize, truncation: usize, e_next: f64) -> f64 {
    // max over n <= horizon of sum_{i=n}^{J} ln p_i is attained at the
    // largest prefix-sum gap; accumulate from J downwards
    let mut suffix = 0.0;
    let mut best = f64::INFINITY;
    for i in (1..=truncation).rev() {
        suffix += sys.ln_growth_rate(i);
        if i <= horizon {
            best = best.min(suffix);
        }
    }
    if truncation < horizon {
        best = best.min(0.0);
    }
    (-best).exp() * e_next
}

/// Tail-series construction for expanding systems with asymptotic bound
/// `2 eps / ln K`.
///
/// For nonlinear maps the quotients depend on the unknown orbit, so the series
/// is iterated as a fixed point starting from `b = a`.
pub fn shadow_expanding(
    sys: &MapSystem,
    pseudo: &PseudoOrbit,
    k: f64,
    opts: &ExpandingOptions,
) -> Result<ShadowResult> {
    if !(k > 1.0) {
        return Err(Error::OutOfHypothesis(format!("K must exceed 1, got {k}")));
    }
    if !sys.admits_expanding() {
        return Err(Error::OutOfHypothesis(
            "growth rates are not expansion lower bounds for this system".into(),
        ));
    }
    if opts.max_iter == 0 || !(opts.tol > 0.0) || !(opts.tail_fraction > 0.0) {
        return invalid("shadow options need tol > 0, max_iter >= 1 and tail_fraction > 0");
    }
    let len = pseudo.len();
    let eps = pseudo.epsilon;
    let bound = 2.0 * eps / k.ln();

    // truncation and the bound multipliers
    let cap = len + TRUNCATION_SLACK;
    let e = bound_multipliers(sys, cap + 1)?;
    let target = opts.tail_fraction * 2.0 / k.ln();
    let (mut truncation, mut capped) = match pseudo.policy {
        None => (len - 1, false),
        Some(_) => {
            let mut j = len - 1;
            while j < cap && tail_factor(sys, len, j, e[j]) >= target {
                j += 1;
            }
            (j, tail_factor(sys, len, j, e[j]) >= target)
        }
    };

    // pseudo-orbit continued past the horizon with the same residual policy
    let mut a = pseudo.a.clone();
    let mut r = pseudo.r.clone();
    if let Some(policy) = pseudo.policy {
        while a.len() < truncation + 1 {
            let n = a.len();
            let rn = policy.residual(n, eps);
            let next = sys.eval(n, a[n - 1]) + rn;
            if !is_finite(next) {
                truncation = n - 1;
                capped = true;
                break;
            }
            r.push(rn);
            a.push(next);
        }
    }
    let tail_bound = eps * tail_factor(sys, len, truncation, e[truncation]);
    let sound_bound = eps * e[..len].iter().copied().fold(0.0, f64::max);

    let lip_sum: f64 = (1..=truncation)
        .map(|i| sys.quotient_lipschitz(i) / sys.growth_rate(i))
        .sum();
    let contraction_modulus = eps * e[..truncation.max(1)].iter().copied().fold(0.0, f64::max) * lip_sum;
    if contraction_modulus >= 1.0 {
        return Err(Error::EpsilonTooLarge(format!(
            "contraction modulus {contraction_modulus:e} is not below 1"
        )));
    }

    let tol = opts.tol * a[0].norm().max(1.0);
    let zero = C64::new(0.0, 0.0);
    let mut d = vec![zero; truncation + 1];
    let mut iterations = 0;
    if eps > 0.0 {
        let mut prev_change = f64::INFINITY;
        let mut rising = 0;
        loop {
            iterations += 1;
            let mut next = vec![zero; truncation + 1];
            for n in (1..=truncation).rev() {
                let q = sys.quotient(n, a[n - 1] + d[n - 1], a[n - 1]);
                if q.norm() < 1e-300 {
                    return Err(Error::DegenerateQuotient { n });
                }
                next[n - 1] = (next[n] + r[n - 1]) / q;
            }
            let change = next
                .iter()
                .zip(&d)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            d = next;
            if sys.is_linear() || change < tol {
                break;
            }
            rising = if change > prev_change { rising + 1 } else { 0 };
            if rising >= 3 {
                return Err(Error::EpsilonTooLarge(
                    "fixed-point change increased on three consecutive iterations".into(),
                ));
            }
            if iterations >= opts.max_iter {
                return Err(Error::NotConverged {
                    iterations,
                    last_change: change,
                });
            }
            prev_change = change;
        }
    } else {
        iterations = 1;
    }

    let b: Vec<C64> = (0..len).map(|i| a[i] + d[i]).collect();
    let d: Vec<C64> = b.iter().zip(&pseudo.a).map(|(b, a)| b - a).collect();
    let abs: Vec<f64> = d.iter().map(|z| z.norm()).collect();
    let sup_err = abs.iter().copied().fold(0.0, f64::max);
    Ok(ShadowResult {
        meta: ShadowMeta {
            truncation,
            iterations,
            residual_sup: residual_sup(sys, &b),
            sound_bound,
            bound_holds_from: holds_from(&abs, bound),
            truncation_capped: capped,
            tail_bound,
            contraction_modulus,
        },
        b,
        d,
        bound,
        method: ShadowMethod::ExpandingTailSeries,
        sup_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{Family, ResidualPolicy};
    use approx::assert_relative_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn doubling() -> MapSystem {
        MapSystem::with_default_rate_kind(Family::PeriodicLinear { coeffs: vec![2.0] }).unwrap()
    }

    fn halving() -> MapSystem {
        MapSystem::with_default_rate_kind(Family::PeriodicLinear { coeffs: vec![0.5] }).unwrap()
    }

    #[test]
    fn geometric_bound_examples() {
        assert_eq!(geometric_error_bound(0.5, 1, 0.1, 3.0).unwrap(), 3.0);
        assert_relative_eq!(geometric_error_bound(0.5, 2000, 0.1, 0.0).unwrap(), 0.2, max_relative = 1e-15);
        assert_relative_eq!(geometric_error_bound(1.0 / 3.0, 3, 0.09, 0.9).unwrap(), 0.22, max_relative = 1e-14);
        assert!(matches!(geometric_error_bound(1.0, 3, 0.1, 0.0), Err(Error::OutOfHypothesis(_))));
    }

    #[test]
    fn product_bound_examples() {
        let rates = MapSystem::alternating_contraction().growth_rates(10);
        assert_relative_eq!(product_error_bound(&rates, 5, 1.0, 0.0).unwrap(), 20.0 / 9.0, max_relative = 1e-15);
        assert_eq!(product_error_bound(&rates, 1, 0.3, 0.7).unwrap(), 0.7);
        let flat = vec![0.4; 20];
        for n in 1..20 {
            assert_relative_eq!(
                product_error_bound(&flat, n, 0.01, 0.0).unwrap(),
                geometric_error_bound(0.4, n, 0.01, 0.0).unwrap(),
                max_relative = 1e-14
            );
        }
        // an infinite product must not poison a zero gap
        assert!(product_error_bound(&[f64::INFINITY, 0.0], 3, 1.0, 0.0).unwrap().is_finite());
    }

    #[test]
    fn bounded_t_examples() {
        assert_relative_eq!(expanding_bound_bounded_t(1.0, 1.0, 2.0, 0.1).unwrap(), 0.1);
        assert_eq!(expanding_bound_bounded_t(1.0, 1.0, f64::INFINITY, 0.1).unwrap(), 0.0);
        assert_relative_eq!(expanding_bound_bounded_t(0.5, 2.0, 1.5, 1e-3).unwrap(), 8e-3, max_relative = 1e-14);
        assert!(expanding_bound_bounded_t(1.0, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn early_index_examples() {
        let v = early_index_bound(&[2.0; 5], 1, 3, 2.0, 1.0).unwrap();
        let expect = 0.875 + 0.125 * 2.0 / 2f64.ln();
        assert_relative_eq!(v, expect, max_relative = 1e-15);
        assert!((v - 1.2356).abs() < 1e-4);
        let huge = early_index_bound(&[1e9; 5], 2, 3, 3.0, 1.0).unwrap();
        assert!(huge < 1e-8);
        let rates = MapSystem::sinusoidal_expansion().growth_rates(10);
        let mut prod = 1.0;
        let mut direct = 0.0;
        for p in &rates {
            prod /= p;
            direct += prod;
        }
        let got = early_index_bound(&rates, 1, 10, 3.0, 1e-3).unwrap();
        assert_relative_eq!(got, 1e-3 * (direct + prod * 2.0 / 3f64.ln()), max_relative = 1e-14);
    }

    #[test]
    fn telescope_examples() {
        let sys = MapSystem::alternating_contraction();
        let eps = 1e-3;
        let o = PseudoOrbit::generate(&sys, c(1.0), eps, ResidualPolicy::ConstantReal, 5).unwrap();
        let t = telescope_difference(&sys, &o, c(1.0), 5).unwrap();
        assert_relative_eq!(t.re, -20.0 / 9.0 * eps, max_relative = 1e-13);

        let z = PseudoOrbit::generate(&sys, c(1.0), 0.0, ResidualPolicy::Zero, 8).unwrap();
        let t = telescope_difference(&sys, &z, c(1.5), 8).unwrap();
        let prod: f64 = sys.growth_rates(7).iter().product();
        assert_relative_eq!(t.re, prod * 0.5, max_relative = 1e-14);

        let dbl = doubling();
        let o = PseudoOrbit::generate(&dbl, c(0.3), eps, ResidualPolicy::ConstantReal, 25).unwrap();
        for n in 1..=25 {
            let t = telescope_difference(&dbl, &o, c(0.3 + eps), n).unwrap();
            assert_relative_eq!(t.re, eps, max_relative = 1e-6);
        }
    }

    #[test]
    fn contracting_geometric_case() {
        let sys = halving();
        let eps = 1e-3;
        let o = PseudoOrbit::generate(&sys, c(1.0), eps, ResidualPolicy::ConstantReal, 60).unwrap();
        let res = shadow_contracting(&sys, &o, 2.0).unwrap();
        assert_relative_eq!(res.bound, 2.0 * eps, max_relative = 1e-15);
        for (i, d) in res.d.iter().enumerate() {
            let expect = 2.0 * eps * (1.0 - 0.5f64.powi(i as i32));
            assert!((d.norm() - expect).abs() < 1e-15, "n = {}", i + 1);
        }
        assert!(res.sup_err <= res.bound * (1.0 + 1e-6));
        assert_eq!(res.meta.bound_holds_from, Some(1));
    }

    #[test]
    fn contracting_zero_epsilon() {
        let sys = MapSystem::alternating_contraction();
        let o = PseudoOrbit::generate(&sys, c(1.0), 0.0, ResidualPolicy::Zero, 50).unwrap();
        let res = shadow_contracting(&sys, &o, 1.5f64.sqrt()).unwrap();
        assert!(res.d.iter().all(|d| d.norm() == 0.0));
    }

    #[test]
    fn contracting_flags_wrong_rate_kind() {
        // slope 3 is an expansion; declaring it contracting must be caught
        let sys = MapSystem::new(Family::AffineSinusoid { slope: 1.2 }, crate::systems::RateKind::ContractingBound)
            .unwrap();
        let o = PseudoOrbit::generate(&sys, c(0.0), 1e-3, ResidualPolicy::ConstantReal, 200).unwrap();
        assert!(matches!(
            shadow_contracting(&sys, &o, 2.0),
            Err(Error::HypothesisViolation { .. })
        ));
        assert!(matches!(
            shadow_contracting(&MapSystem::sinusoidal_expansion(), &o, 2.0),
            Err(Error::OutOfHypothesis(_))
        ));
    }

    #[test]
    fn expanding_doubling_gives_constant_offset() {
        let sys = doubling();
        let eps = 1e-3;
        let o = PseudoOrbit::generate(&sys, c(0.25), eps, ResidualPolicy::ConstantReal, 30).unwrap();
        let res = shadow_expanding(&sys, &o, 2.0, &ExpandingOptions::default()).unwrap();
        assert_eq!(res.meta.iterations, 1);
        for d in &res.d {
            assert!((d.re - eps).abs() <= res.meta.tail_bound * (1.0 + 1e-9), "{d}");
        }
        assert!(res.meta.residual_sup <= 1e-12);
        assert!(res.meta.tail_bound < 1e-3 * res.bound);
    }

    #[test]
    fn expanding_zero_epsilon() {
        let sys = MapSystem::sinusoidal_expansion();
        let o = PseudoOrbit::generate(&sys, c(0.5), 0.0, ResidualPolicy::Zero, 30).unwrap();
        let res = shadow_expanding(&sys, &o, 3.0, &ExpandingOptions::default()).unwrap();
        assert_eq!(res.meta.iterations, 1);
        assert!(res.d.iter().all(|d| d.norm() == 0.0));
    }

    #[test]
    fn expanding_nonlinear_is_true_orbit() {
        let sys = MapSystem::sinusoidal_expansion();
        let o = PseudoOrbit::generate(&sys, c(1.0), 1e-3, ResidualPolicy::ConstantReal, 40).unwrap();
        let res = shadow_expanding(&sys, &o, 3.0, &ExpandingOptions::default()).unwrap();
        assert!(res.meta.iterations > 1 && res.meta.iterations <= 20);
        assert!(res.meta.residual_sup <= 1e-9, "{}", res.meta.residual_sup);
        assert!(res.b.iter().all(|z| z.im == 0.0));
        assert!(res.sup_err <= res.meta.sound_bound * (1.0 + 1e-9));
    }

    #[test]
    fn expanding_rejects_large_epsilon() {
        let sys = MapSystem::with_default_rate_kind(Family::AffineSinusoid { slope: 1.05 }).unwrap();
        let o = PseudoOrbit::generate(&sys, c(1.0), 50.0, ResidualPolicy::ConstantReal, 30).unwrap();
        assert!(matches!(
            shadow_expanding(&sys, &o, 1.05, &ExpandingOptions::default()),
            Err(Error::EpsilonTooLarge(_))
        ));
    }

    #[test]
    fn tail_bound_is_monotone_in_truncation() {
        let sys = MapSystem::index_scaled_expansion();
        let mut prev = f64::INFINITY;
        for j in 19..120 {
            let t = expanding_tail_bound(&sys, 20, j, 1e-3).unwrap();
            assert!(t <= prev * (1.0 + 1e-12), "J = {j}");
            prev = t;
        }
    }

    #[test]
    fn explicit_residuals_use_available_terms() {
        let sys = doubling();
        let r = vec![c(1e-3); 29];
        let o = PseudoOrbit::from_residuals(&sys, c(1.0), &r).unwrap();
        let res = shadow_expanding(&sys, &o, 2.0, &ExpandingOptions::default()).unwrap();
        assert_eq!(res.meta.truncation, 29);
        assert_eq!(res.d[29], c(0.0));
        assert!(res.meta.tail_bound > 0.0);
    }
}
