//! Divergence witnesses for systems whose scaled products are (pre)periodic
//! with at least two distinct values below one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::growth::Classification;
use crate::numeric::{ln_add_exp, LogScalar, LOG_DOMAIN_THRESHOLD};
use crate::systems::{MapSystem, PseudoOrbit, ResidualPolicy, C64};

/// `S_n = sum_{j=1}^{n} prod_{i=j+1}^{n} p_i` via `S <- S p + 1`.
pub fn partial_sum_s(rates: &[f64], n: usize) -> Result<f64> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if rates.len() < n {
        return invalid(format!("need {n} rates, got {}", rates.len()));
    }
    // the factor p_1 multiplies an empty sum
    Ok(rates[1..n].iter().fold(1.0, |s, &p| s * p + 1.0))
}

/// `ln S_n` from `ln p_1..ln p_n`, for sums beyond the double range.
pub fn ln_partial_sum_s(ln_rates: &[f64], n: usize) -> Result<f64> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if ln_rates.len() < n {
        return invalid(format!("need {n} log rates, got {}", ln_rates.len()));
    }
    Ok(ln_rates[1..n].iter().fold(0.0, |s, &lp| ln_add_exp(s + lp, 0.0)))
}

/// `(K_q/K_p)^{km} K_q^q / (C_p K_p^{p+m})`, evaluated in the log domain.
pub fn divergence_lower_bound(
    k_p: f64,
    k_q: f64,
    p_idx: usize,
    q_idx: usize,
    m: usize,
    c_p: f64,
    k: usize,
) -> Result<LogScalar> {
    if !(k_q > k_p) {
        return Err(Error::NoDivergence(format!(
            "need K_q > K_p, got K_p = {k_p}, K_q = {k_q}"
        )));
    }
    if !(k_p >= 1.0) || !(c_p > 0.0) || m == 0 {
        return invalid("need K_p >= 1, C_p > 0 and m >= 1");
    }
    let (lp, lq) = (k_p.ln(), k_q.ln());
    let km = (k * m) as f64;
    Ok(LogScalar::from_ln(
        km * (lq - lp) + q_idx as f64 * lq - c_p.ln() - (p_idx + m) as f64 * lp,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSample {
    pub k: usize,
    /// `n = k m + p_idx`; the error is measured at index `n + 1`.
    pub n: usize,
    /// `eps` times the analytic lower bound.
    pub lower_bound: f64,
    /// `eps S_n`.
    pub partial_sum: f64,
    /// `|b_{n+1} - a_{n+1}|` for `b_1 = a_1`.
    pub observed_error: f64,
    pub log10_lower_bound: f64,
    pub log10_observed: f64,
    /// Set when the values above were taken from the log-domain evaluation.
    pub log_domain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceWitness {
    pub m: usize,
    pub p_idx: usize,
    pub q_idx: usize,
    #[serde(rename = "K_p")]
    pub k_p: f64,
    #[serde(rename = "K_q")]
    pub k_q: f64,
    #[serde(rename = "C_p")]
    pub c_p: f64,
    pub epsilon: f64,
    pub horizon: usize,
    pub samples: Vec<WitnessSample>,
}

struct Pair {
    m: usize,
    p_idx: usize,
    q_idx: usize,
    k_p: f64,
    k_q: f64,
    c_p: f64,
}

fn witness_pair(cls: &Classification) -> Result<Pair> {
    let Classification::PeriodicBelowOne(ps) = cls else {
        return Err(Error::ClassificationMismatch {
            found: cls.kind_name().into(),
            reason: "no witness".into(),
        });
    };
    // largest value 1/K_p against the smallest 1/K_q maximizes K_q / K_p
    let idx_min = (0..ps.period)
        .min_by(|&i, &j| ps.rates[i].total_cmp(&ps.rates[j]))
        .unwrap_or(0);
    let idx_max = (0..ps.period)
        .max_by(|&i, &j| ps.rates[i].total_cmp(&ps.rates[j]))
        .unwrap_or(0);
    if !(ps.rates[idx_max] > ps.rates[idx_min]) {
        return Err(Error::NoDivergence("all periodic values coincide".into()));
    }
    Ok(Pair {
        m: ps.period,
        p_idx: idx_min + 1,
        q_idx: idx_max + 1,
        k_p: ps.rates[idx_min],
        k_q: ps.rates[idx_max],
        c_p: ps.constants[idx_min],
    })
}

/// Largest horizon whose lower bounds stay below the log-domain threshold.
pub fn default_witness_horizon(cls: &Classification, eps: f64) -> Result<usize> {
    const CAP: usize = 100_000;
    let pair = witness_pair(cls)?;
    if eps == 0.0 {
        return Ok(CAP);
    }
    let limit = LOG_DOMAIN_THRESHOLD.ln() - eps.ln();
    let mut k = 0;
    loop {
        let lb = divergence_lower_bound(pair.k_p, pair.k_q, pair.p_idx, pair.q_idx, pair.m, pair.c_p, k + 1)?;
        let n_next = (k + 1) * pair.m + pair.p_idx + 1;
        if lb.ln >= limit || n_next > CAP {
            return Ok(k * pair.m + pair.p_idx + 1);
        }
        k += 1;
    }
}

/// Runs the pseudo-orbit `a_1 = 1`, `r_n = eps` against the true orbit from
/// the same start and samples the error along `n = k m + p`.
pub fn witness_divergence(
    sys: &MapSystem,
    eps: f64,
    horizon: usize,
    cls: &Classification,
) -> Result<DivergenceWitness> {
    let pair = witness_pair(cls)?;
    if !(eps >= 0.0) || !eps.is_finite() {
        return invalid("epsilon must be a finite nonnegative number");
    }
    if horizon < pair.p_idx + 1 {
        return invalid(format!("horizon must be at least {}", pair.p_idx + 1));
    }
    let a1 = C64::new(1.0, 0.0);
    let pseudo = PseudoOrbit::generate(sys, a1, eps, ResidualPolicy::ConstantReal, horizon)?;
    let b = sys.orbit(a1, pseudo.len());
    let positive_linear = (1..horizon).all(|n| sys.coefficient(n).is_some_and(|c| c > 0.0));
    let ln_rates = sys.ln_growth_rates(horizon);

    let mut samples = Vec::new();
    let mut ln_s = 0.0;
    let mut s_upto = 1;
    let mut k = 0;
    loop {
        let n = k * pair.m + pair.p_idx;
        if n + 1 > horizon {
            break;
        }
        while s_upto < n {
            ln_s = ln_add_exp(ln_s + ln_rates[s_upto], 0.0);
            s_upto += 1;
        }
        let lb = divergence_lower_bound(pair.k_p, pair.k_q, pair.p_idx, pair.q_idx, pair.m, pair.c_p, k)?;
        let ln_eps = eps.ln();
        let scaled_lb = LogScalar::from_ln(lb.ln + ln_eps);
        let scaled_s = LogScalar::from_ln(ln_s + ln_eps);
        let direct = (n < b.len()).then(|| (b[n] - pseudo.a[n]).norm());
        let (observed, log_domain) = match direct {
            Some(v) if v.is_finite() && v <= LOG_DOMAIN_THRESHOLD => (v, false),
            _ if positive_linear => (scaled_s.value(), true),
            _ => (f64::INFINITY, true),
        };
        let log10_observed = if log_domain && positive_linear {
            scaled_s.log10()
        } else {
            observed.log10()
        };
        samples.push(WitnessSample {
            k,
            n,
            lower_bound: if eps == 0.0 { 0.0 } else { scaled_lb.value() },
            partial_sum: if eps == 0.0 { 0.0 } else { scaled_s.value() },
            observed_error: observed,
            log10_lower_bound: scaled_lb.log10(),
            log10_observed,
            log_domain: log_domain || scaled_lb.is_huge(),
        });
        k += 1;
    }
    Ok(DivergenceWitness {
        m: pair.m,
        p_idx: pair.p_idx,
        q_idx: pair.q_idx,
        k_p: pair.k_p,
        k_q: pair.k_q,
        c_p: pair.c_p,
        epsilon: eps,
        horizon,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::{classify, ClassifyOptions, GrowthProfile};
    use approx::assert_relative_eq;

    fn power_two_oscillation_class() -> Classification {
        let sys = MapSystem::power_two_oscillation();
        classify(&GrowthProfile::for_system(&sys, 400), &sys, &ClassifyOptions::default()).unwrap()
    }

    #[test]
    fn partial_sum_examples() {
        let rates = MapSystem::alternating_contraction().growth_rates(10);
        assert_relative_eq!(partial_sum_s(&rates, 4).unwrap(), 20.0 / 9.0, max_relative = 1e-15);
        assert_eq!(partial_sum_s(&rates, 1).unwrap(), 1.0);
        let flat = vec![0.25; 400];
        assert_relative_eq!(partial_sum_s(&flat, 400).unwrap(), 4.0 / 3.0, max_relative = 1e-15);
        let lr: Vec<f64> = rates.iter().map(|p| p.ln()).collect();
        for n in 1..=10 {
            assert_relative_eq!(
                ln_partial_sum_s(&lr, n).unwrap(),
                partial_sum_s(&rates, n).unwrap().ln(),
                max_relative = 1e-13,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn lower_bound_examples() {
        let lb = |k| divergence_lower_bound(2.0, 4.0, 1, 2, 2, 4.0, k).unwrap().value();
        assert_relative_eq!(lb(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(lb(10), 524288.0, max_relative = 1e-13);
        assert_relative_eq!(lb(0), 0.5, max_relative = 1e-15);
        assert!(matches!(
            divergence_lower_bound(4.0, 2.0, 1, 2, 2, 4.0, 3),
            Err(Error::NoDivergence(_))
        ));
        let far = divergence_lower_bound(2.0, 4.0, 1, 2, 2, 4.0, 600).unwrap();
        assert!(far.is_huge());
        assert!(far.log10() > 300.0);
    }

    #[test]
    fn witness_power_two_oscillation() {
        let cls = power_two_oscillation_class();
        let w = witness_divergence(&MapSystem::power_two_oscillation(), 1e-3, 41, &cls).unwrap();
        assert_eq!((w.m, w.p_idx, w.q_idx), (2, 1, 2));
        let s = w.samples.iter().find(|s| s.n == 21).unwrap();
        assert_eq!(s.k, 10);
        assert!(s.observed_error >= 1e-3 * 524288.0 * (1.0 - 1e-9));
        for s in &w.samples {
            assert!(s.partial_sum >= s.lower_bound * (1.0 - 1e-9));
            assert_relative_eq!(s.observed_error, s.partial_sum, max_relative = 1e-9);
        }
    }

    #[test]
    fn witness_zero_epsilon() {
        let cls = power_two_oscillation_class();
        let w = witness_divergence(&MapSystem::power_two_oscillation(), 0.0, 41, &cls).unwrap();
        assert!(w.samples.iter().all(|s| s.observed_error == 0.0));
    }

    #[test]
    fn witness_goes_log_domain_past_overflow() {
        let cls = power_two_oscillation_class();
        let w = witness_divergence(&MapSystem::power_two_oscillation(), 1e-3, 2100, &cls).unwrap();
        let last = w.samples.last().unwrap();
        assert!(last.log_domain);
        assert!(last.log10_observed > 300.0);
        assert!(last.log10_observed >= last.log10_lower_bound);
        let h = default_witness_horizon(&cls, 1e-3).unwrap();
        assert!(h > 900 && h < 1100, "{h}");
    }

    #[test]
    fn witness_requires_periodic_class() {
        let err = witness_divergence(
            &MapSystem::alternating_contraction(),
            1e-3,
            50,
            &Classification::ConvergentBelowOne { k: 1.5f64.sqrt() },
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "classification is ConvergentBelowOne, no witness");
    }
}
