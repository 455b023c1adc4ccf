//! Geometric-average growth rates in the log domain and the decision
//! procedure that routes a system to the contracting, expanding or
//! periodic-instability regime.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::{fit_line, CompensatedSum};
use crate::systems::MapSystem;

/// Partial log-products `L_n = sum_{j<=n} ln p_j` and averages
/// `s_n = exp(L_n / n)`, for `n = 1..=horizon` (stored at `n - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub log_partial: Vec<f64>,
    pub avg: Vec<f64>,
    pub horizon: usize,
}

impl GrowthProfile {
    /// Profile of the first `horizon` growth rates of `sys`.
    pub fn for_system(sys: &MapSystem, horizon: usize) -> Self {
        build_profile_from_logs(&sys.ln_growth_rates(horizon))
            .expect("built-in systems have finite log rates")
    }

    /// `L_n`; `L_0 = 0`.
    pub fn log_partial_at(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.log_partial[n - 1]
        }
    }

    /// `L_n / n`.
    pub fn log_average(&self, n: usize) -> f64 {
        self.log_partial[n - 1] / n as f64
    }
}

pub fn build_profile(rates: &[f64]) -> Result<GrowthProfile> {
    for (i, &p) in rates.iter().enumerate() {
        if !(p > 0.0) || !p.is_finite() {
            return invalid(format!("rate p_{} = {p} must be positive and finite", i + 1));
        }
    }
    build_profile_from_logs(&rates.iter().map(|p| p.ln()).collect::<Vec<_>>())
}

/// Same as [`build_profile`] for callers that already hold `ln p_n`.
pub fn build_profile_from_logs(ln_rates: &[f64]) -> Result<GrowthProfile> {
    if ln_rates.is_empty() {
        return invalid("at least one rate is required");
    }
    let mut acc = CompensatedSum::new();
    let mut log_partial = Vec::with_capacity(ln_rates.len());
    let mut avg = Vec::with_capacity(ln_rates.len());
    for (i, &l) in ln_rates.iter().enumerate() {
        if !l.is_finite() {
            return invalid(format!("ln p_{} is not finite", i + 1));
        }
        acc.add(l);
        let total = acc.value();
        log_partial.push(total);
        avg.push((total / (i + 1) as f64).exp());
    }
    Ok(GrowthProfile {
        log_partial,
        avg,
        horizon: ln_rates.len(),
    })
}

/// (Pre)periodic scaled-product structure
/// `prod_{j=N+1}^{n} p_j = C_l * K_l^{-(n-N)}` for `n = k m + l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicStructure {
    pub period: usize,
    pub prefix: usize,
    /// `K_l` for `l = 1..=period`.
    pub rates: Vec<f64>,
    /// `C_l` for `l = 1..=period`, normalized so the smallest is 1.
    pub constants: Vec<f64>,
}

impl PeriodicStructure {
    /// The periodic average-growth values `1 / K_l`.
    pub fn values(&self) -> Vec<f64> {
        self.rates.iter().map(|k| 1.0 / k).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Classification {
    /// Average growth rate converges to `1/K < 1`.
    ConvergentBelowOne {
        #[serde(rename = "K")]
        k: f64,
    },
    /// Average growth rate converges to `K > 1`.
    ConvergentAboveOne {
        #[serde(rename = "K")]
        k: f64,
    },
    PeriodicBelowOne(PeriodicStructure),
    Undetermined,
}

impl Classification {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Classification::ConvergentBelowOne { .. } => "ConvergentBelowOne",
            Classification::ConvergentAboveOne { .. } => "ConvergentAboveOne",
            Classification::PeriodicBelowOne(_) => "PeriodicBelowOne",
            Classification::Undetermined => "Undetermined",
        }
    }

    pub fn k(&self) -> Option<f64> {
        match *self {
            Classification::ConvergentBelowOne { k } | Classification::ConvergentAboveOne { k } => {
                Some(k)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyOptions {
    /// Minimum number of terms in each tail segment.
    pub window: usize,
    pub tol: f64,
    pub max_period: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            window: 32,
            tol: 1e-4,
            max_period: 8,
        }
    }
}

/// Classifies the growth profile.
///
/// Periodic scaled products with distinct values are detected first. Otherwise
/// the exponential rate is the common slope of `L_n` against `n` over the tail
/// half, fitted with one intercept per residue class so bounded periodic
/// fluctuations of `ln t_n` cancel. The rate is accepted as converged when the
/// slopes fitted on the two tail quarters agree within `tol`.
pub fn classify(
    profile: &GrowthProfile,
    sys: &MapSystem,
    opts: &ClassifyOptions,
) -> Result<Classification> {
    let horizon = profile.horizon;
    if opts.window == 0 || horizon < 4 * opts.window {
        return invalid(format!(
            "profile horizon {horizon} must be at least 4 * window ({})",
            4 * opts.window
        ));
    }
    if !(opts.tol > 0.0) {
        return invalid("tol must be positive");
    }

    if let Some(ps) = detect_periodic_scaled(profile, opts.max_period, opts.tol) {
        let below = ps.values().iter().all(|&v| v < 1.0 - opts.tol);
        return Ok(if below && sys.admits_contracting() {
            Classification::PeriodicBelowOne(ps)
        } else {
            Classification::Undetermined
        });
    }

    let half = horizon / 2;
    let three_quarters = (3 * horizon) / 4;
    let m = best_offset_period(profile, half + 1, horizon, opts.max_period.max(1));
    let (Some(early), Some(late), Some(slope)) = (
        common_slope(profile, m, half + 1, three_quarters),
        common_slope(profile, m, three_quarters + 1, horizon),
        common_slope(profile, m, half + 1, horizon),
    ) else {
        return Ok(Classification::Undetermined);
    };
    if (early - late).abs() >= opts.tol {
        return Ok(Classification::Undetermined);
    }
    Ok(if slope < -opts.tol && sys.admits_contracting() {
        Classification::ConvergentBelowOne { k: (-slope).exp() }
    } else if slope > opts.tol && sys.admits_expanding() {
        Classification::ConvergentAboveOne { k: slope.exp() }
    } else {
        Classification::Undetermined
    })
}

/// Residue class of `n` for period `m`, in `1..=m`.
fn residue(n: usize, m: usize) -> usize {
    (n - 1) % m + 1
}

/// Least-squares slope of `L_n` on `n` over `lo..=hi` with one intercept per
/// residue class mod `m`.
fn common_slope(profile: &GrowthProfile, m: usize, lo: usize, hi: usize) -> Option<f64> {
    let (slope, _rss) = common_slope_fit(profile, m, lo, hi)?;
    Some(slope)
}

fn common_slope_fit(profile: &GrowthProfile, m: usize, lo: usize, hi: usize) -> Option<(f64, f64)> {
    let mut count = vec![0usize; m];
    let mut mx = vec![0.0; m];
    let mut my = vec![0.0; m];
    for n in lo..=hi {
        let l = residue(n, m) - 1;
        count[l] += 1;
        mx[l] += n as f64;
        my[l] += profile.log_partial_at(n);
    }
    if count.iter().any(|&c| c < 2) {
        return None;
    }
    for l in 0..m {
        mx[l] /= count[l] as f64;
        my[l] /= count[l] as f64;
    }
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for n in lo..=hi {
        let l = residue(n, m) - 1;
        let dx = n as f64 - mx[l];
        sxx += dx * dx;
        sxy += dx * (profile.log_partial_at(n) - my[l]);
    }
    let slope = sxy / sxx;
    let rss = (lo..=hi)
        .map(|n| {
            let l = residue(n, m) - 1;
            let e = profile.log_partial_at(n) - my[l] - slope * (n as f64 - mx[l]);
            e * e
        })
        .sum();
    Some((slope, rss))
}

/// Period of the class offsets that best explains the tail; a longer period
/// must reduce the residual by at least 10% to be preferred.
fn best_offset_period(profile: &GrowthProfile, lo: usize, hi: usize, max_period: usize) -> usize {
    let mut best = (1, f64::INFINITY);
    for m in 1..=max_period {
        if let Some((_, rss)) = common_slope_fit(profile, m, lo, hi) {
            if rss < 0.9 * best.1 || (best.1 == f64::INFINITY && rss.is_finite()) {
                best = (m, rss);
            }
        }
    }
    best.0
}

/// Per-class affine fit of `L_n` over `n > prefix`; returns `(slope, intercept,
/// max |residual|)` for each class.
fn class_lines(
    profile: &GrowthProfile,
    m: usize,
    lo: usize,
    hi: usize,
) -> Option<Vec<(f64, f64, f64)>> {
    let mut out = Vec::with_capacity(m);
    for l in 1..=m {
        let pts: Vec<(f64, f64)> = (lo..=hi)
            .filter(|&n| residue(n, m) == l)
            .map(|n| (n as f64, profile.log_partial_at(n)))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let (slope, icpt) = fit_line(&pts)?;
        let worst = pts
            .iter()
            .map(|&(x, y)| (y - icpt - slope * x).abs())
            .fold(0.0, f64::max);
        out.push((slope, icpt, worst));
    }
    Some(out)
}

/// Finds the smallest period `m` in `2..=max_period` such that `L_n` is affine
/// in `n` along every residue class (after a prefix of at most `horizon / 4`)
/// and at least two class slopes differ by more than `tol`.
///
/// Returns `K_l = exp(-slope_l)` and `C_l` from
/// `L_n - L_N = ln C_l - (n - N) ln K_l`, normalized to `min C_l = 1`.
pub fn detect_periodic_scaled(
    profile: &GrowthProfile,
    max_period: usize,
    tol: f64,
) -> Option<PeriodicStructure> {
    let horizon = profile.horizon;
    if max_period < 2 || horizon < 4 * max_period {
        return None;
    }
    let half = horizon / 2;
    for m in 2..=max_period {
        let Some(tail) = class_lines(profile, m, half + 1, horizon) else {
            continue;
        };
        if tail.iter().any(|&(_, _, w)| w >= tol) {
            continue;
        }
        // smallest prefix after which every point sits on its class line
        let prefix = (1..=horizon)
            .filter(|&n| {
                let (s, c, _) = tail[residue(n, m) - 1];
                (profile.log_partial_at(n) - c - s * n as f64).abs() >= tol
            })
            .max()
            .unwrap_or(0);
        if prefix > horizon / 4 {
            continue;
        }
        let Some(lines) = class_lines(profile, m, prefix + 1, horizon) else {
            continue;
        };
        if lines.iter().any(|&(_, _, w)| w >= tol) {
            continue;
        }
        let (lo, hi) = lines
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(s, _, _)| {
                (lo.min(s), hi.max(s))
            });
        if hi - lo <= tol {
            continue;
        }
        let l_prefix = profile.log_partial_at(prefix);
        let ln_c: Vec<f64> = lines
            .iter()
            .map(|&(s, c, _)| c - l_prefix + s * prefix as f64)
            .collect();
        let ln_min = ln_c.iter().copied().fold(f64::INFINITY, f64::min);
        return Some(PeriodicStructure {
            period: m,
            prefix,
            rates: lines.iter().map(|&(s, _, _)| (-s).exp()).collect(),
            constants: ln_c.iter().map(|c| (c - ln_min).exp()).collect(),
        });
    }
    None
}

/// `t_n K^n / sum_{j<n} t_j K^j`, evaluated as `t_n / sum_{j<n} t_j K^{j-n}`.
/// `t[0]` holds `t_1`.
pub fn ratio_check(t: &[f64], k: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return invalid("ratio_check needs n >= 2");
    }
    if t.len() < n {
        return invalid(format!("sequence has {} terms, need {n}", t.len()));
    }
    if !(k > 1.0) {
        return invalid("ratio_check needs K > 1");
    }
    let ln_k = k.ln();
    let mut denom = CompensatedSum::new();
    for j in 1..n {
        denom.add(t[j - 1] * ((j as f64 - n as f64) * ln_k).exp());
    }
    Ok(t[n - 1] / denom.value())
}

/// Bracket of the half-double-factorial ratio `(2k-1)!! / (2k)!!`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

/// `(1/sqrt(4k+1), prod_{j<=k} (2j-1)/(2j), 1/sqrt(3k+1))`.
pub fn double_factorial_envelope(k: usize) -> Result<Envelope> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let value = (1..=k).fold(1.0, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64);
    let kf = k as f64;
    Ok(Envelope {
        lower: 1.0 / (4.0 * kf + 1.0).sqrt(),
        value,
        upper: 1.0 / (3.0 * kf + 1.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn profile_of_alternating_contraction() {
        let p = build_profile(&[2.0, 1.0 / 3.0, 2.0, 1.0 / 3.0]).unwrap();
        assert_relative_eq!(p.avg[3], (2.0f64 / 3.0).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(p.log_partial[1], (2.0f64 / 3.0).ln(), max_relative = 1e-15);
    }

    #[test]
    fn constant_rates_give_constant_average() {
        let p = build_profile(&[0.5; 50]).unwrap();
        for s in &p.avg {
            assert_relative_eq!(*s, 0.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn index_scaled_expansion_average_at_20() {
        // brute-force product oracle: (3/2)^10 * 19!!/20!!
        let ratio: f64 = (1..=10).map(|j| (2 * j - 1) as f64 / (2 * j) as f64).product();
        let expect = (1.5f64.powi(10) * ratio).powf(1.0 / 20.0);
        let p = GrowthProfile::for_system(&MapSystem::index_scaled_expansion(), 20);
        assert_relative_eq!(p.avg[19], expect, max_relative = 1e-13);
        let env = double_factorial_envelope(10).unwrap();
        let lo = (1.5f64.powi(10) * env.lower).powf(1.0 / 20.0);
        let hi = (1.5f64.powi(10) * env.upper).powf(1.0 / 20.0);
        assert!(lo <= p.avg[19] && p.avg[19] <= hi);
    }

    #[test]
    fn nonpositive_rate_rejected() {
        assert!(build_profile(&[1.0, 0.0]).is_err());
        assert!(build_profile(&[1.0, -2.0]).is_err());
        assert!(build_profile(&[]).is_err());
    }

    #[test]
    fn classify_alternating_contraction() {
        let sys = MapSystem::alternating_contraction();
        let p = GrowthProfile::for_system(&sys, 1000);
        let c = classify(&p, &sys, &ClassifyOptions::default()).unwrap();
        match c {
            Classification::ConvergentBelowOne { k } => {
                assert!((k - 1.5f64.sqrt()).abs() < 1e-6, "K = {k}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn classify_power_two_oscillation_is_periodic() {
        let sys = MapSystem::power_two_oscillation();
        let p = GrowthProfile::for_system(&sys, 1000);
        let c = classify(&p, &sys, &ClassifyOptions::default()).unwrap();
        let Classification::PeriodicBelowOne(ps) = c else {
            panic!("unexpected {c:?}")
        };
        assert_eq!(ps.period, 2);
        assert_eq!(ps.prefix, 0);
        assert_relative_eq!(ps.rates[0], 2.0, max_relative = 1e-9);
        assert_relative_eq!(ps.rates[1], 4.0, max_relative = 1e-9);
        assert_relative_eq!(ps.constants[0], 4.0, max_relative = 1e-9);
        assert_relative_eq!(ps.constants[1], 1.0, max_relative = 1e-9);
    }

    #[test]
    fn classify_sinusoidal_expansion() {
        let sys = MapSystem::sinusoidal_expansion();
        let p = GrowthProfile::for_system(&sys, 1000);
        let c = classify(&p, &sys, &ClassifyOptions::default()).unwrap();
        match c {
            Classification::ConvergentAboveOne { k } => assert!((k - 3.0).abs() < 1e-3, "K = {k}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn classify_rejects_short_profile() {
        let sys = MapSystem::alternating_contraction();
        let p = GrowthProfile::for_system(&sys, 100);
        assert!(classify(&p, &sys, &ClassifyOptions::default()).is_err());
    }

    #[test]
    fn unit_rate_is_undetermined() {
        let sys = MapSystem::with_default_rate_kind(crate::systems::Family::PeriodicLinear {
            coeffs: vec![2.0, 0.5],
        })
        .unwrap();
        let p = GrowthProfile::for_system(&sys, 400);
        let c = classify(&p, &sys, &ClassifyOptions::default()).unwrap();
        assert_eq!(c, Classification::Undetermined);
    }

    #[test]
    fn superexponential_rates_are_undetermined() {
        let rates: Vec<f64> = (1..=400).map(|n| n as f64).collect();
        let p = build_profile(&rates).unwrap();
        let sys = MapSystem::index_scaled_expansion();
        let c = classify(&p, &sys, &ClassifyOptions::default()).unwrap();
        assert_eq!(c, Classification::Undetermined);
    }

    #[test]
    fn rate_kind_gates_the_regime() {
        // the expansion bound of the sinusoidal family says nothing about contraction
        let sys = MapSystem::sinusoidal_expansion();
        let p = build_profile(&[0.5; 400]).unwrap();
        let c = classify(&p, &sys, &ClassifyOptions::default()).unwrap();
        assert_eq!(c, Classification::Undetermined);
    }

    #[test]
    fn detect_power_two_oscillation() {
        let p = GrowthProfile::for_system(&MapSystem::power_two_oscillation(), 200);
        let ps = detect_periodic_scaled(&p, 8, 1e-6).unwrap();
        assert_eq!(ps.period, 2);
        assert_relative_eq!(ps.values()[0], 0.5, max_relative = 1e-12);
        assert_relative_eq!(ps.values()[1], 0.25, max_relative = 1e-12);
    }

    #[test]
    fn detect_ignores_constant_rates() {
        let p = build_profile(&[0.5; 200]).unwrap();
        assert!(detect_periodic_scaled(&p, 8, 1e-6).is_none());
    }

    #[test]
    fn detect_alternating_dyadic_rates_have_equal_values() {
        // exact dyadic log-products: L_{2k} = -4k ln 2, L_{2k+1} = -(4k+1) ln 2,
        // so both classes have slope -2 ln 2 and the values coincide at 1/4
        let rates: Vec<f64> = (1..=200).map(|n| if n % 2 == 1 { 0.5 } else { 0.125 }).collect();
        let p = build_profile(&rates).unwrap();
        for n in 1..=200usize {
            let exact = -((2 * n - (n % 2)) as f64) * std::f64::consts::LN_2;
            assert_relative_eq!(p.log_partial_at(n), exact, max_relative = 1e-14);
        }
        assert!(detect_periodic_scaled(&p, 8, 1e-6).is_none());
        let sys = MapSystem::alternating_contraction();
        let c = classify(&p, &sys, &ClassifyOptions::default()).unwrap();
        match c {
            Classification::ConvergentBelowOne { k } => assert_relative_eq!(k, 4.0, max_relative = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detect_finds_prefix() {
        // five arbitrary rates, then the power-two oscillation pattern
        let sys = MapSystem::power_two_oscillation();
        let mut rates = vec![3.0, 0.7, 1.9, 5.0, 0.1];
        rates.extend((6..=400).map(|n| sys.growth_rate(n)));
        let p = build_profile(&rates).unwrap();
        let ps = detect_periodic_scaled(&p, 8, 1e-6).unwrap();
        assert_eq!(ps.period, 2);
        assert!(ps.prefix <= 5, "prefix {}", ps.prefix);
        assert_relative_eq!(ps.rates[0], 2.0, max_relative = 1e-9);
        assert_relative_eq!(ps.rates[1], 4.0, max_relative = 1e-9);
    }

    #[test]
    fn ratio_check_examples() {
        let ones = vec![1.0; 300];
        assert_relative_eq!(ratio_check(&ones, 2.0, 10).unwrap(), 1024.0 / 1022.0, max_relative = 1e-14);
        assert_relative_eq!(ratio_check(&ones, 2.0, 300).unwrap(), 1.0, max_relative = 1e-12);
        let lin: Vec<f64> = (1..=200).map(|n| n as f64).collect();
        let r = ratio_check(&lin, 3.0, 200).unwrap();
        // direct summation oracle
        let direct = 200.0 * 3f64.powi(200)
            / (1..200).map(|j| j as f64 * 3f64.powi(j)).sum::<f64>();
        assert_relative_eq!(r, direct, max_relative = 1e-12);
        assert!((r - 2.0).abs() < 0.1);
        assert!(ratio_check(&ones, 2.0, 1).is_err());
    }

    #[test]
    fn ratio_check_decreases_to_k_minus_one() {
        let ones = vec![1.0; 200];
        for k in [1.2, 1.5, 2.0, 3.0] {
            let mut prev = f64::INFINITY;
            for n in 2..200 {
                let r = ratio_check(&ones, k, n).unwrap();
                assert!(r >= k - 1.0 - 1e-12);
                assert!(r <= prev + 1e-12);
                prev = r;
            }
        }
    }

    #[test]
    fn envelope_examples() {
        let e1 = double_factorial_envelope(1).unwrap();
        assert_relative_eq!(e1.lower, 1.0 / 5f64.sqrt());
        assert_eq!(e1.value, 0.5);
        assert_eq!(e1.upper, 0.5);
        let e2 = double_factorial_envelope(2).unwrap();
        assert_relative_eq!(e2.lower, 1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(e2.value, 0.375);
        assert_relative_eq!(e2.upper, 1.0 / 7f64.sqrt());
        // Wallis: value * sqrt(k) -> 1/sqrt(pi)
        let big = double_factorial_envelope(100_000).unwrap();
        assert!((big.value * 100_000f64.sqrt() - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-5);
        assert!(double_factorial_envelope(0).is_err());
    }
}
