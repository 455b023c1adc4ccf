//! The reproducible acceptance checks: the four worked examples plus the
//! oracle and property checks on the error identities and inequalities.
//!
//! Each claim is a list of numeric checks with an explicit limit, so a failure
//! reports how far off the measurement is rather than just a boolean.

use num_bigint::BigUint;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::growth::{
    classify, double_factorial_envelope, ratio_check, Classification, ClassifyOptions, GrowthProfile,
};
use crate::instability::witness_divergence;
use crate::oracle::precise_residuals;
use crate::oracle::rational::{cq_from_c64, cq_to_c64, exact_orbit, exact_propagate_with_residuals, exact_telescope};
use crate::oracle::{best_b1_search, RationalSystem, SearchRegion};
use crate::shadowing::{product_error_bound, shadow_contracting, shadow_expanding, telescope_difference, ExpandingOptions};
use crate::systems::{Family, MapSystem, PseudoOrbit, ResidualPolicy, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            relation: Relation::AtMost,
            limit,
            pass: measured <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            relation: Relation::AtLeast,
            limit,
            pass: measured >= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: u8,
    pub title: String,
    pub checks: Vec<Check>,
}

impl Claim {
    fn new(id: u8, title: &str, checks: Vec<Check>) -> Self {
        Self {
            id,
            title: title.into(),
            checks,
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// One line per check, prefixed by the claim verdict on the first.
    pub fn report(&self) -> String {
        let mut out = format!(
            "[{}] criterion {}: {}\n",
            if self.pass() { "PASS" } else { "FAIL" },
            self.id,
            self.title
        );
        for c in &self.checks {
            let rel = match c.relation {
                Relation::AtMost => "<=",
                Relation::AtLeast => ">=",
            };
            out.push_str(&format!(
                "    {} {}: {:.6e} {rel} {:.6e}\n",
                if c.pass { "ok  " } else { "FAIL" },
                c.name,
                c.measured,
                c.limit
            ));
        }
        out
    }
}

const EPS: f64 = 1e-3;

fn classified_k(sys: &MapSystem, horizon: usize, want: &str) -> f64 {
    let profile = GrowthProfile::for_system(sys, horizon);
    match classify(&profile, sys, &ClassifyOptions::default()) {
        Ok(c) if c.kind_name() == want => c.k().unwrap_or(f64::NAN),
        _ => f64::NAN,
    }
}

/// Distance to the target, or infinity when the measurement is missing.
fn gap(value: f64, target: f64) -> f64 {
    let d = (value - target).abs();
    if d.is_nan() {
        f64::INFINITY
    } else {
        d
    }
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Contracting example: `2z` and `z/3` alternating.
pub fn claim_1() -> Claim {
    let sys = MapSystem::alternating_contraction();
    let k = classified_k(&sys, 1000, "ConvergentBelowOne");
    let mut checks = vec![Check::at_most(
        "classify at horizon 1000: ConvergentBelowOne, |K - sqrt(3/2)|",
        gap(k, 1.5f64.sqrt()),
        1e-6,
    )];
    let pseudo = PseudoOrbit::generate(&sys, one(), EPS, ResidualPolicy::ConstantReal, 200).unwrap();
    let sup = shadow_contracting(&sys, &pseudo, if k.is_nan() { 1.5f64.sqrt() } else { k })
        .map(|r| r.sup_err)
        .unwrap_or(f64::INFINITY);
    checks.push(Check::at_most("shadow_contracting sup|d_n| vs 6 eps", sup, 6.0 * EPS));
    checks.push(Check::at_most(
        "shadow_contracting sup|d_n| vs (3 + sqrt 6) eps",
        sup,
        (3.0 + 6f64.sqrt()) * EPS * (1.0 + 1e-6),
    ));
    Claim::new(1, "alternating 2z, z/3: contracting shadowing", checks)
}

/// Expanding example: `3n z` and `z/(2n)` alternating.
pub fn claim_2() -> Claim {
    let sys = MapSystem::index_scaled_expansion();
    let k = classified_k(&sys, 1000, "ConvergentAboveOne");
    let target = 1.5f64.sqrt();
    let mut checks = vec![Check::at_most(
        "classify at horizon 1000: ConvergentAboveOne, |K - sqrt(3/2)|",
        gap(k, target),
        1e-3,
    )];
    let pseudo = PseudoOrbit::generate(&sys, one(), EPS, ResidualPolicy::ConstantReal, 60).unwrap();
    let res = shadow_expanding(&sys, &pseudo, if k.is_nan() { target } else { k }, &ExpandingOptions::default());
    let (resid, sup) = res
        .map(|r| (r.meta.residual_sup, r.sup_err))
        .unwrap_or((f64::INFINITY, f64::INFINITY));
    checks.push(Check::at_most("shadow_expanding residual_sup", resid, 1e-9));
    checks.push(Check::at_most(
        "shadow_expanding sup|d_n| vs 2 eps / ln sqrt(3/2)",
        sup,
        2.0 * EPS / target.ln(),
    ));
    Claim::new(2, "alternating 3n z, z/(2n): expanding shadowing", checks)
}

/// Periodic example: `2^n z` and `z / 2^(n+3)` alternating.
pub fn claim_3() -> Claim {
    let sys = MapSystem::power_two_oscillation();
    let profile = GrowthProfile::for_system(&sys, 1000);
    let cls = classify(&profile, &sys, &ClassifyOptions::default()).unwrap_or(Classification::Undetermined);
    let mut checks = Vec::new();
    let structure_err = match &cls {
        Classification::PeriodicBelowOne(ps) if ps.period == 2 => {
            let v = ps.values();
            [gap(v[0], 0.5), gap(v[1], 0.25), gap(ps.constants[0], 4.0), gap(ps.constants[1], 1.0)]
                .into_iter()
                .fold(0.0, f64::max)
        }
        _ => f64::INFINITY,
    };
    checks.push(Check::at_most(
        "periodic structure m = 2, values (1/2, 1/4), constants (4, 1): max deviation",
        structure_err,
        1e-9,
    ));
    let (at_21, worst_ratio) = match witness_divergence(&sys, EPS, 41, &cls) {
        Ok(w) => {
            let at_21 = w
                .samples
                .iter()
                .find(|s| s.n == 21)
                .map_or(f64::NAN, |s| s.observed_error);
            let worst = w
                .samples
                .windows(2)
                .filter(|p| p[0].k >= 5)
                .map(|p| gap(p[1].observed_error / p[0].observed_error / 4.0, 1.0))
                .fold(0.0, f64::max);
            (at_21, worst)
        }
        Err(_) => (f64::NAN, f64::INFINITY),
    };
    checks.push(Check::at_least(
        "witness observed error at n = 21 vs eps 4^10 / 2",
        at_21,
        EPS * 4f64.powi(10) / 2.0,
    ));
    checks.push(Check::at_most(
        "witness consecutive ratio / 4 - 1 for k >= 5",
        worst_ratio,
        0.01,
    ));
    Claim::new(3, "alternating 2^n z, z/2^(n+3): instability witness", checks)
}

/// Nonlinear example: `3x + sin(x/n)/n`.
pub fn claim_4() -> Claim {
    let sys = MapSystem::sinusoidal_expansion();
    let k = classified_k(&sys, 1000, "ConvergentAboveOne");
    let mut checks = vec![Check::at_most(
        "classify at horizon 1000: ConvergentAboveOne, |K - 3|",
        gap(k, 3.0),
        1e-3,
    )];
    let pseudo = PseudoOrbit::generate(&sys, one(), EPS, ResidualPolicy::ConstantReal, 40).unwrap();
    match shadow_expanding(&sys, &pseudo, if k.is_nan() { 3.0 } else { k }, &ExpandingOptions::default()) {
        Ok(r) => {
            let b: Vec<f64> = r.b.iter().map(|z| z.re).collect();
            let scale = b.iter().map(|x| x.abs()).fold(1.0, f64::max);
            let precise = precise_residuals(&sys, &b)
                .map(|v| v.into_iter().fold(0.0, f64::max) / scale)
                .unwrap_or(f64::INFINITY);
            checks.push(Check::at_most("fixed-point iterations", r.meta.iterations as f64, 20.0));
            checks.push(Check::at_most("true orbit: residual_sup", r.meta.residual_sup, 1e-9));
            checks.push(Check::at_most("true orbit: double-double residual", precise, 1e-9));
            checks.push(Check::at_most(
                "sup|d_n| vs 2 eps / ln 3",
                r.sup_err,
                2.0 * EPS / 3f64.ln() * (1.0 + 1e-3),
            ));
        }
        Err(_) => checks.push(Check::at_most("shadow_expanding succeeded", 1.0, 0.0)),
    }
    Claim::new(4, "3x + sin(x/n)/n: nonlinear expanding shadowing", checks)
}

fn random_c64(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    C64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
}

fn random_linear_family(rng: &mut ChaCha8Rng) -> MapSystem {
    match rng.random_range(0..4) {
        0 => MapSystem::alternating_contraction(),
        1 => MapSystem::index_scaled_expansion(),
        2 => MapSystem::power_two_oscillation(),
        _ => {
            let m = rng.random_range(1..=4);
            let coeffs = (0..m)
                .map(|_| {
                    let c: f64 = rng.random_range(0.2..3.0);
                    if rng.random_bool(0.5) {
                        -c
                    } else {
                        c
                    }
                })
                .collect();
            MapSystem::with_default_rate_kind(Family::PeriodicLinear { coeffs }).unwrap()
        }
    }
}

/// Telescoping identity against exact rational propagation.
pub fn claim_5() -> Claim {
    const DRAWS: u64 = 1000;
    const HORIZON: usize = 30;
    let outcomes: Vec<(usize, f64)> = (0..DRAWS)
        .into_par_iter()
        .map(|draw| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x7e1e_5c09 + draw);
            let sys = random_linear_family(&mut rng);
            let eps: f64 = 10f64.powf(rng.random_range(-6.0..0.0));
            let a1 = random_c64(&mut rng, 2.0);
            let b1 = a1 + random_c64(&mut rng, 1.0);
            let r: Vec<C64> = (1..HORIZON).map(|_| random_c64(&mut rng, eps)).collect();
            let pseudo = PseudoOrbit::from_residuals(&sys, a1, &r).unwrap();

            let rs = RationalSystem::try_from(&sys).unwrap();
            let rq: Vec<_> = r.iter().map(|&z| cq_from_c64(z).unwrap()).collect();
            let exact = exact_propagate_with_residuals(&rs, &cq_from_c64(a1).unwrap(), &rq).unwrap();
            let b1q = cq_from_c64(b1).unwrap();
            let b = exact_orbit(&rs, &b1q, HORIZON);
            let mut mismatches = 0;
            let mut worst: f64 = 0.0;
            for n in 1..=HORIZON {
                let direct = &b[n - 1] - &exact.a[n - 1];
                let tele: Complex<_> = exact_telescope(&rs, &exact, &b1q, n).unwrap();
                if tele != direct {
                    mismatches += 1;
                }
                let want = cq_to_c64(&direct);
                let got = telescope_difference(&sys, &pseudo, b1, n).unwrap();
                let rel = (got - want).norm() / want.norm();
                worst = worst.max(if rel.is_nan() { f64::INFINITY } else { rel });
            }
            (mismatches, worst)
        })
        .collect();
    let mismatches: usize = outcomes.iter().map(|o| o.0).sum();
    let worst = outcomes.iter().map(|o| o.1).fold(0.0, f64::max);
    Claim::new(
        5,
        "telescoping identity vs exact rational propagation (1000 draws, horizon 30)",
        vec![
            Check::at_most("rational mismatches", mismatches as f64, 0.0),
            Check::at_most("floating-point max relative error", worst, 1e-10),
        ],
    )
}

/// Product bound soundness over random contracting scenarios.
pub fn claim_6() -> Claim {
    const DRAWS: u64 = 1000;
    const HORIZON: usize = 100;
    let worst = (0..DRAWS)
        .into_par_iter()
        .map(|draw| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x01e2_2a21 + draw);
            let sys = if rng.random_bool(0.2) {
                MapSystem::alternating_contraction()
            } else {
                let m = rng.random_range(1..=4);
                let mut coeffs: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..2.5)).collect();
                // geometric mean of the period below one
                let gm = coeffs.iter().map(|c| c.ln()).sum::<f64>() / m as f64;
                let target = rng.random_range(-1.5f64..-0.02);
                let shift = (target - gm).min(0.0).exp();
                for c in &mut coeffs {
                    *c *= if rng.random_bool(0.3) { -shift } else { shift };
                }
                MapSystem::with_default_rate_kind(Family::PeriodicLinear { coeffs }).unwrap()
            };
            let eps: f64 = 10f64.powf(rng.random_range(-4.0..-1.0));
            let a1 = random_c64(&mut rng, 2.0);
            let pseudo = match rng.random_range(0..3) {
                0 => PseudoOrbit::generate(&sys, a1, eps, ResidualPolicy::ConstantReal, HORIZON).unwrap(),
                1 => PseudoOrbit::generate(&sys, a1, eps, ResidualPolicy::LowDiscrepancyPhase, HORIZON).unwrap(),
                _ => {
                    let r: Vec<C64> = (1..HORIZON).map(|_| random_c64(&mut rng, eps)).collect();
                    PseudoOrbit::from_residuals(&sys, a1, &r).unwrap()
                }
            };
            let gap_len = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.0) };
            let b1 = a1 + C64::from_polar(gap_len, rng.random_range(0.0..std::f64::consts::TAU));
            let gap_abs = (b1 - a1).norm();
            let b = sys.orbit(b1, HORIZON);
            let rates = sys.growth_rates(HORIZON);
            (1..=HORIZON)
                .map(|n| {
                    let bound = product_error_bound(&rates, n, pseudo.epsilon, gap_abs).unwrap();
                    (b[n - 1] - pseudo.a[n - 1]).norm() - bound
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Claim::new(
        6,
        "product bound soundness (1000 random contracting scenarios, n <= 100)",
        vec![Check::at_most("max (|b_n - a_n| - bound)", worst, 1e-12)],
    )
}

/// Ratio characterization of convergent scaled sums.
pub fn claim_7() -> Claim {
    let mut checks = Vec::new();
    let ones = vec![1.0; 200];
    let linear: Vec<f64> = (1..=200).map(|n| n as f64).collect();
    for k in [1.5, 2.0, 3.0] {
        for (label, t) in [("t = 1", &ones), ("t = n", &linear)] {
            let r = ratio_check(t, k, 200).unwrap_or(f64::NAN);
            checks.push(Check::at_most(
                format!("{label}, K = {k}, n = 200: |ratio / (K - 1) - 1|"),
                gap(r / (k - 1.0), 1.0),
                0.05,
            ));
        }
    }
    let r = ratio_check(&ones, 2.0, 10).unwrap_or(f64::NAN);
    checks.push(Check::at_most(
        "t = 1, K = 2, n = 10: |ratio - 1024/1022|",
        gap(r, 1024.0 / 1022.0),
        1e-12,
    ));
    Claim::new(7, "ratio check of scaled sums", checks)
}

/// `1/sqrt(4k+1) <= (2k-1)!!/(2k)!! <= 1/sqrt(3k+1)` for `k <= 10^4`.
///
/// Squared and cleared of denominators this is
/// `(3k+1) A_k <= B_k <= (4k+1) A_k` with `A_k = ((2k-1)!!)^2`, `B_k = ((2k)!!)^2`,
/// which is checked in exact integer arithmetic.
pub fn claim_8() -> Claim {
    const KMAX: u64 = 10_000;
    let mut a = BigUint::from(1u32);
    let mut b = BigUint::from(1u32);
    let mut exact_failures = 0u64;
    let mut float_failures = 0u64;
    for k in 1..=KMAX {
        a *= (2 * k - 1) * (2 * k - 1);
        b *= (2 * k) * (2 * k);
        if !(&a * (3 * k + 1) <= b && b <= &a * (4 * k + 1)) {
            exact_failures += 1;
        }
        let env = double_factorial_envelope(k as usize).unwrap();
        if !(env.lower <= env.value && env.value <= env.upper) {
            float_failures += 1;
        }
    }
    Claim::new(
        8,
        "double-factorial envelope for k <= 10^4",
        vec![
            Check::at_most("exact integer violations", exact_failures as f64, 0.0),
            Check::at_most("floating-point envelope violations", float_failures as f64, 0.0),
        ],
    )
}

/// Brute-force optimal initial value against the tail-series construction.
pub fn claim_9() -> Claim {
    const HORIZON: usize = 12;
    let sys = MapSystem::index_scaled_expansion();
    let pseudo = PseudoOrbit::generate(&sys, one(), EPS, ResidualPolicy::ConstantReal, HORIZON).unwrap();
    let constructed = shadow_expanding(&sys, &pseudo, 1.5f64.sqrt(), &ExpandingOptions::default());
    let search = best_b1_search(
        &sys,
        &pseudo,
        HORIZON,
        SearchRegion {
            center: pseudo.a[0],
            radius: 10.0 * EPS,
        },
        64,
        6,
    );
    let (sup_rel, cells) = match (constructed, search) {
        (Ok(c), Ok(s)) => (
            gap(s.sup_error, c.sup_err) / c.sup_err,
            (c.b[0] - s.b1).norm() / s.cell,
        ),
        _ => (f64::INFINITY, f64::INFINITY),
    };
    Claim::new(
        9,
        "grid-search optimum vs tail-series construction (3n z, z/(2n), horizon 12)",
        vec![
            Check::at_most("|search sup - constructed sup| / constructed sup", sup_rel, 0.10),
            Check::at_most("|constructed b_1 - search b_1| in refined cells", cells, 1.0),
        ],
    )
}

pub fn all_claims() -> Vec<Claim> {
    vec![
        claim_1(),
        claim_2(),
        claim_3(),
        claim_4(),
        claim_5(),
        claim_6(),
        claim_7(),
        claim_8(),
        claim_9(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_compare_in_the_declared_direction() {
        assert!(Check::at_most("x", 1.0, 1.0).pass);
        assert!(!Check::at_most("x", f64::INFINITY, 1.0).pass);
        assert!(!Check::at_most("x", f64::NAN, 1.0).pass);
        assert!(Check::at_least("x", 2.0, 1.0).pass);
        assert!(!Check::at_least("x", f64::NAN, 1.0).pass);
    }

    #[test]
    fn report_lists_every_check() {
        let c = claim_7();
        assert_eq!(c.report().lines().count(), 1 + c.checks.len());
    }
}
