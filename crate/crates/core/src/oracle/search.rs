//! Brute-force search for the initial value whose true orbit stays closest to
//! a pseudo-orbit over a finite horizon.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::systems::{DomainKind, MapSystem, PseudoOrbit, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub center: C64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub b1: C64,
    pub sup_error: f64,
    /// Incumbent sup error after the coarse pass and after each refinement.
    pub history: Vec<f64>,
    /// Grid spacing of the last round.
    pub cell: f64,
}

/// `sup_{n<=horizon} |b_n - a_n|` for the true orbit started at `b1`.
pub fn sup_error(sys: &MapSystem, pseudo: &PseudoOrbit, b1: C64, horizon: usize) -> f64 {
    let mut b = b1;
    let mut worst = (b - pseudo.a[0]).norm();
    for n in 1..horizon {
        b = sys.eval(n, b);
        let e = (b - pseudo.a[n]).norm();
        if !e.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(e);
    }
    worst
}

fn candidates(center: C64, radius: f64, grid: usize, real_only: bool) -> Vec<C64> {
    let step = 2.0 * radius / (grid - 1) as f64;
    let offsets: Vec<f64> = (0..grid).map(|i| -radius + i as f64 * step).collect();
    if real_only {
        return offsets.iter().map(|&x| center + C64::new(x, 0.0)).collect();
    }
    let mut out = Vec::with_capacity(grid * grid);
    for &y in &offsets {
        for &x in &offsets {
            if x * x + y * y <= radius * radius * (1.0 + 1e-12) {
                out.push(center + C64::new(x, y));
            }
        }
    }
    out
}

/// Grid search over the disk `region`, followed by `refinements` rounds that
/// shrink the radius by 4 around the incumbent. Real-line systems search the
/// real segment only.
///
/// Candidates are scored in parallel; ties go to the earliest grid point, so
/// the outcome does not depend on scheduling.
pub fn best_b1_search(
    sys: &MapSystem,
    pseudo: &PseudoOrbit,
    horizon: usize,
    region: SearchRegion,
    grid: usize,
    refinements: usize,
) -> Result<SearchOutcome> {
    if horizon == 0 || horizon > pseudo.len() {
        return invalid(format!("horizon must lie in 1..={}", pseudo.len()));
    }
    if grid < 2 {
        return invalid("grid must be at least 2");
    }
    if !(region.radius >= 0.0) || !region.radius.is_finite() {
        return invalid("radius must be finite and nonnegative");
    }
    let real_only = sys.domain_kind() == DomainKind::RealLine;
    if real_only && region.center.im != 0.0 {
        return invalid("search center must be real for a real-line system");
    }

    let mut best = (region.center, sup_error(sys, pseudo, region.center, horizon));
    let mut radius = region.radius;
    let mut history = Vec::with_capacity(refinements + 1);
    let mut cell = 2.0 * radius / (grid - 1) as f64;
    for round in 0..=refinements {
        if round > 0 {
            radius /= 4.0;
        }
        cell = 2.0 * radius / (grid - 1) as f64;
        let pts = candidates(best.0, radius, grid, real_only);
        let scores: Vec<f64> = pts
            .par_iter()
            .map(|&b1| sup_error(sys, pseudo, b1, horizon))
            .collect();
        for (p, s) in pts.into_iter().zip(scores) {
            if s < best.1 {
                best = (p, s);
            }
        }
        history.push(best.1);
    }
    Ok(SearchOutcome {
        b1: best.0,
        sup_error: best.1,
        history,
        cell,
    })
}
