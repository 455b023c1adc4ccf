//! Independent ground truth: exact rational orbits, brute-force optimal
//! shadowing, and double-double evaluation of the transcendental family.

pub mod precise;
pub mod rational;
pub mod search;

pub use precise::precise_residuals;
pub use rational::{
    exact_orbit, exact_propagate, exact_propagate_with_residuals, exact_telescope, RationalOrbit,
    RationalSystem,
};
pub use search::{best_b1_search, SearchOutcome, SearchRegion};
