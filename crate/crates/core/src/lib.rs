//! Shadowing orbits and Hyers-Ulam stability bounds for nonautonomous
//! first-order difference equations `z_{n+1} = F(n, z_n)` on the complex plane.
//!
//! The crate classifies a system by the geometric average of its growth rates,
//! builds a true orbit next to a given pseudo-orbit when the average converges
//! away from one, and produces divergence witnesses when it is periodic below
//! one.

pub mod claims;
pub mod error;
pub mod growth;
pub mod instability;
pub mod numeric;
pub mod oracle;
pub mod shadowing;
pub mod systems;

pub use error::{Error, Result};
pub use growth::{
    build_profile, build_profile_from_logs, classify, detect_periodic_scaled, double_factorial_envelope,
    ratio_check, Classification, ClassifyOptions, Envelope, GrowthProfile, PeriodicStructure,
};
pub use instability::{
    default_witness_horizon, divergence_lower_bound, ln_partial_sum_s, partial_sum_s, witness_divergence,
    DivergenceWitness, WitnessSample,
};
pub use numeric::LogScalar;
pub use shadowing::{
    early_index_bound, expanding_bound_bounded_t, expanding_tail_bound, geometric_error_bound, product_error_bound,
    shadow_contracting, shadow_expanding, telescope_difference, ExpandingOptions, ShadowMeta,
    ShadowMethod, ShadowResult,
};
pub use systems::{DomainKind, Family, MapSystem, PseudoOrbit, RateKind, ResidualPolicy, C64};
