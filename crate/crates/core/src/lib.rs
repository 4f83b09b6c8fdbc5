//! Divisibility analysis of qubit Pauli dynamical maps.
//!
//! A Pauli dynamical map is fully described by three eigenvalue functions
//! `λα(t)`. This crate builds such maps (closed-form dephasing profiles,
//! sampled data, convex mixtures of phase-damping maps), classifies them as
//! indivisible, divisible, P-divisible or CP-divisible from the eigenvalues
//! alone, and cross-checks every verdict against a brute-force propagator
//! oracle. The [`generator`] module converts between eigenvalues and the
//! decoherence rates of the time-local generator, including rates that
//! diverge where the map stops being invertible.
//!
//! All verdicts are relative to the evaluation grid they were computed on.

pub mod divisibility;
pub mod error;
pub mod generator;
pub mod mixtures;
pub mod pauli;
pub mod profile;
pub mod spec;
pub mod trajectory;
pub mod verify;

pub use divisibility::{
    check_cp_divisible, check_divisible, check_p_divisible, classify, oracle_classify, propagator, trace_norm_witness,
    Certificate, Check, Condition, DivisibilityClass, DivisibilityVerdict, Propagator, Tolerances, WitnessHit,
};
pub use error::{Error, Result};
pub use generator::{eigs_from_rates, ode_roundtrip, rate_sum_limit, rates_from_eigs, RateTriple, SumLimit};
pub use mixtures::Mixture;
pub use pauli::{eigs_from_probs, probs_from_eigs, trace_norm, BlochState, PauliChannel, ProbVector};
pub use profile::{SampledProfile, ScalarProfile};
pub use trajectory::{find_singular_points, validate, Axis, AxisFn, EigTrajectory, Grid, SingularPoints};
