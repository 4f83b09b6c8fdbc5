//! Fixed-time Pauli channel algebra.
//!
//! A Pauli channel acts diagonally on the Pauli basis, `Λ[σα] = λα σα` with
//! `λ0 = 1`, and equivalently as the random-unitary map
//! `Λ[ρ] = Σα pα σα ρ σα`. This module converts between the two
//! parametrizations and provides the complete-positivity and positivity
//! predicates used throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for boundary tests.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A Pauli map given by its three Bloch-axis eigenvalues.
///
/// Nonphysical triples are representable on purpose: propagator candidates
/// are built from eigenvalue ratios and only afterwards tested with
/// [`PauliChannel::is_cp`] / [`PauliChannel::is_positive`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel {
    pub eigs: [f64; 3],
}

/// Probabilities `(p0, p1, p2, p3)` of the random-unitary form.
///
/// Entries are not forced to be nonnegative; a negative entry is exactly the
/// signal that the corresponding eigenvalue triple is not completely positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbVector {
    pub p: [f64; 4],
}

/// Hermitian qubit operator `X = x0·I + x·σ`.
///
/// A density matrix corresponds to `x0 = 1`, `|x| ≤ 1` (up to the usual
/// factor of one half, which is irrelevant for the norms used here).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub x0: f64,
    pub x: [f64; 3],
}

impl PauliChannel {
    pub const IDENTITY: PauliChannel = PauliChannel { eigs: [1.0; 3] };

    pub fn new(l1: f64, l2: f64, l3: f64) -> Self {
        Self { eigs: [l1, l2, l3] }
    }

    /// Probabilities of the random-unitary representation.
    pub fn probs(&self) -> ProbVector {
        probs_from_eigs(self)
    }

    /// Fujiwara–Algoet conditions `−1 ≤ Σλ ≤ 1 + 2 min λ`.
    ///
    /// `tol` is measured on the probability scale, i.e. both inequalities are
    /// relaxed by `4·tol`, which makes this predicate agree exactly with
    /// "every entry of [`probs_from_eigs`] is `≥ −tol`".
    pub fn is_cp(&self, tol: f64) -> bool {
        let [l1, l2, l3] = self.eigs;
        let sum = l1 + l2 + l3;
        let min = l1.min(l2).min(l3);
        let lower = 1.0 + sum;
        let upper = 1.0 + 2.0 * min - sum;
        lower >= -4.0 * tol && upper >= -4.0 * tol
    }

    /// Positivity of a Pauli map: `max |λα| ≤ 1`.
    pub fn is_positive(&self, tol: f64) -> bool {
        self.eigs.iter().all(|l| l.abs() <= 1.0 + tol)
    }

    pub fn apply(&self, state: &BlochState) -> BlochState {
        BlochState {
            x0: state.x0,
            x: [self.eigs[0] * state.x[0], self.eigs[1] * state.x[1], self.eigs[2] * state.x[2]],
        }
    }

    /// Number of eigenvalues with `|λα| > zero_tol`.
    pub fn nonzero_count(&self, zero_tol: f64) -> usize {
        self.eigs.iter().filter(|l| l.abs() > zero_tol).count()
    }

    pub fn is_finite(&self) -> bool {
        self.eigs.iter().all(|l| l.is_finite())
    }
}

impl ProbVector {
    pub fn new(p0: f64, p1: f64, p2: f64, p3: f64) -> Self {
        Self { p: [p0, p1, p2, p3] }
    }

    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl BlochState {
    pub fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        Self { x0, x: [x1, x2, x3] }
    }

    pub fn maximally_mixed() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub fn bloch_length(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// True for `x0 = 1`, `|x| ≤ 1` within `tol`.
    pub fn is_state(&self, tol: f64) -> bool {
        (self.x0 - 1.0).abs() <= tol && self.x.iter().map(|v| v * v).sum::<f64>() <= 1.0 + tol
    }
}

/// `λα = p0 + 2pα − (p1 + p2 + p3)`.
pub fn eigs_from_probs(p: &ProbVector) -> Result<PauliChannel> {
    let sum = p.sum();
    if !sum.is_finite() || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { sum });
    }
    let [p0, p1, p2, p3] = p.p;
    let rest = p1 + p2 + p3;
    Ok(PauliChannel::new(p0 + 2.0 * p1 - rest, p0 + 2.0 * p2 - rest, p0 + 2.0 * p3 - rest))
}

/// `p0 = (1 + Σλ)/4`, `pα = (1 + 2λα − Σλ)/4`.
pub fn probs_from_eigs(c: &PauliChannel) -> ProbVector {
    let [l1, l2, l3] = c.eigs;
    let sum = l1 + l2 + l3;
    ProbVector::new(
        0.25 * (1.0 + sum),
        0.25 * (1.0 + 2.0 * l1 - sum),
        0.25 * (1.0 + 2.0 * l2 - sum),
        0.25 * (1.0 + 2.0 * l3 - sum),
    )
}

/// Trace norm of `X = x0·I + x·σ`, the sum of `|x0 ± |x||`.
pub fn trace_norm(s: &BlochState) -> f64 {
    let r = s.bloch_length();
    (s.x0 + r).abs() + (s.x0 - r).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn assert_eigs(c: PauliChannel, expected: [f64; 3]) {
        for (a, b) in c.eigs.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn eigs_from_probs_examples() {
        assert_eigs(eigs_from_probs(&ProbVector::new(1.0, 0.0, 0.0, 0.0)).unwrap(), [1.0, 1.0, 1.0]);
        assert_eigs(eigs_from_probs(&ProbVector::new(0.25, 0.25, 0.25, 0.25)).unwrap(), [0.0, 0.0, 0.0]);
        assert_eigs(eigs_from_probs(&ProbVector::new(0.0, 1.0, 0.0, 0.0)).unwrap(), [1.0, -1.0, -1.0]);
    }

    #[test]
    fn eigs_from_probs_rejects_unnormalized() {
        let err = eigs_from_probs(&ProbVector::new(0.5, 0.1, 0.1, 0.1)).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
        assert!(eigs_from_probs(&ProbVector::new(f64::NAN, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn probs_from_eigs_examples() {
        assert_eq!(probs_from_eigs(&PauliChannel::IDENTITY).p, [1.0, 0.0, 0.0, 0.0]);
        let p = probs_from_eigs(&PauliChannel::new(0.5, 0.5, 0.0)).p;
        for (a, b) in p.iter().zip([0.5, 0.25, 0.25, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(probs_from_eigs(&PauliChannel::new(0.0, 0.0, 0.0)).p, [0.25; 4]);
    }

    #[test]
    fn cp_examples() {
        assert!(PauliChannel::IDENTITY.is_cp(DEFAULT_TOL));
        let bad = PauliChannel::new(0.9, 0.9, -0.9);
        assert!(!bad.is_cp(DEFAULT_TOL));
        assert!(probs_from_eigs(&bad).p[3] < 0.0);
        assert!(PauliChannel::new(0.5, 0.5, 0.0).is_cp(DEFAULT_TOL));
        // just outside the boundary
        assert!(!PauliChannel::new(0.5, 0.5, -1e-6).is_cp(DEFAULT_TOL));
        // lower face
        assert!(PauliChannel::new(-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0).is_cp(DEFAULT_TOL));
        assert!(!PauliChannel::new(-0.34, -0.34, -0.34).is_cp(DEFAULT_TOL));
    }

    #[test]
    fn positivity_examples() {
        assert!(PauliChannel::new(1.0, -1.0, -1.0).is_positive(DEFAULT_TOL));
        assert!(!PauliChannel::new(1.2, 0.0, 0.0).is_positive(DEFAULT_TOL));
        assert!(PauliChannel::new(0.3, -0.8, 0.5).is_positive(DEFAULT_TOL));
    }

    #[test]
    fn apply_examples() {
        let s = BlochState::new(1.0, 0.2, -0.5, 0.1);
        assert_eq!(PauliChannel::IDENTITY.apply(&s), s);
        assert_eq!(PauliChannel::new(0.0, 0.0, 0.0).apply(&s), BlochState::maximally_mixed());
        let out = PauliChannel::new(1.0, -1.0, -1.0).apply(&BlochState::new(1.0, 0.1, 0.2, 0.3));
        assert_eq!(out, BlochState::new(1.0, 0.1, -0.2, -0.3));
    }

    #[test]
    fn trace_norm_examples() {
        assert_abs_diff_eq!(trace_norm(&BlochState::new(1.0, 0.0, 0.0, 0.0)), 2.0);
        assert_abs_diff_eq!(trace_norm(&BlochState::new(0.0, 1.0, 0.0, 0.0)), 2.0);
        assert_abs_diff_eq!(trace_norm(&BlochState::new(1.0, 0.6, 0.0, 0.8)), 2.0, epsilon = 1e-15);
    }

    fn triple(range: f64) -> impl Strategy<Value = PauliChannel> {
        (-range..range, -range..range, -range..range).prop_map(|(a, b, c)| PauliChannel::new(a, b, c))
    }

    proptest! {
        #[test]
        fn probability_round_trip(a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64, d in 0.0..1.0f64) {
            let total = a + b + c + d;
            prop_assume!(total > 1e-6);
            let p = ProbVector::new(a / total, b / total, c / total, d / total);
            let back = probs_from_eigs(&eigs_from_probs(&p).unwrap());
            for (x, y) in back.p.iter().zip(p.p) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }

        #[test]
        fn eigenvalue_round_trip(c in triple(1.5)) {
            let back = eigs_from_probs(&probs_from_eigs(&c)).unwrap();
            for (x, y) in back.eigs.iter().zip(c.eigs) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }

        #[test]
        fn cp_matches_choi_probabilities(c in triple(1.5)) {
            prop_assert_eq!(c.is_cp(DEFAULT_TOL), probs_from_eigs(&c).min() >= -DEFAULT_TOL);
        }

        #[test]
        fn cp_implies_positive(c in triple(1.5)) {
            if c.is_cp(0.0) {
                prop_assert!(c.is_positive(0.0));
            }
        }

        #[test]
        fn cp_channels_contract_trace_norm(
            c in triple(1.0),
            x0 in -2.0..2.0f64,
            x1 in -2.0..2.0f64,
            x2 in -2.0..2.0f64,
            x3 in -2.0..2.0f64,
        ) {
            prop_assume!(c.is_cp(0.0));
            let s = BlochState::new(x0, x1, x2, x3);
            prop_assert!(trace_norm(&c.apply(&s)) <= trace_norm(&s) + 1e-12);
        }

        #[test]
        fn apply_preserves_trace_and_unitality(c in triple(1.5), x0 in -2.0..2.0f64, x1 in -1.0..1.0f64) {
            let s = BlochState::new(x0, x1, -x1, 0.5);
            prop_assert_eq!(c.apply(&s).x0, x0);
            prop_assert_eq!(c.apply(&BlochState::maximally_mixed()), BlochState::maximally_mixed());
        }
    }
}
