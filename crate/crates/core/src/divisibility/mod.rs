//! Divisibility hierarchy of Pauli dynamical maps.
//!
//! [`classify`] decides the class from eigenvalue conditions alone:
//!
//! * divisible: `λα ≥ 0` and an eigenvalue that has vanished stays zero;
//! * P-divisible: additionally `λ̇α ≤ 0`;
//! * CP-divisible: additionally the rate inequality
//!   `2 d/dt ln λα ≥ d/dt ln(λ1λ2λ3)` wherever all eigenvalues are nonzero,
//!   and never exactly two nonzero eigenvalues.
//!
//! [`oracle_classify`] reaches the same verdict by brute force from the
//! propagators `V(t,s)` between grid points and serves as the independent
//! check of the classifier.

mod oracle;
mod witness;

use serde::{Serialize, Serializer};
use serde_json::json;

use crate::error::{Error, Result};
use crate::pauli::{PauliChannel, DEFAULT_TOL};
use crate::trajectory::{singular_points_of, EigTrajectory, Grid, SingularPoints, TrajectorySamples};

pub use oracle::oracle_classify;
pub(crate) use oracle::oracle_classify_samples;
pub use witness::{trace_norm_witness, WitnessHit, DEFAULT_DIRECTIONS};

/// Tolerances shared by the classifier and the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Slack on inequalities (`λ ≥ −tol`, `λ̇ ≤ tol`, CP margins).
    pub tol: f64,
    /// Eigenvalues with `|λ| < zero_tol` count as zero.
    pub zero_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, zero_tol: crate::trajectory::DEFAULT_ZERO_TOL }
    }
}

impl Tolerances {
    pub fn new(tol: f64, zero_tol: f64) -> Self {
        Self { tol, zero_tol }
    }

    /// Defaults with the zero band chosen for the kind of trajectory.
    pub fn for_trajectory(tr: &EigTrajectory) -> Self {
        Self { tol: DEFAULT_TOL, zero_tol: tr.default_zero_tol() }
    }
}

/// Divisibility classes, ordered from weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DivisibilityClass {
    Indivisible,
    Divisible,
    PDivisible,
    CPDivisible,
}

impl DivisibilityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Indivisible => "Indivisible",
            Self::Divisible => "Divisible",
            Self::PDivisible => "PDivisible",
            Self::CPDivisible => "CPDivisible",
        }
    }
}

impl std::fmt::Display for DivisibilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Failed condition named by a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    NegativeEigenvalue,
    Revival,
    IncreasingEigenvalue,
    RateInequality,
    TwoNonzeroEigenvalues,
    PropagatorUndefined,
    PropagatorNotPositive,
    PropagatorNotCp,
}

/// Evidence that a condition fails at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub condition: Condition,
    pub t: f64,
    pub detail: serde_json::Value,
}

/// Outcome of a single divisibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub passed: bool,
    pub certificates: Vec<Certificate>,
}

impl Check {
    fn from_certificates(certificates: Vec<Certificate>) -> Self {
        Self { passed: certificates.is_empty(), certificates }
    }
}

/// How a verdict was computed and how far it can be trusted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMetadata {
    pub t_max: f64,
    pub n: usize,
    /// Uniform grid plus critical points actually evaluated.
    pub evaluated_points: usize,
    pub tol: f64,
    pub zero_tol: f64,
    pub method: &'static str,
    /// Verdicts only speak about `[0, t_max]` on the evaluated points.
    pub grid_relative: bool,
    /// Some eigenvalue sits just outside the zero band, so a different
    /// `zero_tol` or grid could change the verdict.
    pub tolerance_sensitive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs_checked: Option<usize>,
}

/// Classification result with certificates for every failed condition of
/// the first check that did not pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisibilityVerdict {
    pub class: DivisibilityClass,
    pub certificates: Vec<Certificate>,
    #[serde(serialize_with = "serialize_singular")]
    pub singular_points: SingularPoints,
    pub grid: GridMetadata,
}

fn serialize_singular<S: Serializer>(sp: &SingularPoints, s: S) -> std::result::Result<S::Ok, S::Error> {
    sp.times.serialize(s)
}

impl DivisibilityVerdict {
    pub fn has_certificate(&self, condition: Condition) -> bool {
        self.certificates.iter().any(|c| c.condition == condition)
    }

    pub fn certificates_for(&self, condition: Condition) -> impl Iterator<Item = &Certificate> {
        self.certificates.iter().filter(move |c| c.condition == condition)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("verdict serializes")
    }
}

/// Eigenvalues of a propagator `V(t,s)`, a Pauli map in its own right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Propagator {
    pub s: f64,
    pub t: f64,
    pub channel: PauliChannel,
}

/// `V(t,s)` with the generalized-inverse convention: `μα = λα(t)/λα(s)`,
/// `μα = 0` when both vanish, undefined when only `λα(s)` vanishes.
pub fn propagator(tr: &EigTrajectory, s: f64, t: f64, zero_tol: f64) -> Result<Propagator> {
    if s.is_nan() || t.is_nan() || s > t {
        return Err(Error::Precondition(format!("propagator needs s <= t, got s = {s}, t = {t}")));
    }
    let from = tr.eval(s)?;
    let to = tr.eval(t)?;
    propagator_between(s, &from.eigs, t, &to.eigs, zero_tol)
}

pub(crate) fn propagator_between(s: f64, from: &[f64; 3], t: f64, to: &[f64; 3], zero_tol: f64) -> Result<Propagator> {
    let mut mu = [0.0; 3];
    for a in 0..3 {
        let (ls, lt) = (from[a], to[a]);
        mu[a] = if ls.abs() >= zero_tol {
            lt / ls
        } else if lt.abs() < zero_tol {
            0.0
        } else {
            return Err(Error::IndivisibleAt { axis: a + 1, s, t });
        };
    }
    Ok(Propagator { s, t, channel: PauliChannel { eigs: mu } })
}

/// CP margin of axis `a`: `λ̇a λb λc − λa λ̇b λc − λa λb λ̇c`, which equals
/// `2γa·λ1λ2λ3` and is the rate inequality with denominators cleared.
pub(crate) fn cp_margin(values: &[f64; 3], derivs: &[f64; 3], a: usize) -> f64 {
    let (b, c) = ((a + 1) % 3, (a + 2) % 3);
    derivs[a] * values[b] * values[c] - values[a] * derivs[b] * values[c] - values[a] * values[b] * derivs[c]
}

/// First violation per axis, in time order.
struct FirstPerAxis {
    found: [Option<Certificate>; 3],
}

impl FirstPerAxis {
    fn new() -> Self {
        Self { found: [None, None, None] }
    }

    fn offer(&mut self, axis: usize, make: impl FnOnce() -> Certificate) {
        if self.found[axis].is_none() {
            self.found[axis] = Some(make());
        }
    }

    fn into_vec(self) -> Vec<Certificate> {
        let mut v: Vec<Certificate> = self.found.into_iter().flatten().collect();
        v.sort_by(|a, b| a.t.total_cmp(&b.t));
        v
    }
}

pub(crate) fn divisible_certificates(s: &TrajectorySamples, tol: &Tolerances) -> Vec<Certificate> {
    let mut negative = FirstPerAxis::new();
    let mut revival = FirstPerAxis::new();
    for a in 0..3 {
        let mut vanished_at: Option<f64> = None;
        for (i, v) in s.values.iter().enumerate() {
            let (t, value) = (s.times[i], v[a]);
            if value < -tol.tol {
                negative.offer(a, || Certificate {
                    condition: Condition::NegativeEigenvalue,
                    t,
                    detail: json!({ "axis": a + 1, "value": value }),
                });
            }
            if value.abs() < tol.zero_tol {
                vanished_at.get_or_insert(t);
            } else if let Some(t0) = vanished_at {
                revival.offer(a, || Certificate {
                    condition: Condition::Revival,
                    t,
                    detail: json!({ "axis": a + 1, "vanished_at": t0, "value": value }),
                });
            }
        }
    }
    let mut certs = negative.into_vec();
    certs.extend(revival.into_vec());
    certs
}

fn increasing_certificates(s: &TrajectorySamples, tol: &Tolerances) -> Vec<Certificate> {
    let mut found = FirstPerAxis::new();
    for i in 0..s.len() {
        for a in 0..3 {
            let right = s.derivatives[i][a];
            let left = if s.is_kink[i] { s.left_derivatives[i][a] } else { right };
            let worst = right.max(left);
            if worst > tol.tol {
                found.offer(a, || Certificate {
                    condition: Condition::IncreasingEigenvalue,
                    t: s.times[i],
                    detail: json!({ "axis": a + 1, "derivative": worst, "value": s.values[i][a] }),
                });
            }
        }
    }
    found.into_vec()
}

fn cp_certificates(s: &TrajectorySamples, tol: &Tolerances) -> Vec<Certificate> {
    let mut rate = FirstPerAxis::new();
    let mut two_nonzero: Option<(f64, f64, [f64; 3], usize)> = None;
    for i in 0..s.len() {
        let values = &s.values[i];
        let nonzero = values.iter().filter(|v| v.abs() > tol.zero_tol).count();
        if nonzero == 2 {
            match &mut two_nonzero {
                None => two_nonzero = Some((s.times[i], s.times[i], *values, 1)),
                Some((_, last, _, count)) => {
                    *last = s.times[i];
                    *count += 1;
                }
            }
        }
        if nonzero < 3 || values.iter().any(|&v| v <= tol.zero_tol) {
            continue;
        }
        let mut derivative_sets = vec![s.derivatives[i]];
        if s.is_kink[i] {
            derivative_sets.push(s.left_derivatives[i]);
        }
        for d in &derivative_sets {
            for a in 0..3 {
                let margin = cp_margin(values, d, a);
                if margin < -tol.tol {
                    let product = values[0] * values[1] * values[2];
                    rate.offer(a, || Certificate {
                        condition: Condition::RateInequality,
                        t: s.times[i],
                        detail: json!({ "axis": a + 1, "margin": margin, "rate": margin / (2.0 * product) }),
                    });
                }
            }
        }
    }
    let mut certs = rate.into_vec();
    if let Some((first, last, values, count)) = two_nonzero {
        certs.push(Certificate {
            condition: Condition::TwoNonzeroEigenvalues,
            t: first,
            detail: json!({ "until": last, "points": count, "eigenvalues": values }),
        });
    }
    certs
}

pub(crate) fn tolerance_sensitive(s: &TrajectorySamples, tol: &Tolerances) -> bool {
    s.values.iter().flatten().any(|v| {
        let a = v.abs();
        a >= tol.zero_tol && a < 100.0 * tol.zero_tol
    })
}

/// Divisibility check: nonnegative eigenvalues that never
/// revive after vanishing.
pub fn check_divisible(tr: &EigTrajectory, grid: &Grid, tol: &Tolerances) -> Result<Check> {
    let s = tr.sample(grid)?;
    Ok(Check::from_certificates(divisible_certificates(&s, tol)))
}

/// Divisible and every eigenvalue non-increasing.
pub fn check_p_divisible(tr: &EigTrajectory, grid: &Grid, tol: &Tolerances) -> Result<Check> {
    let s = tr.sample(grid)?;
    Ok(p_check(&s, tol))
}

fn p_check(s: &TrajectorySamples, tol: &Tolerances) -> Check {
    let div = divisible_certificates(s, tol);
    if !div.is_empty() {
        return Check { passed: false, certificates: div };
    }
    Check::from_certificates(increasing_certificates(s, tol))
}

/// P-divisible, rate inequality on the invertible stretch, and never
/// exactly two nonzero eigenvalues.
pub fn check_cp_divisible(tr: &EigTrajectory, grid: &Grid, tol: &Tolerances) -> Result<Check> {
    let s = tr.sample(grid)?;
    let p = p_check(&s, tol);
    if !p.passed {
        return Ok(p);
    }
    Ok(Check::from_certificates(cp_certificates(&s, tol)))
}

/// Highest class whose conditions hold on the evaluation grid.
pub fn classify(tr: &EigTrajectory, grid: &Grid, tol: &Tolerances) -> Result<DivisibilityVerdict> {
    let s = tr.sample(grid)?;
    Ok(classify_samples(&s, grid, tol))
}

pub(crate) fn classify_samples(s: &TrajectorySamples, grid: &Grid, tol: &Tolerances) -> DivisibilityVerdict {
    let div = divisible_certificates(s, tol);
    let (class, certificates) = if !div.is_empty() {
        (DivisibilityClass::Indivisible, div)
    } else {
        let inc = increasing_certificates(s, tol);
        if !inc.is_empty() {
            (DivisibilityClass::Divisible, inc)
        } else {
            let cp = cp_certificates(s, tol);
            if !cp.is_empty() {
                (DivisibilityClass::PDivisible, cp)
            } else {
                (DivisibilityClass::CPDivisible, Vec::new())
            }
        }
    };
    DivisibilityVerdict {
        class,
        certificates,
        singular_points: singular_points_of(s, tol.zero_tol),
        grid: GridMetadata {
            t_max: grid.t_max,
            n: grid.n,
            evaluated_points: s.len(),
            tol: tol.tol,
            zero_tol: tol.zero_tol,
            method: "eigenvalue_conditions",
            grid_relative: true,
            tolerance_sensitive: tolerance_sensitive(s, tol),
            pairs_checked: None,
        },
    }
}

/// Whether the CP-divisibility rate inequality holds for every axis at a
/// single point with all eigenvalues above `zero_tol`.
pub fn rate_inequality_holds(tr: &EigTrajectory, t: f64, tol: &Tolerances) -> bool {
    let values = tr.value(t).eigs;
    let d = tr.derivatives(t);
    (0..3).all(|a| cp_margin(&values, &d, a) >= -tol.tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ScalarProfile;
    use crate::trajectory::Axis;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn pd(p: ScalarProfile) -> EigTrajectory {
        EigTrajectory::phase_damping(p, Axis::Z)
    }

    fn grid() -> Grid {
        Grid::new(3.0 * FRAC_PI_2, 600).unwrap()
    }

    fn mixture(x: [f64; 3], p: ScalarProfile) -> EigTrajectory {
        crate::mixtures::Mixture::new(x, p).unwrap().to_trajectory()
    }

    #[test]
    fn divisible_examples() {
        let tol = Tolerances::default();
        let c = check_divisible(&pd(ScalarProfile::cos(1.0)), &grid(), &tol).unwrap();
        assert!(!c.passed);
        let revival = c.certificates.iter().find(|c| c.condition == Condition::Revival).unwrap();
        assert!(revival.t > FRAC_PI_2 && revival.t < FRAC_PI_2 + grid().step() + 1e-12);
        assert!(c.certificates.iter().any(|c| c.condition == Condition::NegativeEigenvalue));

        let c = check_divisible(&pd(ScalarProfile::abs_cos(1.0)), &grid(), &tol).unwrap();
        assert!(!c.passed);
        assert!(c.certificates.iter().all(|c| c.condition == Condition::Revival));

        assert!(check_divisible(&pd(ScalarProfile::trunc_cos(1.0)), &grid(), &tol).unwrap().passed);
    }

    #[test]
    fn p_divisible_examples() {
        let tol = Tolerances::default();
        let cubic = ScalarProfile::cubic(3.0, 1.0, 1.4, 1.0).unwrap();
        let g = Grid::new(2.0, 400).unwrap();
        let c = check_p_divisible(&pd(cubic), &g, &tol).unwrap();
        assert!(!c.passed);
        let cert = &c.certificates[0];
        assert_eq!(cert.condition, Condition::IncreasingEigenvalue);
        // λ̇ > 0 exactly for u = t/T in ((2 − √0.4)/9, (2 + √0.4)/9)
        let lo = (2.0 - 0.4f64.sqrt()) / 9.0;
        let hi = (2.0 + 0.4f64.sqrt()) / 9.0;
        assert!(cert.t > lo && cert.t < hi, "{}", cert.t);

        let ex4 = mixture([0.5, 0.5, 0.0], ScalarProfile::trunc_cos(1.0));
        assert!(check_p_divisible(&ex4, &grid(), &tol).unwrap().passed);
        assert!(check_p_divisible(&pd(ScalarProfile::exp(1.0)), &grid(), &tol).unwrap().passed);
    }

    #[test]
    fn cp_divisible_examples() {
        let tol = Tolerances::default();
        assert!(check_cp_divisible(&pd(ScalarProfile::trunc_cos(1.0)), &grid(), &tol).unwrap().passed);

        let ex4 = mixture([0.5, 0.5, 0.0], ScalarProfile::trunc_cos(1.0));
        let c = check_cp_divisible(&ex4, &grid(), &tol).unwrap();
        assert!(!c.passed);
        let two = c.certificates.iter().find(|c| c.condition == Condition::TwoNonzeroEigenvalues).unwrap();
        assert!(two.detail["until"].as_f64().unwrap() > FRAC_PI_2);

        let enm = mixture([0.5, 0.5, 0.0], ScalarProfile::exp(1.0));
        let c = check_cp_divisible(&enm, &Grid::new(10.0, 500).unwrap(), &tol).unwrap();
        assert!(!c.passed);
        let rate = &c.certificates[0];
        assert_eq!(rate.condition, Condition::RateInequality);
        assert_eq!(rate.detail["axis"], 3);
        assert!(rate.t > 0.0 && rate.t <= 10.0 / 499.0 + 1e-12);
    }

    #[test]
    fn classify_examples() {
        let tol = Tolerances::default();
        let v = classify(&pd(ScalarProfile::trunc_cos(1.0)), &grid(), &tol).unwrap();
        assert_eq!(v.class, DivisibilityClass::CPDivisible);
        assert!(v.certificates.is_empty());
        let cubic = ScalarProfile::cubic(3.0, 1.0, 1.4, 1.0).unwrap();
        let v = classify(&pd(cubic), &grid(), &tol).unwrap();
        assert_eq!(v.class, DivisibilityClass::Divisible);
        assert!(v.has_certificate(Condition::IncreasingEigenvalue));
        let v = classify(&pd(ScalarProfile::cos(1.0)), &grid(), &tol).unwrap();
        assert_eq!(v.class, DivisibilityClass::Indivisible);
        assert!(v.grid.grid_relative);
    }

    #[test]
    fn verdict_json_shape() {
        let v = classify(&pd(ScalarProfile::trunc_cos(1.0)), &grid(), &Tolerances::default()).unwrap();
        let j = v.to_json();
        assert_eq!(j["class"], "CPDivisible");
        assert!(j["certificates"].as_array().unwrap().is_empty());
        let sp = j["singular_points"].as_array().unwrap();
        assert_eq!(sp.len(), 3);
        assert!(sp[2].is_null());
        assert_eq!(j["grid"]["n"], 600);
    }

    #[test]
    fn propagator_examples() {
        let tc = pd(ScalarProfile::trunc_cos(1.0));
        let z = 1e-10;
        assert_eq!(propagator(&tc, 0.7, 0.7, z).unwrap().channel, PauliChannel::IDENTITY);
        let v = propagator(&tc, FRAC_PI_2, 2.5, z).unwrap();
        assert_eq!(v.channel.eigs, [0.0, 0.0, 1.0]);
        let e = pd(ScalarProfile::exp(0.8));
        let v = propagator(&e, 0.5, 2.0, z).unwrap();
        let expected = (-0.8f64 * 1.5).exp();
        assert_abs_diff_eq!(v.channel.eigs[0], expected, epsilon = 1e-14);
        assert_abs_diff_eq!(v.channel.eigs[1], expected, epsilon = 1e-14);
        assert_eq!(v.channel.eigs[2], 1.0);

        let c = pd(ScalarProfile::abs_cos(1.0));
        let err = propagator(&c, FRAC_PI_2, PI, z).unwrap_err();
        assert!(matches!(err, Error::IndivisibleAt { axis: 1, .. }));
        assert!(propagator(&e, 2.0, 1.0, z).is_err());
    }

    #[test]
    fn rate_inequality_matches_closed_form_enm_rate() {
        // mixture (½, ½, 0) with e^{−t}: γ3 = −tanh(t/2)/2 < 0 for t > 0
        let enm = mixture([0.5, 0.5, 0.0], ScalarProfile::exp(1.0));
        assert!(rate_inequality_holds(&enm, 0.0, &Tolerances::default()));
        assert!(!rate_inequality_holds(&enm, 0.5, &Tolerances::default()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn propagators_compose(rate in 0.1..3.0f64, omega in 0.2..3.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64) {
            let mut ts = [a * 4.0, b * 4.0, c * 4.0];
            ts.sort_by(f64::total_cmp);
            let [s, u, t] = ts;
            for tr in [pd(ScalarProfile::exp(rate)), pd(ScalarProfile::trunc_cos(omega)), mixture([0.2, 0.3, 0.5], ScalarProfile::trunc_cos(omega))] {
                let direct = propagator(&tr, s, t, 1e-10).unwrap().channel.eigs;
                let first = propagator(&tr, s, u, 1e-10).unwrap().channel.eigs;
                let second = propagator(&tr, u, t, 1e-10).unwrap().channel.eigs;
                for k in 0..3 {
                    prop_assert!((direct[k] - second[k] * first[k]).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn hierarchy_is_monotone(omega in 0.3..3.0f64, x1 in 0.0..1.0f64, x2 in 0.0..1.0f64, kind in 0usize..4) {
            let profile = match kind {
                0 => ScalarProfile::trunc_cos(omega),
                1 => ScalarProfile::exp(omega),
                2 => ScalarProfile::damped_cos(0.3, omega),
                _ => ScalarProfile::abs_cos(omega),
            };
            let total = 1.0 + x1 + x2;
            let tr = mixture([x1 / total, x2 / total, 1.0 / total], profile);
            let g = Grid::new(6.0, 200).unwrap();
            let tol = Tolerances::default();
            let v = classify(&tr, &g, &tol).unwrap();
            let div = check_divisible(&tr, &g, &tol).unwrap().passed;
            let p = check_p_divisible(&tr, &g, &tol).unwrap().passed;
            let cp = check_cp_divisible(&tr, &g, &tol).unwrap().passed;
            prop_assert_eq!(v.class >= DivisibilityClass::Divisible, div);
            prop_assert_eq!(v.class >= DivisibilityClass::PDivisible, p);
            prop_assert_eq!(v.class == DivisibilityClass::CPDivisible, cp);
            if v.class != DivisibilityClass::CPDivisible {
                prop_assert!(!v.certificates.is_empty());
            }
        }
    }
}
