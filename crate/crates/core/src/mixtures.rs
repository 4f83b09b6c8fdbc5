//! Convex combinations of the three phase-damping maps built on one profile.
//!
//! Mixing `Λα(t)` (axis `α` fixed, the others scaled by `λ(t)`) with weights
//! `xα` gives a Pauli map with `λα(t) = xα + (1 − xα)λ(t)`.

use serde::{Deserialize, Serialize};

use crate::divisibility::{classify, DivisibilityClass, Tolerances};
use crate::error::{Error, Result};
use crate::profile::ScalarProfile;
use crate::trajectory::{Axis, AxisFn, EigTrajectory, Grid};

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub weights: [f64; 3],
    pub profile: ScalarProfile,
}

fn check_weights(x: &[f64; 3]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidWeights(format!("weights must be finite and nonnegative, got {x:?}")));
    }
    let sum: f64 = x.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidWeights(format!("weights must sum to 1, got {sum}")));
    }
    Ok(())
}

/// Threshold of the CP-divisibility condition on `λ(t)`: the largest
/// `λ₊ = (−xk + √((xi−xk)(xj−xk)/((1−xi)(1−xj))))/(1−xk)` over the axes `k`
/// for which `(xi−xk)(xj−xk) ≥ 0`.
///
/// `None` when no axis constrains `λ`, or when some weight is one and the
/// mixture is a single phase-damping map.
pub fn prop2_cp_bound(x: [f64; 3]) -> Result<Option<f64>> {
    check_weights(&x)?;
    if x.contains(&1.0) {
        return Ok(None);
    }
    let mut bound: Option<f64> = None;
    for k in 0..3 {
        let (xi, xj, xk) = (x[(k + 1) % 3], x[(k + 2) % 3], x[k]);
        let disc = (xi - xk) * (xj - xk);
        if disc < 0.0 {
            continue;
        }
        let lambda = (-xk + (disc / ((1.0 - xi) * (1.0 - xj))).sqrt()) / (1.0 - xk);
        bound = Some(bound.map_or(lambda, |b: f64| b.max(lambda)));
    }
    Ok(bound)
}

impl Mixture {
    pub fn new(weights: [f64; 3], profile: ScalarProfile) -> Result<Self> {
        check_weights(&weights)?;
        profile.validate()?;
        Ok(Self { weights, profile })
    }

    pub fn to_trajectory(&self) -> EigTrajectory {
        EigTrajectory::new(self.weights.map(|x| AxisFn::Affine {
            offset: x,
            scale: 1.0 - x,
            profile: self.profile.clone(),
        }))
    }

    /// The mixed phase-damping map for axis `α` on its own.
    pub fn ingredient(&self, fixed: Axis) -> EigTrajectory {
        EigTrajectory::phase_damping(self.profile.clone(), fixed)
    }

    fn is_trivial(&self) -> bool {
        self.weights.contains(&1.0)
    }

    /// `(λ, λ̇ right, λ̇ left)` of the profile on the mixture's evaluation times.
    fn profile_samples(&self, grid: &Grid) -> Result<Vec<(f64, f64, f64)>> {
        let times = self.to_trajectory().evaluation_times(grid)?;
        Ok(times
            .into_iter()
            .map(|t| (self.profile.value(t), self.profile.derivative(t), self.profile.left_derivative(t)))
            .collect())
    }

    /// Whether the ingredients are CP-divisible on the grid, i.e. `λ ≥ 0` and
    /// `λ̇ ≤ 0`. Mixtures of CP-divisible ingredients are P-divisible.
    pub fn prop1_p_divisible(&self, grid: &Grid, tol: &Tolerances) -> Result<bool> {
        Ok(self
            .profile_samples(grid)?
            .iter()
            .all(|&(l, right, left)| l >= -tol.tol && right <= tol.tol && left <= tol.tol))
    }

    /// CP-divisibility of a mixture of CP-divisible ingredients: all weights
    /// positive and `λ(t) ≥ λ₊` on the grid.
    pub fn prop2_cp_divisible(&self, grid: &Grid, tol: &Tolerances) -> Result<bool> {
        if !self.prop1_p_divisible(grid, tol)? {
            return Err(Error::Precondition("the mixed phase-damping maps are not CP-divisible".into()));
        }
        if self.is_trivial() {
            return Ok(true);
        }
        if self.weights.contains(&0.0) {
            return Ok(false);
        }
        let Some(bound) = prop2_cp_bound(self.weights)? else {
            return Ok(true);
        };
        Ok(self.profile_samples(grid)?.iter().all(|&(l, _, _)| l >= bound - tol.tol))
    }

    /// Mixing divisible but not P-divisible ingredients stays divisible but
    /// not P-divisible. Returns whether the classifier agrees.
    pub fn prop3_preserves_non_p(&self, grid: &Grid, tol: &Tolerances) -> Result<bool> {
        let ingredient = classify(&self.ingredient(Axis::Z), grid, tol)?.class;
        if ingredient != DivisibilityClass::Divisible {
            return Err(Error::Precondition(format!(
                "the mixed phase-damping maps must be Divisible but not PDivisible, got {ingredient}"
            )));
        }
        Ok(classify(&self.to_trajectory(), grid, tol)?.class == DivisibilityClass::Divisible)
    }

    /// Divisibility of a mixture of indivisible ingredients: once `λ(t)`
    /// reaches `−x_min/(1 − x_min)` it must stay there, and it may never go
    /// below.
    ///
    /// Evaluated on the smallest-weight eigenvalue
    /// `x_min + (1 − x_min)λ(t) = (1 − x_min)(λ(t) − level)`, with the same
    /// bands as the classifier.
    pub fn prop4_divisible_condition(&self, grid: &Grid, tol: &Tolerances) -> Result<bool> {
        let ingredient = classify(&self.ingredient(Axis::Z), grid, tol)?.class;
        if ingredient != DivisibilityClass::Indivisible {
            return Err(Error::Precondition(format!(
                "the mixed phase-damping maps must be Indivisible, got {ingredient}"
            )));
        }
        let x_min = self.weights.iter().copied().fold(f64::INFINITY, f64::min);
        if 1.0 - x_min <= 0.0 {
            return Err(Error::InvalidWeights("smallest weight must be below 1".into()));
        }
        let mut reached = false;
        for (l, _, _) in self.profile_samples(grid)? {
            let gap = x_min + (1.0 - x_min) * l;
            if gap < -tol.tol {
                return Ok(false);
            }
            if gap.abs() < tol.zero_tol {
                reached = true;
            } else if reached {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `−x_min/(1 − x_min)`.
    pub fn prop4_level(&self) -> f64 {
        let x_min = self.weights.iter().copied().fold(f64::INFINITY, f64::min);
        -x_min / (1.0 - x_min)
    }
}
