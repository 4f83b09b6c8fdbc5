//! Time-dependent eigenvalue triples `λα(t)` and their evaluation grids.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliChannel;
use crate::profile::{level_crossings, ScalarProfile};

/// Zero band for closed-form trajectories.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;
/// Zero band for trajectories with at least one sampled axis.
pub const DEFAULT_SAMPLED_ZERO_TOL: f64 = 1e-6;

/// Geometric refinement steps placed to the left of every kink, zero and the
/// grid end.
const LEFT_REFINEMENT: i32 = 20;
/// Absolute band for detecting that a monotone piece touches a level.
const TOUCH: f64 = 1e-14;

/// One of the three Bloch axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Axis from its 1-based label.
    pub fn from_label(label: usize) -> Option<Axis> {
        match label {
            1 => Some(Axis::X),
            2 => Some(Axis::Y),
            3 => Some(Axis::Z),
            _ => None,
        }
    }

    pub fn label(self) -> usize {
        self.index() + 1
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl Serialize for Axis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.label() as u64)
    }
}

impl<'de> Deserialize<'de> for Axis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let label = usize::deserialize(d)?;
        Axis::from_label(label).ok_or_else(|| serde::de::Error::custom(format!("axis must be 1, 2 or 3, got {label}")))
    }
}

/// Uniform evaluation grid on `[0, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(t_max: f64, n: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidGrid(format!("t_max must be positive and finite, got {t_max}")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("at least two grid points are required, got {n}")));
        }
        Ok(Self { t_max, n })
    }

    pub fn step(&self) -> f64 {
        self.t_max / (self.n - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.step();
        let mut v: Vec<f64> = (0..self.n).map(|i| i as f64 * h).collect();
        v[self.n - 1] = self.t_max;
        v
    }
}

/// Eigenvalue function of a single axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisFn {
    Profile(ScalarProfile),
    /// `offset + scale·λ(t)`
    Affine {
        offset: f64,
        scale: f64,
        profile: ScalarProfile,
    },
}

impl AxisFn {
    pub fn profile(&self) -> &ScalarProfile {
        match self {
            AxisFn::Profile(p) | AxisFn::Affine { profile: p, .. } => p,
        }
    }

    fn affine(&self) -> (f64, f64) {
        match *self {
            AxisFn::Profile(_) => (0.0, 1.0),
            AxisFn::Affine { offset, scale, .. } => (offset, scale),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let (offset, scale) = self.affine();
        offset + scale * self.profile().value(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.affine().1 * self.profile().derivative(t)
    }

    pub fn left_derivative(&self, t: f64) -> f64 {
        self.affine().1 * self.profile().left_derivative(t)
    }

    /// Times in `[0, t_max]` where this axis eigenvalue is zero.
    fn zeros(&self, t_max: f64) -> Vec<f64> {
        let p = self.profile();
        level_crossings(|t| self.value(t), &p.monotone_breaks(t_max), t_max, 0.0, TOUCH)
    }
}

/// The three eigenvalue functions of a Pauli dynamical map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigTrajectory {
    pub axes: [AxisFn; 3],
}

/// A point where the channel fails complete positivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpViolation {
    pub t: f64,
    pub channel: PauliChannel,
}

/// Times at which the number of permanently vanishing eigenvalues
/// increases; `None` means "not within the grid".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularPoints {
    /// Ordered `t1 ≤ t2 ≤ t3`.
    pub times: [Option<f64>; 3],
    /// Vanishing time of each axis.
    pub per_axis: [Option<f64>; 3],
}

impl SingularPoints {
    pub fn from_axes(per_axis: [Option<f64>; 3]) -> Self {
        let mut times = per_axis;
        // None sorts as +∞
        times.sort_by(|a, b| a.unwrap_or(f64::INFINITY).total_cmp(&b.unwrap_or(f64::INFINITY)));
        Self { times, per_axis }
    }

    pub fn is_invertible(&self) -> bool {
        self.times[0].is_none()
    }

    /// `t1, t2, t3` with `+∞` for missing entries.
    pub fn as_f64(&self) -> [f64; 3] {
        self.times.map(|t| t.unwrap_or(f64::INFINITY))
    }
}

/// Eigenvalues and one-sided derivatives tabulated on evaluation times.
#[derive(Debug, Clone)]
pub struct TrajectorySamples {
    pub times: Vec<f64>,
    pub values: Vec<[f64; 3]>,
    pub derivatives: Vec<[f64; 3]>,
    pub left_derivatives: Vec<[f64; 3]>,
    /// Whether the point is a kink of some axis.
    pub is_kink: Vec<bool>,
    /// Size of the uniform grid the samples were built from.
    pub uniform_points: usize,
}

impl TrajectorySamples {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn channel(&self, i: usize) -> PauliChannel {
        PauliChannel { eigs: self.values[i] }
    }
}

impl EigTrajectory {
    pub fn new(axes: [AxisFn; 3]) -> Self {
        Self { axes }
    }

    /// Single dephasing channel that leaves `fixed` untouched and scales the
    /// other two axes by `λ(t)`.
    pub fn phase_damping(profile: ScalarProfile, fixed: Axis) -> Self {
        let axes = Axis::ALL.map(|a| {
            if a == fixed {
                AxisFn::Profile(ScalarProfile::constant(1.0))
            } else {
                AxisFn::Profile(profile.clone())
            }
        });
        Self { axes }
    }

    /// Depolarizing-type trajectory with all three eigenvalues equal to `λ(t)`.
    pub fn isotropic(profile: ScalarProfile) -> Self {
        Self { axes: [0, 1, 2].map(|_| AxisFn::Profile(profile.clone())) }
    }

    pub fn from_profiles(l1: ScalarProfile, l2: ScalarProfile, l3: ScalarProfile) -> Self {
        Self { axes: [AxisFn::Profile(l1), AxisFn::Profile(l2), AxisFn::Profile(l3)] }
    }

    pub fn axis(&self, a: Axis) -> &AxisFn {
        &self.axes[a.index()]
    }

    pub fn is_sampled(&self) -> bool {
        self.axes.iter().any(|a| a.profile().is_sampled())
    }

    pub fn default_zero_tol(&self) -> f64 {
        if self.is_sampled() {
            DEFAULT_SAMPLED_ZERO_TOL
        } else {
            DEFAULT_ZERO_TOL
        }
    }

    pub fn domain_end(&self) -> f64 {
        self.axes.iter().map(|a| a.profile().domain_end()).fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, t: f64) -> Result<PauliChannel> {
        let end = self.domain_end();
        if !(0.0..=end).contains(&t) {
            return Err(Error::OutOfRange { t, start: 0.0, end });
        }
        Ok(self.value(t))
    }

    pub(crate) fn value(&self, t: f64) -> PauliChannel {
        PauliChannel { eigs: [0, 1, 2].map(|i| self.axes[i].value(t)) }
    }

    /// Right-hand derivative of `λα` at `t`.
    pub fn derivative(&self, t: f64, axis: Axis) -> f64 {
        self.axes[axis.index()].derivative(t)
    }

    pub fn derivatives(&self, t: f64) -> [f64; 3] {
        [0, 1, 2].map(|i| self.axes[i].derivative(t))
    }

    pub fn left_derivatives(&self, t: f64) -> [f64; 3] {
        [0, 1, 2].map(|i| self.axes[i].left_derivative(t))
    }

    /// Whether the trajectory starts at the identity channel.
    pub fn starts_at_identity(&self, tol: f64) -> bool {
        self.value(0.0).eigs.iter().all(|l| (l - 1.0).abs() <= tol)
    }

    /// Kinks of any axis inside `(0, t_max]`.
    pub fn kinks(&self, t_max: f64) -> Vec<f64> {
        let mut v: Vec<f64> = self.axes.iter().flat_map(|a| a.profile().kinks(t_max)).collect();
        sort_dedup(&mut v);
        v
    }

    /// Points where some eigenvalue vanishes, inside `[0, t_max]`.
    pub fn zero_times(&self, t_max: f64) -> Vec<f64> {
        let mut v: Vec<f64> = self.axes.iter().flat_map(|a| a.zeros(t_max)).collect();
        sort_dedup(&mut v);
        v
    }

    /// The times all grid-based verdicts are evaluated on: the uniform grid,
    /// every monotonicity break, kink and zero of the eigenvalues, a
    /// geometric refinement to the left of kinks, zeros and `t_max`, and a midpoint in
    /// every monotone piece the uniform grid would otherwise skip.
    pub fn evaluation_times(&self, grid: &Grid) -> Result<Vec<f64>> {
        let end = self.domain_end();
        if grid.t_max > end {
            return Err(Error::InvalidGrid(format!(
                "t_max = {} exceeds the sampled range of the trajectory (ends at {end})",
                grid.t_max
            )));
        }
        let t_max = grid.t_max;
        let h = grid.step();
        let mut times = grid.times();

        let mut breaks: Vec<f64> = self.axes.iter().flat_map(|a| a.profile().monotone_breaks(t_max)).collect();
        breaks.extend(self.kinks(t_max));
        sort_dedup(&mut breaks);

        let mut critical = self.kinks(t_max);
        critical.extend(self.zero_times(t_max));
        sort_dedup(&mut critical);

        times.extend(breaks.iter().copied());
        times.extend(critical.iter().copied());
        critical.push(t_max);
        for &c in &critical {
            for j in 1..=LEFT_REFINEMENT {
                let t = c - h * 0.5f64.powi(j);
                if t > 0.0 {
                    times.push(t);
                }
            }
        }
        sort_dedup(&mut times);

        let mut pieces = Vec::with_capacity(breaks.len() + 2);
        pieces.push(0.0);
        pieces.extend(breaks.iter().copied());
        pieces.push(t_max);
        let mut extra = Vec::new();
        for w in pieces.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let k = times.partition_point(|&t| t <= lo);
            let inside = times.get(k).is_some_and(|&t| t < hi);
            if !inside && hi > lo {
                extra.push(0.5 * (lo + hi));
            }
        }
        times.extend(extra);
        sort_dedup(&mut times);
        Ok(times)
    }

    /// Tabulate eigenvalues and derivatives on [`Self::evaluation_times`].
    pub fn sample(&self, grid: &Grid) -> Result<TrajectorySamples> {
        let times = self.evaluation_times(grid)?;
        let kinks = self.kinks(grid.t_max);
        let values = times.iter().map(|&t| self.value(t).eigs).collect();
        let derivatives = times.iter().map(|&t| self.derivatives(t)).collect();
        let left_derivatives = times.iter().map(|&t| self.left_derivatives(t)).collect();
        let is_kink = times.iter().map(|t| kinks.iter().any(|k| k == t)).collect();
        Ok(TrajectorySamples { times, values, derivatives, left_derivatives, is_kink, uniform_points: grid.n })
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1.0));
}

/// Every evaluation time at which the channel is not completely positive.
pub fn validate(tr: &EigTrajectory, grid: &Grid, tol: f64) -> Result<Vec<CpViolation>> {
    let times = tr.evaluation_times(grid)?;
    Ok(times
        .into_iter()
        .filter_map(|t| {
            let channel = tr.value(t);
            (!channel.is_cp(tol)).then_some(CpViolation { t, channel })
        })
        .collect())
}

/// Earliest time after which each eigenvalue stays inside the zero band
/// until the end of the grid.
pub fn find_singular_points(tr: &EigTrajectory, grid: &Grid, zero_tol: f64) -> Result<SingularPoints> {
    Ok(singular_points_of(&tr.sample(grid)?, zero_tol))
}

pub(crate) fn singular_points_of(samples: &TrajectorySamples, zero_tol: f64) -> SingularPoints {
    let per_axis = [0, 1, 2].map(|a| {
        let mut first = None;
        for (i, v) in samples.values.iter().enumerate().rev() {
            if v[a].abs() < zero_tol {
                first = Some(samples.times[i]);
            } else {
                break;
            }
        }
        first
    });
    SingularPoints::from_axes(per_axis)
}
