//! Decoherence rates of the time-local generator.
//!
//! With `L(t) = Σ γα(t) Lα` and `Lα[ρ] = ½(σα ρ σα − ρ)` the eigenvalues obey
//! `λα = exp(Γα − Γ0)`, `Γα = ∫γα`, `Γ0 = Γ1 + Γ2 + Γ3`. Hence
//! `λ̇α/λα = γα − γ0` and every eigenvalue only depends on the sum of the
//! two *other* rates: `λα = exp(−∫(γβ + γγ))`. Integrating these pair sums
//! keeps finite what the individual rates would make infinite.

use std::fmt;
use std::sync::Arc;

use ode_solvers::{Dopri5, System, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::ScalarProfile;
use crate::trajectory::{Axis, EigTrajectory, Grid};

const QUAD_TOL: f64 = 1e-10;
const ODE_RTOL: f64 = 1e-9;
const ODE_ATOL: f64 = 1e-12;
/// Eigenvalues may exceed one by this much before the rates are rejected.
const ABOVE_ONE: f64 = 1e-9;

type RateFn = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

#[derive(Clone)]
enum Rates {
    Constant([f64; 3]),
    Function(RateFn),
    /// Piecewise linear in `t`.
    Sampled {
        times: Vec<f64>,
        values: Vec<[f64; 3]>,
    },
}

/// Three decoherence rates `γα(t)` plus the times at which they may diverge.
#[derive(Clone)]
pub struct RateTriple {
    rates: Rates,
    divergences: Vec<f64>,
}

impl fmt::Debug for RateTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.rates {
            Rates::Constant(g) => format!("Constant({g:?})"),
            Rates::Function(_) => "Function".to_string(),
            Rates::Sampled { times, .. } => format!("Sampled({} points)", times.len()),
        };
        f.debug_struct("RateTriple").field("rates", &kind).field("divergences", &self.divergences).finish()
    }
}

impl RateTriple {
    pub fn constant(gamma: [f64; 3]) -> Self {
        Self { rates: Rates::Constant(gamma), divergences: Vec::new() }
    }

    /// Closed-form rates. `divergences` lists the times where some rate is
    /// allowed to blow up; the function is never evaluated exactly there.
    pub fn from_fn(f: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static, mut divergences: Vec<f64>) -> Self {
        divergences.sort_by(f64::total_cmp);
        divergences.dedup();
        Self { rates: Rates::Function(Arc::new(f)), divergences }
    }

    /// Rates tabulated at `times`, linearly interpolated in between.
    pub fn sampled(times: Vec<f64>, values: Vec<[f64; 3]>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidProfile(format!("rate samples: {m}")));
        if times.len() != values.len() || times.len() < 2 {
            return bad("need at least two samples with matching lengths");
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("times must start at 0 and increase strictly");
        }
        if times.iter().chain(values.iter().flatten()).any(|v| !v.is_finite()) {
            return bad("non-finite entry");
        }
        Ok(Self { rates: Rates::Sampled { times, values }, divergences: Vec::new() })
    }

    /// Rates of the equal-weight mixture of the axis-1 and axis-2 truncated
    /// cosine dephasing maps: `γ1 = γ2 = (ω/2) tan ωt`,
    /// `γ3 = −(ω/2) tan ωt (1 − cos ωt)/(1 + cos ωt)` before `π/2ω`, zero after.
    pub fn trunc_cos_pair_mixture(omega: f64) -> Self {
        let t_star = std::f64::consts::FRAC_PI_2 / omega;
        Self::from_fn(
            move |t| {
                if t >= t_star {
                    return [0.0; 3];
                }
                let (tan, c) = ((omega * t).tan(), (omega * t).cos());
                let g = 0.5 * omega * tan;
                [g, g, -g * (1.0 - c) / (1.0 + c)]
            },
            vec![t_star],
        )
    }

    pub fn divergences(&self) -> &[f64] {
        &self.divergences
    }

    /// `(γ1, γ2, γ3)` at `t`.
    pub fn at(&self, t: f64) -> [f64; 3] {
        match &self.rates {
            Rates::Constant(g) => *g,
            Rates::Function(f) => f(t),
            Rates::Sampled { times, values } => {
                let k = times.partition_point(|&x| x <= t).saturating_sub(1).min(times.len() - 2);
                let w = ((t - times[k]) / (times[k + 1] - times[k])).clamp(0.0, 1.0);
                [0, 1, 2].map(|a| values[k][a] + w * (values[k + 1][a] - values[k][a]))
            }
        }
    }

    /// `γβ + γγ` for the two axes other than `axis`, i.e. `−λ̇α/λα`.
    fn pair_sum(&self, axis: usize, t: f64) -> f64 {
        let g = self.at(t);
        g[(axis + 1) % 3] + g[(axis + 2) % 3]
    }

    /// `∫_u^v (γβ + γγ)` for the pair complementary to `axis`.
    fn pair_integral(&self, axis: usize, u: f64, v: f64, abs_tol: f64) -> f64 {
        match &self.rates {
            Rates::Constant(g) => (g[(axis + 1) % 3] + g[(axis + 2) % 3]) * (v - u),
            Rates::Function(_) => {
                quadrature::double_exponential::integrate(|t| self.pair_sum(axis, t), u, v, abs_tol).integral
            }
            Rates::Sampled { times, .. } => {
                // exact for the piecewise-linear interpolant
                let mut nodes = vec![u];
                nodes.extend(times.iter().copied().filter(|&x| x > u && x < v));
                nodes.push(v);
                nodes
                    .windows(2)
                    .map(|w| 0.5 * (w[1] - w[0]) * (self.pair_sum(axis, w[0]) + self.pair_sum(axis, w[1])))
                    .sum()
            }
        }
    }

    /// Sign of the divergence of `∫_u^{d} (γβ + γγ)` at `d`, if it diverges.
    ///
    /// Probes `∫_u^{d−δ}` on `δ = (d−u)·10^{−k}`: a convergent integral has
    /// increments shrinking with `δ`, a log-type or worse divergence has
    /// increments that do not.
    fn pair_divergence(&self, axis: usize, u: f64, d: f64) -> Option<f64> {
        let width = d - u;
        let probes: Vec<f64> =
            (1..=9).map(|k| self.pair_integral(axis, u, d - width * 10f64.powi(-k), QUAD_TOL)).collect();
        let inc: Vec<f64> = probes.windows(2).map(|w| w[1] - w[0]).collect();
        let n = inc.len();
        let growing = inc[n - 3..].windows(2).all(|w| w[1].signum() == w[0].signum() && w[1].abs() >= 0.5 * w[0].abs());
        (growing && inc[n - 1].abs() > 1e-3).then(|| inc[n - 1].signum())
    }
}

/// `(γ1, γ2, γ3)` at `t` from `ℓα = λ̇α/λα`:
/// `γ1 = ½(ℓ1 − ℓ2 − ℓ3)` and cyclically.
pub fn rates_from_eigs(tr: &EigTrajectory, t: f64, zero_tol: f64) -> Result<[f64; 3]> {
    let values = tr.eval(t)?.eigs;
    if let Some(a) = (0..3).find(|&a| values[a].abs() <= zero_tol) {
        return Err(Error::SingularGenerator { t, axis: a + 1, value: values[a] });
    }
    let d = tr.derivatives(t);
    let l = [0, 1, 2].map(|a| d[a] / values[a]);
    Ok([0, 1, 2].map(|a| 0.5 * (l[a] - l[(a + 1) % 3] - l[(a + 2) % 3])))
}

/// Eigenvalue trajectory generated by `rates`, tabulated on the grid plus
/// every flagged divergence time.
///
/// A pair sum whose integral runs to `+∞` at a divergence time sends the
/// corresponding eigenvalue to zero there and it stays zero. A run to `−∞`,
/// or any eigenvalue above one, is rejected.
pub fn eigs_from_rates(rates: &RateTriple, grid: &Grid) -> Result<EigTrajectory> {
    let mut times = grid.times();
    times.extend(rates.divergences.iter().copied().filter(|&d| d > 0.0 && d < grid.t_max));
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));

    let mut exponent = [0.0f64; 3];
    let mut dead = [false; 3];
    let mut values: [Vec<f64>; 3] = [vec![1.0], vec![1.0], vec![1.0]];
    for w in times.windows(2) {
        let (u, v) = (w[0], w[1]);
        let ends_at_divergence = rates.divergences.iter().any(|&d| (d - v).abs() <= 1e-12 * v.max(1.0));
        let abs_tol = QUAD_TOL * (v - u) / grid.t_max;
        for a in 0..3 {
            if dead[a] {
                values[a].push(0.0);
                continue;
            }
            if ends_at_divergence {
                match rates.pair_divergence(a, u, v) {
                    Some(s) if s > 0.0 => {
                        dead[a] = true;
                        values[a].push(0.0);
                        continue;
                    }
                    Some(_) => return Err(Error::NonIntegrableRates { t: v, axis: a + 1 }),
                    None => {}
                }
            }
            exponent[a] += rates.pair_integral(a, u, v, abs_tol);
            let lambda = (-exponent[a]).exp();
            if !lambda.is_finite() || lambda > 1.0 + ABOVE_ONE {
                return Err(Error::NonIntegrableRates { t: v, axis: a + 1 });
            }
            values[a].push(lambda.min(1.0));
        }
    }
    let [l1, l2, l3] = values.map(|v| ScalarProfile::samples(times.clone(), v));
    Ok(EigTrajectory::from_profiles(l1?, l2?, l3?))
}

struct Decoupled<'a> {
    tr: &'a EigTrajectory,
    zero_tol: f64,
}

impl System<f64, Vector3<f64>> for Decoupled<'_> {
    fn system(&self, t: f64, y: &Vector3<f64>, dy: &mut Vector3<f64>) {
        let g = rates_from_eigs(self.tr, t, self.zero_tol).unwrap_or([f64::NAN; 3]);
        let g0 = g[0] + g[1] + g[2];
        for a in 0..3 {
            dy[a] = (g[a] - g0) * y[a];
        }
    }
}

/// Extracts the rates of `tr`, integrates `λ̇α = (γα − γ0)λα` from the
/// identity with an adaptive Dormand–Prince scheme and returns the largest
/// deviation from `tr` on the grid.
///
/// The trajectory must be invertible on `[0, t_max]`.
pub fn ode_roundtrip(tr: &EigTrajectory, grid: &Grid) -> Result<f64> {
    let zero_tol = tr.default_zero_tol();
    let samples = tr.sample(grid)?;
    if let Some(i) = samples.values.iter().position(|v| v.iter().any(|l| l.abs() <= zero_tol)) {
        return Err(Error::Precondition(format!(
            "trajectory is not invertible on [0, {}]: an eigenvalue vanishes at t = {}",
            grid.t_max, samples.times[i]
        )));
    }
    let system = Decoupled { tr, zero_tol };
    let mut stepper =
        Dopri5::new(system, 0.0, grid.t_max, grid.step(), Vector3::new(1.0, 1.0, 1.0), ODE_RTOL, ODE_ATOL);
    stepper.integrate().map_err(|e| Error::Precondition(format!("rate integration failed: {e}")))?;
    let mut worst = 0.0f64;
    for (t, y) in stepper.x_out().iter().zip(stepper.y_out()) {
        let exact = tr.value(t.min(grid.t_max)).eigs;
        for a in 0..3 {
            worst = worst.max((y[a] - exact[a]).abs());
        }
    }
    Ok(worst)
}

/// Limit of a pair of rates approaching a singular time from the left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumLimit {
    /// The limit, or `±∞` for a divergent sum.
    pub value: f64,
    /// Estimated absolute error; infinite for a divergent sum.
    pub error: f64,
    pub divergent: bool,
}

const LIMIT_LEVELS: usize = 12;
const RICHARDSON_COLUMNS: usize = 5;

/// `lim γi(t) + γj(t)` as `t → t_star⁻`, by Richardson extrapolation on
/// `t_star − h0·2^{−k}`.
///
/// `t_star` must be a time at which some eigenvalue vanishes.
pub fn rate_sum_limit(tr: &EigTrajectory, pair: (Axis, Axis), t_star: f64) -> Result<SumLimit> {
    let (i, j) = (pair.0.index(), pair.1.index());
    if i == j {
        return Err(Error::Precondition("rate_sum_limit needs two distinct axes".into()));
    }
    let zero_tol = tr.default_zero_tol();
    let at_star = tr.eval(t_star)?.eigs;
    if t_star.is_nan() || t_star <= 0.0 || at_star.iter().all(|l| l.abs() >= zero_tol) {
        return Err(Error::Precondition(format!("no eigenvalue vanishes at t_star = {t_star}")));
    }
    let h0 = 0.05 * t_star;
    let mut f = Vec::with_capacity(LIMIT_LEVELS);
    for k in 0..LIMIT_LEVELS {
        let t = t_star - h0 * 0.5f64.powi(k as i32);
        match rates_from_eigs(tr, t, zero_tol) {
            Ok(g) => f.push(g[i] + g[j]),
            Err(Error::SingularGenerator { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    if f.len() < 4 {
        return Err(Error::Precondition(format!("rates are singular too far before t_star = {t_star} to extrapolate")));
    }

    let d: Vec<f64> = f.windows(2).map(|w| w[1] - w[0]).collect();
    let n = d.len();
    let growing = d[n - 3..].windows(2).all(|w| w[1].signum() == w[0].signum() && w[1].abs() >= 0.8 * w[0].abs());
    if growing && f[f.len() - 1].abs() > 1.0 {
        let s = d[n - 1].signum();
        return Ok(SumLimit { value: s * f64::INFINITY, error: f64::INFINITY, divergent: true });
    }

    // error expansion in powers of h; halving h gives factor 2^m per column
    let mut prev: Vec<f64> = Vec::new();
    let (mut best, mut err) = (f[0], f64::INFINITY);
    for (k, &fk) in f.iter().enumerate() {
        let mut row = vec![fk];
        for m in 1..=k.min(RICHARDSON_COLUMNS) {
            let p = 2f64.powi(m as i32);
            row.push((p * row[m - 1] - prev[m - 1]) / (p - 1.0));
        }
        let m = row.len() - 1;
        if m > 0 {
            best = row[m];
            err = (row[m] - row[m - 1]).abs();
            if m < prev.len() {
                err = err.max((row[m] - prev[m]).abs());
            }
        }
        prev = row;
    }
    Ok(SumLimit { value: best, error: err, divergent: false })
}
