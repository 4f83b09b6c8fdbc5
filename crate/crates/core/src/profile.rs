//! Scalar eigenvalue profiles `λ(t)`.
//!
//! Closed-form profiles carry analytic derivatives; sampled profiles use a
//! shape-preserving (monotone) piecewise cubic Hermite interpolant so that no
//! spurious sign changes of `λ̇` are introduced between samples.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the `λ(0) = 1` requirement.
const INITIAL_VALUE_TOL: f64 = 1e-9;

/// A scalar dephasing profile.
///
/// JSON form is internally tagged by `"kind"`, e.g.
/// `{"kind": "damped_cos", "z": 0.2, "omega": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarProfile {
    /// `e^{−rt}`
    Exp {
        #[serde(rename = "r")]
        rate: f64,
    },
    /// `cos ωt`
    Cos { omega: f64 },
    /// `|cos ωt|`
    AbsCos { omega: f64 },
    /// `e^{−Zt} cos ωt`
    DampedCos {
        #[serde(rename = "z")]
        damping: f64,
        omega: f64,
    },
    /// `cos ωt` up to `π/2ω`, zero afterwards.
    TruncCos { omega: f64 },
    /// `(1 − u)(a u² + b u + c)/c` with `u = t/T` for `t < T`, zero afterwards.
    Cubic {
        a: f64,
        b: f64,
        c: f64,
        #[serde(rename = "T")]
        horizon: f64,
    },
    /// Monotone cubic interpolation through samples.
    Samples(SampledProfile),
    /// Constant value; only meaningful as an explicit axis, never as a
    /// dephasing profile (it does not start at the identity unless `value = 1`).
    Constant { value: f64 },
}

impl ScalarProfile {
    pub fn exp(rate: f64) -> Self {
        Self::Exp { rate }
    }

    pub fn cos(omega: f64) -> Self {
        Self::Cos { omega }
    }

    pub fn abs_cos(omega: f64) -> Self {
        Self::AbsCos { omega }
    }

    pub fn damped_cos(damping: f64, omega: f64) -> Self {
        Self::DampedCos { damping, omega }
    }

    pub fn trunc_cos(omega: f64) -> Self {
        Self::TruncCos { omega }
    }

    /// Piecewise cubic profile; fails unless `0 < b < a` and
    /// `(a+b)²/4a ≤ c < (a²+ab+b²)/3a`.
    pub fn cubic(a: f64, b: f64, c: f64, horizon: f64) -> Result<Self> {
        let p = Self::Cubic { a, b, c, horizon };
        p.check_params()?;
        Ok(p)
    }

    pub fn samples(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self::Samples(SampledProfile::new(times, values)?))
    }

    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Exp { .. } => "exp",
            Self::Cos { .. } => "cos",
            Self::AbsCos { .. } => "abs_cos",
            Self::DampedCos { .. } => "damped_cos",
            Self::TruncCos { .. } => "trunc_cos",
            Self::Cubic { .. } => "cubic",
            Self::Samples(_) => "samples",
            Self::Constant { .. } => "constant",
        }
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self, Self::Samples(_))
    }

    /// Parameter constraints of each preset.
    pub fn check_params(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProfile(msg));
        let positive = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidProfile(format!("{name} must be a positive finite number, got {v}")))
            }
        };
        match *self {
            Self::Exp { rate } => positive("r", rate),
            Self::Cos { omega } | Self::AbsCos { omega } | Self::TruncCos { omega } => positive("omega", omega),
            Self::DampedCos { damping, omega } => {
                positive("z", damping)?;
                positive("omega", omega)
            }
            Self::Cubic { a, b, c, horizon } => {
                positive("T", horizon)?;
                if ![a, b, c].iter().all(|v| v.is_finite()) {
                    return bad("cubic parameters must be finite".into());
                }
                if !(0.0 < b && b < a) {
                    return bad(format!("cubic requires 0 < b < a, got a = {a}, b = {b}"));
                }
                let lower = (a + b).powi(2) / (4.0 * a);
                let upper = (a * a + a * b + b * b) / (3.0 * a);
                if !(lower <= c && c < upper) {
                    return bad(format!("cubic requires {lower} <= c < {upper}, got c = {c}"));
                }
                Ok(())
            }
            Self::Samples(_) => Ok(()),
            Self::Constant { value } => {
                if value.is_finite() && value.abs() <= 1.0 {
                    Ok(())
                } else {
                    bad(format!("constant value must lie in [-1, 1], got {value}"))
                }
            }
        }
    }

    /// Full validation of a dephasing profile: parameters plus `λ(0) = 1`.
    pub fn validate(&self) -> Result<()> {
        self.check_params()?;
        let v0 = self.value(0.0);
        if (v0 - 1.0).abs() > INITIAL_VALUE_TOL {
            return Err(Error::InvalidProfile(format!(
                "{} profile does not start at the identity: λ(0) = {v0}",
                self.kind()
            )));
        }
        Ok(())
    }

    /// Last time at which the profile is defined.
    pub fn domain_end(&self) -> f64 {
        match self {
            Self::Samples(s) => *s.times.last().unwrap(),
            _ => f64::INFINITY,
        }
    }

    /// `λ(t)`, failing for negative times and outside the sampled range.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let end = self.domain_end();
        if !(0.0..=end).contains(&t) {
            return Err(Error::OutOfRange { t, start: 0.0, end });
        }
        Ok(self.value(t))
    }

    /// Unchecked evaluation; sampled profiles are clamped to their range.
    pub(crate) fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Exp { rate } => (-rate * t).exp(),
            Self::Cos { omega } => (omega * t).cos(),
            Self::AbsCos { omega } => (omega * t).cos().abs(),
            Self::DampedCos { damping, omega } => (-damping * t).exp() * (omega * t).cos(),
            Self::TruncCos { omega } => {
                if omega * t < FRAC_PI_2 {
                    (omega * t).cos()
                } else {
                    0.0
                }
            }
            Self::Cubic { a, b, c, horizon } => {
                let u = t / horizon;
                if u < 1.0 {
                    (1.0 - u) * (a * u * u + b * u + c) / c
                } else {
                    0.0
                }
            }
            Self::Samples(ref s) => s.value(t),
            Self::Constant { value } => value,
        }
    }

    /// `λ̇(t)`. At kinks the right-hand derivative is returned.
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Exp { rate } => -rate * (-rate * t).exp(),
            Self::Cos { omega } => -omega * (omega * t).sin(),
            Self::AbsCos { omega } => {
                let (s, c) = (omega * t).sin_cos();
                if c.abs() < 1e-12 {
                    // kink: |cos| grows on the right
                    omega * s.abs()
                } else {
                    -omega * s * c.signum()
                }
            }
            Self::DampedCos { damping, omega } => {
                let (s, c) = (omega * t).sin_cos();
                (-damping * t).exp() * (-damping * c - omega * s)
            }
            Self::TruncCos { omega } => {
                if omega * t < FRAC_PI_2 {
                    -omega * (omega * t).sin()
                } else {
                    0.0
                }
            }
            Self::Cubic { a, b, c, horizon } => {
                let u = t / horizon;
                if u < 1.0 {
                    (-3.0 * a * u * u + 2.0 * (a - b) * u + (b - c)) / (c * horizon)
                } else {
                    0.0
                }
            }
            Self::Samples(ref s) => s.derivative(t),
            Self::Constant { .. } => 0.0,
        }
    }

    /// Left-hand derivative; differs from [`Self::derivative`] only at kinks.
    pub fn left_derivative(&self, t: f64) -> f64 {
        match *self {
            Self::AbsCos { omega } => {
                let (s, c) = (omega * t).sin_cos();
                if c.abs() < 1e-12 {
                    -omega * s.abs()
                } else {
                    -omega * s * c.signum()
                }
            }
            Self::TruncCos { omega } if omega * t <= FRAC_PI_2 + 1e-15 => -omega * (omega * t).sin(),
            Self::Cubic { a, b, c, horizon } if t <= horizon => {
                let u = t / horizon;
                (-3.0 * a * u * u + 2.0 * (a - b) * u + (b - c)) / (c * horizon)
            }
            Self::Samples(ref s) => s.left_derivative(t),
            _ => self.derivative(t),
        }
    }

    /// Points in `(0, t_max]` where the profile is not differentiable.
    pub fn kinks(&self, t_max: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match *self {
            Self::AbsCos { omega } => {
                let mut k = 0.0;
                loop {
                    let t = (k + 0.5) * PI / omega;
                    if t > t_max {
                        break;
                    }
                    out.push(t);
                    k += 1.0;
                }
            }
            Self::TruncCos { omega } => out.push(FRAC_PI_2 / omega),
            Self::Cubic { horizon, .. } => out.push(horizon),
            _ => {}
        }
        out.retain(|&t| t > 0.0 && t <= t_max);
        out
    }

    /// Points in `(0, t_max)` splitting the domain into pieces on which the
    /// profile is monotone. Always includes the kinks.
    pub fn monotone_breaks(&self, t_max: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut periodic = |first: f64, step: f64| {
            let mut k = 0.0;
            loop {
                let t = first + k * step;
                if t >= t_max {
                    break;
                }
                if t > 0.0 {
                    out.push(t);
                }
                k += 1.0;
            }
        };
        match *self {
            Self::Cos { omega } => periodic(PI / omega, PI / omega),
            Self::AbsCos { omega } => periodic(FRAC_PI_2 / omega, FRAC_PI_2 / omega),
            Self::DampedCos { damping, omega } => {
                // λ̇ = 0 where tan ωt = −Z/ω
                let phase = (damping / omega).atan();
                periodic((PI - phase) / omega, PI / omega)
            }
            Self::TruncCos { omega } => out.push(FRAC_PI_2 / omega),
            Self::Cubic { a, b, c, horizon } => {
                let qa = -3.0 * a;
                let qb = 2.0 * (a - b);
                let qc = b - c;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    for u in [(-qb + sq) / (2.0 * qa), (-qb - sq) / (2.0 * qa)] {
                        if u > 0.0 && u < 1.0 {
                            out.push(u * horizon);
                        }
                    }
                }
                out.push(horizon);
            }
            Self::Samples(ref s) => out.extend(s.times.iter().copied()),
            Self::Exp { .. } | Self::Constant { .. } => {}
        }
        out.retain(|&t| t > 0.0 && t < t_max);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Times in `[0, t_max]` at which `f(t) = level`, found by bisection on
/// monotone pieces. A piece endpoint within `touch` of the level counts as a
/// root even without a sign change.
pub(crate) fn level_crossings(f: impl Fn(f64) -> f64, breaks: &[f64], t_max: f64, level: f64, touch: f64) -> Vec<f64> {
    let mut nodes = Vec::with_capacity(breaks.len() + 2);
    nodes.push(0.0);
    nodes.extend(breaks.iter().copied().filter(|&t| t > 0.0 && t < t_max));
    nodes.push(t_max);
    let g = |t: f64| f(t) - level;
    let mut roots = Vec::new();
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (glo, ghi) = (g(lo), g(hi));
        if glo.abs() <= touch {
            roots.push(lo);
        }
        if ghi.abs() <= touch {
            roots.push(hi);
            continue;
        }
        if glo.abs() > touch && glo.signum() != ghi.signum() {
            roots.push(bisect(&g, lo, hi, glo));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut glo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    // the endpoint closer to the level
    if g(lo).abs() <= g(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Sampled profile with a shape-preserving cubic Hermite interpolant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSamples", into = "RawSamples")]
pub struct SampledProfile {
    times: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSamples {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawSamples> for SampledProfile {
    type Error = Error;

    fn try_from(raw: RawSamples) -> Result<Self> {
        SampledProfile::new(raw.times, raw.values)
    }
}

impl From<SampledProfile> for RawSamples {
    fn from(s: SampledProfile) -> Self {
        RawSamples { times: s.times, values: s.values }
    }
}

impl SampledProfile {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidProfile(msg.to_string()));
        if times.len() != values.len() {
            return bad("samples: times and values differ in length");
        }
        if times.len() < 2 {
            return bad("samples: at least two samples are required");
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return bad("samples: non-finite entry");
        }
        if times[0] != 0.0 {
            return bad("samples: first sample time must be 0");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("samples: times must be strictly increasing");
        }
        if values.iter().any(|v| v.abs() > 1.0) {
            return bad("samples: values must lie in [-1, 1]");
        }
        let slopes = pchip_slopes(&times, &values);
        Ok(Self { times, values, slopes })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index `k` of the interval `[t_k, t_{k+1})` containing `t`.
    fn interval(&self, t: f64) -> usize {
        let n = self.times.len();
        let k = self.times.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(n - 2)
    }

    fn hermite(&self, k: usize, t: f64) -> (f64, f64) {
        let h = self.times[k + 1] - self.times[k];
        let s = ((t - self.times[k]) / h).clamp(0.0, 1.0);
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k], self.slopes[k + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * m1;
        let slope = (6.0 * s2 - 6.0 * s) * y0 / h
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1 / h
            + (3.0 * s2 - 2.0 * s) * m1;
        (value, slope)
    }

    fn value(&self, t: f64) -> f64 {
        let k = self.interval(t);
        if t == self.times[k] {
            return self.values[k];
        }
        if t == self.times[k + 1] {
            return self.values[k + 1];
        }
        self.hermite(k, t).0
    }

    fn derivative(&self, t: f64) -> f64 {
        self.hermite(self.interval(t), t).1
    }

    fn left_derivative(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x < t);
        let k = k.saturating_sub(1).min(self.times.len() - 2);
        self.hermite(k, t).1
    }
}

/// Fritsch–Carlson style slopes: weighted harmonic means in the interior,
/// zero at local extrema, limited three-point formula at the ends.
fn pchip_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![d[0], d[0]];
    }
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        if d[k - 1] * d[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if m.signum() != d0.signum() || d0 == 0.0 {
            0.0
        } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            m
        }
    };
    m[0] = end(h[0], h[1], d[0], d[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}
