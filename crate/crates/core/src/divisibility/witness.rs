//! Trace-norm backflow witness.

use serde::Serialize;

use crate::error::Result;
use crate::pauli::{trace_norm, BlochState};
use crate::trajectory::{EigTrajectory, Grid};

pub const DEFAULT_DIRECTIONS: usize = 64;

const OFFSETS: [f64; 5] = [0.0, 0.5, -0.5, 1.0, -1.0];

/// A time at which `‖Λ(t)[X]‖₁` grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessHit {
    pub t: f64,
    pub x: BlochState,
    /// Finite-difference slope of the trace norm ending at `t`.
    pub derivative: f64,
}

/// Unit vectors on a Fibonacci lattice.
fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Scans `X = x0·I + x·σ` over `n_directions` unit vectors and
/// `x0 ∈ {0, ±½, ±1}` and reports every step between successive evaluation
/// times where `‖Λ(t)[X]‖₁` rises by more than `tol`.
///
/// An empty result is consistent with P-divisibility but does not prove it.
pub fn trace_norm_witness(tr: &EigTrajectory, grid: &Grid, n_directions: usize, tol: f64) -> Result<Vec<WitnessHit>> {
    let s = tr.sample(grid)?;
    let probes: Vec<BlochState> =
        fibonacci_sphere(n_directions).into_iter().flat_map(|x| OFFSETS.map(|x0| BlochState { x0, x })).collect();
    let mut hits = Vec::new();
    for i in 1..s.len() {
        let (before, after) = (s.channel(i - 1), s.channel(i));
        let dt = s.times[i] - s.times[i - 1];
        for x in &probes {
            let rise = trace_norm(&after.apply(x)) - trace_norm(&before.apply(x));
            if rise > tol {
                hits.push(WitnessHit { t: s.times[i], x: *x, derivative: rise / dt });
            }
        }
    }
    Ok(hits)
}
