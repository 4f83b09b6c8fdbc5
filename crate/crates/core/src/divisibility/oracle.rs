//! Brute-force divisibility verdict from propagators between grid points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::{
    propagator_between, Certificate, Condition, DivisibilityClass, DivisibilityVerdict, GridMetadata, Tolerances,
};
use crate::error::{Error, Result};
use crate::trajectory::{singular_points_of, EigTrajectory, Grid, TrajectorySamples};

/// Up to this many points every pair `s ≤ t` is checked.
const ALL_PAIRS_LIMIT: usize = 400;
/// Random pairs added to the adjacent ones above the limit.
const RANDOM_PAIRS: usize = 10_000;
const PAIR_SEED: u64 = 0;
/// Certificates kept per failure category.
const MAX_CERTIFICATES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Failure {
    Undefined,
    NotPositive,
    NotCp,
}

#[derive(Debug, Clone, Copy)]
struct PairFailure {
    kind: Failure,
    i: usize,
    j: usize,
    axis: Option<usize>,
    mu: [f64; 3],
}

fn check_pair(s: &TrajectorySamples, i: usize, j: usize, tol: &Tolerances) -> Option<PairFailure> {
    match propagator_between(s.times[i], &s.values[i], s.times[j], &s.values[j], tol.zero_tol) {
        Err(Error::IndivisibleAt { axis, .. }) => {
            Some(PairFailure { kind: Failure::Undefined, i, j, axis: Some(axis), mu: [f64::NAN; 3] })
        }
        Err(_) => unreachable!("propagator_between only fails with IndivisibleAt"),
        Ok(v) => {
            let kind = if !v.channel.is_positive(tol.tol) {
                Failure::NotPositive
            } else if !v.channel.is_cp(tol.tol) {
                Failure::NotCp
            } else {
                return None;
            };
            Some(PairFailure { kind, i, j, axis: None, mu: v.channel.eigs })
        }
    }
}

fn pairs_for(n: usize) -> Vec<(usize, usize)> {
    if n <= ALL_PAIRS_LIMIT {
        return (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    }
    let mut pairs: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SEED);
    for _ in 0..RANDOM_PAIRS {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        pairs.push((a.min(b), a.max(b)));
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Brute-force verdict: build `V(t,s)` for grid pairs `s ≤ t`. Any undefined
/// propagator means indivisible; otherwise the map is P- or CP-divisible
/// exactly when every propagator is positive or completely positive.
pub fn oracle_classify(tr: &EigTrajectory, grid: &Grid, tol: &Tolerances) -> Result<DivisibilityVerdict> {
    let s = tr.sample(grid)?;
    Ok(oracle_classify_samples(&s, grid, tol))
}

pub(crate) fn oracle_classify_samples(s: &TrajectorySamples, grid: &Grid, tol: &Tolerances) -> DivisibilityVerdict {
    let pairs = pairs_for(s.len());
    // failures per category, first few in (s, t) order; deterministic under
    // any rayon schedule because chunks are merged in index order
    let merged = pairs
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = Accumulator::default();
            for &(i, j) in chunk {
                if let Some(f) = check_pair(s, i, j, tol) {
                    acc.push(f);
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Accumulator::default(), Accumulator::merge);

    let (class, failures) = if !merged.undefined.is_empty() {
        (DivisibilityClass::Indivisible, merged.undefined)
    } else if !merged.not_positive.is_empty() {
        (DivisibilityClass::Divisible, merged.not_positive)
    } else if !merged.not_cp.is_empty() {
        (DivisibilityClass::PDivisible, merged.not_cp)
    } else {
        (DivisibilityClass::CPDivisible, Vec::new())
    };
    let certificates = failures.iter().map(|f| certificate(s, f)).collect();
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
            method: "propagator_oracle",
            grid_relative: true,
            tolerance_sensitive: super::tolerance_sensitive(s, tol),
            pairs_checked: Some(pairs.len()),
        },
    }
}

fn certificate(s: &TrajectorySamples, f: &PairFailure) -> Certificate {
    let (from, to) = (s.times[f.i], s.times[f.j]);
    match f.kind {
        Failure::Undefined => Certificate {
            condition: Condition::PropagatorUndefined,
            t: to,
            detail: json!({ "s": from, "axis": f.axis }),
        },
        Failure::NotPositive => Certificate {
            condition: Condition::PropagatorNotPositive,
            t: to,
            detail: json!({ "s": from, "eigenvalues": f.mu }),
        },
        Failure::NotCp => Certificate {
            condition: Condition::PropagatorNotCp,
            t: to,
            detail: json!({ "s": from, "eigenvalues": f.mu, "probabilities": crate::pauli::PauliChannel { eigs: f.mu }.probs().p }),
        },
    }
}

#[derive(Default)]
struct Accumulator {
    undefined: Vec<PairFailure>,
    not_positive: Vec<PairFailure>,
    not_cp: Vec<PairFailure>,
}

impl Accumulator {
    fn bucket(&mut self, kind: Failure) -> &mut Vec<PairFailure> {
        match kind {
            Failure::Undefined => &mut self.undefined,
            Failure::NotPositive => &mut self.not_positive,
            Failure::NotCp => &mut self.not_cp,
        }
    }

    fn push(&mut self, f: PairFailure) {
        let b = self.bucket(f.kind);
        if b.len() < MAX_CERTIFICATES {
            b.push(f);
        }
    }

    fn merge(mut self, other: Accumulator) -> Accumulator {
        for f in other.undefined.into_iter().chain(other.not_positive).chain(other.not_cp) {
            self.push(f);
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixtures::Mixture;
    use crate::profile::ScalarProfile;
    use crate::trajectory::Axis;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn pair_selection() {
        assert_eq!(pairs_for(3), vec![(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]);
        let big = pairs_for(1000);
        assert!(big.len() > 999 && big.len() <= 999 + RANDOM_PAIRS);
        assert!(big.contains(&(500, 501)));
        assert_eq!(big, pairs_for(1000));
    }

    #[test]
    fn oracle_examples() {
        let grid = Grid::new(3.0 * FRAC_PI_2, 300).unwrap();
        let tol = Tolerances::default();
        let tc = EigTrajectory::phase_damping(ScalarProfile::trunc_cos(1.0), Axis::Z);
        assert_eq!(oracle_classify(&tc, &grid, &tol).unwrap().class, DivisibilityClass::CPDivisible);

        let ex4 = Mixture::new([0.5, 0.5, 0.0], ScalarProfile::trunc_cos(1.0)).unwrap().to_trajectory();
        let v = oracle_classify(&ex4, &grid, &tol).unwrap();
        assert_eq!(v.class, DivisibilityClass::PDivisible);
        assert!(v.has_certificate(Condition::PropagatorNotCp));

        let cos = EigTrajectory::phase_damping(ScalarProfile::cos(1.0), Axis::Z);
        let v = oracle_classify(&cos, &grid, &tol).unwrap();
        assert_eq!(v.class, DivisibilityClass::Indivisible);
        let first = &v.certificates[0];
        assert!((first.detail["s"].as_f64().unwrap() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn oracle_is_deterministic() {
        let grid = Grid::new(10.0, 900).unwrap();
        let tr = Mixture::new([0.5, 0.5, 0.0], ScalarProfile::exp(1.0)).unwrap().to_trajectory();
        let a = oracle_classify(&tr, &grid, &Tolerances::default()).unwrap();
        let b = oracle_classify(&tr, &grid, &Tolerances::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class, DivisibilityClass::PDivisible);
    }
}
