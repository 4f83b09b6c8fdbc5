//! Acceptance suite. Runs with its own harness so that every criterion prints
//! a PASS or FAIL line, including on success:
//!
//! ```text
//! cargo test -p pauli-divisibility --test acceptance
//! ```

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pauli_divisibility::divisibility::DEFAULT_DIRECTIONS;
use pauli_divisibility::mixtures::prop2_cp_bound;
use pauli_divisibility::verify::{random_case, run_verify, Family, VerifyConfig};
use pauli_divisibility::{
    classify, ode_roundtrip, oracle_classify, rate_sum_limit, rates_from_eigs, trace_norm_witness, Axis, Condition,
    DivisibilityClass, EigTrajectory, Grid, Mixture, PauliChannel, ScalarProfile, Tolerances,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ex4(omega: f64) -> EigTrajectory {
    Mixture::new([0.5, 0.5, 0.0], ScalarProfile::trunc_cos(omega)).unwrap().to_trajectory()
}

fn c01_truncated_cosine_is_cp_divisible() -> Outcome {
    let omega = 1.0;
    let tr = EigTrajectory::phase_damping(ScalarProfile::trunc_cos(omega), Axis::Z);
    let grid = Grid::new(1.5 * PI / omega, 3000).unwrap();
    let tol = Tolerances::for_trajectory(&tr);
    let start = Instant::now();
    let v = classify(&tr, &grid, &tol).map_err(|e| e.to_string())?;
    let o = oracle_classify(&tr, &grid, &tol).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(v.class == DivisibilityClass::CPDivisible, format!("classify gave {}", v.class))?;
    ensure(o.class == v.class, format!("oracle gave {}", o.class))?;
    ensure(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!("{} evaluated points, {elapsed:.2?}", v.grid.evaluated_points))
}

fn c02_pair_mixture_block_and_certificate() -> Outcome {
    let omega = 1.3;
    let tr = ex4(omega);
    let t_star = FRAC_PI_2 / omega;
    let mut worst: f64 = 0.0;
    for k in 0..=400 {
        let t = 3.0 * t_star * k as f64 / 400.0;
        let (l12, l3) = if t <= t_star { ((1.0 + (omega * t).cos()) / 2.0, (omega * t).cos()) } else { (0.5, 0.0) };
        let got = tr.eval(t).map_err(|e| e.to_string())?.eigs;
        for (g, e) in got.iter().zip([l12, l12, l3]) {
            worst = worst.max((g - e).abs());
        }
    }
    ensure(worst <= 1e-12, format!("eigenvalue deviation {worst:e}"))?;

    let grid = Grid::new(3.0 * t_star, 600).unwrap();
    let v = classify(&tr, &grid, &Tolerances::for_trajectory(&tr)).map_err(|e| e.to_string())?;
    ensure(v.class == DivisibilityClass::PDivisible, format!("classify gave {}", v.class))?;
    let cert = v
        .certificates
        .iter()
        .find(|c| c.condition == Condition::TwoNonzeroEigenvalues)
        .ok_or("no two-nonzero-eigenvalue certificate")?;
    let until = cert.detail["until"].as_f64().unwrap_or(f64::NAN);
    ensure(cert.t >= t_star - 1e-12 && until > t_star, format!("certificate spans [{}, {until}]", cert.t))?;
    Ok(format!("max deviation {worst:.1e}; certificate on [{:.4}, {until:.4}]", cert.t))
}

fn c03_pair_mixture_rates() -> Outcome {
    let omega = 1.7;
    let tr = ex4(omega);
    let mut worst: f64 = 0.0;
    for k in 0..=500 {
        let t = 0.49 * PI / omega * k as f64 / 500.0;
        let tan = (omega * t).tan();
        let c = (omega * t).cos();
        let expected = [omega / 2.0 * tan, omega / 2.0 * tan, -omega / 2.0 * tan * (1.0 - c) / (1.0 + c)];
        let got = rates_from_eigs(&tr, t, 1e-10).map_err(|e| e.to_string())?;
        for (g, e) in got.iter().zip(expected) {
            worst = worst.max((g - e).abs());
        }
    }
    ensure(worst <= 1e-8, format!("rate deviation {worst:e}"))?;
    let l = rate_sum_limit(&tr, (Axis::X, Axis::Z), FRAC_PI_2 / omega).map_err(|e| e.to_string())?;
    ensure(!l.divergent && (l.value - omega).abs() <= 1e-6, format!("limit {} for omega {omega}", l.value))?;
    Ok(format!("max rate deviation {worst:.1e}; limit {:.9} vs {omega}", l.value))
}

fn c04_fujiwara_algoet_matches_choi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cp = 0;
    for _ in 0..10_000 {
        let l: [f64; 3] = [0; 3].map(|_| rng.gen_range(-1.5..1.5));
        let sum = l[0] + l[1] + l[2];
        let probs = [
            (1.0 + sum) / 4.0,
            (1.0 + l[0] - l[1] - l[2]) / 4.0,
            (1.0 - l[0] + l[1] - l[2]) / 4.0,
            (1.0 - l[0] - l[1] + l[2]) / 4.0,
        ];
        let choi = probs.iter().all(|&p| p >= -TOL);
        let fa = PauliChannel::new(l[0], l[1], l[2]).is_cp(TOL);
        ensure(choi == fa, format!("disagreement at {l:?}"))?;
        cp += usize::from(fa);
    }
    Ok(format!("10000 triples, {cp} completely positive"))
}

fn c05_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let report = run_verify(&VerifyConfig { seed: 0, trials: 200, fault: None }).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let suite = report.suites.iter().find(|s| s.name == "oracle_equivalence").ok_or("missing suite")?;
    ensure(
        suite.failed == 0,
        format!("{} disagreements, first {}", suite.failed, suite.first_counterexample.clone().unwrap_or_default()),
    )?;
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("{} trials, {} at the tolerance boundary, {elapsed:.2?}", suite.trials, suite.tolerance_boundary))
}

fn c06_threshold_sign_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let e: [f64; 3] = [0; 3].map(|_| -rng.gen_range(f64::EPSILON..1.0f64).ln());
        let total: f64 = e.iter().sum();
        let x = e.map(|v| v / total);
        let k = (0..3).min_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
        let (xi, xj, xk) = (x[(k + 1) % 3], x[(k + 2) % 3], x[k]);
        let s = xi * xj * xk + xi * xj - xj * xk - xi * xk;
        let bound = prop2_cp_bound(x).map_err(|e| e.to_string())?.ok_or("no constraining axis")?;
        ensure((bound > 0.0) == (s > 0.0), format!("x = {x:?}: bound {bound}, s {s}"))?;
    }
    Ok("1000 weight vectors agree".into())
}

fn c07_uniform_mixture_is_cp_divisible() -> Outcome {
    let third = 1.0 / 3.0;
    let mut checked = Vec::new();
    for profile in [ScalarProfile::exp(0.8), ScalarProfile::trunc_cos(1.0), ScalarProfile::trunc_cos(2.5)] {
        let tr = Mixture::new([third; 3], profile.clone()).unwrap().to_trajectory();
        let v = classify(&tr, &Grid::new(5.0, 800).unwrap(), &Tolerances::for_trajectory(&tr))
            .map_err(|e| e.to_string())?;
        ensure(v.class == DivisibilityClass::CPDivisible, format!("{} gave {}", profile.kind(), v.class))?;
        checked.push(profile.kind());
    }
    Ok(checked.join(", "))
}

fn c08_ode_round_trip() -> Outcome {
    let cases = [
        ("exp", EigTrajectory::phase_damping(ScalarProfile::exp(1.1), Axis::Z), 5.0),
        ("damped_cos", EigTrajectory::phase_damping(ScalarProfile::damped_cos(0.4, 1.0), Axis::Z), 0.95 * FRAC_PI_2),
        ("pair mixture", ex4(1.0), 0.95 * FRAC_PI_2),
    ];
    let mut parts = Vec::new();
    for (name, tr, t_max) in cases {
        let dev = ode_roundtrip(&tr, &Grid::new(t_max, 400).unwrap()).map_err(|e| e.to_string())?;
        ensure(dev < 1e-6, format!("{name}: deviation {dev:e}"))?;
        parts.push(format!("{name} {dev:.1e}"));
    }
    Ok(parts.join(", "))
}

fn c09_eternal_non_markovian_signature() -> Outcome {
    let tr = Mixture::new([0.5, 0.5, 0.0], ScalarProfile::exp(1.0)).unwrap().to_trajectory();
    let grid = Grid::new(10.0, 1000).unwrap();
    for t in grid.times().into_iter().filter(|&t| t > 0.0) {
        let g = rates_from_eigs(&tr, t, 1e-10).map_err(|e| e.to_string())?;
        ensure(g[2] < 0.0, format!("gamma3({t}) = {}", g[2]))?;
    }
    let v = classify(&tr, &grid, &Tolerances::for_trajectory(&tr)).map_err(|e| e.to_string())?;
    ensure(v.class == DivisibilityClass::PDivisible, format!("classify gave {}", v.class))?;
    Ok("gamma3 < 0 on (0, 10], PDivisible".into())
}

fn c10_cubic_is_divisible_only() -> Outcome {
    let profile = ScalarProfile::cubic(3.0, 1.0, 1.4, 1.0).map_err(|e| e.to_string())?;
    let tr = EigTrajectory::phase_damping(profile, Axis::Z);
    let grid = Grid::new(2.0, 400).unwrap();
    let tol = Tolerances::for_trajectory(&tr);
    let v = classify(&tr, &grid, &tol).map_err(|e| e.to_string())?;
    let o = oracle_classify(&tr, &grid, &tol).map_err(|e| e.to_string())?;
    ensure(v.class == DivisibilityClass::Divisible, format!("classify gave {}", v.class))?;
    ensure(o.class == v.class, format!("oracle gave {}", o.class))?;
    Ok("Divisible, oracle agrees".into())
}

fn c11_indivisible_profiles() -> Outcome {
    let omega = 1.2;
    let first_zero = FRAC_PI_2 / omega;
    let profiles = [ScalarProfile::cos(omega), ScalarProfile::abs_cos(omega), ScalarProfile::damped_cos(0.3, omega)];
    for p in profiles {
        let tr = EigTrajectory::phase_damping(p.clone(), Axis::Z);
        let v = classify(&tr, &Grid::new(8.0, 800).unwrap(), &Tolerances::for_trajectory(&tr))
            .map_err(|e| e.to_string())?;
        ensure(v.class == DivisibilityClass::Indivisible, format!("{} gave {}", p.kind(), v.class))?;
        let revival = v.certificates.iter().find(|c| c.condition == Condition::Revival);
        ensure(
            revival.is_some_and(|c| c.t >= first_zero - 1e-12),
            format!("{}: no revival certificate at or after {first_zero}", p.kind()),
        )?;
    }
    Ok("cos, abs_cos, damped_cos".into())
}

fn c12_trace_norm_witness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let tol = Tolerances::default();
    let mut rated = 0;
    for _ in 0..500 {
        let case = random_case(&mut rng, Family::Any);
        let tr = case.trajectory();
        let o = oracle_classify(&tr, &case.grid, &tol).map_err(|e| e.to_string())?;
        if o.class >= DivisibilityClass::PDivisible {
            rated += 1;
            let hits = trace_norm_witness(&tr, &case.grid, DEFAULT_DIRECTIONS, tol.tol).map_err(|e| e.to_string())?;
            if let Some(h) = hits.first() {
                return Err(format!("witness fired at t = {} for {}", h.t, case.describe()));
            }
        }
    }
    let cos = EigTrajectory::phase_damping(ScalarProfile::cos(1.0), Axis::Z);
    let hits =
        trace_norm_witness(&cos, &Grid::new(6.0, 600).unwrap(), DEFAULT_DIRECTIONS, TOL).map_err(|e| e.to_string())?;
    ensure(!hits.is_empty(), "no witness for cos phase damping")?;
    Ok(format!("{rated}/500 trials at least P-divisible, all silent; cos fires {} times", hits.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("truncated cosine phase damping is CP-divisible", c01_truncated_cosine_is_cp_divisible),
        ("pair mixture eigenvalues and two-nonzero certificate", c02_pair_mixture_block_and_certificate),
        ("pair mixture rates and finite pair sum", c03_pair_mixture_rates),
        ("Fujiwara-Algoet matches Choi probabilities", c04_fujiwara_algoet_matches_choi),
        ("classifier matches propagator oracle", c05_oracle_equivalence),
        ("CP threshold sign reduction", c06_threshold_sign_reduction),
        ("uniform mixture is CP-divisible", c07_uniform_mixture_is_cp_divisible),
        ("generator ODE round trip", c08_ode_round_trip),
        ("eternal non-Markovian signature", c09_eternal_non_markovian_signature),
        ("cubic profile is divisible only", c10_cubic_is_divisible_only),
        ("indivisible profiles carry revival certificates", c11_indivisible_profiles),
        ("trace-norm witness consistency", c12_trace_norm_witness),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(info) => println!("PASS {:>2} {name}: {info}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
