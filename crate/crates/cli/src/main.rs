//! `paulidiv`: classify Pauli dynamical maps, extract generator rates, scan
//! mixture weights and run the randomized verification suites.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pauli_divisibility::spec::{parse_spec, parse_weights_list, Model, RunSpec};
use pauli_divisibility::trajectory::Axis;
use pauli_divisibility::verify::{run_verify, Fault, VerifyConfig};
use pauli_divisibility::{classify, rate_sum_limit, rates_from_eigs, Error, Grid, Mixture, ScalarProfile, Tolerances};
use serde_json::{json, Value};

const DEFAULT_N: usize = 1000;
const MIN_N: usize = 16;
/// Offset, in grid steps, for telling a vanishing onset from a zero stretch.
const ONSET_PROBE: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "paulidiv", version, about = "Divisibility analysis of qubit Pauli dynamical maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a trajectory; writes verdict.json and eigs.csv.
    Classify(RunArgs),
    /// Extract decoherence rates; writes rates.csv and divergences.json.
    Rates(RunArgs),
    /// Classify mixtures over the weight simplex; writes region.csv.
    MixScan {
        #[command(flatten)]
        run: RunArgs,
        /// Simplex resolution m: weights are multiples of 1/m.
        #[arg(long, default_value_t = 20)]
        resolution: usize,
    },
    /// Randomized classifier cross-checks.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random trajectories per suite.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Write verify.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON trajectory or mixture spec.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    t_max: Option<f64>,
    /// Uniform grid points (at least 16).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    zero_tol: Option<f64>,
    /// Mixture weights `x1,x2,x3`, applied to the input file's profile.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Accepted for symmetry with `verify`; runs here are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Input(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

struct Run {
    model: Model,
    profile: Option<ScalarProfile>,
    grid: Grid,
    tol: Tolerances,
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Classify(a) => load(&a).and_then(|r| cmd_classify(&r)),
        Command::Rates(a) => load(&a).and_then(|r| cmd_rates(&r)),
        Command::MixScan { run, resolution } => load(&run).and_then(|r| cmd_mix_scan(&r, resolution)),
        Command::Verify { seed, trials, out, inject_fault } => {
            cmd_verify(seed, trials, out.as_deref(), inject_fault.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(a: &RunArgs) -> Result<Run, Failure> {
    let text =
        fs::read_to_string(&a.spec).map_err(|e| Failure::Input(format!("cannot read {}: {e}", a.spec.display())))?;
    let RunSpec { mut model, profile, grid } = parse_spec(&text).map_err(|e| Failure::Input(e.to_string()))?;

    if let Some(w) = &a.weights {
        let weights = parse_weights_list(w).map_err(|e| Failure::Input(e.to_string()))?;
        let p = match (&profile, &model) {
            (Some(p), _) => p.clone(),
            (None, Model::Mixture(m)) => m.profile.clone(),
            (None, Model::Trajectory(_)) => {
                return Err(Failure::Input("weights: the input has no profile to mix".into()))
            }
        };
        model = Model::Mixture(Mixture::new(weights, p).map_err(|e| Failure::Input(format!("weights: {e}")))?);
    }

    let t_max = a
        .t_max
        .or(grid.map(|g| g.t_max))
        .ok_or_else(|| Failure::Input("grid: missing; add a grid object to the input file or pass --t-max".into()))?;
    let n = a.n.or(grid.map(|g| g.n)).unwrap_or(DEFAULT_N);
    if n < MIN_N {
        return Err(Failure::Input(format!("n: must be at least {MIN_N}, got {n}")));
    }
    let grid = Grid::new(t_max, n).map_err(|e| Failure::Input(format!("t_max: {e}")))?;

    let mut tol = Tolerances::for_trajectory(&model.trajectory());
    for (name, value, slot) in [("tol", a.tol, &mut tol.tol), ("zero_tol", a.zero_tol, &mut tol.zero_tol)] {
        if let Some(v) = value {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::Input(format!("{name}: must be positive, got {v}")));
            }
            *slot = v;
        }
    }
    let profile = profile.or_else(|| match &model {
        Model::Mixture(m) => Some(m.profile.clone()),
        Model::Trajectory(_) => None,
    });
    Ok(Run { model, profile, grid, tol, out: a.out.clone() })
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_out(dir: &Path, name: &str, contents: &str) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

fn cmd_classify(run: &Run) -> CmdResult {
    let tr = run.model.trajectory();
    let verdict = classify(&tr, &run.grid, &run.tol)?;
    write_out(&run.out, "verdict.json", &pretty(&verdict.to_json()))?;

    let samples = tr.sample(&run.grid)?;
    let mut csv = String::from("t,lambda1,lambda2,lambda3\n");
    for (t, l) in samples.times.iter().zip(&samples.values) {
        writeln!(csv, "{},{},{},{}", num(*t), num(l[0]), num(l[1]), num(l[2])).unwrap();
    }
    write_out(&run.out, "eigs.csv", &csv)?;
    println!("{}", verdict.class);
    Ok(())
}

fn limit_json(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("+inf")
    } else {
        json!("-inf")
    }
}

fn cmd_rates(run: &Run) -> CmdResult {
    let tr = run.model.trajectory();
    let samples = tr.sample(&run.grid)?;
    let mut csv = String::from("t,gamma1,gamma2,gamma3\n");
    let mut skipped = 0usize;
    for &t in &samples.times {
        match rates_from_eigs(&tr, t, run.tol.zero_tol) {
            Ok(g) => writeln!(csv, "{},{},{},{}", num(t), num(g[0]), num(g[1]), num(g[2])).unwrap(),
            Err(Error::SingularGenerator { .. }) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    write_out(&run.out, "rates.csv", &csv)?;

    let mut divergences = Vec::new();
    let zero = |v: f64| v.abs() < run.tol.zero_tol;
    for t in tr.zero_times(run.grid.t_max) {
        let values = tr.eval(t)?.eigs;
        let before = tr.eval(t - run.grid.step() * ONSET_PROBE)?.eigs;
        // only onsets: an axis already vanishing just before t adds nothing
        let axes: Vec<usize> = (0..3).filter(|&a| zero(values[a]) && !zero(before[a])).map(|a| a + 1).collect();
        if axes.is_empty() {
            continue;
        }
        let mut limits = Vec::new();
        for (i, j) in [(Axis::X, Axis::Y), (Axis::X, Axis::Z), (Axis::Y, Axis::Z)] {
            let entry = match rate_sum_limit(&tr, (i, j), t) {
                Ok(l) => json!({
                    "pair": [i.label(), j.label()],
                    "value": limit_json(l.value),
                    "error": if l.divergent { Value::Null } else { json!(l.error) },
                    "divergent": l.divergent,
                }),
                Err(e) => json!({"pair": [i.label(), j.label()], "unavailable": e.to_string()}),
            };
            limits.push(entry);
        }
        divergences.push(json!({"t": t, "vanishing_axes": axes, "pair_limits": limits}));
    }
    let doc = json!({"divergence_times": divergences, "skipped_points": skipped});
    write_out(&run.out, "divergences.json", &pretty(&doc))?;
    println!("{} rate rows, {} singular points skipped", samples.len() - skipped, skipped);
    Ok(())
}

fn cmd_mix_scan(run: &Run, m: usize) -> CmdResult {
    if m == 0 {
        return Err(Failure::Input("resolution: must be at least 1".into()));
    }
    let profile = run
        .profile
        .clone()
        .ok_or_else(|| Failure::Input("profile: mix-scan needs a spec with a single profile".into()))?;
    let mut weights: Vec<[f64; 3]> = Vec::new();
    for i in 0..=m {
        for j in 0..=(m - i) {
            let k = m - i - j;
            weights.push([i, j, k].map(|v| v as f64 / m as f64));
        }
    }
    if !m.is_multiple_of(3) {
        weights.push([1.0 / 3.0; 3]);
    }
    weights.sort_by(|a, b| b[0].total_cmp(&a[0]).then(b[1].total_cmp(&a[1])));

    let mut csv = String::from("x1,x2,x3,class,prop2\n");
    for x in weights {
        let mix = Mixture::new(x, profile.clone())?;
        let class = classify(&mix.to_trajectory(), &run.grid, &run.tol)?.class;
        let prop2 = match mix.prop2_cp_divisible(&run.grid, &run.tol) {
            Ok(b) => b.to_string(),
            Err(Error::Precondition(_)) => "n/a".to_string(),
            Err(e) => return Err(e.into()),
        };
        writeln!(csv, "{},{},{},{},{}", num(x[0]), num(x[1]), num(x[2]), class, prop2).unwrap();
    }
    write_out(&run.out, "region.csv", &csv)?;
    Ok(())
}

fn cmd_verify(seed: u64, trials: usize, out: Option<&Path>, fault: Option<&str>) -> CmdResult {
    let fault = match fault {
        None => None,
        Some(name) => Some(
            Fault::from_name(name).ok_or_else(|| Failure::Input(format!("inject-fault: unknown fault {name:?}")))?,
        ),
    };
    if trials == 0 {
        eprintln!("warning: --trials 0, nothing to verify");
    }
    let report = run_verify(&VerifyConfig { seed, trials, fault })?;
    for s in &report.suites {
        let status = if s.failed == 0 { "PASS" } else { "FAIL" };
        if s.tolerance_boundary > 0 {
            println!(
                "{status} {}: {}/{} passed ({} at the tolerance boundary)",
                s.name, s.passed, s.trials, s.tolerance_boundary
            );
        } else {
            println!("{status} {}: {}/{} passed", s.name, s.passed, s.trials);
        }
    }
    let doc = serde_json::to_value(&report).expect("report serializes");
    if let Some(dir) = out {
        write_out(dir, "verify.json", &pretty(&doc))?;
    }
    match report.first_counterexample() {
        None => Ok(()),
        Some((suite, example)) => Err(Failure::Verification(format!(
            "verification failed in {suite}; first counterexample:\n{}",
            serde_json::to_string_pretty(example).unwrap()
        ))),
    }
}
