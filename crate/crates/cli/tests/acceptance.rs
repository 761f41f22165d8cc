//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semcom::axes::{F, H, S, U};
use semcom::bounds::theorem1_bounds;
use semcom::frl::{construct_frl, efrl_mechanism, U0};
use semcom::oracle::{default_u_size, estimate_h_eps, verify_sandwich, DEFAULT_RESTARTS};
use semcom::probcore::random::{random_channel, random_joint, random_sparse_joint};
use semcom::probcore::{Axis, JointTable};
use semcom_cli::commands::{
    run_experiment, ExperimentArgs, ExperimentOutcome, DEFAULT_EXPERIMENT_SWEEP,
};

const GAP_TARGET: f64 = 1.4;
const GAP_TOLERANCE: f64 = 0.2;
const GEOMETRY_TOLERANCE: f64 = 1e-9;
const SLOPE_TOLERANCE: f64 = 1e-12;
const CROSSOVER_TOLERANCE: f64 = 1e-12;
const LEAKAGE_TOLERANCE: f64 = 1e-9;
const FRL_PRIVACY_TOLERANCE: f64 = 1e-10;
const SANDWICH_LOWER_SLACK: f64 = 1e-6;
const SANDWICH_UPPER_SLACK: f64 = 1e-9;
const TIGHTNESS_SLACK: f64 = 5e-3;
const IDENTITY_TOLERANCE: f64 = 1e-10;

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_budget(detail: String, elapsed: Duration, budget: Duration) -> String {
    format!(
        "{detail}; {:.2}s of {}s",
        elapsed.as_secs_f64(),
        budget.as_secs()
    )
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

fn mnist_present() -> bool {
    let dir = mnist_dir();
    dir.join("train-images-idx3-ubyte").exists() || dir.join("train-images.idx3-ubyte").exists()
}

fn missing_mnist() -> Outcome {
    outcome(
        false,
        format!(
            "MNIST files not found in {} (run scripts/fetch_mnist.sh)",
            mnist_dir().display()
        ),
    )
}

fn experiment() -> Result<ExperimentOutcome, String> {
    run_experiment(&ExperimentArgs {
        mnist_dir: mnist_dir(),
        threshold: semcom::dataset::DEFAULT_THRESHOLD,
        sweep: DEFAULT_EXPERIMENT_SWEEP.into(),
        out: None,
        plot: None,
        export_joint: None,
    })
    .map_err(|e| e.to_string())
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_semcom"))
        .args(args)
        .env("MNIST_DIR", mnist_dir())
        .output()
        .expect("binary runs")
}

fn size<R: Rng>(rng: &mut R) -> usize {
    rng.random_range(2..=4)
}

fn pair<R: Rng>(rng: &mut R, ns: usize, nf: usize) -> JointTable {
    random_joint(rng, vec![Axis::indexed(S, ns), Axis::indexed(F, nf)])
}

/// Criterion 1: the printed gap of the digit experiment.
fn gap_reproduction() -> Outcome {
    if !mnist_present() {
        return missing_mnist();
    }
    let start = Instant::now();
    let out = binary(&["experiment"]);
    let elapsed = start.elapsed();
    if !out.status.success() {
        return outcome(false, String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let stderr = String::from_utf8_lossy(&out.stderr);
    let gap = stderr
        .lines()
        .find_map(|l| l.strip_prefix("gap H(H|Z)+H(Z|H) = "))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|v| v.parse::<f64>().ok());
    let Some(gap) = gap else {
        return outcome(false, format!("no gap line in output: {stderr}"));
    };
    let budget = Duration::from_secs(60);
    let pass = (gap - GAP_TARGET).abs() <= GAP_TOLERANCE && elapsed < budget;
    outcome(
        pass,
        within_budget(
            format!(
                "gap = {gap:.6} nats, target {GAP_TARGET} ± {GAP_TOLERANCE} (same gap in base-10 units: {:.6})",
                gap / std::f64::consts::LN_10
            ),
            elapsed,
            budget,
        ),
    )
}

/// Criterion 2: the upper and first lower utility curves are parallel at distance `gap`.
fn bound_geometry(exp: &Result<ExperimentOutcome, String>) -> Outcome {
    let exp = match exp {
        Ok(e) => e,
        Err(e) => return outcome(false, e.clone()),
    };
    let first = &exp.rows[0];
    let mut worst_offset = 0.0f64;
    let mut worst_slope = 0.0f64;
    for r in &exp.rows {
        let width = r.util_upper.unwrap() - r.util_l1.unwrap();
        worst_offset = worst_offset.max((width - exp.gap).abs());
        let slope_err = (r.l_h1 - first.l_h1) - (r.epsilon - first.epsilon);
        worst_slope = worst_slope.max(slope_err.abs());
    }
    outcome(
        worst_offset <= GEOMETRY_TOLERANCE && worst_slope <= SLOPE_TOLERANCE,
        format!(
            "{} rows; max |upper - L1 - gap| = {worst_offset:.2e}, max slope deviation = {worst_slope:.2e}",
            exp.rows.len()
        ),
    )
}

/// Criterion 3: both lower bounds coincide at full leakage.
fn crossover(exp: &Result<ExperimentOutcome, String>) -> Outcome {
    let mnist = match exp {
        Ok(e) => e
            .rows
            .iter()
            .find(|r| r.epsilon == e.h_s)
            .map(|r| (r.l_h1 - r.l_h2_clamped.unwrap()).abs()),
        Err(_) => None,
    };
    let Some(mnist) = mnist else {
        return missing_mnist();
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (ns, nf) = (size(&mut rng), size(&mut rng));
        let j = pair(&mut rng, ns, nf);
        let b = theorem1_bounds(&j, j.entropy_of(&[S]).unwrap()).unwrap();
        worst = worst.max((b.l_h1 - b.l_h2.unwrap()).abs());
    }
    outcome(
        mnist <= CROSSOVER_TOLERANCE && worst <= CROSSOVER_TOLERANCE,
        format!("MNIST |L1 - L2| = {mnist:.2e}; worst over 50 random joints = {worst:.2e}"),
    )
}

/// Criterion 4: the randomized-response mechanism hits the leakage target and beats `L_h1`.
fn achievability() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_leak, mut worst_lower) = (0.0f64, f64::INFINITY);
    let mut errors = 0;
    for _ in 0..200 {
        let (ns, nf) = (size(&mut rng), size(&mut rng));
        let j = pair(&mut rng, ns, nf);
        let h_s = j.entropy_of(&[S]).unwrap();
        for frac in [0.0, 0.1, 0.35, 0.7, 1.0] {
            let eps = frac * h_s;
            match efrl_mechanism(&j, eps) {
                Ok(m) => {
                    let b = theorem1_bounds(&j, eps).unwrap();
                    worst_leak = worst_leak.max((m.leakage - eps).abs());
                    worst_lower = worst_lower.min(m.utility_semantic - b.l_h1);
                }
                Err(_) => errors += 1,
            }
        }
    }
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(60);
    outcome(
        errors == 0
            && worst_leak <= LEAKAGE_TOLERANCE
            && worst_lower >= -LEAKAGE_TOLERANCE
            && elapsed < budget,
        within_budget(
            format!(
                "1000 cases, {errors} errors; max |I(U;S) - eps| = {worst_leak:.2e}, min I(U;F) - L1 = {worst_lower:.3e}"
            ),
            elapsed,
            budget,
        ),
    )
}

/// Criterion 5: the representation is private and lets `F` be decoded.
fn frl_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_leak, mut nonzero_residual) = (0.0f64, 0);
    for i in 0..1000 {
        let axes = vec![
            Axis::indexed(S, size(&mut rng)),
            Axis::indexed(F, size(&mut rng)),
        ];
        let j = if i % 2 == 0 {
            random_joint(&mut rng, axes)
        } else {
            random_sparse_joint(&mut rng, axes, 0.3)
        };
        let frl = construct_frl(&j).unwrap();
        let ext = j.extend_with_channel(frl.channel()).unwrap();
        worst_leak = worst_leak.max(ext.mutual_information(&[U0], &[S]).unwrap());
        if ext.conditional_entropy(&[F], &[U0, S]).unwrap() != 0.0 {
            nonzero_residual += 1;
        }
    }
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(30);
    outcome(
        worst_leak <= FRL_PRIVACY_TOLERANCE && nonzero_residual == 0 && elapsed < budget,
        within_budget(
            format!(
                "1000 joints; max I(U0;S) = {worst_leak:.2e}, H(F|U0,S) != 0 in {nonzero_residual}"
            ),
            elapsed,
            budget,
        ),
    )
}

/// Criterion 6: the search estimate lies between the closed-form bounds.
/// Violations are split by whether `ε` exceeds `H(S)`, where the closed-form
/// lower bounds rise above `H(F)` and no channel can meet them.
fn sandwich() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut inside, mut beyond) = (Vec::new(), Vec::new());
    let (mut worst_lower, mut worst_upper) = (f64::INFINITY, f64::INFINITY);
    for i in 0..50 {
        let nf = if i < 25 { 2 } else { 3 };
        let j = pair(&mut rng, 2, nf);
        let h_s = j.entropy_of(&[S]).unwrap();
        for eps in [0.0, 0.05, 0.1, h_s] {
            match verify_sandwich(&j, &[eps], default_u_size(&j).unwrap(), DEFAULT_RESTARTS, i) {
                Ok(report) => {
                    for r in report.rows {
                        worst_lower = worst_lower.min(r.lower_margin);
                        worst_upper = worst_upper.min(r.upper_margin);
                    }
                }
                Err(e) if eps > h_s => beyond.push(format!("joint {i}, H(S) = {h_s:.4}: {e}")),
                Err(e) => inside.push(format!("joint {i}: {e}")),
            }
        }
    }
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(300);
    let pass = inside.is_empty()
        && beyond.is_empty()
        && worst_lower >= -SANDWICH_LOWER_SLACK
        && worst_upper >= -SANDWICH_UPPER_SLACK
        && elapsed < budget;
    outcome(
        pass,
        within_budget(
            format!(
                "200 checks; {} violations with eps <= H(S), {} with eps > H(S){}; passing checks: min lower margin = {worst_lower:.2e}, min upper margin = {worst_upper:.2e}",
                inside.len(),
                beyond.len(),
                inside
                    .iter()
                    .chain(&beyond)
                    .map(|f| format!(" [{f}]"))
                    .collect::<String>()
            ),
            elapsed,
            budget,
        ),
    )
}

/// Criterion 7: with `S` a function of `F`, the search reaches the upper bound.
fn tightness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_gap, mut untight) = (0.0f64, 0);
    for i in 0..10 {
        let nf = rng.random_range(3..=6);
        let ns = rng.random_range(2..=(16 / nf).min(3));
        // Surjective map F -> S: the first `ns` symbols cover S, the rest are random.
        let map: Vec<usize> = (0..nf)
            .map(|f| if f < ns { f } else { rng.random_range(0..ns) })
            .collect();
        let p_f = random_joint(&mut rng, vec![Axis::indexed(F, nf)]);
        let mut rows = vec![vec![0.0; nf]; ns];
        for f in 0..nf {
            rows[map[f]][f] = p_f.cells()[f];
        }
        let j = JointTable::from_matrix(Axis::indexed(S, ns), Axis::indexed(F, nf), &rows).unwrap();
        let h_s = j.entropy_of(&[S]).unwrap();
        for eps in [0.0, 0.5 * h_s, h_s] {
            let b = theorem1_bounds(&j, eps).unwrap();
            let r = estimate_h_eps(&j, eps, default_u_size(&j).unwrap(), 16, i).unwrap();
            worst_gap = worst_gap.max(b.upper_h_eps - r.value);
            if !b.tight {
                untight += 1;
            }
        }
    }
    outcome(
        worst_gap <= TIGHTNESS_SLACK && untight == 0,
        format!("10 joints x 3 eps; max upper - estimate = {worst_gap:.2e}, tight flag missing in {untight}"),
    )
}

/// Criterion 8: chain-rule identities on extended joints.
fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (ns, nf, nh, nu) = (
            size(&mut rng),
            size(&mut rng),
            size(&mut rng),
            size(&mut rng),
        );
        let j = random_sparse_joint(
            &mut rng,
            vec![
                Axis::indexed(S, ns),
                Axis::indexed(F, nf),
                Axis::indexed(H, nh),
            ],
            0.2,
        );
        let ch = random_channel(
            &mut rng,
            vec![Axis::indexed(S, ns), Axis::indexed(F, nf)],
            Axis::indexed(U, nu),
        );
        let e = j.extend_with_channel(&ch).unwrap();
        let mi = |a: &[&str], b: &[&str]| e.mutual_information(a, b).unwrap();
        let cmi =
            |a: &[&str], b: &[&str], c: &[&str]| e.conditional_mutual_information(a, b, c).unwrap();
        let leakage_form = mi(&[U], &[F]) - (mi(&[U], &[S, F]) - cmi(&[S], &[U], &[F]));
        let task_joint = mi(&[U], &[H, F]);
        let via_f = mi(&[U], &[F]) + cmi(&[U], &[H], &[F]);
        let via_h = mi(&[U], &[H]) + cmi(&[U], &[F], &[H]);
        worst = worst
            .max(leakage_form.abs())
            .max((task_joint - via_f).abs())
            .max((task_joint - via_h).abs());
    }
    outcome(
        worst <= IDENTITY_TOLERANCE,
        format!("1000 extended joints; max identity residual = {worst:.2e}"),
    )
}

/// Criterion 9: repeated runs with fixed seeds give identical bytes.
fn determinism() -> Outcome {
    let joint = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/correlated.json");
    let oracle_args = [
        "oracle",
        "--joint",
        joint.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--restarts",
        "32",
        "--seed",
        "17",
    ];
    let a = binary(&oracle_args);
    let b = binary(&oracle_args);
    let serial = Command::new(env!("CARGO_BIN_EXE_semcom"))
        .args(oracle_args)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .expect("binary runs");
    let oracle_same = a.status.success() && a.stdout == b.stdout && a.stdout == serial.stdout;

    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ten_images");
    let dir = if mnist_present() {
        mnist_dir()
    } else {
        fixture
    };
    let exp_args = ["experiment", "--mnist-dir", dir.to_str().unwrap()];
    let c = binary(&exp_args);
    let d = binary(&exp_args);
    let experiment_same = c.status.success() && c.stdout == d.stdout && !c.stdout.is_empty();
    outcome(
        oracle_same && experiment_same,
        format!(
            "oracle JSON identical across runs and thread counts: {oracle_same}; experiment CSV on {} identical: {experiment_same}",
            dir.display()
        ),
    )
}

fn main() {
    let exp = if mnist_present() {
        experiment()
    } else {
        Err("MNIST files not found".to_string())
    };
    let criteria: Vec<(&str, Check)> = vec![
        ("MNIST gap reproduction", Box::new(gap_reproduction)),
        ("bound geometry", Box::new(|| bound_geometry(&exp))),
        ("crossover at H(S)", Box::new(|| crossover(&exp))),
        ("EFRL achievability", Box::new(achievability)),
        ("FRL correctness", Box::new(frl_correctness)),
        ("oracle sandwich", Box::new(sandwich)),
        ("tightness", Box::new(tightness)),
        ("information identities", Box::new(identities)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
