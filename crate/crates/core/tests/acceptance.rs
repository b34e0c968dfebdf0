//! Acceptance suite: ten criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the summary is printed even
//! when everything passes. Exits nonzero if any hard criterion fails.

use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use irls_svm::loss::{majorizer_value, smoothed_loss_value};
use irls_svm::oracle::{finite_diff_gradient, subgradient_minimize, OracleOptions, DEFAULT_FD_STEP};
use irls_svm::penalty::coordinate_majorizer;
use irls_svm::synth::{default_simulation, generate_gaussian_mixture, NormalStream};
use irls_svm::{
    build_design_matrix, closed_form_ls_l2, fit, monitored_risk, risk, smoothed_risk, Dataset, FitOptions, FitResult,
    Label, LossKind, ModelParams, PenaltyKind, RiskSpec,
};

const SIM_N: usize = 10_000;
const SIM_SEED: u64 = 20_240_601;
const GRID: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];
const EPS: f64 = 1e-6;
const DESCENT_SLACK: f64 = 1e-10;
const PENALTIES: [PenaltyKind; 3] = [PenaltyKind::L2, PenaltyKind::L1, PenaltyKind::ElasticNet];

#[derive(PartialEq)]
enum Kind {
    Hard,
    /// Reported but never fails the run.
    Observational,
}

type Criterion<'a> = (&'static str, Kind, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

/// Spec for one grid point; elastic net moves both constants together.
fn grid_spec(loss: LossKind, penalty: PenaltyKind, c: f64) -> RiskSpec {
    RiskSpec::with_epsilon(loss, penalty, c, c, EPS).unwrap()
}

fn all_pairs() -> impl Iterator<Item = (LossKind, PenaltyKind)> {
    LossKind::ALL
        .into_iter()
        .flat_map(|l| PENALTIES.into_iter().map(move |p| (l, p)))
}

/// Largest `(R[k+1] - R[k]) / (1 + |R[k]|)` along a trajectory.
fn worst_rise(trajectory: &[f64]) -> f64 {
    trajectory
        .windows(2)
        .map(|w| (w[1] - w[0]) / (1.0 + w[0].abs()))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Fits every grid point of every listed pair, 50 iterations from zero.
fn sweep(data: &Dataset, pairs: &[(LossKind, PenaltyKind)]) -> Vec<(RiskSpec, FitResult)> {
    thread::scope(|s| {
        let handles: Vec<_> = pairs
            .iter()
            .flat_map(|&(l, p)| GRID.map(|c| grid_spec(l, p, c)))
            .map(|spec| s.spawn(move || (spec, fit(&spec, data, &FitOptions::fixed(50)).unwrap())))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

fn descent_outcome(fits: &[(RiskSpec, FitResult)], exact: bool) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut worst_spec = String::new();
    for (spec, result) in fits {
        let traj = if exact {
            &result.exact_risk_trajectory
        } else {
            &result.smoothed_risk_trajectory
        };
        let rise = worst_rise(traj);
        if rise > worst {
            worst = rise;
            worst_spec = spec.to_string();
        }
    }
    Outcome::new(
        worst <= DESCENT_SLACK,
        format!("{} fits, worst relative step {worst:+.2e} ({worst_spec})", fits.len()),
    )
}

fn criterion_1(data: &Dataset) -> Outcome {
    let fits = sweep(
        data,
        &[
            (LossKind::SquaredHinge, PenaltyKind::L2),
            (LossKind::Logistic, PenaltyKind::L2),
        ],
    );
    descent_outcome(&fits, true)
}

fn criterion_2(data: &Dataset) -> Outcome {
    let pairs: Vec<_> = all_pairs()
        .filter(|&(l, p)| {
            !matches!(
                (l, p),
                (
                    LossKind::SquaredHinge | LossKind::Logistic | LossKind::LeastSquares,
                    PenaltyKind::L2
                )
            )
        })
        .collect();
    assert_eq!(pairs.len(), 9);
    descent_outcome(&sweep(data, &pairs), false)
}

fn criterion_3(data: &Dataset) -> Outcome {
    let fits = sweep(
        data,
        &[
            (LossKind::Hinge, PenaltyKind::L1),
            (LossKind::LeastSquares, PenaltyKind::L1),
        ],
    );
    descent_outcome(&fits, true)
}

fn criterion_4() -> Outcome {
    let runs: Vec<(String, f64, f64, f64)> = thread::scope(|s| {
        let handles: Vec<_> = (1..=3u64)
            .flat_map(|seed| all_pairs().map(move |pair| (seed, pair)))
            .map(|(seed, (loss, penalty))| {
                s.spawn(move || {
                    let data = default_simulation(200, seed).unwrap();
                    let spec = RiskSpec::with_epsilon(loss, penalty, 0.1, 0.1, EPS).unwrap();
                    let options = FitOptions {
                        max_iterations: 100_000,
                        risk_tolerance: 1e-10,
                        ..FitOptions::default()
                    };
                    let result = fit(&spec, &data, &options).unwrap();
                    let oracle = subgradient_minimize(
                        &spec,
                        &data,
                        &OracleOptions {
                            iterations: 200_000,
                            objective: result.monitor.into(),
                            ..OracleOptions::default()
                        },
                    );
                    let tol = if loss == LossKind::Hinge { 1e-4 } else { 1e-6 };
                    let fitted = result.final_monitored_risk();
                    (format!("{spec} seed {seed}"), fitted, oracle.value, tol)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (label, fitted, oracle, tol) in &runs {
        let rel = (fitted - oracle).abs() / oracle.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel > *tol {
            failures.push(format!("{label}: fit {fitted:.12} oracle {oracle:.12}"));
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "{} runs, worst relative gap {worst:.2e} {}",
            runs.len(),
            failures.join("; ")
        ),
    )
}

fn criterion_5(data: &Dataset) -> Outcome {
    let mut problems = Vec::new();
    let design = build_design_matrix(data).unwrap();
    for lambda in GRID {
        let spec = RiskSpec::new(LossKind::LeastSquares, PenaltyKind::L2, lambda, 0.0).unwrap();
        let fitted = fit(&spec, data, &FitOptions::default()).unwrap().theta;
        if fitted != closed_form_ls_l2(&design, lambda).unwrap() {
            problems.push(format!("fit differs from closed form at lambda={lambda}"));
        }
    }
    let fixture = Dataset::from_rows(&[vec![1.0], vec![-1.0]], vec![Label::Positive, Label::Negative]).unwrap();
    let fixture = build_design_matrix(&fixture).unwrap();
    for lambda in [0.0, 0.5, 1.0] {
        let t = closed_form_ls_l2(&fixture, lambda).unwrap();
        let expected = 1.0 / (1.0 + lambda);
        if t.alpha.abs() > 1e-12 || (t.beta[0] - expected).abs() > 1e-12 {
            problems.push(format!("fixture lambda={lambda}: ({}, {})", t.alpha, t.beta[0]));
        }
    }
    let detail = if problems.is_empty() {
        "fit matches closed form bit for bit at 5 grid points, fixture within 1e-12".to_string()
    } else {
        problems.join("; ")
    };
    Outcome::new(problems.is_empty(), detail)
}

fn criterion_6() -> Outcome {
    const PAIRS: usize = 100_000;
    let mut rng = NormalStream::new(6);
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.uniform();
    let mut worst_tangency = 0.0f64;
    let mut worst_domination = f64::INFINITY;
    for loss in LossKind::ALL {
        for _ in 0..PAIRS {
            let (m, m_ref) = (uniform(-10.0, 10.0), uniform(-10.0, 10.0));
            let target = smoothed_loss_value(loss, m, EPS);
            let at_anchor = majorizer_value(loss, m_ref, m_ref, EPS);
            worst_tangency = worst_tangency.max((at_anchor - smoothed_loss_value(loss, m_ref, EPS)).abs());
            worst_domination = worst_domination.min(majorizer_value(loss, m, m_ref, EPS) - target);
        }
    }
    for _ in 0..PAIRS {
        let (b, v, mu) = (uniform(-10.0, 10.0), uniform(-10.0, 10.0), uniform(0.0, 2.0));
        let smoothed = |x: f64| mu * (x * x + EPS).sqrt();
        worst_tangency = worst_tangency.max((coordinate_majorizer(v, v, mu, EPS) - smoothed(v)).abs());
        worst_domination = worst_domination.min(coordinate_majorizer(b, v, mu, EPS) - smoothed(b));
        worst_domination = worst_domination.min(coordinate_majorizer(b, v, mu, EPS) - mu * b.abs());
    }
    Outcome::new(
        worst_tangency <= 1e-12 && worst_domination >= -1e-12,
        format!("max tangency error {worst_tangency:.2e}, min domination gap {worst_domination:.2e}"),
    )
}

fn random_dataset(rng: &mut NormalStream) -> Dataset {
    let n = 5 + (rng.uniform() * 46.0) as usize;
    let q = 1 + (rng.uniform() * 5.0) as usize;
    let features = DMatrix::from_fn(n, q, |_, _| rng.next_normal());
    let labels = (0..n)
        .map(|_| {
            if rng.uniform() < 0.5 {
                Label::Negative
            } else {
                Label::Positive
            }
        })
        .collect();
    Dataset::new(features, labels).unwrap()
}

fn criterion_7() -> Outcome {
    const SAMPLES: usize = 10_000;
    let mut rng = NormalStream::new(7);
    let mut failures = 0;
    let mut worst_ratio = 0.0f64;
    for (loss, penalty) in all_pairs().filter(|&(l, p)| l == LossKind::Hinge || p.has_l1()) {
        for _ in 0..SAMPLES {
            let data = random_dataset(&mut rng);
            let (lambda, mu) = (rng.uniform(), rng.uniform());
            let spec = RiskSpec::with_epsilon(loss, penalty, lambda, mu, EPS).unwrap();
            let theta = ModelParams::from_vector(&DVector::from_fn(data.q() + 1, |_, _| 3.0 * rng.next_normal()));
            let gap = smoothed_risk(&spec, &theta, &data).unwrap() - risk(&spec, &theta, &data).unwrap();
            let bound = EPS.sqrt() / 2.0 + spec.mu() * data.q() as f64 * EPS.sqrt();
            worst_ratio = worst_ratio.max(gap / bound);
            if !(gap > 0.0 && gap <= bound) {
                failures += 1;
            }
        }
    }
    Outcome::new(
        failures == 0,
        format!("9 combinations x {SAMPLES} draws, {failures} violations, max gap/bound {worst_ratio:.3}"),
    )
}

fn angle_to_diagonal(beta: &DVector<f64>) -> f64 {
    let cos = (beta[0] + beta[1]) / (2f64.sqrt() * beta.norm());
    cos.clamp(-1.0, 1.0).acos().to_degrees()
}

fn criterion_8(data: &Dataset) -> Outcome {
    let mut problems = Vec::new();
    let mut min_accuracy = f64::INFINITY;
    let mut max_angle = 0.0f64;
    let accuracy_fits: Vec<_> = all_pairs()
        .map(|(l, p)| RiskSpec::with_epsilon(l, p, 0.1, 0.1, EPS).unwrap())
        .collect();
    let angle_fits: Vec<_> = LossKind::ALL
        .into_iter()
        .flat_map(|l| [PenaltyKind::L2, PenaltyKind::L1].map(|p| RiskSpec::with_epsilon(l, p, 0.4, 0.4, EPS).unwrap()))
        .collect();
    let results: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = accuracy_fits
            .iter()
            .chain(&angle_fits)
            .map(|spec| s.spawn(move || fit(spec, data, &FitOptions::default()).unwrap()))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (spec, result) in accuracy_fits.iter().zip(&results) {
        let acc = data.accuracy(&result.theta).unwrap();
        min_accuracy = min_accuracy.min(acc);
        if acc < 0.90 {
            problems.push(format!("{spec}: accuracy {acc:.4}"));
        }
    }
    for (spec, result) in angle_fits.iter().zip(&results[accuracy_fits.len()..]) {
        let angle = angle_to_diagonal(&result.theta.beta);
        max_angle = max_angle.max(angle);
        if angle.is_nan() || angle > 15.0 {
            problems.push(format!("{spec}: angle {angle:.2} deg"));
        }
    }
    Outcome::new(
        problems.is_empty(),
        format!(
            "min accuracy {min_accuracy:.4} (Bayes ~0.9214), max angle {max_angle:.2} deg {}",
            problems.join("; ")
        ),
    )
}

fn criterion_9(data: &Dataset) -> Outcome {
    let pairs: Vec<_> = all_pairs().collect();
    let fits = sweep(data, &pairs);
    let mut problems = Vec::new();
    for chunk in fits.chunks(GRID.len()) {
        for w in chunk.windows(2) {
            let (a, b) = (w[0].1.final_monitored_risk(), w[1].1.final_monitored_risk());
            if b < a - 1e-8 {
                problems.push(format!("{} -> {}: {a} then {b}", w[0].0, w[1].0));
            }
        }
    }
    Outcome::new(problems.is_empty(), format!("12 sweeps {}", problems.join("; ")))
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for seed in 1..=3u64 {
        let data = generate_gaussian_mixture(30, &[-0.5; 3], &[0.5; 3], 1000 + seed).unwrap();
        for (loss, penalty) in all_pairs() {
            let spec = RiskSpec::with_epsilon(loss, penalty, 0.1, 0.1, EPS).unwrap();
            let options = FitOptions {
                max_iterations: 100_000,
                risk_tolerance: 1e-14,
                ..FitOptions::default()
            };
            let result = fit(&spec, &data, &options).unwrap();
            let objective =
                |t: &DVector<f64>| monitored_risk(&spec, result.monitor, &ModelParams::from_vector(t), &data).unwrap();
            let g = finite_diff_gradient(objective, &result.theta.to_vector(), DEFAULT_FD_STEP).amax();
            worst = worst.max(g);
            if g.is_nan() || g > 1e-4 {
                problems.push(format!("{spec} seed {seed}: {g:.2e}"));
            }
        }
    }
    Outcome::new(
        problems.is_empty(),
        format!("max gradient norm {worst:.2e} {}", problems.join("; ")),
    )
}

fn main() -> ExitCode {
    let data = default_simulation(SIM_N, SIM_SEED).unwrap();
    let criteria: [Criterion; 10] = [
        ("exact monotone descent", Kind::Hard, Box::new(|| criterion_1(&data))),
        ("smoothed monotone descent", Kind::Hard, Box::new(|| criterion_2(&data))),
        (
            "empirical exact descent",
            Kind::Observational,
            Box::new(|| criterion_3(&data)),
        ),
        ("agreement with oracle minimum", Kind::Hard, Box::new(criterion_4)),
        ("closed-form consistency", Kind::Hard, Box::new(|| criterion_5(&data))),
        ("majorization properties", Kind::Hard, Box::new(criterion_6)),
        ("smoothing gap bound", Kind::Hard, Box::new(criterion_7)),
        ("classification quality", Kind::Hard, Box::new(|| criterion_8(&data))),
        (
            "penalty-monotone terminal risk",
            Kind::Hard,
            Box::new(|| criterion_9(&data)),
        ),
        ("fixed-point stationarity", Kind::Hard, Box::new(criterion_10)),
    ];

    let mut failed = 0;
    for (i, (name, kind, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let status = match (outcome.passed, kind) {
            (true, _) => "PASS",
            (false, Kind::Observational) => "REVIEW",
            (false, Kind::Hard) => {
                failed += 1;
                "FAIL"
            }
        };
        println!(
            "criterion {:>2} {status:6} {name} [{:.1}s] {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            outcome.detail.trim_end()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
