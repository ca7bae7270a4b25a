//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nhota_core::metrics::{decay_window, min_prefix, MIN_WINDOW, TRANSIENT};
use nhota_core::{
    certify, exact_solution_diag, gen_diag_quad, gen_phase_retrieval, kl_probe, kl_probe_series,
    nhota_run, prox_l1, rate_fit, remainder_check, subdiff_dist_l1, CompositeProblem, KlClass,
    Matrix, ModelCenter, Order, PhaseParams, RunConfig, Runner, Status, USchedule, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const DIAG_LAMBDA: f64 = 0.1;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn run_config(order: Order, u: f64) -> RunConfig {
    RunConfig {
        order,
        u: USchedule::Constant(u),
        ..Default::default()
    }
}

fn reference_invariants() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    let mut failures = Vec::new();
    let mut problems: Vec<(String, CompositeProblem, Vector)> = Vec::new();
    for seed in 1..=5 {
        let pr = gen_phase_retrieval(PhaseParams::new(20, 200, seed)).unwrap();
        problems.push((format!("pr seed {seed}"), pr.problem, pr.x0));
        let dq = gen_diag_quad(50, seed, DIAG_LAMBDA).unwrap();
        problems.push((format!("dq seed {seed}"), dq.problem, dq.x0));
    }
    for (name, problem, x0) in &problems {
        for order in [Order::First, Order::Second] {
            for u in [0.05, 0.5, 1.0] {
                runs += 1;
                match nhota_run(problem, x0.clone(), &run_config(order, u)) {
                    Ok(trace) => {
                        let v = trace.reference_violations(1e-9);
                        if !v.is_empty() {
                            failures.push(format!("{name} p={order} u={u}: {}", v[0]));
                        }
                    }
                    Err(e) => failures.push(format!("{name} p={order} u={u}: {e}")),
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let in_time = elapsed < Duration::from_secs(120);
    Outcome::new(
        failures.is_empty() && in_time,
        format!(
            "{runs} runs, {} violating, {:.1}s{}",
            failures.len(),
            elapsed.as_secs_f64(),
            failures
                .first()
                .map(|f| format!("; first: {f}"))
                .unwrap_or_default()
        ),
    )
}

fn rate_shape() -> Outcome {
    let inst = gen_phase_retrieval(PhaseParams::new(20, 200, 7)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for order in [Order::Second, Order::First] {
        let config = RunConfig {
            max_outer: 200,
            ..run_config(order, 0.5)
        }
        .without_stopping();
        let trace = match nhota_run(&inst.problem, inst.x0.clone(), &config) {
            Ok(t) => t,
            Err(e) => return Outcome::new(false, format!("p={order}: {e}")),
        };
        let p = order.get() as f64;
        let target = -p / (p + 1.0) + 0.2;
        let series = min_prefix(&trace.stationarity());
        let window = decay_window(&series);
        match rate_fit(&series, window.clone()) {
            Ok(fit) => {
                let ok = fit.slope <= target && fit.r2 >= 0.8;
                pass &= ok;
                parts.push(format!(
                    "p={order} slope {:.3} (≤ {target:.3}) r² {:.3} window {:?} status {}",
                    fit.slope, fit.r2, window, trace.status
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("p={order} window {window:?}: {e}"));
            }
        }
    }
    Outcome::new(pass, parts.join("; "))
}

fn convex_rate() -> Outcome {
    let inst = gen_diag_quad(50, 3, DIAG_LAMBDA).unwrap();
    let (_, f_star) = exact_solution_diag(&inst.data);
    let config = RunConfig {
        max_outer: 60,
        ..run_config(Order::Second, 0.5)
    }
    .without_stopping();
    let trace = match nhota_run(&inst.problem, inst.x0.clone(), &config) {
        Ok(t) => t,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let gaps: Vec<f64> = trace.rows.iter().map(|r| (r.f - f_star).max(0.0)).collect();
    let Some(k_stop) = gaps.iter().position(|&g| g <= 1e-10) else {
        return Outcome::new(
            false,
            format!(
                "gap {:e} after {} iterations",
                gaps.last().unwrap(),
                gaps.len() - 1
            ),
        );
    };
    let pre_stop = &gaps[..=k_stop];
    let window = TRANSIENT..pre_stop.len();
    let gap_list = pre_stop
        .iter()
        .map(|g| format!("{g:.1e}"))
        .collect::<Vec<_>>()
        .join(" ");
    if window.len() >= MIN_WINDOW {
        if let Ok(fit) = rate_fit(pre_stop, window.clone()) {
            if fit.slope <= -2.0 + 0.3 {
                return Outcome::new(true, format!("k_stop {k_stop}, slope {:.2}", fit.slope));
            }
        }
    }
    match kl_probe_series(pre_stop) {
        KlClass::Linear { rho, .. } => {
            Outcome::new(true, format!("k_stop {k_stop}, linear rho {rho:.3}"))
        }
        other => Outcome::new(
            false,
            format!(
                "gap ≤ 1e-10 at k={k_stop}, but the pre-stopping window {window:?} has {} points \
                 after the transient (need {MIN_WINDOW}); kl_probe: {other:?}; gaps: {gap_list}",
                window.len()
            ),
        ),
    }
}

fn kl_regime() -> Outcome {
    let geometric: Vec<f64> = (0..40).map(|k| 0.5f64.powi(k)).collect();
    let power: Vec<f64> = (0..40).map(|k| (k.max(1) as f64).powi(-2)).collect();
    let geo = kl_probe_series(&geometric);
    let pow = kl_probe_series(&power);
    let geo_ok = matches!(geo, KlClass::Linear { rho, .. } if (rho - 0.5).abs() < 1e-6);
    let pow_ok = matches!(pow, KlClass::Sublinear { beta, .. } if (beta - 2.0).abs() <= 0.1);

    let inst = gen_diag_quad(50, 3, DIAG_LAMBDA).unwrap();
    let (_, f_star) = exact_solution_diag(&inst.data);
    let config = RunConfig {
        max_outer: 1000,
        ..run_config(Order::First, 0.5)
    }
    .without_stopping();
    let class = match nhota_run(&inst.problem, inst.x0.clone(), &config) {
        Ok(t) => kl_probe(&t, f_star),
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    Outcome::new(
        geo_ok && pow_ok && class.is_linear(),
        format!("diag-quad p=1: {class:?}; 2^-k: {geo:?}; k^-2: {pow:?}"),
    )
}

fn desk_experiment() -> Outcome {
    let inst =
        gen_phase_retrieval(PhaseParams::new(100, 1000, 7).noise_scale(1.0).lambda(1e-5)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for u in [0.05, 0.25, 0.5, 0.75, 1.0] {
        let config = RunConfig {
            max_outer: 500,
            ..run_config(Order::Second, u)
        };
        let start = Instant::now();
        let trace = match nhota_run(&inst.problem, inst.x0.clone(), &config) {
            Ok(t) => t,
            Err(e) => {
                pass = false;
                parts.push(format!("u={u}: {e}"));
                continue;
            }
        };
        let elapsed = start.elapsed();
        let last = trace.last();
        let mut ok =
            trace.status == Status::StoppedByCriterion && elapsed < Duration::from_secs(300);
        if u == 1.0 {
            ok &= trace.rows.windows(2).all(|w| w[1].f <= w[0].f);
        }
        pass &= ok;
        parts.push(format!(
            "u={u}: {} k={} f={:.4} S={:.1e} {:.2}s",
            trace.status,
            last.k,
            last.f,
            last.stationarity,
            elapsed.as_secs_f64()
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn certificate_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut steps = 0;
    let mut failures = Vec::new();
    for i in 0..100 {
        let n = rng.random_range(1..=10);
        let seed = rng.random::<u64>();
        let (problem, x0) = if i % 2 == 0 {
            let inst = gen_diag_quad(n, seed, rng.random_range(0.0..1.0)).unwrap();
            (inst.problem, inst.x0)
        } else {
            let inst = gen_phase_retrieval(PhaseParams::new(n, 5 * n, seed)).unwrap();
            (inst.problem, inst.x0)
        };
        let order = if rng.random_bool(0.5) {
            Order::First
        } else {
            Order::Second
        };
        let config = RunConfig {
            theta: rng.random_range(0.01..1.0),
            max_outer: 100,
            stop_f: f64::NEG_INFINITY,
            stop_stat: 1e-9,
            ..run_config(order, rng.random_range(0.05..=1.0))
        };
        let theta = config.theta;
        let result = Runner::new(&problem, config)
            .step_observer(|s| {
                steps += 1;
                let center = ModelCenter::new(problem.smooth(), s.center.clone(), order).unwrap();
                let cert = certify(&problem, &center, s.y, s.m, theta, s.witness).unwrap();
                if !cert.decrease_ok || cert.residual > cert.threshold + 1e-8 {
                    failures.push(format!("instance {i} k={}: {cert:?}", s.k));
                }
            })
            .run(x0);
        if let Err(e) = result {
            failures.push(format!("instance {i}: {e}"));
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "100 instances, {steps} accepted steps, {} invalid{}",
            failures.len(),
            failures
                .first()
                .map(|f| format!("; first: {f}"))
                .unwrap_or_default()
        ),
    )
}

fn oracle_correctness() -> Outcome {
    let mut worst_grad: f64 = 0.0;
    let mut worst_hess: f64 = 0.0;
    let inst = gen_phase_retrieval(PhaseParams::new(10, 50, 7)).unwrap();
    let oracle = inst.problem.smooth();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let h = 1e-5;
    for _ in 0..10 {
        let x = Vector::from_fn(10, |_, _| StandardNormal.sample(&mut rng));
        let g = oracle.gradient(&x);
        let hess = oracle.hessian(&x).unwrap();
        let mut g_fd = Vector::zeros(10);
        let mut h_fd = Matrix::zeros(10, 10);
        for j in 0..10 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            g_fd[j] = (oracle.value(&xp) - oracle.value(&xm)) / (2.0 * h);
            h_fd.set_column(
                j,
                &((oracle.gradient(&xp) - oracle.gradient(&xm)) / (2.0 * h)),
            );
        }
        worst_grad = worst_grad.max((&g - &g_fd).norm() / g.norm().max(1.0));
        worst_hess = worst_hess.max((&hess - &h_fd).norm() / hess.norm().max(1.0));
    }

    let mut worst_prox: f64 = 0.0;
    for &(v, tau) in &[
        (2.0, 0.5),
        (-1.3, 0.7),
        (0.2, 0.5),
        (0.0, 1.0),
        (-0.45, 0.45),
        (3.3, 0.01),
    ] {
        let p = prox_l1(&Vector::from_element(1, v), tau).unwrap()[0];
        let obj = |y: f64| tau * y.abs() + 0.5 * (y - v) * (y - v);
        let lo = -5.0;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=100_000 {
            let y = lo + i as f64 * 1e-4;
            let o = obj(y);
            if o < best.0 {
                best = (o, y);
            }
        }
        worst_prox = worst_prox.max((p - best.1).abs());
    }

    let mut worst_dist: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=3);
        let lambda = 0.5;
        let g = Vector::from_fn(n, |_, _| rng.random_range(-48i32..=48) as f64 / 32.0);
        let x = Vector::from_fn(n, |_, _| rng.random_range(-1i32..=1) as f64);
        let exact = subdiff_dist_l1(&g, &x, lambda).unwrap();
        // Enumerate s on the grid {-1, -31/32, ..., 1} for zero coordinates.
        let choices: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                if x[i] == 0.0 {
                    (0..=64).map(|c| -1.0 + c as f64 / 32.0).collect()
                } else {
                    vec![x[i].signum()]
                }
            })
            .collect();
        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; n];
        loop {
            let r: f64 = (0..n)
                .map(|i| (g[i] + lambda * choices[i][idx[i]]).powi(2))
                .sum();
            best = best.min(r.sqrt());
            let mut j = 0;
            while j < n {
                idx[j] += 1;
                if idx[j] < choices[j].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == n {
                break;
            }
        }
        worst_dist = worst_dist.max((exact - best).abs());
    }

    Outcome::new(
        worst_grad <= 1e-5 && worst_hess <= 1e-5 && worst_prox <= 2e-4 && worst_dist <= 1e-10,
        format!(
            "grad {worst_grad:.1e}, hessian {worst_hess:.1e}, prox {worst_prox:.1e}, subdiff {worst_dist:.1e}"
        ),
    )
}

fn remainder_diagnostic() -> Outcome {
    let mut cases: Vec<(String, CompositeProblem, Vector)> = Vec::new();
    for seed in 1..=5 {
        let pr = gen_phase_retrieval(PhaseParams::new(20, 200, seed)).unwrap();
        cases.push((format!("pr 20x200 seed {seed}"), pr.problem, pr.x0));
        let dq = gen_diag_quad(50, seed, DIAG_LAMBDA).unwrap();
        cases.push((format!("dq 50 seed {seed}"), dq.problem, dq.x0));
    }
    let big = gen_phase_retrieval(PhaseParams::new(100, 1000, 7)).unwrap();
    cases.push(("pr 100x1000 seed 7".into(), big.problem, big.x0));
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (name, problem, x0) in &cases {
        for order in [Order::First, Order::Second] {
            match remainder_check(problem, x0, 1.0, 500, order, 17) {
                Ok(r) => {
                    worst = worst.min(r.margin);
                    if !r.passed {
                        failures.push(format!("{name} p={order}: margin {:e}", r.margin));
                    }
                }
                Err(e) => failures.push(format!("{name} p={order}: {e}")),
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "{} checks, worst margin {worst:.3e}{}",
            2 * cases.len(),
            failures
                .first()
                .map(|f| format!("; first: {f}"))
                .unwrap_or_default()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("reference-value invariants", reference_invariants),
        ("nonconvex rate shape", rate_shape),
        ("convex rate", convex_rate),
        ("KL linear regime", kl_regime),
        ("desk-scale phase retrieval", desk_experiment),
        ("certificate soundness", certificate_soundness),
        ("oracle correctness", oracle_correctness),
        ("remainder diagnostic", remainder_diagnostic),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{name}]: {tag}: {}", i + 1, outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
