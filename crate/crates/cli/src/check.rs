//! Named invariant checks with measured margins.

use std::sync::Arc;
use std::time::Instant;

use nhota_core::metrics::{decay_window, estimate_lipschitz, min_prefix};
use nhota_core::{
    accept_test, certify, exact_solution_diag, gen_diag_quad, gen_phase_retrieval, kl_probe,
    kl_probe_series, nhota_run, prox_l1, rate_fit, remainder_check, solve_subproblem, stationarity,
    subdiff_dist_l1, CompositeProblem, DiagQuadData, DiagQuadInstance, InnerLimits, KlClass,
    Matrix, ModelCenter, Order, PhaseParams, RunConfig, Runner, Status, USchedule, Vector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Quick,
    Full,
}

pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub millis: f64,
}

type Check = fn(Scale) -> (bool, String);

fn lcg(state: &mut u64) -> f64 {
    // Deterministic test inputs without pulling an RNG into the CLI.
    *state = state
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    ((*state >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
}

fn vec_from(state: &mut u64, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| scale * lcg(state))
}

fn pr(n: usize, m: usize, seed: u64) -> (CompositeProblem, Vector) {
    let inst = gen_phase_retrieval(PhaseParams::new(n, m, seed)).expect("valid parameters");
    (inst.problem, inst.x0)
}

fn dq(n: usize, seed: u64) -> (CompositeProblem, Vector) {
    let inst = gen_diag_quad(n, seed, 0.1).expect("valid parameters");
    (inst.problem, inst.x0)
}

fn config(order: Order, u: f64) -> RunConfig {
    RunConfig {
        order,
        u: USchedule::Constant(u),
        ..Default::default()
    }
}

fn prox_examples(_: Scale) -> (bool, String) {
    let cases = [
        (2.0, 0.5, 1.5),
        (-0.3, 0.5, 0.0),
        (-2.0, 0.5, -1.5),
        (0.5, 0.5, 0.0),
    ];
    let mut worst: f64 = 0.0;
    for (v, tau, expect) in cases {
        let got = prox_l1(&Vector::from_element(1, v), tau).unwrap()[0];
        worst = worst.max((got - expect).abs());
    }
    let rejects = prox_l1(&Vector::zeros(1), 0.0).is_err();
    (
        worst == 0.0 && rejects,
        format!("max error {worst:e}, tau=0 rejected: {rejects}"),
    )
}

fn prox_grid(_: Scale) -> (bool, String) {
    let mut state = 11;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let v = 3.0 * lcg(&mut state);
        let tau = 0.05 + lcg(&mut state).abs();
        let p = prox_l1(&Vector::from_element(1, v), tau).unwrap()[0];
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=80_000 {
            let y = -4.0 + i as f64 * 1e-4;
            let o = tau * y.abs() + 0.5 * (y - v) * (y - v);
            if o < best.0 {
                best = (o, y);
            }
        }
        worst = worst.max((p - best.1).abs());
    }
    (
        worst <= 2e-4,
        format!("max |prox − grid| {worst:.2e} (tol 2e-4)"),
    )
}

fn prox_nonexpansive(scale: Scale) -> (bool, String) {
    let mut state = 5;
    let trials = if scale == Scale::Quick { 200 } else { 2000 };
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let a = vec_from(&mut state, 6, 3.0);
        let b = vec_from(&mut state, 6, 3.0);
        let tau = lcg(&mut state).abs() + 1e-3;
        let pa = prox_l1(&a, tau).unwrap();
        let pb = prox_l1(&b, tau).unwrap();
        worst = worst.max((pa - pb).norm() - (a - b).norm());
    }
    (
        worst <= 1e-12,
        format!("max ‖Pa − Pb‖ − ‖a − b‖ = {worst:.2e}"),
    )
}

fn prox_optimality(_: Scale) -> (bool, String) {
    let mut state = 17;
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let v = vec_from(&mut state, 4, 2.0);
        let tau = 0.3;
        let p = prox_l1(&v, tau).unwrap();
        let obj = |y: &Vector| tau * y.lp_norm(1) + 0.5 * (y - &v).norm_squared();
        let base = obj(&p);
        for _ in 0..50 {
            let y = &p + vec_from(&mut state, 4, 0.1);
            worst = worst.min(obj(&y) - base);
        }
    }
    (
        worst >= -1e-12,
        format!("min objective increase {worst:.2e}"),
    )
}

fn subdiff_grid(_: Scale) -> (bool, String) {
    let mut state = 23;
    let lambda = 0.5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = 1 + (lcg(&mut state).abs() * 3.0) as usize % 3;
        let g = Vector::from_fn(n, |_, _| (lcg(&mut state) * 48.0).round() / 32.0);
        let x = Vector::from_fn(n, |_, _| lcg(&mut state).round());
        let exact = subdiff_dist_l1(&g, &x, lambda).unwrap();
        let grid: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                if x[i] == 0.0 {
                    (0..=64).map(|c| -1.0 + c as f64 / 32.0).collect()
                } else {
                    vec![x[i].signum()]
                }
            })
            .collect();
        let mut best = f64::INFINITY;
        let total: usize = grid.iter().map(Vec::len).product();
        for mut idx in 0..total {
            let mut r = 0.0;
            for (i, choices) in grid.iter().enumerate() {
                let s = choices[idx % choices.len()];
                idx /= choices.len();
                r += (g[i] + lambda * s).powi(2);
            }
            best = best.min(r.sqrt());
        }
        worst = worst.max((exact - best).abs());
    }
    (worst <= 1e-10, format!("max |dist − grid| {worst:.2e}"))
}

fn subdiff_zero_iff_inclusion(_: Scale) -> (bool, String) {
    let lambda = 0.7;
    let x = Vector::from_vec(vec![1.0, -2.0, 0.0]);
    let inside = Vector::from_vec(vec![-0.7, 0.7, 0.3]);
    let outside = Vector::from_vec(vec![-0.7, 0.7, 0.9]);
    let a = subdiff_dist_l1(&inside, &x, lambda).unwrap();
    let b = subdiff_dist_l1(&outside, &x, lambda).unwrap();
    (
        a == 0.0 && (b - 0.2).abs() < 1e-12,
        format!("inside {a:e}, outside {b:.3e} (expect 0.2)"),
    )
}

fn fd_gradient(_: Scale) -> (bool, String) {
    let (problem, _) = pr(10, 50, 7);
    let oracle = problem.smooth();
    let mut state = 29;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = vec_from(&mut state, 10, 1.5);
        let g = oracle.gradient(&x);
        let fd = Vector::from_fn(10, |i, _| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (oracle.value(&xp) - oracle.value(&xm)) / (2.0 * h)
        });
        worst = worst.max((&g - fd).norm() / g.norm().max(1.0));
    }
    (
        worst <= 1e-5,
        format!("max relative error {worst:.2e} (tol 1e-5)"),
    )
}

fn fd_hessian(_: Scale) -> (bool, String) {
    let (problem, _) = pr(10, 50, 7);
    let oracle = problem.smooth();
    let mut state = 31;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = vec_from(&mut state, 10, 1.5);
        let hess = oracle.hessian(&x).unwrap();
        let mut fd = Matrix::zeros(10, 10);
        for j in 0..10 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            fd.set_column(
                j,
                &((oracle.gradient(&xp) - oracle.gradient(&xm)) / (2.0 * h)),
            );
        }
        worst = worst.max((&hess - fd).norm() / hess.norm().max(1.0));
    }
    (
        worst <= 1e-5,
        format!("max relative error {worst:.2e} (tol 1e-5)"),
    )
}

fn taylor_exact_on_quadratic(_: Scale) -> (bool, String) {
    let (problem, x0) = dq(6, 2);
    let center = ModelCenter::new(problem.smooth(), x0.clone(), Order::Second).unwrap();
    let mut state = 37;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let y = &x0 + vec_from(&mut state, 6, 3.0);
        let t = center.taylor_value(&y).unwrap();
        let f = problem.smooth().value(&y);
        worst = worst.max((t - f).abs() / f.abs().max(1.0));
    }
    (worst <= 1e-12, format!("max relative |T₂ − F| {worst:.2e}"))
}

fn model_gradient_fd(_: Scale) -> (bool, String) {
    let (problem, x0) = pr(8, 40, 3);
    let mut state = 41;
    let mut worst: f64 = 0.0;
    for order in [Order::First, Order::Second] {
        let center = ModelCenter::new(problem.smooth(), x0.clone(), order).unwrap();
        for _ in 0..10 {
            let y = &x0 + vec_from(&mut state, 8, 1.0);
            let g = center.model_grad(&y, 2.0).unwrap();
            let h = 1e-5;
            let fd = Vector::from_fn(8, |i, _| {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[i] += h;
                ym[i] -= h;
                (center.model_value(&yp, 2.0).unwrap() - center.model_value(&ym, 2.0).unwrap())
                    / (2.0 * h)
            });
            worst = worst.max((&g - fd).norm() / g.norm().max(1.0));
        }
    }
    (worst <= 1e-6, format!("max relative error {worst:.2e}"))
}

fn inner_closed_form(_: Scale) -> (bool, String) {
    let data = DiagQuadData::new(
        Vector::from_element(1, 1.0),
        Vector::from_element(1, 3.0),
        0.0,
    )
    .unwrap();
    let inst = DiagQuadInstance::from_data(data, Vector::zeros(1)).unwrap();
    let center = ModelCenter::new(inst.problem.smooth(), Vector::zeros(1), Order::First).unwrap();
    match solve_subproblem(
        &inst.problem,
        &center,
        1.0,
        1e-3,
        &InnerLimits::default(),
        None,
    ) {
        Ok(sol) => {
            let err = (sol.y[0] - 3.0).abs();
            (
                err <= 1e-6 && sol.certificate.is_valid(),
                format!("|y − 3| = {err:.2e}"),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

fn inner_recertify(_: Scale) -> (bool, String) {
    let inst = gen_phase_retrieval(PhaseParams::new(10, 50, 7)).unwrap();
    let center = ModelCenter::new(inst.problem.smooth(), inst.x0.clone(), Order::Second).unwrap();
    let sol = match solve_subproblem(
        &inst.problem,
        &center,
        10.0,
        0.1,
        &InnerLimits::default(),
        None,
    ) {
        Ok(s) => s,
        Err(e) => return (false, e.to_string()),
    };
    let again = certify(&inst.problem, &center, &sol.y, 10.0, 0.1, &sol.witness).unwrap();
    let diff = (again.residual - sol.certificate.residual).abs();
    let lambda = inst.data.params.lambda;
    let witness_ok = sol.witness.iter().zip(sol.y.iter()).all(|(w, y)| {
        w.abs() <= lambda + 1e-10 && (*y == 0.0 || (w - lambda * y.signum()).abs() <= 1e-10)
    });
    (
        again.is_valid() && diff <= 1e-8 && witness_ok,
        format!("residual agreement {diff:.1e}, witness in λ∂‖y‖₁: {witness_ok}"),
    )
}

fn certificate_soundness(scale: Scale) -> (bool, String) {
    let instances = if scale == Scale::Quick { 20 } else { 100 };
    let mut steps = 0;
    let mut bad = 0;
    for i in 0..instances {
        let n = 1 + i % 10;
        let (problem, x0) = if i % 2 == 0 {
            dq(n, 500 + i as u64)
        } else {
            pr(n, 5 * n, 500 + i as u64)
        };
        let order = if i % 3 == 0 {
            Order::First
        } else {
            Order::Second
        };
        let cfg = RunConfig {
            max_outer: 100,
            stop_f: f64::NEG_INFINITY,
            stop_stat: 1e-9,
            ..config(order, 0.3)
        };
        let theta = cfg.theta;
        let run = Runner::new(&problem, cfg)
            .step_observer(|s| {
                steps += 1;
                let center = ModelCenter::new(problem.smooth(), s.center.clone(), order).unwrap();
                let c = certify(&problem, &center, s.y, s.m, theta, s.witness).unwrap();
                if !c.decrease_ok || c.residual > c.threshold + 1e-8 {
                    bad += 1;
                }
            })
            .run(x0);
        if run.is_err() {
            bad += 1;
        }
    }
    (
        bad == 0,
        format!("{instances} instances, {steps} steps, {bad} invalid"),
    )
}

fn reference_invariant_runs(scale: Scale) -> (bool, String) {
    let seeds = if scale == Scale::Quick { 1..=2 } else { 1..=5 };
    let mut runs = 0;
    let mut violations = 0;
    let mut failures = 0;
    for seed in seeds {
        for (problem, x0) in [pr(20, 200, seed), dq(50, seed)] {
            for order in [Order::First, Order::Second] {
                for u in [0.05, 0.5, 1.0] {
                    runs += 1;
                    match nhota_run(&problem, x0.clone(), &config(order, u)) {
                        Ok(t) => violations += t.reference_violations(1e-9).len(),
                        Err(_) => failures += 1,
                    }
                }
            }
        }
    }
    (
        violations == 0 && failures == 0,
        format!("{runs} runs, {violations} violations, {failures} failures"),
    )
}

fn level_set(_: Scale) -> (bool, String) {
    let (problem, x0) = pr(20, 200, 3);
    match nhota_run(&problem, x0, &config(Order::Second, 0.05)) {
        Ok(t) => {
            let f0 = t.rows[0].f;
            let worst = t
                .rows
                .iter()
                .map(|r| r.f - f0)
                .fold(f64::NEG_INFINITY, f64::max);
            (worst <= 0.0, format!("max f(x_k) − f(x₀) = {worst:e}"))
        }
        Err(e) => (false, e.to_string()),
    }
}

fn full_weight_monotone(_: Scale) -> (bool, String) {
    let (problem, x0) = pr(20, 200, 7);
    match nhota_run(&problem, x0, &config(Order::Second, 1.0)) {
        Ok(t) => {
            let monotone = t.rows.windows(2).all(|w| w[1].f <= w[0].f);
            let tracks = t.rows.iter().all(|r| r.r == r.f);
            (
                monotone && tracks,
                format!("f nonincreasing: {monotone}, R = f: {tracks}"),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

fn determinism(_: Scale) -> (bool, String) {
    let (problem, x0) = pr(15, 100, 9);
    let run = || {
        nhota_run(&problem, x0.clone(), &config(Order::Second, 0.5)).map(|t| {
            t.rows
                .iter()
                .map(|r| {
                    (
                        r.f.to_bits(),
                        r.r.to_bits(),
                        r.step_norm.to_bits(),
                        r.backtracks,
                    )
                })
                .collect::<Vec<_>>()
        })
    };
    let (a, b) = (run(), run());
    let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
    (same, format!("bit-identical rows: {same}"))
}

fn diag_quad_converges(_: Scale) -> (bool, String) {
    let inst = gen_diag_quad(50, 3, 0.1).unwrap();
    let (_, f_star) = exact_solution_diag(&inst.data);
    let cfg = RunConfig {
        max_outer: 50,
        ..config(Order::Second, 0.5)
    }
    .without_stopping();
    match nhota_run(&inst.problem, inst.x0.clone(), &cfg) {
        Ok(t) => {
            let gap = t.last().f - f_star;
            (
                gap <= 1e-8,
                format!("f − f* = {gap:.2e} after {} iterations", t.last().k),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

fn stationary_start(_: Scale) -> (bool, String) {
    let inst = gen_diag_quad(20, 4, 0.3).unwrap();
    let x_star = inst.problem.known_opt().unwrap().x.clone();
    let s = stationarity(&inst.problem, &x_star).unwrap();
    match nhota_run(
        &inst.problem,
        x_star,
        &RunConfig::default().without_stopping(),
    ) {
        Ok(t) => (
            t.status == Status::Stationary && t.rows.len() == 1,
            format!(
                "S(x*) = {s:.1e}, status {}, rows {}",
                t.status,
                t.rows.len()
            ),
        ),
        Err(e) => (false, e.to_string()),
    }
}

fn backtracking_triggers(_: Scale) -> (bool, String) {
    let (problem, x0) = dq(50, 1);
    let cfg = RunConfig {
        m0: 1e-3,
        ..config(Order::First, 0.5)
    };
    match nhota_run(&problem, x0, &cfg) {
        Ok(t) => {
            let max_i = t.rows.iter().map(|r| r.backtracks).max().unwrap_or(0);
            (max_i >= 1, format!("max i_k = {max_i} with M₀ = 1e-3"))
        }
        Err(e) => (false, e.to_string()),
    }
}

fn remainder_phase_retrieval(scale: Scale) -> (bool, String) {
    let mut cases = vec![pr(10, 50, 7), pr(20, 200, 1)];
    if scale == Scale::Full {
        cases.extend((2..=5).map(|s| pr(20, 200, s)));
        cases.push(pr(100, 1000, 7));
    }
    let samples = if scale == Scale::Quick { 100 } else { 500 };
    let mut worst = f64::INFINITY;
    for (problem, x0) in &cases {
        for order in [Order::First, Order::Second] {
            match remainder_check(problem, x0, 1.0, samples, order, 17) {
                Ok(r) => worst = worst.min(r.margin),
                Err(e) => return (false, e.to_string()),
            }
        }
    }
    (
        worst >= 0.0,
        format!("{} checks, worst margin {worst:.3e}", 2 * cases.len()),
    )
}

fn remainder_quadratic(_: Scale) -> (bool, String) {
    let (problem, x0) = dq(10, 2);
    match remainder_check(&problem, &x0, 1.0, 100, Order::Second, 1) {
        Ok(r) => (
            r.passed && r.l_hat <= 1e-12,
            format!("L̂ = {:.1e}, margin {:.1e}", r.l_hat, r.margin),
        ),
        Err(e) => (false, e.to_string()),
    }
}

fn lipschitz_scaling(_: Scale) -> (bool, String) {
    let (problem, _) = pr(10, 50, 7);
    let origin = Vector::zeros(10);
    let l1 = estimate_lipschitz(problem.smooth(), &origin, 1.0, Order::Second, 100, 5).unwrap();
    let l2 = estimate_lipschitz(problem.smooth(), &origin, 2.0, Order::Second, 100, 5).unwrap();
    let rel = (l2 - 2.0 * l1).abs() / l1;
    (rel <= 1e-6, format!("L̂(2)/L̂(1) − 2 = {rel:.1e}"))
}

fn rate_fit_synthetic(_: Scale) -> (bool, String) {
    let series: Vec<f64> = (0..40)
        .map(|k| (k.max(1) as f64).powf(-2.0 / 3.0))
        .collect();
    match rate_fit(&series, 3..40) {
        Ok(fit) => {
            let err = (fit.slope + 2.0 / 3.0).abs();
            (err <= 1e-6, format!("slope error {err:.1e}"))
        }
        Err(e) => (false, e.to_string()),
    }
}

fn kl_synthetic(_: Scale) -> (bool, String) {
    let geo: Vec<f64> = (0..40).map(|k| 0.5f64.powi(k)).collect();
    let pow: Vec<f64> = (0..40).map(|k| (k.max(1) as f64).powi(-2)).collect();
    let a = kl_probe_series(&geo);
    let b = kl_probe_series(&pow);
    let ok = matches!(a, KlClass::Linear { rho, .. } if (rho - 0.5).abs() < 1e-6)
        && matches!(b, KlClass::Sublinear { beta, .. } if (beta - 2.0).abs() <= 0.1);
    (ok, format!("2^-k → {a:?}; k^-2 → {b:?}"))
}

fn rate_shape(scale: Scale) -> (bool, String) {
    let (problem, x0) = pr(20, 200, 7);
    let orders: &[Order] = if scale == Scale::Quick {
        &[Order::Second]
    } else {
        &[Order::Second, Order::First]
    };
    let mut parts = Vec::new();
    let mut pass = true;
    for &order in orders {
        let cfg = RunConfig {
            max_outer: 200,
            ..config(order, 0.5)
        }
        .without_stopping();
        let t = match nhota_run(&problem, x0.clone(), &cfg) {
            Ok(t) => t,
            Err(e) => return (false, e.to_string()),
        };
        let p = order.get() as f64;
        let series = min_prefix(&t.stationarity());
        match rate_fit(&series, decay_window(&series)) {
            Ok(fit) => {
                pass &= fit.slope <= -p / (p + 1.0) + 0.2 && fit.r2 >= 0.8;
                parts.push(format!(
                    "p={order}: slope {:.2}, r² {:.3}",
                    fit.slope, fit.r2
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("p={order}: {e}"));
            }
        }
    }
    (pass, parts.join("; "))
}

fn kl_diag_quad(_: Scale) -> (bool, String) {
    let inst = gen_diag_quad(50, 3, 0.1).unwrap();
    let (_, f_star) = exact_solution_diag(&inst.data);
    let cfg = RunConfig {
        max_outer: 1000,
        ..config(Order::First, 0.5)
    }
    .without_stopping();
    match nhota_run(&inst.problem, inst.x0.clone(), &cfg) {
        Ok(t) => {
            let class = kl_probe(&t, f_star);
            (class.is_linear(), format!("{class:?}"))
        }
        Err(e) => (false, e.to_string()),
    }
}

fn fault_injection(_: Scale) -> (bool, String) {
    let (problem, x0) = pr(20, 200, 7);
    let cfg = RunConfig {
        m_tilde: 10.0,
        ..config(Order::Second, 0.5)
    };
    let control = match nhota_run(&problem, x0.clone(), &cfg) {
        Ok(t) => t.reference_violations(1e-9).len(),
        Err(e) => return (false, format!("control run: {e}")),
    };
    let mutant = Runner::new(&problem, cfg)
        .acceptance_rule(|r, f, s, m_tilde, order| accept_test(r, f, s, -m_tilde, order))
        .run(x0);
    let caught = match mutant {
        Ok(t) => t.reference_violations(1e-9).len(),
        Err(e) => return (false, format!("mutant run: {e}")),
    };
    (
        control == 0 && caught > 0,
        format!("control violations {control}, mutant violations {caught}"),
    )
}

fn desk_sweep(_: Scale) -> (bool, String) {
    let inst = gen_phase_retrieval(PhaseParams::new(100, 1000, 7)).unwrap();
    let problem = Arc::new(inst.problem);
    let mut parts = Vec::new();
    let mut pass = true;
    for u in [0.05, 0.25, 0.5, 0.75, 1.0] {
        let cfg = RunConfig {
            max_outer: 500,
            ..config(Order::Second, u)
        };
        match nhota_run(&problem, inst.x0.clone(), &cfg) {
            Ok(t) => {
                let mut ok = t.status == Status::StoppedByCriterion;
                if u == 1.0 {
                    ok &= t.rows.windows(2).all(|w| w[1].f <= w[0].f);
                }
                pass &= ok;
                parts.push(format!("u={u}: {} at k={}", t.status, t.last().k));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("u={u}: {e}"));
            }
        }
    }
    (pass, parts.join("; "))
}

const QUICK: &[(&str, Check)] = &[
    ("prox_l1 worked examples", prox_examples),
    ("prox_l1 vs 1-D grid", prox_grid),
    ("prox_l1 nonexpansive", prox_nonexpansive),
    ("prox_l1 optimality", prox_optimality),
    ("subdiff_dist_l1 vs grid enumeration", subdiff_grid),
    (
        "subdiff_dist_l1 zero iff inclusion",
        subdiff_zero_iff_inclusion,
    ),
    (
        "phase retrieval gradient vs finite differences",
        fd_gradient,
    ),
    ("phase retrieval Hessian vs finite differences", fd_hessian),
    (
        "second-order Taylor exact on quadratics",
        taylor_exact_on_quadratic,
    ),
    ("model gradient vs finite differences", model_gradient_fd),
    ("inner solve closed form", inner_closed_form),
    ("inner certificate re-validation", inner_recertify),
    ("certificate soundness", certificate_soundness),
    ("reference-value invariants", reference_invariant_runs),
    ("level-set confinement", level_set),
    ("u = 1 monotone", full_weight_monotone),
    ("deterministic traces", determinism),
    ("diag-quad reaches f*", diag_quad_converges),
    ("stationary start", stationary_start),
    ("backtracking with small M0", backtracking_triggers),
    (
        "remainder bound on phase retrieval",
        remainder_phase_retrieval,
    ),
    ("remainder vanishes on quadratics", remainder_quadratic),
    ("Lipschitz estimate scaling", lipschitz_scaling),
    ("rate_fit on power law", rate_fit_synthetic),
    ("kl_probe synthetic", kl_synthetic),
    ("stationarity rate shape", rate_shape),
    ("kl_probe linear on diag-quad", kl_diag_quad),
    ("fault injection caught", fault_injection),
];

const FULL_ONLY: &[(&str, Check)] = &[("desk-scale u sweep (n=100, m=1000)", desk_sweep)];

pub fn check_names(scale: Scale) -> Vec<&'static str> {
    let mut names: Vec<_> = QUICK.iter().map(|(n, _)| *n).collect();
    if scale == Scale::Full {
        names.extend(FULL_ONLY.iter().map(|(n, _)| *n));
    }
    names
}

/// Run every check, calling `report` as each one finishes.
pub fn run_checks(scale: Scale, mut report: impl FnMut(&CheckResult)) -> Vec<CheckResult> {
    let mut checks: Vec<(&'static str, Check)> = QUICK.to_vec();
    if scale == Scale::Full {
        checks.extend_from_slice(FULL_ONLY);
    }
    checks
        .into_iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let (pass, detail) = check(scale);
            let result = CheckResult {
                name,
                pass,
                detail,
                millis: start.elapsed().as_secs_f64() * 1e3,
            };
            report(&result);
            result
        })
        .collect()
}
