use nhota_core::{
    certify, gen_diag_quad, gen_phase_retrieval, CompositeProblem, ModelCenter, Order, PhaseParams,
    RunConfig, Runner, USchedule, Vector,
};
use proptest::prelude::*;

fn instance(kind: u8, n: usize, seed: u64) -> (CompositeProblem, Vector) {
    if kind == 0 {
        let inst = gen_diag_quad(n, seed, 0.1).unwrap();
        (inst.problem, inst.x0)
    } else {
        let inst = gen_phase_retrieval(PhaseParams::new(n, 5 * n, seed)).unwrap();
        (inst.problem, inst.x0)
    }
}

fn config(order: Order, u: f64) -> RunConfig {
    RunConfig {
        order,
        u: USchedule::Constant(u),
        max_outer: 150,
        stop_f: f64::NEG_INFINITY,
        stop_stat: 1e-9,
        ..Default::default()
    }
}

/// Rebuild the center from the oracle and re-certify every accepted step.
fn recertified_failures(problem: &CompositeProblem, x0: Vector, config: RunConfig) -> Vec<String> {
    let theta = config.theta;
    let order = config.order;
    let mut failures = Vec::new();
    let mut steps = 0;
    Runner::new(problem, config)
        .step_observer(|s| {
            steps += 1;
            let center = ModelCenter::new(problem.smooth(), s.center.clone(), order).unwrap();
            let cert = certify(problem, &center, s.y, s.m, theta, s.witness).unwrap();
            if !cert.decrease_ok || cert.residual > cert.threshold + 1e-8 {
                failures.push(format!("k={}: {cert:?}", s.k));
            }
        })
        .run(x0)
        .unwrap();
    failures
}

#[test]
fn accepted_steps_recertify() {
    for i in 0..40u64 {
        let kind = (i % 2) as u8;
        let n = 2 + (i as usize % 9);
        let order = if i % 3 == 0 {
            Order::First
        } else {
            Order::Second
        };
        let (problem, x0) = instance(kind, n, 1000 + i);
        let failures = recertified_failures(&problem, x0, config(order, 0.3));
        assert!(failures.is_empty(), "instance {i}: {failures:?}");
    }
}

#[test]
fn identical_inputs_give_identical_traces() {
    let (problem, x0) = instance(1, 8, 42);
    let run = || {
        let t = Runner::new(&problem, config(Order::Second, 0.5))
            .run(x0.clone())
            .unwrap();
        t.rows
            .iter()
            .map(|r| {
                (
                    r.f.to_bits(),
                    r.r.to_bits(),
                    r.m.to_bits(),
                    r.step_norm.to_bits(),
                    r.inner_iters,
                )
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reference_invariants_hold(
        kind in 0u8..2,
        n in 1usize..8,
        seed in 0u64..10_000,
        second in any::<bool>(),
        u in 0.01f64..=1.0,
    ) {
        let (problem, x0) = instance(kind, n, seed);
        let order = if second { Order::Second } else { Order::First };
        let trace = Runner::new(&problem, config(order, u)).run(x0).unwrap();
        let violations = trace.reference_violations(1e-9);
        prop_assert!(violations.is_empty(), "{:?}", violations);
        let f0 = trace.rows[0].f;
        for row in &trace.rows {
            prop_assert!(row.f <= f0);
        }
        for w in trace.rows.windows(2) {
            prop_assert!(w[1].m >= trace.rows[0].m);
        }
    }

    #[test]
    fn full_weight_reference_tracks_objective(
        kind in 0u8..2,
        n in 1usize..6,
        seed in 0u64..10_000,
    ) {
        let (problem, x0) = instance(kind, n, seed);
        let trace = Runner::new(&problem, config(Order::Second, 1.0)).run(x0).unwrap();
        for w in trace.rows.windows(2) {
            prop_assert!(w[1].f <= w[0].f);
        }
        for row in &trace.rows {
            prop_assert_eq!(row.r, row.f);
        }
    }
}
