use ehrelay::closedform::solve_opt;
use ehrelay::oracle::{oracle_feasible, solve_original, solve_reduced, OracleConfig};
use ehrelay::SystemParams;
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = SystemParams> {
    (
        1usize..=6,
        0.0..2.0f64,
        0.2..4.0f64,
        0.0..1.0f64,
        any::<bool>(),
        0.0..2.0f64,
        0.0..2.0f64,
    )
        .prop_map(|(n, beta, g1, frac, direct, p10, p20)| {
            let g1d = if direct { frac * g1 * 0.99 } else { 0.0 };
            SystemParams::new(n, 1.0, p10, p20, g1, 1.0, beta).with_direct_link(g1d)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_matches_oracle(p in instance()) {
        let opt = solve_opt(&p).unwrap();
        let orc = solve_reduced(&p, &OracleConfig::default()).unwrap();
        prop_assert!(oracle_feasible(&p, &orc).unwrap());
        prop_assert!(opt.is_feasible());
        prop_assert!(!opt.diagnostics.fallback);
        let tol = 1e-6 * (1.0 + orc.throughput);
        prop_assert!((opt.throughput - orc.throughput).abs() <= tol,
            "opt {} ({}) vs oracle {}", opt.throughput, opt.branch, orc.throughput);
    }

    #[test]
    fn reduction_matches_full_variables(
        n in 1usize..=4,
        beta in 0.0..2.0f64,
        g1 in 0.2..4.0f64,
        p10 in 0.0..2.0f64,
        p20 in 0.0..2.0f64,
    ) {
        let p = SystemParams::new(n, 1.0, p10, p20, g1, 1.0, beta);
        let cfg = OracleConfig::default();
        let full = solve_original(&p, &cfg).unwrap().throughput;
        let reduced = solve_reduced(&p, &cfg).unwrap().throughput;
        prop_assert!((full - reduced).abs() <= 1e-5 * (1.0 + reduced), "{full} vs {reduced}");
    }
}

#[test]
fn pinned_instances() {
    // Values cross-checked with an independent SQP solver.
    let a = SystemParams::new(2, 1.0, 0.1, 1.0, 2.0, 1.0, 0.6);
    let b = SystemParams::new(3, 1.0, 0.2, 1.0, 1.0, 1.0, 0.5);
    for (p, value) in [(a, 0.44553281422341917), (b, 0.40912478158045074)] {
        let opt = solve_opt(&p).unwrap();
        let orc = solve_reduced(&p, &OracleConfig::default()).unwrap();
        assert!((opt.throughput - value).abs() < 1e-12);
        assert!((orc.throughput - value).abs() < 1e-8);
    }
}

#[test]
fn grid_agrees_with_gradient_on_small_instances() {
    let cases = [
        SystemParams::new(2, 1.0, 0.1, 1.0, 2.0, 1.0, 0.6),
        SystemParams::new(3, 1.0, 0.2, 1.0, 1.0, 1.0, 0.5),
        SystemParams::new(2, 1.0, 0.5, 1.0, 1.0, 1.0, 1.0),
    ];
    for p in cases {
        let pg = solve_reduced(&p, &OracleConfig::default())
            .unwrap()
            .throughput;
        let grid = solve_reduced(&p, &OracleConfig::grid(2e-3))
            .unwrap()
            .throughput;
        assert!(grid <= pg + 1e-9);
        assert!(
            pg - grid <= (2.0 * 2e-3 * p.gamma2).max(1e-4),
            "{pg} vs {grid}"
        );
    }
}

#[test]
fn gradient_trace_never_decreases() {
    let p = SystemParams::new(5, 1.0, 0.1, 1.5, 1.3, 1.0, 0.7);
    let trace = ehrelay::oracle::reduced_objective_trace(&p, &OracleConfig::default()).unwrap();
    assert!(trace.len() > 1);
    assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn direct_link_lets_full_problem_beat_reduction() {
    // With a direct link the source can spend energy the relay cannot match,
    // which the forwarding-unit reduction rules out.
    let p = SystemParams::new(1, 1.0, 2.0, 0.5, 2.0, 1.0, 0.5).with_direct_link(1.0);
    let cfg = OracleConfig::default();
    let full = solve_original(&p, &cfg).unwrap().throughput;
    let opt = solve_opt(&p).unwrap();
    assert!(full > opt.throughput + 1e-3, "{full} vs {}", opt.throughput);
}
