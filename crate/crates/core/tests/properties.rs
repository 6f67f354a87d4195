use ehrelay::baselines::{run_eq, run_gre, run_sno};
use ehrelay::closedform::{
    compute_thresholds, ge1_candidates, relaxed_is_feasible, relaxed_solution, solve_opt,
};
use ehrelay::{check_feasibility, Branch, SystemParams};
use proptest::prelude::*;

fn no_direct() -> impl Strategy<Value = SystemParams> {
    (
        1usize..=8,
        0.0..2.0f64,
        0.2..4.0f64,
        0.0..2.0f64,
        0.0..2.0f64,
    )
        .prop_map(|(n, beta, g1, p10, p20)| SystemParams::new(n, 1.0, p10, p20, g1, 1.0, beta))
}

fn any_link() -> impl Strategy<Value = SystemParams> {
    (no_direct(), 0.0..0.95f64).prop_map(|(p, f)| {
        let g1d = f * p.gamma1;
        p.with_direct_link(g1d)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn relay_budget_is_spent(p in any_link()) {
        prop_assume!(p.n_phases >= 2);
        let r = solve_opt(&p).unwrap();
        let spent: f64 = r.allocation.p2.iter().sum();
        prop_assert!((spent - p.p2_initial).abs() <= 1e-12 * (1.0 + p.p2_initial), "{spent}");
    }

    #[test]
    fn hops_are_matched(p in any_link()) {
        let r = solve_opt(&p).unwrap();
        let a = &r.allocation;
        let drop = p.gamma1 - p.gamma1_direct;
        for j in 0..p.n_phases {
            let forwarded = if j == 0 { a.p2[0] - a.alpha } else { a.p2[j] };
            prop_assert!((a.p1[j] * drop - forwarded * p.gamma2).abs() <= 1e-9, "phase {j}");
        }
    }

    #[test]
    fn every_policy_is_feasible(p in no_direct()) {
        for r in [solve_opt(&p).unwrap(), run_gre(&p).unwrap(), run_eq(&p).unwrap(), run_sno(&p).unwrap()] {
            prop_assert!(r.feasibility.min_residual() >= -1e-9, "{}", r.branch);
        }
    }

    #[test]
    fn opt_dominates_matched_baselines(p in any_link()) {
        let opt = solve_opt(&p).unwrap().throughput;
        prop_assert!(run_gre(&p).unwrap().throughput <= opt + 1e-9);
        prop_assert!(run_eq(&p).unwrap().throughput <= opt + 1e-9);
    }

    #[test]
    fn relaxed_instances_take_fast_path(p in any_link()) {
        let ratios = p.derive_ratios().unwrap();
        prop_assume!(relaxed_is_feasible(&p, &ratios));
        let r = solve_opt(&p).unwrap();
        prop_assert_eq!(r.branch, Branch::Relaxed);
        prop_assert_eq!(r.allocation, relaxed_solution(&p).unwrap());
    }

    #[test]
    fn more_source_energy_never_hurts(p in any_link(), extra in 0.0..1.0f64) {
        let mut q = p;
        q.p1_initial += extra;
        prop_assert!(solve_opt(&q).unwrap().throughput >= solve_opt(&p).unwrap().throughput - 1e-9);
    }

    #[test]
    fn direct_link_never_hurts(p in no_direct(), f in 0.0..0.9f64) {
        let base = solve_opt(&p).unwrap().throughput;
        let linked = solve_opt(&p.with_direct_link(f * p.gamma1)).unwrap().throughput;
        prop_assert!(linked >= base - 1e-9);
    }
}

#[test]
fn zero_direct_link_is_bit_identical() {
    let p = SystemParams::new(4, 1.0, 0.15, 1.2, 1.7, 1.0, 0.9);
    assert_eq!(
        solve_opt(&p).unwrap(),
        solve_opt(&p.with_direct_link(0.0)).unwrap()
    );
}

#[test]
fn case_search_stops_at_threshold_index() {
    for p10 in [0.0, 0.01, 0.05, 0.1, 0.2, 0.24] {
        let p = SystemParams::new(5, 1.0, p10, 1.0, 2.0, 1.0, 0.7);
        let ratios = p.derive_ratios().unwrap();
        let t = compute_thresholds(&p, &ratios).unwrap();
        let k = t.phase_index(p10);
        assert!(p10 > t.p_th[k] || k == 5);
        let ls: Vec<usize> = ge1_candidates(&p, &ratios, &t)
            .unwrap()
            .into_iter()
            .map(|c| match c.case_id {
                Branch::BgGe1 { l } => l,
                other => panic!("{other}"),
            })
            .collect();
        assert_eq!(ls, (1..=k).collect::<Vec<_>>());
        if let Branch::BgGe1 { l } = solve_opt(&p).unwrap().branch {
            assert!(l <= k);
        }
    }
}

#[test]
fn throughput_is_continuous_across_thresholds() {
    for (n, beta) in [(3, 0.6), (4, 0.5), (6, 1.0)] {
        let p = SystemParams::new(n, 1.0, 0.0, 1.0, 2.0, 1.0, beta);
        let ratios = p.derive_ratios().unwrap();
        let t = compute_thresholds(&p, &ratios).unwrap();
        for &th in &t.p_th[..n] {
            let at = |p10: f64| {
                let mut q = p;
                q.p1_initial = p10;
                solve_opt(&q).unwrap().throughput
            };
            let (below, above) = (at((th - 1e-8).max(0.0)), at(th + 1e-8));
            assert!(
                (above - below).abs() < 1e-6,
                "n={n} th={th}: {below} vs {above}"
            );
        }
    }
}

#[test]
fn sno_feasibility_uses_its_own_model() {
    // SNo overspends the shared-model source budget by design.
    let p = SystemParams::new(2, 1.0, 0.2, 1.0, 1.0, 1.0, 0.5);
    let r = run_sno(&p).unwrap();
    assert!(r.is_feasible());
    assert!(!check_feasibility(&p, &r.allocation, 1e-9)
        .unwrap()
        .is_feasible());
}
