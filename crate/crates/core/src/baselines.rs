//! Comparison policies: greedy (GRE), equal (EQ) and source-only (SNo).
//!
//! GRE and EQ walk the phases once, always matching the two hops and never
//! sending a pure supplement. SNo runs a different system: the source owns
//! all the energy and the relay lives off a power split of what it receives.

use crate::error::{Error, Result};
use crate::model::{
    check_feasibility, Allocation, Branch, Feasibility, SolveReport, SystemParams, FEASIBILITY_TOL,
};

/// Residual energy of both nodes at the start of a phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualState {
    pub p1_residual: f64,
    pub p2_residual: f64,
    /// 1-based phase index.
    pub phase: usize,
}

impl ResidualState {
    pub fn initial(params: &SystemParams) -> Self {
        ResidualState {
            p1_residual: params.p1_initial,
            p2_residual: params.p2_initial,
            phase: 1,
        }
    }

    /// Spends `(p1, p2)` and banks the relay's transmission at the source.
    pub fn advance(&mut self, params: &SystemParams, p1: f64, p2: f64) {
        self.p1_residual = (self.p1_residual - p1 + params.beta * p2).max(0.0);
        self.p2_residual = (self.p2_residual - p2).max(0.0);
        self.phase += 1;
    }
}

fn matched_walk(
    params: &SystemParams,
    branch: Branch,
    share: impl Fn(usize) -> f64,
    source_limited: impl Fn(f64, f64) -> bool,
) -> Result<SolveReport> {
    let gamma_star = params.derive_ratios()?.gamma_star;
    let n = params.n_phases;
    let mut state = ResidualState::initial(params);
    let (mut p1, mut p2) = (Vec::with_capacity(n), Vec::with_capacity(n));
    while state.phase <= n {
        let fraction = share(n - state.phase + 1);
        let (s, r) = (state.p1_residual, state.p2_residual);
        let (a, b) = if source_limited(s * gamma_star, r) {
            let a = s * fraction;
            (a, a * gamma_star)
        } else {
            let b = r * fraction;
            (b / gamma_star, b)
        };
        state.advance(params, a, b);
        p1.push(a);
        p2.push(b);
    }
    SolveReport::new(params, Allocation::from_powers(p1, p2), branch)
}

/// Greedy: the weaker hop spends its whole residual every phase.
pub fn run_gre(params: &SystemParams) -> Result<SolveReport> {
    params.validate()?;
    matched_walk(params, Branch::BaselineGre, |_| 1.0, |s, r| s < r)
}

/// Equal: the weaker hop spends `1/(N-j+1)` of its residual in phase `j`.
/// A tie counts as source-limited.
pub fn run_eq(params: &SystemParams) -> Result<SolveReport> {
    params.validate()?;
    matched_walk(
        params,
        Branch::BaselineEq,
        |left| 1.0 / left as f64,
        |s, r| s <= r,
    )
}

/// Source-only: the source spends `(P_{1,0} + P_{2,0}) / N` per phase and the
/// relay harvests `gamma/(gamma+beta)` of the received signal, forwarding
/// `P_{2,j} = beta gamma/(gamma+beta) P_{1,j}`.
///
/// The report's feasibility uses this model's constraints instead of the
/// shared-budget ones: `energy_causality` holds the source's cumulative slack
/// for every phase followed by the relay's cumulative harvested-minus-spent
/// balance, `budget` is the relay's final balance (zero), and
/// `nonnegativity` is as usual.
pub fn run_sno(params: &SystemParams) -> Result<SolveReport> {
    params.validate()?;
    if params.has_direct_link() {
        return Err(Error::invalid(
            "gamma1_direct",
            "SNo is only defined without a direct link",
        ));
    }
    let n = params.n_phases;
    let gamma = params.gamma1 / params.gamma2;
    let total = params.p1_initial + params.p2_initial;
    let p1 = vec![total / n as f64; n];
    let (harvest_share, detect_share) = if params.beta > 0.0 {
        (
            gamma / (gamma + params.beta),
            params.beta / (gamma + params.beta),
        )
    } else {
        (1.0, 0.0)
    };
    let harvested: Vec<f64> = p1.iter().map(|p| params.beta * harvest_share * p).collect();
    let p2 = harvested.clone();

    let rate: f64 = p1
        .iter()
        .zip(&p2)
        .map(|(&a, &b)| {
            (a * params.gamma1 * detect_share)
                .min(b * params.gamma2)
                .max(0.0)
                .ln_1p()
        })
        .sum();
    let throughput = 0.5 * params.bandwidth * rate / std::f64::consts::LN_2;

    let mut energy_causality = Vec::with_capacity(2 * n);
    let mut spent = 0.0;
    for a in &p1 {
        spent += a;
        energy_causality.push(total - spent);
    }
    let mut balance = 0.0;
    for (h, b) in harvested.iter().zip(&p2) {
        balance += h - b;
        energy_causality.push(balance);
    }
    let nonnegativity = p1.iter().chain(&p2).copied().collect();
    let feasibility = Feasibility {
        energy_causality,
        budget: balance,
        nonnegativity,
        tol: FEASIBILITY_TOL,
    };
    let mut report =
        SolveReport::new(params, Allocation::from_powers(p1, p2), Branch::BaselineSno)?;
    report.throughput = throughput;
    report.feasibility = feasibility;
    Ok(report)
}

/// Shared-budget feasibility of a GRE or EQ report; SNo carries its own.
pub fn shared_model_feasibility(
    params: &SystemParams,
    report: &SolveReport,
) -> Result<Feasibility> {
    check_feasibility(params, &report.allocation, FEASIBILITY_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::solve_opt;
    use approx::assert_relative_eq;

    #[test]
    fn single_phase_matches_opt() {
        for (p10, p20) in [(1.0, 1.0), (0.3, 1.0), (2.0, 0.5)] {
            let p = SystemParams::new(1, 1.0, p10, p20, 2.0, 1.0, 0.7);
            let opt = solve_opt(&p).unwrap().throughput;
            assert_relative_eq!(run_gre(&p).unwrap().throughput, opt, epsilon = 1e-14);
            assert_relative_eq!(run_eq(&p).unwrap().throughput, opt, epsilon = 1e-14);
        }
    }

    #[test]
    fn no_relay_budget() {
        let p = SystemParams::new(3, 1.0, 1.0, 0.0, 1.0, 1.0, 0.5);
        assert_eq!(run_gre(&p).unwrap().throughput, 0.0);
        assert_eq!(run_eq(&p).unwrap().throughput, 0.0);
    }

    #[test]
    fn eq_without_source_energy_sends_nothing() {
        let p = SystemParams::new(2, 1.0, 0.0, 1.0, 1.0, 1.0, 0.8);
        let r = run_eq(&p).unwrap();
        assert!(r
            .allocation
            .p1
            .iter()
            .chain(&r.allocation.p2)
            .all(|&v| v == 0.0));
        assert_eq!(r.throughput, 0.0);
    }

    #[test]
    fn gre_recursion_high_harvest_pair() {
        // Phase 1: source-limited, 0.1 -> relay 0.2, harvest 0.12.
        // Phase 2: residuals 0.12 / 0.8, source-limited again -> relay 0.24.
        let p = SystemParams::new(2, 1.0, 0.1, 1.0, 2.0, 1.0, 0.6);
        let r = run_gre(&p).unwrap();
        assert_relative_eq!(r.allocation.p2[0], 0.2, epsilon = 1e-15);
        assert_relative_eq!(r.allocation.p2[1], 0.24, epsilon = 1e-15);
        assert!(r.is_feasible());
        let opt = solve_opt(&p).unwrap().throughput;
        assert!(r.throughput <= opt + 1e-9);
    }

    #[test]
    fn eq_relay_limited_is_equal_split() {
        let p = SystemParams::new(2, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0);
        let r = run_eq(&p).unwrap();
        assert_eq!(r.allocation.p2, vec![0.5, 0.5]);
        let opt = solve_opt(&p).unwrap();
        assert_relative_eq!(r.throughput, opt.throughput, epsilon = 1e-14);
    }

    #[test]
    fn sno_single_phase_example() {
        let p = SystemParams::new(1, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let r = run_sno(&p).unwrap();
        assert_eq!(r.allocation.p1, vec![2.0]);
        assert_relative_eq!(r.throughput, 0.5, epsilon = 1e-15);
        assert!(r.is_feasible());
        assert_eq!(r.allocation.relay_total(), r.allocation.p2[0]);
    }

    #[test]
    fn sno_hops_balance() {
        for &(g1, g2, beta) in &[(1.0, 1.0, 0.3), (2.5, 0.7, 1.4), (0.4, 3.0, 2.0)] {
            let p = SystemParams::new(3, 1.0, 0.4, 0.9, g1, g2, beta);
            let r = run_sno(&p).unwrap();
            let gamma = g1 / g2;
            let a = r.allocation.p1[0];
            let first = a * g1 * beta / (gamma + beta);
            let second = r.allocation.p2[0] * g2;
            assert_relative_eq!(first, second, max_relative = 1e-14);
        }
    }

    #[test]
    fn sno_without_harvest_is_silent() {
        let p = SystemParams::new(3, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0);
        assert_eq!(run_sno(&p).unwrap().throughput, 0.0);
    }

    #[test]
    fn sno_rejects_direct_link() {
        let p = SystemParams::new(2, 1.0, 1.0, 1.0, 2.0, 1.0, 0.5).with_direct_link(0.5);
        assert!(run_sno(&p).is_err());
    }

    #[test]
    fn residual_state_update() {
        let p = SystemParams::new(2, 1.0, 1.0, 2.0, 1.0, 1.0, 0.5);
        let mut s = ResidualState::initial(&p);
        s.advance(&p, 0.5, 1.0);
        assert_eq!((s.p1_residual, s.p2_residual, s.phase), (1.0, 1.0, 2));
    }
}
