//! Closed-form optimum in linear time.
//!
//! Everything runs in forwarding-power units (see [`ReducedProblem`]): the
//! source store is `a = P_{1,0} gamma*`, the harvest gain is `r = beta gamma*`
//! and the relay budget is `P = P_{2,0}`. Dispatch:
//!
//! 1. the equal split `p_j = P / N` whenever it respects energy causality;
//! 2. a single phase forwards `min(a, P)`;
//! 3. `r >= 1`: the source spends everything for the first `l` phases, the
//!    relay levels the remainder ([`solve_branch_ge1`]);
//! 4. `r < 1`: the best of four boundary configurations ([`solve_branch_lt1`]).
//!
//! A direct source-destination link only changes `gamma*` and the rate
//! coefficient; see [`direct_link_transform`].

mod branch_ge1;
mod branch_lt1;

pub use branch_ge1::{
    compute_thresholds, ge1_candidates, root_solve_foc, solve_branch_ge1, ThresholdTable,
};
pub use branch_lt1::{lt1_candidates, solve_branch_lt1};

use crate::error::Result;
use crate::model::{
    check_feasibility, evaluate_throughput, Allocation, Branch, DerivedRatios, ReducedProblem,
    SolveReport, SystemParams, FEASIBILITY_TOL,
};
use crate::oracle::{self, OracleConfig};

/// Relative tolerance for threshold comparisons.
pub(crate) const THRESHOLD_RTOL: f64 = 1e-12;

/// `x >= y` up to [`THRESHOLD_RTOL`] relative slack.
pub(crate) fn approx_ge(x: f64, y: f64) -> bool {
    x >= y - THRESHOLD_RTOL * x.abs().max(y.abs())
}

/// One analytic candidate considered by the case search.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseCandidate {
    pub case_id: Branch,
    pub alpha: f64,
    pub allocation: Allocation,
    pub throughput: f64,
    pub feasible: bool,
}

impl CaseCandidate {
    pub(crate) fn assemble(
        params: &SystemParams,
        problem: &ReducedProblem,
        case_id: Branch,
        p_forward: Vec<f64>,
        alpha: f64,
        within_bounds: bool,
    ) -> Result<Self> {
        let finite = alpha.is_finite() && p_forward.iter().all(|p| p.is_finite());
        let allocation = if finite {
            problem.to_allocation(p_forward, alpha)
        } else {
            Allocation::zeros(problem.n_phases)
        };
        let checked = check_feasibility(params, &allocation, FEASIBILITY_TOL)?.is_feasible();
        Ok(CaseCandidate {
            case_id,
            alpha: allocation.alpha,
            throughput: evaluate_throughput(params, &allocation)?,
            allocation,
            feasible: finite && within_bounds && checked,
        })
    }
}

/// Picks the feasible candidate with the highest throughput; ties keep the earlier one.
pub(crate) fn best_candidate(candidates: Vec<CaseCandidate>) -> Option<CaseCandidate> {
    candidates
        .into_iter()
        .filter(|c| c.feasible)
        .fold(None, |best: Option<CaseCandidate>, c| match best {
            Some(b) if b.throughput >= c.throughput => Some(b),
            _ => Some(c),
        })
}

/// The equivalent problem without a direct link, plus the ratios it was built from.
///
/// With `gamma1_direct = 0` this is the identity: `gamma* = gamma` and the
/// rate coefficient is `gamma2`.
pub fn direct_link_transform(params: &SystemParams) -> Result<(ReducedProblem, DerivedRatios)> {
    let ratios = params.derive_ratios()?;
    Ok((ReducedProblem::from_params(params)?, ratios))
}

/// Equal split of the relay budget with no supplement.
pub fn relaxed_solution(params: &SystemParams) -> Result<Allocation> {
    let ratios = params.derive_ratios()?;
    let n = params.n_phases;
    let share = params.p2_initial / n as f64;
    Ok(Allocation::from_forwarding(
        vec![share; n],
        0.0,
        ratios.gamma_star,
    ))
}

/// Whether the equal split satisfies every energy-causality constraint.
///
/// For `r >= 1` the first phase is binding, otherwise the last one.
pub fn relaxed_is_feasible(params: &SystemParams, ratios: &DerivedRatios) -> bool {
    let n = params.n_phases as f64;
    let r = ratios.beta_gamma;
    let needed = if r >= 1.0 {
        params.p2_initial / (n * ratios.gamma_star)
    } else {
        params.p2_initial * (n - (n - 1.0) * r) / (n * ratios.gamma_star)
    };
    approx_ge(params.p1_initial, needed)
}

/// Throughput-optimal allocation.
pub fn solve_opt(params: &SystemParams) -> Result<SolveReport> {
    let (problem, ratios) = direct_link_transform(params)?;

    if relaxed_is_feasible(params, &ratios) {
        return SolveReport::new(params, relaxed_solution(params)?, Branch::Relaxed);
    }
    if params.n_phases == 1 {
        let p = problem.source.min(problem.budget);
        return SolveReport::new(
            params,
            problem.to_allocation(vec![p], 0.0),
            Branch::NEqualsOne,
        );
    }
    let found = if approx_ge(ratios.beta_gamma, 1.0) {
        let table = compute_thresholds(params, &ratios)?;
        best_candidate(ge1_candidates(params, &ratios, &table)?)
    } else {
        best_candidate(lt1_candidates(params, &ratios)?)
    };
    match found {
        Some(c) => SolveReport::new(params, c.allocation, c.case_id),
        None => oracle_fallback(params),
    }
}

pub(crate) fn oracle_fallback(params: &SystemParams) -> Result<SolveReport> {
    let mut report = oracle::solve_reduced(params, &OracleConfig::default())?;
    report.diagnostics.fallback = true;
    report
        .diagnostics
        .notes
        .push("no analytic case was feasible; numeric oracle used".into());
    Ok(report)
}
