//! `beta*gamma >= 1`: the source never gains by holding energy back.
//!
//! For a supplement `alpha`, the source spends everything it has for the
//! first `l` phases, so `p_1 = a` and `p_j = (a + alpha) r^(j-1)` for
//! `2 <= j <= l`, and the relay splits what is left equally over phases
//! `l+1..N`. Case `l` is valid for `alpha` in `[alpha_l^th, alpha_{l-1}^th)`,
//! where `alpha_l^th` makes phase `l+1`'s greedy power meet the relay's
//! remaining average. Within a case the throughput is concave in `alpha`.

use crate::closedform::{approx_ge, CaseCandidate};
use crate::error::{Error, Result};
use crate::model::{Branch, DerivedRatios, ReducedProblem, SolveReport, SystemParams};

const BISECTION_MAX_ITER: usize = 200;
const ALPHA_TOL: f64 = 1e-10;

/// Source-store thresholds `P_k^th` (index `0..=N`) and supplement thresholds
/// `alpha_l^th` (index `0..=N`).
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    pub p_th: Vec<f64>,
    pub alpha_th: Vec<f64>,
}

impl ThresholdTable {
    /// Smallest `k >= 1` with `P_{1,0} > P_k^th`; a tie counts as exceeding.
    /// Always at most `N` since `P_N^th = 0`.
    pub fn phase_index(&self, p1_initial: f64) -> usize {
        let n = self.p_th.len() - 1;
        (1..n)
            .find(|&k| p1_initial > self.p_th[k] || approx_ge(p1_initial, self.p_th[k]))
            .unwrap_or(n)
    }
}

/// `(N - l) r^l + sum_{j=1..l} r^(j-1)`; the geometric sum is accumulated
/// term by term so `r = 1` needs no special form.
fn level_denominator(n: usize, l: usize, r: f64) -> f64 {
    (n - l) as f64 * r.powi(l as i32) + geometric(l, r)
}

fn geometric(l: usize, r: f64) -> f64 {
    (0..l).map(|j| r.powi(j as i32)).sum()
}

pub fn compute_thresholds(params: &SystemParams, ratios: &DerivedRatios) -> Result<ThresholdTable> {
    let r = ratios.beta_gamma;
    if !approx_ge(r, 1.0) {
        return Err(Error::BranchMismatch { beta_gamma: r });
    }
    let n = params.n_phases;
    let budget = params.p2_initial;
    let a = params.p1_initial * ratios.gamma_star;
    let mut p_th: Vec<f64> = (0..n)
        .map(|k| budget / (ratios.gamma_star * level_denominator(n, k, r)))
        .collect();
    p_th.push(0.0);
    let mut alpha_th = vec![budget];
    alpha_th.extend((1..=n).map(|l| (budget / level_denominator(n, l, r) - a).max(0.0)));
    Ok(ThresholdTable { p_th, alpha_th })
}

/// Sign-carrying part of `d/d alpha` of case `l`'s throughput.
fn foc(problem: &ReducedProblem, l: usize, alpha: f64) -> f64 {
    let (n, r, c) = (problem.n_phases, problem.harvest, problem.rate_coefficient);
    let x = problem.source + alpha;
    let head: f64 = (2..=l)
        .map(|j| {
            let g = r.powi(j as i32 - 1);
            g / (1.0 + x * g * c)
        })
        .sum();
    if l >= n {
        return head;
    }
    let rest = (n - l) as f64;
    let g = geometric(l, r);
    head - g * rest / (rest + c * (problem.budget - x * g))
}

fn case_value(problem: &ReducedProblem, l: usize, alpha: f64) -> f64 {
    problem.throughput(&forwarding(problem, l, alpha))
}

/// Supplement that maximizes case `l` over `bracket = (low, high)`.
///
/// For `r = 1` the stationarity condition is linear in `a + alpha` and is
/// solved directly; otherwise the (monotone) derivative is bisected. If it
/// does not change sign the better endpoint is returned.
pub fn root_solve_foc(
    params: &SystemParams,
    ratios: &DerivedRatios,
    l: usize,
    bracket: (f64, f64),
) -> Result<f64> {
    if !approx_ge(ratios.beta_gamma, 1.0) {
        return Err(Error::BranchMismatch {
            beta_gamma: ratios.beta_gamma,
        });
    }
    if l == 0 || l > params.n_phases {
        return Err(Error::invalid(
            "l",
            format!("must be in 1..={}", params.n_phases),
        ));
    }
    let problem = ReducedProblem::from_params(params)?;
    Ok(maximize_case(&problem, l, bracket))
}

fn maximize_case(problem: &ReducedProblem, l: usize, (low, high): (f64, f64)) -> f64 {
    let n = problem.n_phases;
    if high <= low {
        return low;
    }
    if l == n {
        // No tail to trade against: more supplement is always better.
        return high;
    }
    if (problem.harvest - 1.0).abs() <= 1e-12 {
        let (lf, nf, c) = (l as f64, n as f64, problem.rate_coefficient);
        let rest = nf - lf;
        let x = ((lf - 1.0) * (rest + c * problem.budget) - lf * rest) / (c * lf * (nf - 1.0));
        return (x - problem.source).clamp(low, high);
    }

    let (f_low, f_high) = (foc(problem, l, low), foc(problem, l, high));
    if f_low <= 0.0 && f_high >= 0.0 {
        // Not monotone decreasing; only reachable through rounding.
        return if case_value(problem, l, high) > case_value(problem, l, low) {
            high
        } else {
            low
        };
    }
    if f_low <= 0.0 {
        return low;
    }
    if f_high >= 0.0 {
        return high;
    }
    let (mut lo, mut hi) = (low, high);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if foc(problem, l, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= ALPHA_TOL * 1e-3 * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Greedy source for `l` phases, equal relay split afterwards.
fn forwarding(problem: &ReducedProblem, l: usize, alpha: f64) -> Vec<f64> {
    let (n, r) = (problem.n_phases, problem.harvest);
    let x = problem.source + alpha;
    let mut p = Vec::with_capacity(n);
    p.push(problem.source);
    for j in 2..=l.min(n) {
        p.push(x * r.powi(j as i32 - 1));
    }
    if l < n {
        let tail = (problem.budget - x * geometric(l, r)) / (n - l) as f64;
        p.resize(n, tail);
    }
    p
}

/// One candidate per `l = 1..=k`.
pub fn ge1_candidates(
    params: &SystemParams,
    ratios: &DerivedRatios,
    table: &ThresholdTable,
) -> Result<Vec<CaseCandidate>> {
    let problem = ReducedProblem::from_params(params)?;
    let n = params.n_phases;
    let r = ratios.beta_gamma;
    let k = table.phase_index(params.p1_initial);
    (1..=k)
        .map(|l| {
            let low = table.alpha_th[l];
            let high = table.alpha_th[l - 1]
                .min(problem.budget / geometric(l, r) - problem.source)
                .min(problem.budget);
            let within = approx_ge(high, low);
            let alpha = maximize_case(&problem, l, (low, high.max(low)));
            let p = forwarding(&problem, l.min(n), alpha);
            CaseCandidate::assemble(params, &problem, Branch::BgGe1 { l }, p, alpha, within)
        })
        .collect()
}

/// Best case of the `r >= 1` branch. Callers are expected to have ruled out the equal split.
pub fn solve_branch_ge1(
    params: &SystemParams,
    ratios: &DerivedRatios,
    thresholds: &ThresholdTable,
) -> Result<SolveReport> {
    let best =
        super::best_candidate(ge1_candidates(params, ratios, thresholds)?).ok_or_else(|| {
            Error::Unsupported("no feasible case in the beta*gamma >= 1 branch".into())
        })?;
    SolveReport::new(params, best.allocation, best.case_id)
}
