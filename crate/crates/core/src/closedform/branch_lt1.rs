//! `beta*gamma < 1`: harvesting loses energy, so the supplement is charged
//! as late as possible. From phase 2 on the optimum is a common level `p_c`
//! followed by a tail of `t` phases with tight energy causality. Once phase
//! `j >= 2` is tight, phase `j+1` can use at most `r p_j`, so a tail is
//! tight all the way to phase `N` and decays geometrically with ratio `r`.
//! Phase 1 either spends the whole source store or sits on the common level.
//!
//! | case     | `p_1`  | tail length |
//! |----------|--------|-------------|
//! | 1        | `a`    | 0           |
//! | 2        | `p_c`  | 0           |
//! | 3        | `a`    | 1           |
//! | 4        | `p_c`  | 1           |
//! | `2t + 1` | `a`    | `t`         |
//! | `2t + 2` | `p_c`  | `t`         |
//!
//! Cases 1 to 4 have closed-form supplements, clamped to the interval
//! where the configuration is valid. Longer tails leave one free level;
//! every power is affine in it, so the throughput is concave along it and
//! the maximum is found by bisecting the derivative over the feasible
//! interval. The final word on validity is the full feasibility check in
//! [`CaseCandidate::assemble`].

use crate::closedform::{approx_ge, best_candidate, CaseCandidate};
use crate::error::{Error, Result};
use crate::model::{Branch, DerivedRatios, ReducedProblem, SolveReport, SystemParams};

struct Shape {
    case: usize,
    alpha: f64,
    p: Vec<f64>,
    within: bool,
}

fn clamp_alpha(alpha: f64, low: f64, high: f64) -> (f64, bool) {
    (
        alpha.clamp(low.min(high), high.max(low)),
        approx_ge(high, low),
    )
}

fn case1(n: usize, a: f64, big_p: f64, r: f64) -> Shape {
    let nf = n as f64;
    let low = ((big_p - nf * a) / nf)
        .max(big_p - a - big_p * r * (nf - 1.0) / (nf - 1.0 + r))
        .max(0.0);
    let high = big_p - nf * a;
    let (alpha, within) = clamp_alpha(low, low, high);
    let pc = (big_p - a - alpha) / (nf - 1.0);
    let mut p = vec![pc; n];
    p[0] = a;
    Shape {
        case: 1,
        alpha,
        p,
        within,
    }
}

fn case2(n: usize, a: f64, big_p: f64, r: f64) -> Shape {
    let nf = n as f64;
    let alpha = (big_p - nf * a)
        .max(big_p - a - (nf * big_p - a) * r / (nf + r))
        .max(0.0);
    let within = approx_ge(big_p, alpha);
    let alpha = alpha.min(big_p);
    Shape {
        case: 2,
        alpha,
        p: vec![(big_p - alpha) / nf; n],
        within,
    }
}

fn case3(n: usize, a: f64, big_p: f64, r: f64, c: f64) -> Shape {
    if n == 2 {
        let alpha = big_p / (1.0 + r) - a;
        return Shape {
            case: 3,
            alpha,
            p: vec![a, r * (a + alpha)],
            within: alpha >= 0.0,
        };
    }
    let nf = n as f64;
    let m = nf - 2.0;
    let low = (big_p - a - big_p * (m + r) * r / ((1.0 + r) * r + m))
        .max(big_p / (1.0 + (nf - 1.0) * r) - a)
        .max(0.0);
    let high = ((big_p - a * (1.0 + (nf - 1.0) * r)) / (1.0 + r))
        .min(big_p - a - (nf - 1.0) * r * big_p / (nf - 1.0 + r));
    let stationary = big_p / ((nf - 1.0) * (1.0 + r)) + big_p * (1.0 - r) * m / (nf - 1.0)
        - r * r * m / ((1.0 + r) * (nf - 1.0) * c)
        - a;
    let (alpha, within) = clamp_alpha(stationary, low, high);
    let x = a + alpha;
    let pc = (big_p - (1.0 + r) * x) / (m * r);
    let mut p = vec![pc; n];
    p[0] = a;
    p[n - 1] = big_p + (x - big_p) / r;
    Shape {
        case: 3,
        alpha,
        p,
        within,
    }
}

fn case4(n: usize, a: f64, big_p: f64, r: f64, c: f64) -> Shape {
    let nf = n as f64;
    let mut low = ((big_p - a * (1.0 + (nf - 1.0) * r)) / (1.0 + r)).max(0.0);
    low = if n == 2 {
        // The generic third bound comes from phase N-1's constraint, which
        // for two phases is the first one and involves no supplement.
        low.max(big_p * (1.0 - r) - a)
    } else {
        low.max(
            (big_p * (nf - 1.0 - (nf - 2.0) * r) - a * (r + nf - 1.0)) / (nf - 1.0 + (1.0 + r) * r),
        )
    };
    let high = ((big_p - a) / (1.0 + r)).min(big_p - a - r * (nf * big_p - a) / (nf + r));
    let stationary = (c * (big_p - a) * ((1.0 + r) * nf - r)
        - big_p * (nf - 1.0) * (1.0 + r) * r * c
        - r * r * (nf - 1.0))
        / (nf * (1.0 + r) * c);
    let (alpha, within) = clamp_alpha(stationary, low, high);
    let pc = (big_p - a - alpha * (1.0 + r)) / ((nf - 1.0) * r);
    let mut p = vec![pc; n];
    p[n - 1] = big_p + (a + alpha - big_p) / r;
    Shape {
        case: 4,
        alpha,
        p,
        within,
    }
}

/// Allocation of case `2t + 1` / `2t + 2` for free level `x`.
///
/// With `m = N - t` head phases, `x` is the common level of phases `2..=m`
/// (and of phase 1 when `capped` is false). The budget fixes `alpha`.
fn tail_shape(problem: &ReducedProblem, t: usize, capped: bool, x: f64) -> (Vec<f64>, f64) {
    let (n, a, big_p, r) = (
        problem.n_phases,
        problem.source,
        problem.budget,
        problem.harvest,
    );
    let m = n - t;
    let p1 = if capped { a } else { x };
    let head = p1 + (m - 1) as f64 * x;
    let g: f64 = (0..t).map(|i| r.powi(i as i32)).sum();
    let alpha = (big_p - head - g * (a - (1.0 - r) * head)) / (1.0 + r * g);
    let mut p = Vec::with_capacity(n);
    p.push(p1);
    p.resize(m, x);
    let mut next = a + r * alpha - (1.0 - r) * head;
    for _ in 0..t {
        p.push(next);
        next *= r;
    }
    (p, alpha)
}

/// Constraint slacks of a reduced allocation: energy causality, then
/// nonnegativity of every power and of `alpha`.
fn slacks(problem: &ReducedProblem, p: &[f64], alpha: f64) -> Vec<f64> {
    let (a, r) = (problem.source, problem.harvest);
    let mut out = Vec::with_capacity(2 * p.len() + 1);
    let mut before = 0.0;
    for &pj in p {
        let now = before + pj;
        out.push(a + r * (alpha + before) - now);
        before = now;
    }
    out.extend_from_slice(p);
    out.push(alpha);
    out
}

fn long_tail(problem: &ReducedProblem, t: usize, capped: bool) -> Shape {
    let case = 2 * t + if capped { 1 } else { 2 };
    let (p0, alpha0) = tail_shape(problem, t, capped, 0.0);
    let (p1, alpha1) = tail_shape(problem, t, capped, 1.0);
    let s0 = slacks(problem, &p0, alpha0);
    let s1 = slacks(problem, &p1, alpha1);
    let eps = 1e-12 * (1.0 + problem.budget + problem.source);

    let (mut low, mut high) = (0.0_f64, problem.budget);
    let mut within = true;
    for (&v0, &v1) in s0.iter().zip(&s1) {
        let slope = v1 - v0;
        if slope > eps {
            low = low.max(-v0 / slope);
        } else if slope < -eps {
            high = high.min(-v0 / slope);
        } else if v0 < -eps {
            within = false;
        }
    }
    within &= approx_ge(high, low);
    let high = high.max(low);

    let slope: Vec<f64> = p1.iter().zip(&p0).map(|(u, v)| u - v).collect();
    let c = problem.rate_coefficient;
    let derivative = |x: f64| -> f64 {
        p0.iter()
            .zip(&slope)
            .map(|(&base, &d)| c * d / (1.0 + c * (base + x * d).max(0.0)))
            .sum()
    };
    let x = if derivative(low) <= 0.0 {
        low
    } else if derivative(high) >= 0.0 {
        high
    } else {
        let (mut lo, mut hi) = (low, high);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if derivative(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let (p, alpha) = tail_shape(problem, t, capped, x);
    Shape {
        case,
        alpha,
        p,
        within,
    }
}

/// Every configuration, in case order. Cases 3 and 4 need `r > 0`.
pub fn lt1_candidates(params: &SystemParams, ratios: &DerivedRatios) -> Result<Vec<CaseCandidate>> {
    let r = ratios.beta_gamma;
    if approx_ge(r, 1.0) {
        return Err(Error::BranchMismatch { beta_gamma: r });
    }
    if params.n_phases < 2 {
        return Err(Error::invalid(
            "n_phases",
            "the case search needs at least two phases",
        ));
    }
    let problem = ReducedProblem::from_params(params)?;
    let (n, a, big_p, c) = (
        problem.n_phases,
        problem.source,
        problem.budget,
        problem.rate_coefficient,
    );
    let mut shapes = vec![case1(n, a, big_p, r), case2(n, a, big_p, r)];
    if r > 0.0 {
        shapes.push(case3(n, a, big_p, r, c));
        shapes.push(case4(n, a, big_p, r, c));
    }
    for t in 2..n {
        shapes.push(long_tail(&problem, t, true));
        shapes.push(long_tail(&problem, t, false));
    }
    shapes
        .into_iter()
        .map(|s| {
            CaseCandidate::assemble(
                params,
                &problem,
                Branch::BgLt1 { case: s.case },
                s.p,
                s.alpha,
                s.within,
            )
        })
        .collect()
}

/// Best configuration of the `r < 1` branch, falling back to the numeric
/// oracle if none is feasible.
pub fn solve_branch_lt1(params: &SystemParams, ratios: &DerivedRatios) -> Result<SolveReport> {
    match best_candidate(lt1_candidates(params, ratios)?) {
        Some(c) => SolveReport::new(params, c.allocation, c.case_id),
        None => super::oracle_fallback(params),
    }
}
