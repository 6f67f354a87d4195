//! Numeric maximizers used to validate the closed form.
//!
//! [`solve_reduced`] works on the forwarding-power problem (per-phase
//! forwarding powers plus one first-phase supplement), [`solve_original`] on
//! the raw per-node powers with an epigraph variable per phase. Both run a
//! diagonally scaled projected-gradient ascent: the metric is the (separable)
//! curvature of the log terms, every trial point is the exact projection of
//! the scaled gradient step onto the constraint polytope, and steps are
//! halved from 1.0 until the Armijo condition holds. The iterate is feasible
//! throughout, so the objective trace is nondecreasing.
//!
//! For small instances a brute-force [`OracleMethod::Grid`] search is also
//! available; it shares nothing with the gradient path beyond the objective.

mod projection;

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{
    check_feasibility, Allocation, Branch, Diagnostics, ReducedProblem, SolveReport, SystemParams,
};
use projection::{dot, project, Polytope};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    ProjectedGradient,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub method: OracleMethod,
    /// Stop once an accepted step improves the objective by less than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Grid step in power units (grid method, at most 3 phases).
    pub grid_resolution: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            method: OracleMethod::ProjectedGradient,
            tolerance: 1e-12,
            max_iterations: 5_000,
            grid_resolution: 1e-3,
        }
    }
}

impl OracleConfig {
    pub fn grid(resolution: f64) -> Self {
        OracleConfig {
            method: OracleMethod::Grid,
            grid_resolution: resolution,
            ..OracleConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::invalid("tolerance", "must be > 0"));
        }
        if self.grid_resolution.is_nan() || self.grid_resolution <= 0.0 {
            return Err(Error::invalid("grid_resolution", "must be > 0"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be >= 1"));
        }
        Ok(())
    }
}

/// Maximizes the forwarding-power problem numerically.
pub fn solve_reduced(params: &SystemParams, config: &OracleConfig) -> Result<SolveReport> {
    config.validate()?;
    let reduced = ReducedProblem::from_params(params)?;
    let (p_forward, diagnostics) = match config.method {
        OracleMethod::ProjectedGradient => {
            let program = reduced_program(&reduced);
            let trace = ascend(&program, config);
            let diagnostics = trace.diagnostics();
            (trace.x, diagnostics)
        }
        OracleMethod::Grid => (
            grid_search(&reduced, config.grid_resolution)?,
            Diagnostics {
                converged: true,
                ..Diagnostics::default()
            },
        ),
    };
    let alpha = (reduced.budget - p_forward.iter().sum::<f64>()).max(0.0);
    let allocation = reduced.to_allocation(p_forward, alpha);
    let mut report = SolveReport::new(params, allocation, Branch::Oracle)?;
    report.diagnostics = diagnostics;
    Ok(report)
}

/// Maximizes the throughput directly over per-node powers, at most 4 phases.
///
/// Uses the epigraph form `max sum log(1 + t_j)` with
/// `t_j <= P1_j g1` and `t_j <= P1_j g1' + P2_j g2`.
pub fn solve_original(params: &SystemParams, config: &OracleConfig) -> Result<SolveReport> {
    config.validate()?;
    params.validate()?;
    let n = params.n_phases;
    if n > 4 {
        return Err(Error::Unsupported(format!(
            "full-variable oracle is limited to 4 phases (got {n})"
        )));
    }
    if config.method == OracleMethod::Grid {
        return Err(Error::Unsupported(
            "full-variable oracle only supports the projected-gradient method".into(),
        ));
    }
    let program = original_program(params);
    let trace = ascend(&program, config);
    let p1 = trace.x[..n].iter().map(|v| v.max(0.0)).collect::<Vec<_>>();
    let p2 = trace.x[n..2 * n]
        .iter()
        .map(|v| v.max(0.0))
        .collect::<Vec<_>>();

    let gamma_star = params.derive_ratios()?.gamma_star;
    let mut p_forward = p2.clone();
    p_forward[0] = p2[0].min(p1[0] * gamma_star);
    let allocation = Allocation {
        alpha: p2[0] - p_forward[0],
        p1,
        p2,
        p_forward,
    };
    let mut report = SolveReport::new(params, allocation, Branch::Oracle)?;
    report.diagnostics = trace.diagnostics();
    Ok(report)
}

/// Objective values of the accepted iterates of the reduced ascent.
pub fn reduced_objective_trace(params: &SystemParams, config: &OracleConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let reduced = ReducedProblem::from_params(params)?;
    Ok(ascend(&reduced_program(&reduced), config).history)
}

/// `sum_i weight_i * ln(1 + coef_i * x_i)` over `{G x <= h}`; variables with
/// zero weight only enter through the constraints.
struct SeparableProgram {
    weight: Vec<f64>,
    coef: Vec<f64>,
    polytope: Polytope,
    start: Vec<f64>,
}

impl SeparableProgram {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.weight.iter().zip(&self.coef))
            .filter(|(_, (w, _))| **w != 0.0)
            .map(|(xi, (w, c))| w * (c * xi).max(-1.0 + 1e-300).ln_1p())
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.weight.iter().zip(&self.coef))
            .map(|(xi, (w, c))| w * c / (1.0 + c * xi.max(0.0)))
            .collect()
    }

    fn curvature(&self, x: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> = x
            .iter()
            .zip(self.weight.iter().zip(&self.coef))
            .map(|(xi, (w, c))| {
                let d = 1.0 + c * xi.max(0.0);
                w * c * c / (d * d)
            })
            .collect();
        let top = raw.iter().fold(0.0_f64, |a, &b| a.max(b)).max(1e-300);
        // Variables outside the objective get a small proximal weight.
        raw.into_iter().map(|h| h.max(1e-4 * top)).collect()
    }
}

struct AscentTrace {
    x: Vec<f64>,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl AscentTrace {
    fn diagnostics(&self) -> Diagnostics {
        let mut notes = Vec::new();
        if !self.converged {
            notes.push(format!(
                "oracle stopped at the iteration cap ({} iterations)",
                self.iterations
            ));
        }
        Diagnostics {
            iterations: Some(self.iterations),
            converged: self.converged,
            fallback: false,
            notes,
        }
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;

fn ascend(program: &SeparableProgram, config: &OracleConfig) -> AscentTrace {
    let mut x = program.start.clone();
    let mut value = program.value(&x);
    let mut history = vec![value];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let grad = program.gradient(&x);
        let metric = program.curvature(&x);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let y: Vec<f64> = x
                .iter()
                .zip(grad.iter().zip(&metric))
                .map(|(xi, (g, h))| xi + step * g / h)
                .collect();
            let trial = project(&program.polytope, &metric, &y, &x);
            let trial_value = program.value(&trial);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let predicted = dot(&grad, &moved);
            if trial_value >= value && trial_value >= value + ARMIJO * predicted {
                accepted = Some((trial, trial_value));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, trial_value)) = accepted else {
            converged = true;
            break;
        };
        let gain = trial_value - value;
        x = trial;
        value = trial_value;
        history.push(value);
        // A heavily damped step that still "gains" is rounding noise.
        if gain <= config.tolerance * (1.0 + value.abs()) || step < 1e-9 {
            converged = true;
            break;
        }
    }
    debug_assert!(program.polytope.max_violation(&x) < 1e-9);
    AscentTrace {
        x,
        history,
        iterations,
        converged,
    }
}

/// Variables `p_1..p_N`; the supplement is eliminated as `alpha = budget - sum p`.
fn reduced_program(r: &ReducedProblem) -> SeparableProgram {
    let n = r.n_phases;
    let mut poly = Polytope::new();
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = -1.0;
        poly.push(row, 0.0);
    }
    // alpha >= 0
    poly.push(vec![1.0; n], r.budget);
    // EC_1: p_1 <= source
    let mut row = vec![0.0; n];
    row[0] = 1.0;
    poly.push(row, r.source);
    // EC_j: S_j - h S_{j-1} + h S_N <= source + h budget
    for j in 1..n {
        let row = (0..n)
            .map(|k| {
                let mut v = r.harvest;
                if k < j {
                    v += 1.0 - r.harvest;
                } else if k == j {
                    v += 1.0;
                }
                v
            })
            .collect();
        poly.push(row, r.source + r.harvest * r.budget);
    }
    SeparableProgram {
        weight: vec![0.5 * r.bandwidth / LN_2; n],
        coef: vec![r.rate_coefficient; n],
        polytope: poly,
        start: vec![0.0; n],
    }
}

/// Variables `[P1_1..P1_N, P2_1..P2_N, t_1..t_N]`.
fn original_program(p: &SystemParams) -> SeparableProgram {
    let n = p.n_phases;
    let dim = 3 * n;
    let unit = |idx: usize, v: f64| {
        let mut row = vec![0.0; dim];
        row[idx] = v;
        row
    };
    let mut poly = Polytope::new();
    for i in 0..dim {
        poly.push(unit(i, -1.0), 0.0);
    }
    for j in 0..n {
        let (p1, p2, t) = (j, n + j, 2 * n + j);
        let mut row = unit(t, 1.0);
        row[p1] = -p.gamma1;
        poly.push(row, 0.0);
        let mut row = unit(t, 1.0);
        row[p1] = -p.gamma1_direct;
        row[p2] = -p.gamma2;
        poly.push(row, 0.0);
        // energy causality through phase j
        let mut row = vec![0.0; dim];
        row[..=j].fill(1.0);
        row[n..n + j].fill(-p.beta);
        poly.push(row, p.p1_initial);
    }
    let mut row = vec![0.0; dim];
    for k in 0..n {
        row[n + k] = 1.0;
    }
    poly.push(row, p.p2_initial);

    let mut weight = vec![0.0; dim];
    let mut coef = vec![0.0; dim];
    for j in 0..n {
        weight[2 * n + j] = 0.5 * p.bandwidth / LN_2;
        coef[2 * n + j] = 1.0;
    }
    SeparableProgram {
        weight,
        coef,
        polytope: poly,
        start: vec![0.0; dim],
    }
}

/// Exhaustive search over `(alpha, p_1..p_{N-1})` on a uniform grid; the last
/// phase takes the largest forwarding power its constraints allow.
fn grid_search(r: &ReducedProblem, resolution: f64) -> Result<Vec<f64>> {
    let n = r.n_phases;
    if n > 3 {
        return Err(Error::Unsupported(format!(
            "grid oracle is limited to 3 phases (got {n})"
        )));
    }
    if n == 1 {
        return Ok(vec![r.source.min(r.budget)]);
    }
    let axis: Vec<f64> = {
        let steps = (r.budget / resolution).floor() as usize;
        let mut v: Vec<f64> = (0..=steps).map(|i| i as f64 * resolution).collect();
        if v.last().is_some_and(|&l| l < r.budget) {
            v.push(r.budget);
        }
        v
    };
    let free = n - 1;
    let mut best = vec![0.0; n];
    let mut best_value = f64::NEG_INFINITY;
    let mut idx = vec![0usize; free + 1];
    let mut p = vec![0.0; n];
    'outer: loop {
        let alpha = axis[idx[0]];
        for k in 0..free {
            p[k] = axis[idx[k + 1]];
        }
        if let Some(last) = last_phase_power(r, alpha, &p[..free]) {
            p[free] = last;
            let value = r.throughput(&p);
            if value > best_value {
                best_value = value;
                best.copy_from_slice(&p);
            }
        }
        // odometer increment
        for d in idx.iter_mut().take(free + 1) {
            *d += 1;
            if *d < axis.len() {
                continue 'outer;
            }
            *d = 0;
        }
        break;
    }
    Ok(best)
}

fn last_phase_power(r: &ReducedProblem, alpha: f64, head: &[f64]) -> Option<f64> {
    let mut spent = 0.0;
    for (j, &pj) in head.iter().enumerate() {
        let cap = if j == 0 {
            r.source
        } else {
            r.source + r.harvest * (alpha + spent)
        };
        if spent + pj > cap {
            return None;
        }
        spent += pj;
    }
    let by_budget = r.budget - alpha - spent;
    let by_source = r.source + r.harvest * (alpha + spent) - spent;
    let last = by_budget.min(by_source);
    (last >= 0.0).then_some(last)
}

/// Feasibility of an oracle output at the oracle's own tolerance.
pub fn oracle_feasible(params: &SystemParams, report: &SolveReport) -> Result<bool> {
    Ok(check_feasibility(params, &report.allocation, 1e-7)?.is_feasible())
}
