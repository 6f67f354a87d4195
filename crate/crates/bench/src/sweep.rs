use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ehrelay::baselines::{run_eq, run_gre, run_sno};
use ehrelay::closedform::solve_opt;
use ehrelay::oracle::{solve_reduced, OracleConfig};
use ehrelay::{PolicyKind, SolveReport, SystemParams};
use rayon::prelude::*;

use crate::table::SweepRow;
use crate::{BenchError, Result};

/// Dispatches to the solver behind `policy`.
pub fn run_single(params: &SystemParams, policy: PolicyKind) -> Result<SolveReport> {
    let report = match policy {
        PolicyKind::Opt => solve_opt(params),
        PolicyKind::Gre => run_gre(params),
        PolicyKind::Eq => run_eq(params),
        PolicyKind::Sno => {
            if params.has_direct_link() {
                return Err(BenchError::Config(
                    "policy SNO needs gamma1_direct = 0; drop SNO or the direct link".into(),
                ));
            }
            run_sno(params)
        }
        PolicyKind::Oracle => solve_reduced(params, &OracleConfig::default()),
    }?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    N,
    Beta,
    P1Initial,
    P2Initial,
    Gamma1,
    Gamma1Direct,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::N,
        Axis::Beta,
        Axis::P1Initial,
        Axis::P2Initial,
        Axis::Gamma1,
        Axis::Gamma1Direct,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::N => "N",
            Axis::Beta => "BETA",
            Axis::P1Initial => "P1_INITIAL",
            Axis::P2Initial => "P2_INITIAL",
            Axis::Gamma1 => "GAMMA1",
            Axis::Gamma1Direct => "GAMMA1_DIRECT",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(&self, base: &SystemParams, value: f64) -> Result<SystemParams> {
        let mut p = *base;
        match self {
            Axis::N => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(BenchError::Config(format!(
                        "N must be a positive integer, got {value}"
                    )));
                }
                p.n_phases = value as usize;
            }
            Axis::Beta => p.beta = value,
            Axis::P1Initial => p.p1_initial = value,
            Axis::P2Initial => p.p2_initial = value,
            Axis::Gamma1 => p.gamma1 = value,
            Axis::Gamma1Direct => p.gamma1_direct = value,
        }
        Ok(p)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase().replace('-', "_");
        Axis::ALL
            .into_iter()
            .find(|a| a.as_str() == upper)
            .ok_or_else(|| {
                BenchError::Config(format!(
                    "unknown axis {s:?}; expected one of N, BETA, P1_INITIAL, P2_INITIAL, GAMMA1, GAMMA1_DIRECT"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub fixed: SystemParams,
    pub policies: BTreeSet<PolicyKind>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(BenchError::Config("sweep needs at least one value".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(BenchError::Config("sweep values must be finite".into()));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(BenchError::Config(
                "sweep values must be strictly increasing".into(),
            ));
        }
        if self.policies.is_empty() {
            return Err(BenchError::Config("sweep needs at least one policy".into()));
        }
        for &v in &self.values {
            self.axis
                .apply(&self.fixed, v)?
                .validate()
                .map_err(|e| BenchError::Config(format!("{} = {v}: {e}", self.axis)))?;
        }
        Ok(())
    }
}

/// One row per `(value, policy)`, ordered by value then policy. Rows are
/// computed in parallel; a failing row is recorded and the sweep goes on.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let jobs: Vec<(f64, PolicyKind)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.policies.iter().map(move |&p| (v, p)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(value, policy)| {
            let outcome = spec
                .axis
                .apply(&spec.fixed, value)
                .and_then(|params| run_single(&params, policy));
            match outcome {
                Ok(report) => SweepRow::from_report(spec.axis, value, policy, &report),
                Err(e) => SweepRow::failed(spec.axis, value, policy, &e.to_string()),
            }
        })
        .collect();
    Ok(rows)
}
