//! TOML configuration and command-line overrides.
//!
//! ```toml
//! n_phases = 4
//! beta = 0.5
//! p1_initial = 0.2
//!
//! [sweep]
//! axis = "BETA"
//! values = "0.1:0.1:1.0"
//! policies = ["OPT", "EQ"]
//! ```
//!
//! Missing channel and budget keys default to `B = 1`, `P_{2,0} = 1`,
//! `gamma2 = 1` and no direct link.

use std::collections::BTreeSet;
use std::path::Path;

use ehrelay::{PolicyKind, SystemParams};
use serde::Deserialize;

use crate::sweep::{Axis, SweepSpec};
use crate::{BenchError, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n_phases: Option<usize>,
    pub bandwidth: Option<f64>,
    pub p1_initial: Option<f64>,
    pub p2_initial: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma1_direct: Option<f64>,
    pub beta: Option<f64>,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Option<String>,
    pub values: Option<Values>,
    pub policies: Option<Vec<String>>,
}

/// Sweep values as a list or as a `"start:step:stop"` / `"a,b,c"` string.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Values {
    List(Vec<f64>),
    Text(String),
}

impl Values {
    fn resolve(&self) -> Result<Vec<f64>> {
        match self {
            Values::List(v) => Ok(v.clone()),
            Values::Text(s) => parse_values(s),
        }
    }
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            BenchError::Config(msg) => BenchError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Parses `"a,b,c"` or an inclusive `"start:step:stop"` range.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| BenchError::Config(format!("not a number: {s:?}")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => single
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(num)
            .collect(),
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() {
                return Err(BenchError::Config(format!(
                    "bad range {text:?}: step must be > 0"
                )));
            }
            let count = ((stop - start) / step + 1e-9).floor();
            if count < 0.0 {
                return Err(BenchError::Config(format!(
                    "bad range {text:?}: stop is below start"
                )));
            }
            // Recomputing from the index keeps values free of accumulated drift.
            Ok((0..=count as usize)
                .map(|i| start + i as f64 * step)
                .collect())
        }
        _ => Err(BenchError::Config(format!("bad value list {text:?}"))),
    }
}

pub fn parse_policies<S: AsRef<str>>(names: &[S]) -> Result<BTreeSet<PolicyKind>> {
    names
        .iter()
        .flat_map(|n| {
            n.as_ref()
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect::<Vec<_>>()
        })
        .map(|n| {
            n.parse::<PolicyKind>()
                .map_err(|e| BenchError::Config(e.to_string()))
        })
        .collect()
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub n_phases: Option<usize>,
    pub bandwidth: Option<f64>,
    pub p1_initial: Option<f64>,
    pub p2_initial: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma1_direct: Option<f64>,
    pub beta: Option<f64>,
    pub axis: Option<String>,
    pub values: Option<String>,
    pub policies: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Single {
        params: SystemParams,
        policies: BTreeSet<PolicyKind>,
    },
    Sweep(SweepSpec),
}

fn required<T>(value: Option<T>, name: &str, hint: &str) -> Result<T> {
    value.ok_or_else(|| {
        BenchError::Config(format!(
            "missing {name} (set it in the config file or with {hint})"
        ))
    })
}

pub fn resolve(file: FileConfig, cli: Overrides) -> Result<Plan> {
    let sweep = file.sweep.unwrap_or_default();
    let axis = cli
        .axis
        .or(sweep.axis)
        .map(|a| a.parse::<Axis>())
        .transpose()?;
    let pick = |cli: Option<f64>,
                file: Option<f64>,
                name: &str,
                hint: &str,
                on_axis: bool|
     -> Result<f64> {
        match cli.or(file) {
            Some(v) => Ok(v),
            // The axis fills it in; any placeholder passes through.
            None if on_axis => Ok(0.0),
            None => required(None, name, hint),
        }
    };
    let is = |a: Axis| axis == Some(a);
    let n_phases = match cli.n_phases.or(file.n_phases) {
        Some(n) => n,
        None if is(Axis::N) => 1,
        None => required(None, "n_phases", "--n")?,
    };
    let params = SystemParams {
        n_phases,
        bandwidth: cli.bandwidth.or(file.bandwidth).unwrap_or(1.0),
        p1_initial: pick(
            cli.p1_initial,
            file.p1_initial,
            "p1_initial",
            "--p10",
            is(Axis::P1Initial),
        )?,
        p2_initial: cli.p2_initial.or(file.p2_initial).unwrap_or(1.0),
        gamma1: pick(
            cli.gamma1,
            file.gamma1,
            "gamma1",
            "--gamma1",
            is(Axis::Gamma1),
        )?,
        gamma2: cli.gamma2.or(file.gamma2).unwrap_or(1.0),
        gamma1_direct: cli.gamma1_direct.or(file.gamma1_direct).unwrap_or(0.0),
        beta: pick(cli.beta, file.beta, "beta", "--beta", is(Axis::Beta))?,
    };
    let policies = match cli.policies.or(sweep.policies) {
        Some(names) => parse_policies(&names)?,
        None => [PolicyKind::Opt].into(),
    };

    match axis {
        None => {
            if cli.values.is_some() || sweep.values.is_some() {
                return Err(BenchError::Config(
                    "sweep values given without an axis".into(),
                ));
            }
            params
                .validate()
                .map_err(|e| BenchError::Config(e.to_string()))?;
            if policies.is_empty() {
                return Err(BenchError::Config("no policy selected".into()));
            }
            Ok(Plan::Single { params, policies })
        }
        Some(axis) => {
            let values = match (cli.values, sweep.values) {
                (Some(text), _) => parse_values(&text)?,
                (None, Some(v)) => v.resolve()?,
                (None, None) => required(None, "sweep values", "--values")?,
            };
            let spec = SweepSpec {
                axis,
                values,
                fixed: params,
                policies,
            };
            spec.validate()?;
            Ok(Plan::Sweep(spec))
        }
    }
}
