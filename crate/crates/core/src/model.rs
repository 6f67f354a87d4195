//! Problem instances, allocations and the objective/constraint evaluators.
//!
//! A system runs `N` phases of two slots each: the source (SN) transmits to
//! the relay (RN) in the first slot, the relay forwards to the destination in
//! the second. The source starts with `p1_initial` and re-charges from the
//! relay's transmissions with gain `beta`; the relay spends from a fixed
//! budget `p2_initial`. Rates are `log2(1 + P * gamma)` per slot pair, scaled
//! by `bandwidth / 2` for the half-duplex relay.

use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance on power residuals used by every feasibility verdict.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// A full problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub n_phases: usize,
    pub bandwidth: f64,
    /// Source's initial stored energy.
    pub p1_initial: f64,
    /// Relay's energy budget.
    pub p2_initial: f64,
    /// Normalized SNR of the source-relay link.
    pub gamma1: f64,
    /// Normalized SNR of the relay-destination link.
    pub gamma2: f64,
    /// Normalized SNR of the source-destination link, 0 when absent.
    pub gamma1_direct: f64,
    /// Fraction of relay transmit power recovered by the source.
    pub beta: f64,
}

impl SystemParams {
    /// Instance without a direct link.
    pub fn new(
        n_phases: usize,
        bandwidth: f64,
        p1_initial: f64,
        p2_initial: f64,
        gamma1: f64,
        gamma2: f64,
        beta: f64,
    ) -> Self {
        SystemParams {
            n_phases,
            bandwidth,
            p1_initial,
            p2_initial,
            gamma1,
            gamma2,
            gamma1_direct: 0.0,
            beta,
        }
    }

    pub fn with_direct_link(mut self, gamma1_direct: f64) -> Self {
        self.gamma1_direct = gamma1_direct;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_phases == 0 {
            return Err(Error::invalid("n_phases", "must be at least 1"));
        }
        positive("bandwidth", self.bandwidth)?;
        positive("gamma1", self.gamma1)?;
        positive("gamma2", self.gamma2)?;
        nonnegative("p1_initial", self.p1_initial)?;
        nonnegative("p2_initial", self.p2_initial)?;
        nonnegative("beta", self.beta)?;
        nonnegative("gamma1_direct", self.gamma1_direct)?;
        if self.gamma1_direct >= self.gamma1 {
            return Err(Error::invalid(
                "gamma1_direct",
                format!(
                    "direct link SNR {} must be strictly below gamma1 = {}",
                    self.gamma1_direct, self.gamma1
                ),
            ));
        }
        Ok(())
    }

    pub fn has_direct_link(&self) -> bool {
        self.gamma1_direct > 0.0
    }

    pub fn derive_ratios(&self) -> Result<DerivedRatios> {
        self.validate()?;
        let gamma = self.gamma1 / self.gamma2;
        let gamma_star = (self.gamma1 - self.gamma1_direct) / self.gamma2;
        Ok(DerivedRatios {
            gamma,
            gamma_star,
            beta_gamma: self.beta * gamma_star,
        })
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn nonnegative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and >= 0, got {v}"),
        ))
    }
}

/// SNR ratios that drive the analytic case split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRatios {
    /// `gamma1 / gamma2`.
    pub gamma: f64,
    /// `(gamma1 - gamma1_direct) / gamma2`, equal to `gamma` without a direct link.
    pub gamma_star: f64,
    /// `beta * gamma_star`, the branch selector.
    pub beta_gamma: f64,
}

/// Convenience wrapper: see [`SystemParams::derive_ratios`].
pub fn derive_ratios(params: &SystemParams) -> Result<DerivedRatios> {
    params.derive_ratios()
}

/// The equivalent problem in forwarding-power units.
///
/// Every source power `P1` is expressed as the relay power `p = P1 * gamma_star`
/// needed to match it, so the energy-causality constraints become
/// `sum_{k<=j} p_k <= source + harvest * (alpha + sum_{k<j} p_k)` and the
/// throughput is `bandwidth/2 * sum log2(1 + rate_coefficient * p_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedProblem {
    pub n_phases: usize,
    pub bandwidth: f64,
    /// `P_{1,0} * gamma_star`: the source store in forwarding units.
    pub source: f64,
    /// `P_{2,0}`.
    pub budget: f64,
    pub gamma_star: f64,
    /// `beta * gamma_star`.
    pub harvest: f64,
    /// `gamma1 / gamma_star`, which is `gamma2` without a direct link.
    pub rate_coefficient: f64,
}

impl ReducedProblem {
    pub fn from_params(params: &SystemParams) -> Result<Self> {
        let ratios = params.derive_ratios()?;
        let rate_coefficient = if params.has_direct_link() {
            params.gamma1 / ratios.gamma_star
        } else {
            params.gamma2
        };
        Ok(ReducedProblem {
            n_phases: params.n_phases,
            bandwidth: params.bandwidth,
            source: params.p1_initial * ratios.gamma_star,
            budget: params.p2_initial,
            gamma_star: ratios.gamma_star,
            harvest: ratios.beta_gamma,
            rate_coefficient,
        })
    }

    /// Objective in forwarding units.
    pub fn throughput(&self, p_forward: &[f64]) -> f64 {
        0.5 * self.bandwidth
            * p_forward
                .iter()
                .map(|&p| (self.rate_coefficient * p).ln_1p())
                .sum::<f64>()
            / std::f64::consts::LN_2
    }

    /// Allocation in the original per-node powers.
    pub fn to_allocation(&self, p_forward: Vec<f64>, alpha: f64) -> Allocation {
        Allocation::from_forwarding(p_forward, alpha, self.gamma_star)
    }
}

/// Per-phase transmit powers for both nodes.
///
/// `p2[0] = p_forward[0] + alpha` and `p2[j] = p_forward[j]` for `j >= 1`;
/// the first-phase supplement `alpha` is kept explicitly for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub alpha: f64,
    pub p_forward: Vec<f64>,
}

impl Allocation {
    pub fn zeros(n: usize) -> Self {
        Allocation {
            p1: vec![0.0; n],
            p2: vec![0.0; n],
            alpha: 0.0,
            p_forward: vec![0.0; n],
        }
    }

    /// Builds matched-hop powers: `P1_j = p_j / gamma_star`, `P2_j = p_j`
    /// plus `alpha` in the first phase. Tiny negative rounding is clamped to 0.
    pub fn from_forwarding(p_forward: Vec<f64>, alpha: f64, gamma_star: f64) -> Self {
        let p_forward: Vec<f64> = p_forward.into_iter().map(|p| p.max(0.0)).collect();
        let alpha = alpha.max(0.0);
        let p1 = p_forward.iter().map(|p| p / gamma_star).collect();
        let mut p2 = p_forward.clone();
        if let Some(first) = p2.first_mut() {
            *first += alpha;
        }
        Allocation {
            p1,
            p2,
            alpha,
            p_forward,
        }
    }

    /// Allocation where every relay watt forwards data (`alpha = 0`).
    pub fn from_powers(p1: Vec<f64>, p2: Vec<f64>) -> Self {
        let p_forward = p2.clone();
        Allocation {
            p1,
            p2,
            alpha: 0.0,
            p_forward,
        }
    }

    pub fn n_phases(&self) -> usize {
        self.p1.len()
    }

    pub fn relay_total(&self) -> f64 {
        self.p2.iter().sum()
    }
}

/// Throughput of an arbitrary allocation, `B/2 * sum log2(1 + min(P1 g1, P1 g1' + P2 g2))`.
pub fn evaluate_throughput(params: &SystemParams, alloc: &Allocation) -> Result<f64> {
    check_lengths(params, alloc)?;
    let total: f64 = alloc
        .p1
        .iter()
        .zip(&alloc.p2)
        .map(|(&p1, &p2)| {
            let snr = (p1 * params.gamma1).min(p1 * params.gamma1_direct + p2 * params.gamma2);
            snr.max(0.0).ln_1p()
        })
        .sum();
    Ok(0.5 * params.bandwidth * total / std::f64::consts::LN_2)
}

fn check_lengths(params: &SystemParams, alloc: &Allocation) -> Result<()> {
    let n = params.n_phases;
    for len in [alloc.p1.len(), alloc.p2.len(), alloc.p_forward.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: len,
            });
        }
    }
    Ok(())
}

/// Constraint slacks of an allocation. Negative entries are violations.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    /// `P_{1,0} + beta * sum_{k<j} P_{2,k} - sum_{k<=j} P_{1,k}` for every phase.
    pub energy_causality: Vec<f64>,
    /// `P_{2,0} - sum_j P_{2,j}`.
    pub budget: f64,
    /// Every `P_{1,j}` followed by every `P_{2,j}`.
    pub nonnegativity: Vec<f64>,
    pub tol: f64,
}

impl Feasibility {
    /// Flat residual vector: energy causality, budget, then nonnegativity.
    pub fn residuals(&self) -> Vec<f64> {
        let mut out = self.energy_causality.clone();
        out.push(self.budget);
        out.extend_from_slice(&self.nonnegativity);
        out
    }

    pub fn min_residual(&self) -> f64 {
        self.residuals().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn is_feasible(&self) -> bool {
        self.min_residual() >= -self.tol
    }
}

/// Residuals of every energy-causality, budget and nonnegativity constraint.
pub fn check_feasibility(
    params: &SystemParams,
    alloc: &Allocation,
    tol: f64,
) -> Result<Feasibility> {
    check_lengths(params, alloc)?;
    let mut spent = 0.0;
    let mut harvested = 0.0;
    let mut energy_causality = Vec::with_capacity(params.n_phases);
    for (p1, p2) in alloc.p1.iter().zip(&alloc.p2) {
        spent += p1;
        energy_causality.push(params.p1_initial + params.beta * harvested - spent);
        harvested += p2;
    }
    let nonnegativity = alloc.p1.iter().chain(&alloc.p2).copied().collect();
    Ok(Feasibility {
        energy_causality,
        budget: params.p2_initial - alloc.relay_total(),
        nonnegativity,
        tol,
    })
}

/// Which analytic case (or policy) produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Relaxed,
    /// `beta*gamma >= 1`, greedy source for the first `l` phases.
    BgGe1 {
        l: usize,
    },
    /// `beta*gamma < 1`. Case `2t + 1` (source store spent in phase 1) or
    /// `2t + 2` (phase 1 on the common level) ends in a tail of `t`
    /// phases with tight energy causality.
    BgLt1 {
        case: usize,
    },
    NEqualsOne,
    BaselineGre,
    BaselineEq,
    BaselineSno,
    Oracle,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Relaxed => f.write_str("RELAXED"),
            Branch::BgGe1 { l } => write!(f, "BG_GE1_L{l}"),
            Branch::BgLt1 { case } => write!(f, "BG_LT1_CASE{case}"),
            Branch::NEqualsOne => f.write_str("N_EQUALS_1"),
            Branch::BaselineGre => f.write_str("BASELINE_GRE"),
            Branch::BaselineEq => f.write_str("BASELINE_EQ"),
            Branch::BaselineSno => f.write_str("BASELINE_SNO"),
            Branch::Oracle => f.write_str("ORACLE"),
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("branch", format!("unknown branch label `{s}`"));
        Ok(match s {
            "RELAXED" => Branch::Relaxed,
            "N_EQUALS_1" => Branch::NEqualsOne,
            "BASELINE_GRE" => Branch::BaselineGre,
            "BASELINE_EQ" => Branch::BaselineEq,
            "BASELINE_SNO" => Branch::BaselineSno,
            "ORACLE" => Branch::Oracle,
            _ => {
                if let Some(l) = s.strip_prefix("BG_GE1_L") {
                    Branch::BgGe1 {
                        l: l.parse().map_err(|_| bad())?,
                    }
                } else if let Some(c) = s.strip_prefix("BG_LT1_CASE") {
                    Branch::BgLt1 {
                        case: c.parse().map_err(|_| bad())?,
                    }
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

/// Solver diagnostics that are not part of the allocation itself.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub iterations: Option<usize>,
    pub converged: bool,
    /// Set when the closed form found no feasible case and the oracle answered instead.
    pub fallback: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub allocation: Allocation,
    pub throughput: f64,
    pub branch: Branch,
    pub feasibility: Feasibility,
    pub diagnostics: Diagnostics,
}

impl SolveReport {
    /// Evaluates and checks `allocation` against the standard model.
    pub fn new(params: &SystemParams, allocation: Allocation, branch: Branch) -> Result<Self> {
        let throughput = evaluate_throughput(params, &allocation)?;
        let feasibility = check_feasibility(params, &allocation, FEASIBILITY_TOL)?;
        Ok(SolveReport {
            allocation,
            throughput,
            branch,
            feasibility,
            diagnostics: Diagnostics {
                converged: true,
                ..Diagnostics::default()
            },
        })
    }

    pub fn feasibility_residuals(&self) -> Vec<f64> {
        self.feasibility.residuals()
    }

    pub fn is_feasible(&self) -> bool {
        self.feasibility.is_feasible()
    }
}

/// Allocation policies available to callers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyKind {
    Opt,
    Gre,
    Eq,
    Sno,
    Oracle,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Opt,
        PolicyKind::Gre,
        PolicyKind::Eq,
        PolicyKind::Sno,
        PolicyKind::Oracle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Opt => "OPT",
            PolicyKind::Gre => "GRE",
            PolicyKind::Eq => "EQ",
            PolicyKind::Sno => "SNO",
            PolicyKind::Oracle => "ORACLE",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "OPT" => Ok(PolicyKind::Opt),
            "GRE" => Ok(PolicyKind::Gre),
            "EQ" => Ok(PolicyKind::Eq),
            "SNO" => Ok(PolicyKind::Sno),
            "ORACLE" => Ok(PolicyKind::Oracle),
            other => Err(Error::invalid(
                "policy",
                format!("unknown policy `{other}` (expected OPT, GRE, EQ, SNO or ORACLE)"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base(gamma1: f64, gamma2: f64, beta: f64) -> SystemParams {
        SystemParams::new(2, 1.0, 0.1, 1.0, gamma1, gamma2, beta)
    }

    #[test]
    fn ratios_without_direct_link() {
        let r = base(2.0, 1.0, 0.6).derive_ratios().unwrap();
        assert_eq!(r.gamma, 2.0);
        assert_eq!(r.gamma_star, 2.0);
        assert_relative_eq!(r.beta_gamma, 1.2, epsilon = 1e-15);
    }

    #[test]
    fn ratios_with_direct_link() {
        let r = base(2.0, 1.0, 0.6)
            .with_direct_link(1.0)
            .derive_ratios()
            .unwrap();
        assert_eq!(r.gamma_star, 1.0);
        assert_relative_eq!(r.beta_gamma, 0.6, epsilon = 1e-15);
        assert!(r.gamma_star <= r.gamma);
    }

    #[test]
    fn degenerate_direct_link_rejected() {
        let err = base(1.0, 1.0, 0.5).with_direct_link(1.0).derive_ratios();
        assert!(matches!(
            err,
            Err(Error::InvalidParameter {
                name: "gamma1_direct",
                ..
            })
        ));
    }

    #[test]
    fn invalid_fields_rejected() {
        let mut p = base(1.0, 1.0, 0.5);
        p.n_phases = 0;
        assert!(p.validate().is_err());
        let mut p = base(1.0, 1.0, 0.5);
        p.bandwidth = 0.0;
        assert!(p.validate().is_err());
        let mut p = base(1.0, 1.0, 0.5);
        p.beta = -0.1;
        assert!(p.validate().is_err());
        let mut p = base(1.0, 1.0, 0.5);
        p.p1_initial = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn throughput_zero_allocation() {
        let p = base(2.0, 1.0, 0.6);
        assert_eq!(evaluate_throughput(&p, &Allocation::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn throughput_single_phase() {
        let p = SystemParams::new(1, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0);
        let a = Allocation::from_powers(vec![1.0], vec![1.0]);
        assert_relative_eq!(evaluate_throughput(&p, &a).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn throughput_two_matched_phases() {
        let p = base(2.0, 1.0, 0.0);
        let a = Allocation::from_powers(vec![0.5, 0.5], vec![1.0, 1.0]);
        assert_relative_eq!(evaluate_throughput(&p, &a).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn throughput_length_mismatch() {
        let p = base(2.0, 1.0, 0.0);
        let a = Allocation::zeros(3);
        assert_eq!(
            evaluate_throughput(&p, &a),
            Err(Error::LengthMismatch {
                expected: 2,
                got: 3
            })
        );
    }

    #[test]
    fn feasibility_exact_budget_use() {
        let p = SystemParams::new(1, 1.0, 0.7, 1.3, 1.0, 1.0, 0.5);
        let a = Allocation::from_powers(vec![0.7], vec![1.3]);
        let f = check_feasibility(&p, &a, FEASIBILITY_TOL).unwrap();
        assert_eq!(f.energy_causality, vec![0.0]);
        assert_eq!(f.budget, 0.0);
        assert!(f.is_feasible());
    }

    #[test]
    fn feasibility_unharvested_energy() {
        let p = SystemParams::new(2, 1.0, 0.0, 1.0, 2.0, 1.0, 1.0);
        let a = Allocation::from_powers(vec![0.1, 0.0], vec![0.2, 0.0]);
        let f = check_feasibility(&p, &a, FEASIBILITY_TOL).unwrap();
        assert_relative_eq!(f.energy_causality[0], -0.1, epsilon = 1e-15);
        assert!(!f.is_feasible());
    }

    #[test]
    fn forwarding_layout() {
        let a = Allocation::from_forwarding(vec![0.2, 0.4], 0.3, 2.0);
        assert_eq!(a.p1, vec![0.1, 0.2]);
        assert_eq!(a.p2, vec![0.5, 0.4]);
        assert_eq!(a.p2[0], a.p_forward[0] + a.alpha);
    }

    #[test]
    fn labels_round_trip() {
        for b in [
            Branch::Relaxed,
            Branch::BgGe1 { l: 3 },
            Branch::BgLt1 { case: 4 },
            Branch::NEqualsOne,
            Branch::BaselineGre,
            Branch::BaselineEq,
            Branch::BaselineSno,
            Branch::Oracle,
        ] {
            assert_eq!(b.to_string().parse::<Branch>().unwrap(), b);
        }
        for k in PolicyKind::ALL {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), k);
        }
        assert!("FOO".parse::<PolicyKind>().is_err());
        assert!("BG_GE1_Lx".parse::<Branch>().is_err());
    }
}
