//! Exact N=1 boundary solver.
//!
//! For a single tolerated loss (N = 1) the constrained problem solves in
//! closed form when both loss constraints are made tight: ε_1 is pinned to
//! ε_out and ε_0 = (1 − ε_1)·γ/(1 − γ) makes the achieved loss rate equal
//! γ exactly. The resulting policy is the standard comparison baseline;
//! past the interior minimizer of its power curve it is knowingly
//! suboptimal (the optimizer finds better), and when ε_out > γ it inverts
//! the power ordering, which is reported via a flag rather than hidden.

use crate::chain::{analyze_eps, ChainAnalysis};
use crate::channel::ChannelModel;
use crate::error::{Error, Result};

/// Application loss tolerance: average loss rate γ, burst tolerance N,
/// conditional burst-overrun probability ε_out, and an optional peak
/// transmit power in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct LossConstraints {
    gamma: f64,
    n_max: usize,
    eps_out: f64,
    p_peak: Option<f64>,
}

impl LossConstraints {
    pub fn new(gamma: f64, n_max: usize, eps_out: f64, p_peak: Option<f64>) -> Result<Self> {
        if gamma.is_nan() || gamma <= 0.0 || gamma >= 1.0 {
            return Err(Error::Parameter(format!(
                "average loss rate must lie in (0,1), got {gamma}"
            )));
        }
        if eps_out.is_nan() || eps_out <= 0.0 || eps_out >= 1.0 {
            return Err(Error::Parameter(format!(
                "burst outage bound must lie in (0,1), got {eps_out}"
            )));
        }
        if n_max < 1 {
            return Err(Error::Parameter(
                "burst tolerance N must be at least 1".to_string(),
            ));
        }
        if let Some(p) = p_peak {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::Parameter(format!(
                    "peak power must be positive and finite, got {p}"
                )));
            }
        }
        Ok(Self {
            gamma,
            n_max,
            eps_out,
            p_peak,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn eps_out(&self) -> f64 {
        self.eps_out
    }

    pub fn p_peak(&self) -> Option<f64> {
        self.p_peak
    }

    /// Copy with a different burst outage bound (sweep template helper).
    pub fn with_eps_out(&self, eps_out: f64) -> Result<Self> {
        Self::new(self.gamma, self.n_max, eps_out, self.p_peak)
    }

    /// Copy with a different average loss rate.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(gamma, self.n_max, self.eps_out, self.p_peak)
    }

    /// Copy with a different burst tolerance.
    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(self.gamma, n_max, self.eps_out, self.p_peak)
    }
}

/// Closed-form N=1 boundary solution.
#[derive(Debug, Clone, PartialEq)]
pub struct N1Solution {
    /// The boundary policy (ε_0, ε_1 = ε_out). May violate the
    /// non-increasing ordering when ε_out > γ; see `monotonicity_violated`.
    pub eps: Vec<f64>,
    /// Chain analysis of the boundary policy; `gamma_r` equals γ exactly.
    pub analysis: ChainAnalysis,
    /// False when the peak power constraint is violated by P_1.
    pub feasible: bool,
    /// True when P_0 > P_1, i.e. the tight boundary solution orders the
    /// powers against the longer-burst-gets-more-power rule.
    pub monotonicity_violated: bool,
}

/// Solve the N=1 problem with both loss constraints tight.
///
/// Fails with an infeasibility error when the implied ε_0 leaves (0,1)
/// (γ too large relative to ε_out); a peak-power violation instead comes
/// back as a flagged solution so sweeps can keep the point.
pub fn solve_n1(constraints: &LossConstraints, model: &ChannelModel) -> Result<N1Solution> {
    if constraints.n_max() != 1 {
        return Err(Error::Parameter(format!(
            "closed form requires N = 1, got N = {}",
            constraints.n_max()
        )));
    }
    let gamma = constraints.gamma();
    let eps_1 = constraints.eps_out();
    let eps_0 = (1.0 - eps_1) * gamma / (1.0 - gamma);
    if eps_0.is_nan() || eps_0 <= 0.0 || eps_0 >= 1.0 {
        return Err(Error::Infeasible(format!(
            "tight-constraint state-0 outage {eps_0} leaves (0,1) \
             (gamma={gamma}, eps_out={eps_1})"
        )));
    }
    let analysis = analyze_eps(&[eps_0, eps_1], model)?;
    let feasible = constraints
        .p_peak()
        .is_none_or(|p_m| analysis.powers[1] <= p_m);
    let monotonicity_violated = analysis.powers[0] > analysis.powers[1];
    Ok(N1Solution {
        eps: vec![eps_0, eps_1],
        analysis,
        feasible,
        monotonicity_violated,
    })
}

/// Outcome of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub enum N1SweepOutcome {
    Solved(N1Solution),
    Infeasible(String),
}

/// One row of a closed-form ε_out sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct N1SweepPoint {
    pub eps_out: f64,
    pub outcome: N1SweepOutcome,
}

/// Closed-form solve at every ε_out grid point. Infeasible points are
/// marked, never dropped, so sweep curves keep their x axis.
pub fn sweep_n1(
    constraints: &LossConstraints,
    grid: &[f64],
    model: &ChannelModel,
) -> Result<Vec<N1SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::Parameter("sweep grid must be non-empty".to_string()));
    }
    grid.iter()
        .map(|&eps_out| {
            let point = constraints.with_eps_out(eps_out)?;
            let outcome = match solve_n1(&point, model) {
                Ok(sol) => N1SweepOutcome::Solved(sol),
                Err(Error::Infeasible(msg)) => N1SweepOutcome::Infeasible(msg),
                Err(other) => return Err(other),
            };
            Ok(N1SweepPoint { eps_out, outcome })
        })
        .collect()
}
