//! Constrained minimization of average transmit power over outage policies.
//!
//! The search variable is the per-state outage vector, not the power
//! vector: the loss constraints are simple in ε and the domain is a compact
//! box, while powers follow through the channel map. Candidates that
//! violate any constraint are rejected outright before their energy is
//! used, worse feasible candidates are accepted with the Metropolis
//! probability exp(−ΔP_a/T), and the temperature follows the fast
//! annealing schedule T_b = T0 / (c_sa·b + 1).
//!
//! An exhaustive grid search over monotone ε vectors doubles as an
//! independent optimum for small N; the annealer is validated against it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::chain::{analyze, ChainAnalysis, OutagePolicy};
use crate::channel::ChannelModel;
use crate::closedform::LossConstraints;
use crate::error::{Error, Result};

/// Outage values are kept inside [MARGIN, 1 − MARGIN] so powers stay
/// finite and the chain stays ergodic.
pub const POLICY_EPS_MARGIN: f64 = 1e-6;

/// ε_N is reported as sitting on the ε_out bound when it comes within
/// this absolute distance of it.
pub const EPS_N_ACTIVE_TOL: f64 = 1e-2;

/// Simulated annealing hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SaConfig {
    /// Starting temperature in watts of ΔP_a. `None` resolves to 10% of
    /// the initial policy's average power.
    pub t0: Option<f64>,
    /// Cooling constant of the fast-annealing schedule.
    pub c_sa: f64,
    /// Proposals evaluated at each temperature.
    pub steps_per_temperature: usize,
    /// Number of temperature steps.
    pub temperature_iterations: usize,
    /// Maximum per-coordinate perturbation of ε.
    pub proposal_step: f64,
    /// RNG seed; runs are bit-reproducible for a fixed seed.
    pub seed: u64,
    /// Stop after this many consecutive acceptance-free temperature steps.
    pub stall_limit: usize,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            t0: None,
            c_sa: 1.0,
            steps_per_temperature: 100,
            temperature_iterations: 200,
            proposal_step: 0.05,
            seed: 0,
            stall_limit: 20,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t0) = self.t0 {
            if !t0.is_finite() || t0 <= 0.0 {
                return Err(Error::Parameter(format!(
                    "initial temperature must be positive, got {t0}"
                )));
            }
        }
        if !self.c_sa.is_finite() || self.c_sa <= 0.0 {
            return Err(Error::Parameter(format!(
                "cooling constant must be positive, got {}",
                self.c_sa
            )));
        }
        if self.steps_per_temperature < 1 {
            return Err(Error::Parameter(
                "steps per temperature must be at least 1".to_string(),
            ));
        }
        if self.temperature_iterations < 1 {
            return Err(Error::Parameter(
                "temperature iterations must be at least 1".to_string(),
            ));
        }
        if self.proposal_step.is_nan() || self.proposal_step <= 0.0 || self.proposal_step >= 1.0 {
            return Err(Error::Parameter(format!(
                "proposal step must lie in (0,1), got {}",
                self.proposal_step
            )));
        }
        if self.stall_limit < 1 {
            return Err(Error::Parameter(
                "stall limit must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Per-constraint feasibility breakdown of a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    /// Achieved average loss rate.
    pub gamma_r: f64,
    /// Termination-state outage ε_N.
    pub eps_n: f64,
    /// Termination-state power P_N (the largest, by policy monotonicity).
    pub p_n: f64,
    /// γ_r <= γ
    pub avg_loss_ok: bool,
    /// ε_N <= ε_out
    pub burst_ok: bool,
    /// P_N <= P_m (always true when no peak bound is set)
    pub peak_ok: bool,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.avg_loss_ok && self.burst_ok && self.peak_ok
    }
}

impl std::fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "avg loss {} (gamma_r={:.6}), burst {} (eps_N={:.6}), peak {} (P_N={:.6} W)",
            if self.avg_loss_ok { "ok" } else { "VIOLATED" },
            self.gamma_r,
            if self.burst_ok { "ok" } else { "VIOLATED" },
            self.eps_n,
            if self.peak_ok { "ok" } else { "VIOLATED" },
            self.p_n,
        )
    }
}

fn report_from_analysis(
    eps: &[f64],
    analysis: &ChainAnalysis,
    constraints: &LossConstraints,
) -> FeasibilityReport {
    let n = eps.len() - 1;
    let p_n = analysis.powers[n];
    FeasibilityReport {
        gamma_r: analysis.gamma_r,
        eps_n: eps[n],
        p_n,
        avg_loss_ok: analysis.gamma_r <= constraints.gamma(),
        burst_ok: eps[n] <= constraints.eps_out(),
        // the largest power is P_N, so only it meets the peak bound
        peak_ok: constraints.p_peak().is_none_or(|p_m| p_n <= p_m),
    }
}

/// Check a policy against all three constraints, returning the breakdown.
pub fn check_feasibility(
    policy: &OutagePolicy,
    constraints: &LossConstraints,
    model: &ChannelModel,
) -> Result<FeasibilityReport> {
    if policy.n() != constraints.n_max() {
        return Err(Error::Parameter(format!(
            "policy has N = {} but constraints specify N = {}",
            policy.n(),
            constraints.n_max()
        )));
    }
    let analysis = analyze(policy, model)?;
    Ok(report_from_analysis(policy.eps(), &analysis, constraints))
}

/// Fast-annealing temperature at step `b`: T0 / (c_sa·b + 1).
pub fn cooling_temperature(b: usize, t0: f64, c_sa: f64) -> f64 {
    t0 / (c_sa * b as f64 + 1.0)
}

/// Perturb one uniformly chosen coordinate by a uniform step, then clip to
/// [MARGIN, 1 − MARGIN] and re-sort so the result is always a valid policy.
pub fn propose_candidate(
    current: &OutagePolicy,
    config: &SaConfig,
    rng: &mut impl Rng,
) -> OutagePolicy {
    let mut eps = current.eps().to_vec();
    let idx = rng.gen_range(0..eps.len());
    let step = config.proposal_step;
    let delta = if step > 0.0 {
        rng.gen_range(-step..=step)
    } else {
        0.0
    };
    eps[idx] = (eps[idx] + delta).clamp(POLICY_EPS_MARGIN, 1.0 - POLICY_EPS_MARGIN);
    eps.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite outage values"));
    OutagePolicy::new(eps).expect("sorted, clipped candidate is a valid policy")
}

/// Metropolis acceptance: improvements always, worse candidates with
/// probability exp(−ΔP_a / T); a frozen system never accepts worse.
pub fn accept_candidate(delta_pa: f64, temperature: f64, rng: &mut impl Rng) -> bool {
    if delta_pa <= 0.0 {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    rng.gen::<f64>() < (-delta_pa / temperature).exp()
}

/// One point of the optimizer trace: best average power after each
/// temperature step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub temperature: f64,
    pub best_p_avg: f64,
}

/// Result of an optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best_policy: OutagePolicy,
    pub best_analysis: ChainAnalysis,
    /// Whether the returned policy satisfies all constraints (always true
    /// for results produced by the searches here; kept for reporting).
    pub feasible: bool,
    /// Whether ε_N sits on the ε_out bound (within [`EPS_N_ACTIVE_TOL`]).
    pub eps_n_active: bool,
    pub trace: Vec<TracePoint>,
}

struct Evaluated {
    policy: OutagePolicy,
    analysis: ChainAnalysis,
}

fn evaluate_feasible(
    policy: OutagePolicy,
    constraints: &LossConstraints,
    model: &ChannelModel,
) -> Result<Option<Evaluated>> {
    // cheap C2 check before the chain solve
    if policy.eps()[policy.n()] > constraints.eps_out() {
        return Ok(None);
    }
    let analysis = analyze(&policy, model)?;
    let report = report_from_analysis(policy.eps(), &analysis, constraints);
    if report.feasible() {
        Ok(Some(Evaluated { policy, analysis }))
    } else {
        Ok(None)
    }
}

/// Find a feasible starting policy: the all-equal vector at
/// 0.9·min(γ, ε_out) first, then random monotone draws.
fn initial_policy(
    constraints: &LossConstraints,
    model: &ChannelModel,
    rng: &mut impl Rng,
) -> Result<Evaluated> {
    let n = constraints.n_max();
    let level = (constraints.gamma().min(constraints.eps_out()) * 0.9)
        .clamp(POLICY_EPS_MARGIN, 1.0 - POLICY_EPS_MARGIN);
    let all_equal = OutagePolicy::new(vec![level; n + 1])?;
    let anchor_report = check_feasibility(&all_equal, constraints, model)?;
    if let Some(ev) = evaluate_feasible(all_equal, constraints, model)? {
        return Ok(ev);
    }
    let hi = 1.0 - POLICY_EPS_MARGIN;
    for _ in 0..50 {
        let mut eps = vec![0.0; n + 1];
        let upper_n = constraints.eps_out().min(hi);
        if upper_n <= POLICY_EPS_MARGIN {
            break;
        }
        eps[n] = rng.gen_range(POLICY_EPS_MARGIN..upper_n);
        for i in (0..n).rev() {
            eps[i] = rng.gen_range(eps[i + 1]..=hi);
        }
        let candidate = OutagePolicy::new(eps)?;
        if let Some(ev) = evaluate_feasible(candidate, constraints, model)? {
            return Ok(ev);
        }
    }
    Err(Error::Infeasible(format!(
        "no feasible starting policy found after 50 random draws; \
         all-equal start reported: {anchor_report}"
    )))
}

/// Simulated annealing over outage policies.
///
/// The returned policy is the lowest-average-power feasible candidate
/// encountered anywhere in the run. The run stops after the configured
/// temperature iterations or once `stall_limit` consecutive temperature
/// steps pass without a single acceptance.
pub fn sa_optimize(
    constraints: &LossConstraints,
    model: &ChannelModel,
    config: &SaConfig,
) -> Result<OptResult> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);

    let start = initial_policy(constraints, model, &mut rng)?;
    let t0 = config.t0.unwrap_or(0.1 * start.analysis.p_avg);

    let mut current = start.policy.clone();
    let mut current_pa = start.analysis.p_avg;
    let mut best = start;

    let mut trace = Vec::with_capacity(config.temperature_iterations);
    let mut stalled = 0usize;

    for b in 0..config.temperature_iterations {
        let temperature = cooling_temperature(b, t0, config.c_sa);
        let mut accepted_any = false;

        for _ in 0..config.steps_per_temperature {
            let candidate = propose_candidate(&current, config, &mut rng);
            let Some(ev) = evaluate_feasible(candidate, constraints, model)? else {
                continue; // constraint violation: rejected before energy use
            };
            let candidate_pa = ev.analysis.p_avg;
            if candidate_pa < best.analysis.p_avg {
                best = Evaluated {
                    policy: ev.policy.clone(),
                    analysis: ev.analysis.clone(),
                };
            }
            if accept_candidate(candidate_pa - current_pa, temperature, &mut rng) {
                current = ev.policy;
                current_pa = candidate_pa;
                accepted_any = true;
            }
        }

        trace.push(TracePoint {
            iteration: b,
            temperature,
            best_p_avg: best.analysis.p_avg,
        });

        if accepted_any {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= config.stall_limit {
                break;
            }
        }
    }

    let n = best.policy.n();
    let eps_n_active = constraints.eps_out() - best.policy.eps()[n] <= EPS_N_ACTIVE_TOL;
    Ok(OptResult {
        best_policy: best.policy,
        best_analysis: best.analysis,
        feasible: true,
        eps_n_active,
        trace,
    })
}

/// Exhaustive search over non-increasing ε vectors on a uniform grid.
///
/// Deterministic and independent of the annealer; used as its oracle.
/// Guarded to N <= 3 and resolution >= 1e-3 to keep the enumeration
/// tractable.
pub fn grid_search_oracle(
    constraints: &LossConstraints,
    model: &ChannelModel,
    resolution: f64,
) -> Result<OptResult> {
    if constraints.n_max() > 3 {
        return Err(Error::Parameter(format!(
            "grid search is limited to N <= 3, got N = {}",
            constraints.n_max()
        )));
    }
    if !(1e-3..1.0).contains(&resolution) {
        return Err(Error::Parameter(format!(
            "grid resolution must lie in [1e-3, 1), got {resolution}"
        )));
    }

    let values: Vec<f64> = (1..)
        .map(|k| k as f64 * resolution)
        .take_while(|&v| v < 1.0)
        .collect();
    let powers: Vec<f64> = values
        .iter()
        .map(|&e| model.power_from_outage(e))
        .collect::<Result<_>>()?;
    // largest grid index usable for eps_N under C2
    let max_last = match values.iter().rposition(|&v| v <= constraints.eps_out()) {
        Some(i) => i,
        None => {
            return Err(Error::Infeasible(format!(
                "no grid value lies at or below eps_out = {}",
                constraints.eps_out()
            )))
        }
    };

    let n = constraints.n_max();
    let gamma = constraints.gamma();
    let p_peak = constraints.p_peak();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut indices = vec![0usize; n + 1];

    // depth-first over non-increasing index tuples
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        depth: usize,
        upper: usize,
        indices: &mut Vec<usize>,
        values: &[f64],
        powers: &[f64],
        max_last: usize,
        gamma: f64,
        p_peak: Option<f64>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        let last = indices.len() - 1;
        if depth == last {
            for idx in 0..=upper.min(max_last) {
                indices[last] = idx;
                if let Some(p_m) = p_peak {
                    if powers[idx] > p_m {
                        continue;
                    }
                }
                // product-form steady state on the stack (n <= 3)
                let mut weights = [0.0f64; 4];
                weights[0] = 1.0;
                for i in 1..last {
                    weights[i] = weights[i - 1] * values[indices[i - 1]];
                }
                weights[last] =
                    weights[last - 1] * values[indices[last - 1]] / (1.0 - values[indices[last]]);
                let total: f64 = weights[..=last].iter().sum();
                let mut gamma_r = 0.0;
                let mut p_avg = 0.0;
                for i in 0..=last {
                    let pi = weights[i] / total;
                    gamma_r += values[indices[i]] * pi;
                    p_avg += powers[indices[i]] * pi;
                }
                if gamma_r > gamma {
                    continue;
                }
                if best.as_ref().is_none_or(|(bp, _)| p_avg < *bp) {
                    *best = Some((p_avg, indices.clone()));
                }
            }
            return;
        }
        for idx in 0..=upper {
            indices[depth] = idx;
            recurse(
                depth + 1,
                idx,
                indices,
                values,
                powers,
                max_last,
                gamma,
                p_peak,
                best,
            );
        }
    }

    recurse(
        0,
        values.len() - 1,
        &mut indices,
        &values,
        &powers,
        max_last,
        gamma,
        p_peak,
        &mut best,
    );

    let (_, best_indices) = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no grid policy satisfies the constraints (gamma={gamma}, eps_out={}, resolution={resolution})",
            constraints.eps_out()
        ))
    })?;
    let eps: Vec<f64> = best_indices.iter().map(|&i| values[i]).collect();
    let best_policy = OutagePolicy::new(eps)?;
    let best_analysis = analyze(&best_policy, model)?;
    let eps_n_active = constraints.eps_out() - best_policy.eps()[n] <= EPS_N_ACTIVE_TOL;
    Ok(OptResult {
        best_policy,
        best_analysis,
        feasible: true,
        eps_n_active,
        trace: Vec::new(),
    })
}
