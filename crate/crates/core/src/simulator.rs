//! Monte Carlo link simulator.
//!
//! Executes a policy over i.i.d. block-fading slots with perfect ACK/NAK
//! feedback: each slot transmits at the current state's power, a loss
//! moves the state forward (capped at N), a success resets it to zero, and
//! lost packets are dropped for good — there is no buffer. The measured
//! statistics validate the analytical chain against the physical process.
//!
//! Diversity gains are the mean of d unit-mean exponentials, which makes
//! the empirical outage equal the regularized-gamma outage of the channel
//! module by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::chain::{analyze, ChainAnalysis, OutagePolicy};
use crate::channel::{ChannelModel, FadingKind};
use crate::error::{Error, Result};

/// Minimum slot count accepted by strict-mode validation; below this the
/// binomial noise floor is wider than the default tolerances.
pub const MIN_SLOTS_STRICT: u64 = 100_000;

/// One |h|² realization for the model's fading family.
pub fn sample_channel_gain(model: &ChannelModel, rng: &mut impl Rng) -> f64 {
    let exp_draw = |rng: &mut dyn FnMut() -> f64| -> f64 { -(-rng()).ln_1p() };
    match model.kind() {
        FadingKind::Rayleigh => exp_draw(&mut || rng.gen::<f64>()),
        FadingKind::Diversity { branches } => {
            let d = branches as usize;
            let sum: f64 = (0..d).map(|_| exp_draw(&mut || rng.gen::<f64>())).sum();
            sum / d as f64
        }
    }
}

/// Whether a slot with the given power and gain fails to carry the rate.
pub fn loss_occurs(model: &ChannelModel, power: f64, gain: f64) -> bool {
    (1.0 + power * gain / model.noise()).log2() < model.rate()
}

/// Empirical statistics of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    /// Total simulated slots.
    pub slots: u64,
    /// Slots that ended in packet loss.
    pub losses: u64,
    /// Visits per state 0..=N.
    pub state_visits: Vec<u64>,
    /// Losses per state 0..=N.
    pub state_losses: Vec<u64>,
    /// Sum of transmitted power over all slots, watts.
    pub power_sum: f64,
    /// burst_histogram[L] counts maximal loss runs of exactly L slots.
    pub burst_histogram: Vec<u64>,
}

impl SimStats {
    /// Fraction of slots with packet loss.
    pub fn empirical_gamma_r(&self) -> f64 {
        self.losses as f64 / self.slots as f64
    }

    /// Mean transmit power per slot, watts.
    pub fn empirical_p_avg(&self) -> f64 {
        self.power_sum / self.slots as f64
    }

    /// Fraction of termination-state slots that ended in loss — the
    /// empirical estimate of ε_N (and of the burst-overrun probability).
    /// `None` when the termination state was never visited.
    pub fn empirical_eps_cond(&self) -> Option<f64> {
        let n = self.state_visits.len() - 1;
        if self.state_visits[n] == 0 {
            None
        } else {
            Some(self.state_losses[n] as f64 / self.state_visits[n] as f64)
        }
    }

    /// Empirical distribution over states.
    pub fn state_occupancy(&self) -> Vec<f64> {
        self.state_visits
            .iter()
            .map(|&v| v as f64 / self.slots as f64)
            .collect()
    }

    /// Combine statistics from runs with disjoint seeds.
    pub fn merge(&self, other: &SimStats) -> Result<SimStats> {
        if self.state_visits.len() != other.state_visits.len() {
            return Err(Error::Parameter(
                "cannot merge statistics for different state counts".to_string(),
            ));
        }
        let mut burst = self.burst_histogram.clone();
        if other.burst_histogram.len() > burst.len() {
            burst.resize(other.burst_histogram.len(), 0);
        }
        for (i, &c) in other.burst_histogram.iter().enumerate() {
            burst[i] += c;
        }
        Ok(SimStats {
            slots: self.slots + other.slots,
            losses: self.losses + other.losses,
            state_visits: self
                .state_visits
                .iter()
                .zip(&other.state_visits)
                .map(|(a, b)| a + b)
                .collect(),
            state_losses: self
                .state_losses
                .iter()
                .zip(&other.state_losses)
                .map(|(a, b)| a + b)
                .collect(),
            power_sum: self.power_sum + other.power_sum,
            burst_histogram: burst,
        })
    }

    /// Flat key/value record for CSV emission.
    pub fn flat_record(&self) -> Vec<(&'static str, String)> {
        let join_f = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        let hist = self
            .burst_histogram
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(len, &c)| format!("{len}:{c}"))
            .collect::<Vec<_>>()
            .join(";");
        vec![
            ("slots", self.slots.to_string()),
            ("empirical_gamma_r", self.empirical_gamma_r().to_string()),
            ("empirical_p_avg", self.empirical_p_avg().to_string()),
            (
                "empirical_eps_cond",
                self.empirical_eps_cond()
                    .map_or("NaN".to_string(), |v| v.to_string()),
            ),
            ("state_occupancy", join_f(&self.state_occupancy())),
            ("burst_histogram", hist),
        ]
    }
}

/// Run the exact state machine for `slots` slots under a fixed seed.
///
/// Fails only if the policy's outages cannot be inverted to powers.
pub fn simulate_policy(
    policy: &OutagePolicy,
    model: &ChannelModel,
    slots: u64,
    seed: u64,
) -> Result<SimStats> {
    if slots < 1 {
        return Err(Error::Parameter(
            "slot count must be at least 1".to_string(),
        ));
    }
    let powers: Vec<f64> = policy
        .eps()
        .iter()
        .map(|&e| model.power_from_outage(e))
        .collect::<Result<_>>()?;
    let n = policy.n();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let mut stats = SimStats {
        slots,
        losses: 0,
        state_visits: vec![0; n + 1],
        state_losses: vec![0; n + 1],
        power_sum: 0.0,
        burst_histogram: Vec::new(),
    };
    let mut state = 0usize;
    let mut run_len = 0usize;
    let close_run = |hist: &mut Vec<u64>, run_len: usize| {
        if run_len > 0 {
            if hist.len() <= run_len {
                hist.resize(run_len + 1, 0);
            }
            hist[run_len] += 1;
        }
    };

    for _ in 0..slots {
        stats.state_visits[state] += 1;
        let power = powers[state];
        stats.power_sum += power;
        let gain = sample_channel_gain(model, &mut rng);
        if loss_occurs(model, power, gain) {
            stats.losses += 1;
            stats.state_losses[state] += 1;
            run_len += 1;
            state = (state + 1).min(n);
        } else {
            close_run(&mut stats.burst_histogram, run_len);
            run_len = 0;
            state = 0;
        }
    }
    close_run(&mut stats.burst_histogram, run_len);
    Ok(stats)
}

/// Tolerances for chain-vs-simulation validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationTolerances {
    /// Absolute tolerance on probabilities (occupancy, loss rates).
    pub prob_abs: f64,
    /// Relative tolerance on average power.
    pub power_rel: f64,
    /// Strict mode refuses statistically underpowered runs
    /// (fewer than [`MIN_SLOTS_STRICT`] slots).
    pub strict: bool,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        Self {
            prob_abs: 0.01,
            power_rel: 0.01,
            strict: true,
        }
    }
}

/// One compared metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCheck {
    pub name: &'static str,
    pub simulated: f64,
    pub analytical: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Pass/fail comparison of empirical statistics against a chain analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<MetricCheck>,
    pub pass: bool,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{}: sim={:.6} chain={:.6} |delta|={:.2e} tol={:.2e} [{}]",
                c.name,
                c.simulated,
                c.analytical,
                c.delta.abs(),
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" }
            )?;
        }
        write!(f, "overall: {}", if self.pass { "pass" } else { "FAIL" })
    }
}

/// Compare simulation statistics against an analysis (which need not come
/// from the same policy — mismatches are the negative control).
pub fn compare_to_analysis(
    stats: &SimStats,
    eps: &[f64],
    analysis: &ChainAnalysis,
    tol: &ValidationTolerances,
) -> ValidationReport {
    let mut checks = Vec::new();
    let occupancy = stats.state_occupancy();
    let occ_delta = occupancy
        .iter()
        .zip(&analysis.pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    checks.push(MetricCheck {
        name: "state_occupancy_max_dev",
        simulated: occ_delta,
        analytical: 0.0,
        delta: occ_delta,
        tolerance: tol.prob_abs,
        pass: occ_delta <= tol.prob_abs,
    });

    let g = stats.empirical_gamma_r();
    checks.push(MetricCheck {
        name: "gamma_r",
        simulated: g,
        analytical: analysis.gamma_r,
        delta: g - analysis.gamma_r,
        tolerance: tol.prob_abs,
        pass: (g - analysis.gamma_r).abs() <= tol.prob_abs,
    });

    let p = stats.empirical_p_avg();
    let p_rel = (p - analysis.p_avg).abs() / analysis.p_avg;
    checks.push(MetricCheck {
        name: "p_avg_rel",
        simulated: p,
        analytical: analysis.p_avg,
        delta: p_rel,
        tolerance: tol.power_rel,
        pass: p_rel <= tol.power_rel,
    });

    let eps_n = eps[eps.len() - 1];
    match stats.empirical_eps_cond() {
        Some(cond) => checks.push(MetricCheck {
            name: "eps_cond",
            simulated: cond,
            analytical: eps_n,
            delta: cond - eps_n,
            tolerance: tol.prob_abs,
            pass: (cond - eps_n).abs() <= tol.prob_abs,
        }),
        None => checks.push(MetricCheck {
            name: "eps_cond",
            simulated: f64::NAN,
            analytical: eps_n,
            delta: f64::NAN,
            tolerance: tol.prob_abs,
            pass: false,
        }),
    }

    let pass = checks.iter().all(|c| c.pass);
    ValidationReport { checks, pass }
}

/// Simulate a policy and compare the measurement against its own chain
/// analysis.
pub fn validate_against_chain(
    policy: &OutagePolicy,
    model: &ChannelModel,
    slots: u64,
    seed: u64,
    tol: &ValidationTolerances,
) -> Result<ValidationReport> {
    if tol.strict && slots < MIN_SLOTS_STRICT {
        return Err(Error::Parameter(format!(
            "strict validation needs at least {MIN_SLOTS_STRICT} slots, got {slots}; \
             use wide-tolerance mode (strict = false) for short runs"
        )));
    }
    let stats = simulate_policy(policy, model, slots, seed)?;
    let analysis = analyze(policy, model)?;
    Ok(compare_to_analysis(&stats, policy.eps(), &analysis, tol))
}
