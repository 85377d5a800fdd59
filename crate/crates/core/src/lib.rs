//! Energy-minimal transmit power policies for loss-tolerant links.
//!
//! A transmitter without channel state information can only trade power
//! against outage probability. When the application tolerates an average
//! packet loss rate γ, at most N successive losses, and a residual
//! burst-overrun probability ε_out, the cheapest strategy keys the
//! transmit power to the current loss-run length. This crate models that
//! scheme end to end:
//!
//! - [`channel`]: power ↔ outage maps for Rayleigh and d-branch diversity
//!   fading, including the regularized incomplete gamma function and the
//!   numeric inversion the diversity case requires.
//! - [`chain`]: the (N+1)-state loss-run Markov chain, its product-form
//!   steady state, achieved loss rate and average power.
//! - [`closedform`]: the exact N=1 boundary solution used as a baseline.
//! - [`optimizer`]: simulated annealing over outage policies with
//!   fast-annealing cooling, plus an exhaustive grid-search oracle.
//! - [`simulator`]: a slot-level Monte Carlo link simulator that checks
//!   the analysis against the physical ACK/NAK process.

pub mod chain;
pub mod channel;
pub mod closedform;
pub mod error;
pub mod optimizer;
pub mod simulator;

pub use chain::{
    analyze, analyze_eps, build_transition_matrix, steady_state, ChainAnalysis, OutagePolicy,
    TransitionMatrix,
};
pub use channel::{regularized_lower_gamma, ChannelModel, FadingKind};
pub use closedform::{
    solve_n1, sweep_n1, LossConstraints, N1Solution, N1SweepOutcome, N1SweepPoint,
};
pub use error::{Error, Result};
pub use optimizer::{
    accept_candidate, check_feasibility, cooling_temperature, grid_search_oracle,
    propose_candidate, sa_optimize, FeasibilityReport, OptResult, SaConfig, TracePoint,
    EPS_N_ACTIVE_TOL, POLICY_EPS_MARGIN,
};
pub use simulator::{
    compare_to_analysis, loss_occurs, sample_channel_gain, simulate_policy, validate_against_chain,
    MetricCheck, SimStats, ValidationReport, ValidationTolerances, MIN_SLOTS_STRICT,
};
