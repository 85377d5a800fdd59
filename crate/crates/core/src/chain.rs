//! Markov chain of successive packet losses.
//!
//! State i means the last i packets were lost in a row; state N is the
//! termination state where a further loss keeps the chain in place. An ACK
//! always returns the chain to state 0, a NAK advances it (or holds at N),
//! so row i of the transition matrix has mass only at columns 0 and
//! min(i+1, N). The single-return-to-zero structure gives the steady state
//! in closed product form, which `steady_state` uses; a generic dense solve
//! is kept as a test oracle in the integration suites.

use crate::channel::ChannelModel;
use crate::error::{Error, Result};

/// Per-state outage probabilities, the optimization variable.
///
/// Entries lie strictly inside (0,1) and are non-increasing: a longer loss
/// run never gets a weaker (higher-outage) transmission. Non-monotone
/// vectors are provably dominated, so the constraint is enforced here
/// rather than re-derived by every search.
#[derive(Debug, Clone, PartialEq)]
pub struct OutagePolicy {
    eps: Vec<f64>,
}

impl OutagePolicy {
    /// Validate and wrap a vector of per-state outage probabilities
    /// (length N+1 for burst tolerance N >= 1).
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if eps.len() < 2 {
            return Err(Error::Parameter(format!(
                "policy needs at least 2 states, got {}",
                eps.len()
            )));
        }
        for (i, &e) in eps.iter().enumerate() {
            if e.is_nan() || e <= 0.0 || e >= 1.0 {
                return Err(Error::Parameter(format!(
                    "outage probability at state {i} must lie in (0,1), got {e}"
                )));
            }
        }
        for w in eps.windows(2) {
            if w[0] < w[1] {
                return Err(Error::Parameter(format!(
                    "outage probabilities must be non-increasing, got {} < {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { eps })
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    /// Burst tolerance N (one less than the number of states).
    pub fn n(&self) -> usize {
        self.eps.len() - 1
    }
}

/// Row-stochastic transition matrix of the loss chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    eps: Vec<f64>,
    data: Vec<f64>, // row-major, n_states^2
}

impl TransitionMatrix {
    /// Build the matrix from raw outage values. Unlike [`OutagePolicy`],
    /// boundary values 0 and 1 are accepted here so degenerate chains can
    /// be constructed in tests.
    pub fn from_eps(eps: &[f64]) -> Result<Self> {
        if eps.len() < 2 {
            return Err(Error::Parameter(format!(
                "transition matrix needs at least 2 states, got {}",
                eps.len()
            )));
        }
        for (i, &e) in eps.iter().enumerate() {
            if !(0.0..=1.0).contains(&e) || !e.is_finite() {
                return Err(Error::Parameter(format!(
                    "outage probability at state {i} must lie in [0,1], got {e}"
                )));
            }
        }
        let n_states = eps.len();
        let last = n_states - 1;
        let mut data = vec![0.0; n_states * n_states];
        for (i, &e) in eps.iter().enumerate() {
            data[i * n_states] = 1.0 - e;
            let next = (i + 1).min(last);
            data[i * n_states + next] += e;
        }
        Ok(Self {
            eps: eps.to_vec(),
            data,
        })
    }

    pub fn n_states(&self) -> usize {
        self.eps.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_states() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_states();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }
}

/// Derived quantities of a policy under a channel model.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainAnalysis {
    /// Steady-state distribution over states 0..=N.
    pub pi: Vec<f64>,
    /// Achieved long-run packet loss rate, Σ ε_i π_i.
    pub gamma_r: f64,
    /// Per-state transmit powers in watts.
    pub powers: Vec<f64>,
    /// Average transmit power Σ P_i π_i in watts.
    pub p_avg: f64,
}

/// Transition matrix of a valid policy (cannot fail once the policy
/// invariants hold).
pub fn build_transition_matrix(policy: &OutagePolicy) -> TransitionMatrix {
    TransitionMatrix::from_eps(policy.eps()).expect("valid policy entries")
}

/// Steady-state distribution π with π·A = π and Σπ = 1.
///
/// Uses the product form π_i = π_0 · Π_{k<i} ε_k for i < N and
/// π_N = π_0 · (Π_{k<N} ε_k) / (1 − ε_N), then normalizes. Exact for this
/// chain because every state returns to 0 in one step on success.
pub fn steady_state(matrix: &TransitionMatrix) -> Result<Vec<f64>> {
    let eps = matrix.eps();
    let last = eps.len() - 1;
    if eps[last] >= 1.0 {
        return Err(Error::DegenerateChain(format!(
            "termination state is absorbing (eps_N = {})",
            eps[last]
        )));
    }
    let mut weights = Vec::with_capacity(eps.len());
    weights.push(1.0);
    for i in 1..last {
        let w = weights[i - 1] * eps[i - 1];
        weights.push(w);
    }
    weights.push(weights[last - 1] * eps[last - 1] / (1.0 - eps[last]));
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Full analysis of a policy: steady state, achieved loss rate, per-state
/// powers and average power.
pub fn analyze(policy: &OutagePolicy, model: &ChannelModel) -> Result<ChainAnalysis> {
    analyze_eps(policy.eps(), model)
}

/// Analysis of a raw outage vector.
///
/// Same computation as [`analyze`] but without the monotonicity
/// requirement; closed-form boundary solutions may legitimately order
/// their outages the other way and still need their chain evaluated.
pub fn analyze_eps(eps: &[f64], model: &ChannelModel) -> Result<ChainAnalysis> {
    if eps.len() < 2 {
        return Err(Error::Parameter(format!(
            "analysis needs at least 2 states, got {}",
            eps.len()
        )));
    }
    for (i, &e) in eps.iter().enumerate() {
        if e.is_nan() || e <= 0.0 || e >= 1.0 {
            return Err(Error::Parameter(format!(
                "outage probability at state {i} must lie in (0,1), got {e}"
            )));
        }
    }
    let matrix = TransitionMatrix::from_eps(eps)?;
    let pi = steady_state(&matrix)?;
    let powers: Vec<f64> = eps
        .iter()
        .map(|&e| model.power_from_outage(e))
        .collect::<Result<_>>()?;
    let gamma_r = eps.iter().zip(&pi).map(|(e, p)| e * p).sum();
    let p_avg = powers.iter().zip(&pi).map(|(w, p)| w * p).sum();
    Ok(ChainAnalysis {
        pi,
        gamma_r,
        powers,
        p_avg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ray() -> ChannelModel {
        ChannelModel::rayleigh(1.0, 1.0).unwrap()
    }

    #[test]
    fn matrix_no_outage_boundary() {
        let m = TransitionMatrix::from_eps(&[0.0, 0.0]).unwrap();
        assert_eq!(m.row(0), &[1.0, 0.0]);
        assert_eq!(m.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn matrix_two_states() {
        let p = OutagePolicy::new(vec![0.225, 0.1]).unwrap();
        let m = build_transition_matrix(&p);
        assert_eq!(m.row(0), &[0.775, 0.225]);
        assert_eq!(m.row(1), &[0.9, 0.1]);
    }

    #[test]
    fn matrix_three_states() {
        let p = OutagePolicy::new(vec![0.3, 0.2, 0.1]).unwrap();
        let m = build_transition_matrix(&p);
        assert_eq!(m.row(0), &[0.7, 0.3, 0.0]);
        assert_eq!(m.row(1), &[0.8, 0.0, 0.2]);
        assert_eq!(m.row(2), &[0.9, 0.0, 0.1]);
    }

    #[test]
    fn steady_state_two_states() {
        let p = OutagePolicy::new(vec![0.225, 0.1]).unwrap();
        let pi = steady_state(&build_transition_matrix(&p)).unwrap();
        assert!((pi[0] - 0.8).abs() < 1e-12);
        assert!((pi[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn steady_state_three_states() {
        let p = OutagePolicy::new(vec![0.3, 0.2, 0.1]).unwrap();
        let pi = steady_state(&build_transition_matrix(&p)).unwrap();
        // 1 : 0.3 : 0.3*0.2/0.9, normalized
        assert!((pi[0] - 0.731_707_317_073_170_7).abs() < 1e-12);
        assert!((pi[1] - 0.219_512_195_121_951_22).abs() < 1e-12);
        assert!((pi[2] - 0.048_780_487_804_878_05).abs() < 1e-12);
    }

    #[test]
    fn steady_state_equal_outages_is_geometric() {
        let e = 0.37;
        let p = OutagePolicy::new(vec![e; 5]).unwrap();
        let pi = steady_state(&build_transition_matrix(&p)).unwrap();
        let mut want = vec![1.0, e, e * e, e * e * e, e.powi(4) / (1.0 - e)];
        let total: f64 = want.iter().sum();
        for w in &mut want {
            *w /= total;
        }
        for (got, want) in pi.iter().zip(&want) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn steady_state_is_fixed_point() {
        let p = OutagePolicy::new(vec![0.51, 0.4, 0.22, 0.1]).unwrap();
        let m = build_transition_matrix(&p);
        let pi = steady_state(&m).unwrap();
        for j in 0..m.n_states() {
            let balance: f64 = (0..m.n_states()).map(|i| pi[i] * m.entry(i, j)).sum();
            assert!((balance - pi[j]).abs() < 1e-14, "state {j}");
        }
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn absorbing_termination_is_degenerate() {
        let m = TransitionMatrix::from_eps(&[0.5, 1.0]).unwrap();
        assert!(matches!(steady_state(&m), Err(Error::DegenerateChain(_))));
    }

    #[test]
    fn analyze_two_state_anchor() {
        let p = OutagePolicy::new(vec![0.225, 0.1]).unwrap();
        let a = analyze(&p, &ray()).unwrap();
        assert!((a.gamma_r - 0.2).abs() < 1e-12);
        assert!((a.powers[0] - 3.923_226_388_626_334_3).abs() < 1e-9);
        assert!((a.powers[1] - 9.491_221_581_029_905).abs() < 1e-9);
        // p_avg = 0.8 * P0 + 0.2 * P1
        assert!((a.p_avg - 5.036_825_427_107_049).abs() < 1e-9);
    }

    #[test]
    fn analyze_three_state_anchor() {
        let p = OutagePolicy::new(vec![0.3, 0.2, 0.1]).unwrap();
        let a = analyze(&p, &ray()).unwrap();
        assert!((a.gamma_r - 0.268_292_682_926_829_3).abs() < 1e-12);
        assert!((a.p_avg - 3.498_181_019_104_746_4).abs() < 1e-9);
    }

    #[test]
    fn rare_outage_concentrates_at_state_zero() {
        let m = ray();
        let a = analyze_eps(&[1e-9, 1e-10], &m).unwrap();
        assert!(a.gamma_r < 1e-8);
        assert!(a.pi[0] > 1.0 - 1e-8);
        assert!((a.p_avg - a.powers[0]).abs() / a.powers[0] < 1e-8);
    }

    #[test]
    fn policy_validation() {
        assert!(OutagePolicy::new(vec![0.5]).is_err());
        assert!(OutagePolicy::new(vec![0.5, 0.0]).is_err());
        assert!(OutagePolicy::new(vec![0.5, 1.0]).is_err());
        assert!(OutagePolicy::new(vec![0.1, 0.5]).is_err());
        assert!(OutagePolicy::new(vec![0.5, 0.5, 0.2]).is_ok());
        assert!(matches!(
            analyze_eps(&[0.5, 0.0], &ray()),
            Err(Error::Parameter(_))
        ));
    }
}
