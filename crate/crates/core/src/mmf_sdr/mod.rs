//! Relaxed QoS/MMF problems, the successive elimination algorithm and the
//! SDR baselines.

pub mod power;
mod qos;
mod sdr;
mod sea;

use std::time::Duration;

use crate::channel::ChannelSet;
use crate::convex::{HermitianMatrix, SolverSettings};
use crate::metrics::{ap_powers, TrialMetrics};
use crate::scalar::{CVec, Real};

pub use power::{maxmin_power, PowerAllocation, PowerProblem};
pub use qos::{
    bisect_mmf, build_qos_sdp, gamma_upper_bound, solve_qos, Bisection, Penalty, QoSInstance, QoSOutcome,
};
pub use sdr::{mmpc_power_control, sdr_dominant, sdr_randomize, sdr_upper};
pub use sea::{relaxed_mmf, sea, sea_from_relaxed, RelaxedSolution};

/// Tuning knobs for the algorithms in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmfParams {
    /// Bisection accuracy on the SINR target.
    pub eps: f64,
    /// Interval shrink factor on restart.
    pub kappa: f64,
    /// Penalty weight on eliminated eigen-directions.
    pub zeta: f64,
    /// `λ₂/λ₁` threshold for calling a matrix rank one.
    pub tol_rank: f64,
    pub max_elim: usize,
    pub n_candidates: usize,
    /// Bisection accuracy for the power control step.
    pub mmpc_eps: f64,
    pub solver: SolverSettings,
}

impl Default for MmfParams {
    fn default() -> Self {
        MmfParams {
            eps: 0.1,
            kappa: 0.96,
            zeta: 30.0,
            tol_rank: 1e-3,
            max_elim: 50,
            n_candidates: 300,
            mmpc_eps: 0.01,
            solver: SolverSettings::default(),
        }
    }
}

/// Output of any multicast precoding algorithm.
#[derive(Debug, Clone)]
pub struct MMFResult<T: Real> {
    /// Covariance precoders `W_g` (relaxed or final), when the algorithm has them.
    pub covariances: Vec<HermitianMatrix<T>>,
    /// Vector precoders `w_g`; empty for the relaxed bound.
    pub precoders: Vec<CVec<T>>,
    /// Target reached by the last bisection (or power control).
    pub t_star: T,
    pub metrics: TrialMetrics,
    /// Numerical rank of every `W_g` after each relaxed solve.
    pub rank_history: Vec<Vec<usize>>,
    pub bisection_trace: Vec<(T, T)>,
    pub bisect_iters: usize,
    pub elim_iters: usize,
    pub elapsed: Duration,
}

impl<T: Real> MMFResult<T> {
    pub fn max_rank_final(&self) -> usize {
        self.rank_history.last().and_then(|r| r.iter().max().copied()).unwrap_or(1)
    }
}

/// Common factor bringing the most loaded AP to its budget.
pub(crate) fn budget_scale<T: Real>(powers: &[T], p_max: &[T]) -> T {
    let peak = powers
        .iter()
        .zip(p_max)
        .map(|(&p, &m)| p / m)
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    if peak > T::zero() {
        T::one() / peak
    } else {
        T::one()
    }
}

/// Scales vector precoders so that `max_l P_l^{-1} Σ_g ‖w_{g,l}‖² = 1`.
pub fn scale_to_budget<T: Real>(ch: &ChannelSet<T>, w: &mut [CVec<T>], p_max: &[T]) {
    let s = budget_scale(&ap_powers(ch, w), p_max).sqrt();
    for wg in w.iter_mut() {
        *wg *= crate::scalar::creal(s);
    }
}
