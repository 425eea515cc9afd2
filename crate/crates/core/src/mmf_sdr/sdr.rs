//! Semidefinite relaxation baselines: the relaxed bound, the dominant
//! eigenvector, and Gaussian randomization, each followed by max-min power
//! control.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::power::{maxmin_power, maxmin_power_from, PowerAllocation, PowerProblem};
use super::sea::RelaxedSolution;
use super::{budget_scale, MMFResult, MmfParams};
use crate::channel::ChannelSet;
use crate::convex::{HermitianMatrix, SolverSettings};
use crate::error::Result;
use crate::metrics::{ap_powers_trace, TrialMetrics};
use crate::scalar::{cplx, creal, CVec, Real};

fn ue_weights<T: Real>(ch: &ChannelSet<T>, eta: &[T]) -> Vec<T> {
    ch.group_of_ue.iter().map(|&g| eta[g]).collect()
}

/// Max-min weighted SINR powers for fixed group directions.
pub fn mmpc_power_control<T: Real>(
    directions: &[CVec<T>],
    ch: &ChannelSet<T>,
    eta: &[T],
    p_max: &[T],
    eps: T,
    settings: &SolverSettings,
) -> Result<PowerAllocation<T>> {
    let prob = PowerProblem::from_directions(ch, directions, &ch.group_of_ue, &ue_weights(ch, eta), p_max)?;
    maxmin_power(&prob, eps, settings)
}

fn apply_powers<T: Real>(directions: &[CVec<T>], p: &[T]) -> Vec<CVec<T>> {
    directions
        .iter()
        .zip(p)
        .map(|(d, &pg)| d.unscale(d.norm()) * creal(pg.sqrt()))
        .collect()
}

fn finish<T: Real>(
    ch: &ChannelSet<T>,
    relaxed: &RelaxedSolution<T>,
    precoders: Vec<CVec<T>>,
    alloc: &PowerAllocation<T>,
    start: Instant,
) -> MMFResult<T> {
    let mut metrics = TrialMetrics::evaluate(ch, &precoders);
    let elapsed = relaxed.elapsed + start.elapsed();
    metrics.runtime_ms = elapsed.as_secs_f64() * 1e3;
    MMFResult {
        covariances: relaxed.covariances().to_vec(),
        precoders,
        t_star: alloc.t,
        metrics,
        rank_history: Vec::new(),
        bisection_trace: alloc.trace.clone(),
        bisect_iters: relaxed.bisection.iterations + alloc.trace.len(),
        elim_iters: 0,
        elapsed,
    }
}

/// The relaxed solution itself, scaled to the budget: an upper bound on any
/// rank-one design.
pub fn sdr_upper<T: Real>(ch: &ChannelSet<T>, p_max: &[T], relaxed: &RelaxedSolution<T>) -> MMFResult<T> {
    let s = budget_scale(&ap_powers_trace(ch, relaxed.covariances()), p_max);
    let w: Vec<_> = relaxed
        .covariances()
        .iter()
        .map(|m| HermitianMatrix::new(m.as_matrix() * creal(s)))
        .collect();
    let mut metrics = TrialMetrics::evaluate_relaxed(ch, &w);
    metrics.runtime_ms = relaxed.elapsed.as_secs_f64() * 1e3;
    let tol = T::lit(1e-3);
    let ranks = w.iter().map(|m| m.numerical_rank(tol)).collect();
    MMFResult {
        covariances: w,
        precoders: Vec::new(),
        t_star: relaxed.bisection.gamma,
        metrics,
        rank_history: vec![ranks],
        bisection_trace: relaxed.bisection.trace.clone(),
        bisect_iters: relaxed.bisection.iterations,
        elim_iters: 0,
        elapsed: relaxed.elapsed,
    }
}

/// Dominant eigenvector of every relaxed `W_g`, then power control.
pub fn sdr_dominant<T: Real>(
    ch: &ChannelSet<T>,
    eta: &[T],
    p_max: &[T],
    params: &MmfParams,
    relaxed: &RelaxedSolution<T>,
) -> Result<MMFResult<T>> {
    let start = Instant::now();
    let dirs: Vec<_> = relaxed.covariances().iter().map(HermitianMatrix::dominant_factor).collect();
    let alloc = mmpc_power_control(&dirs, ch, eta, p_max, T::lit(params.mmpc_eps), &params.solver)?;
    let precoders = apply_powers(&dirs, &alloc.p);
    Ok(finish(ch, relaxed, precoders, &alloc, start))
}

/// Best of the dominant-eigenvector candidate and `n_candidates` Gaussian
/// draws `W_g^{1/2} z_g`. Candidate `i` uses stream `i` of a generator
/// seeded with `seed`, so results do not depend on evaluation order.
///
/// A candidate is only refined when it can beat the best target found so far
/// by the power-control accuracy, which gives the same maximum as refining
/// every candidate up to that accuracy.
pub fn sdr_randomize<T: Real>(
    ch: &ChannelSet<T>,
    eta: &[T],
    p_max: &[T],
    params: &MmfParams,
    relaxed: &RelaxedSolution<T>,
    seed: u64,
) -> Result<MMFResult<T>> {
    let start = Instant::now();
    let eps = T::lit(params.mmpc_eps);
    let weights = ue_weights(ch, eta);
    let dominant: Vec<_> = relaxed.covariances().iter().map(HermitianMatrix::dominant_factor).collect();
    let mut best_alloc = mmpc_power_control(&dominant, ch, eta, p_max, eps, &params.solver)?;
    let mut best_dirs = dominant;
    let roots: Vec<_> = relaxed.covariances().iter().map(HermitianMatrix::psd_sqrt).collect();
    let half = T::lit(std::f64::consts::FRAC_1_SQRT_2);

    for i in 0..params.n_candidates {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        let dirs: Vec<CVec<T>> = roots
            .iter()
            .map(|r| {
                let z = CVec::from_fn(r.ncols(), |_, _| {
                    let re: f64 = rand::Rng::sample(&mut rng, StandardNormal);
                    let im: f64 = rand::Rng::sample(&mut rng, StandardNormal);
                    cplx(T::lit(re) * half, T::lit(im) * half)
                });
                r * z
            })
            .collect();
        let Ok(prob) = PowerProblem::from_directions(ch, &dirs, &ch.group_of_ue, &weights, p_max) else {
            continue;
        };
        if let Some(alloc) = maxmin_power_from(&prob, best_alloc.t + eps, eps, true, &params.solver)? {
            if alloc.t > best_alloc.t {
                best_alloc = alloc;
                best_dirs = dirs;
            }
        }
    }
    let precoders = apply_powers(&best_dirs, &best_alloc.p);
    Ok(finish(ch, relaxed, precoders, &best_alloc, start))
}
