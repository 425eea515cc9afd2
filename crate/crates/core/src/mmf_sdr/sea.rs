//! Successive elimination of higher-rank components from the relaxed
//! multicast solution.

use std::time::{Duration, Instant};

use super::qos::{bisect_mmf, gamma_upper_bound, Bisection, Penalty};
use super::{scale_to_budget, MMFResult, MmfParams};
use crate::channel::ChannelSet;
use crate::convex::HermitianMatrix;
use crate::error::{Error, Result};
use crate::metrics::TrialMetrics;
use crate::scalar::Real;

/// Relaxed max-min solution shared by SEA and the SDR baselines.
#[derive(Debug, Clone)]
pub struct RelaxedSolution<T: Real> {
    pub bisection: Bisection<T>,
    pub elapsed: Duration,
}

impl<T: Real> RelaxedSolution<T> {
    /// Wraps externally obtained covariances (no bisection history).
    pub fn from_covariances(w: Vec<HermitianMatrix<T>>, gamma: T) -> Self {
        RelaxedSolution {
            bisection: Bisection {
                gamma,
                x: T::one(),
                w,
                trace: Vec::new(),
                iterations: 0,
                solver_failures: 0,
            },
            elapsed: Duration::ZERO,
        }
    }

    pub fn covariances(&self) -> &[HermitianMatrix<T>] {
        &self.bisection.w
    }

    /// Order-sensitive digest of the relaxed covariances.
    pub fn fingerprint(&self) -> u64 {
        let mut acc: u64 = 0xcbf2_9ce4_8422_2325;
        for w in &self.bisection.w {
            for z in w.as_matrix().iter() {
                for v in [z.re.as_f64().to_bits(), z.im.as_f64().to_bits()] {
                    acc ^= v;
                    acc = acc.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        acc
    }
}

/// Bisection of the unpenalized relaxation over `[0, γ_up]`.
pub fn relaxed_mmf<T: Real>(ch: &ChannelSet<T>, eta: &[T], p_max: &[T], params: &MmfParams) -> Result<RelaxedSolution<T>> {
    let start = Instant::now();
    let hi = gamma_upper_bound(ch, eta, p_max);
    let bisection = bisect_mmf(ch, eta, p_max, T::lit(params.eps), &[], (T::zero(), hi), &params.solver)?;
    Ok(RelaxedSolution {
        bisection,
        elapsed: start.elapsed(),
    })
}

pub fn sea<T: Real>(ch: &ChannelSet<T>, eta: &[T], p_max: &[T], params: &MmfParams) -> Result<MMFResult<T>> {
    let relaxed = relaxed_mmf(ch, eta, p_max, params)?;
    sea_from_relaxed(ch, eta, p_max, params, &relaxed)
}

fn ranks<T: Real>(w: &[HermitianMatrix<T>], tol: T) -> Vec<usize> {
    w.iter().map(|m| m.numerical_rank(tol)).collect()
}

/// Continues from an existing relaxed solution: while some `W_g` is not rank
/// one, penalize its second eigenvector and re-bisect on a shrunk interval.
pub fn sea_from_relaxed<T: Real>(
    ch: &ChannelSet<T>,
    eta: &[T],
    p_max: &[T],
    params: &MmfParams,
    relaxed: &RelaxedSolution<T>,
) -> Result<MMFResult<T>> {
    if !(params.kappa > 0.0 && params.kappa < 1.0) || !(params.zeta > 0.0) {
        return Err(Error::Precondition("SEA needs 0 < κ < 1 and ζ > 0".into()));
    }
    let start = Instant::now();
    let tol = T::lit(params.tol_rank);
    let eps = T::lit(params.eps);
    let zeta = T::lit(params.zeta);
    let kappa = T::lit(params.kappa);

    let mut bis = relaxed.bisection.clone();
    let mut penalties: Vec<Penalty<T>> = Vec::new();
    let mut rank_history = vec![ranks(&bis.w, tol)];
    let mut trace = bis.trace.clone();
    let mut bisect_iters = bis.iterations;
    let mut gamma_trace = vec![bis.gamma.as_f64()];
    let mut elim = 0;

    let stalled = |elim: usize, rank_history: &[Vec<usize>], gamma_trace: &[f64]| Error::SeaStalled {
        iterations: elim,
        max_rank: rank_history.last().and_then(|r| r.iter().max().copied()).unwrap_or(0),
        gamma_trace: gamma_trace.to_vec(),
    };

    while let Some(g) = rank_history.last().and_then(|r| r.iter().position(|&r| r != 1)) {
        if elim >= params.max_elim {
            return Err(stalled(elim, &rank_history, &gamma_trace));
        }
        let u = bis.w[g]
            .second_eigvec(tol)
            .map_err(|_| stalled(elim, &rank_history, &gamma_trace))?;
        penalties.push(Penalty { group: g, u, weight: zeta });

        let gamma = bis.gamma;
        let shrink = { let a = kappa * gamma; let b = gamma - T::one(); if a < b { a } else { b } };
        let lo = if shrink > T::zero() { shrink } else { T::zero() };
        bis = match bisect_mmf(ch, eta, p_max, eps, &penalties, (lo, gamma), &params.solver) {
            Ok(b) => b,
            Err(Error::Bisection(_)) => {
                log::debug!("shrunk interval [{}, {}] infeasible; widening", lo.as_f64(), gamma.as_f64());
                bisect_mmf(ch, eta, p_max, eps, &penalties, (T::zero(), gamma), &params.solver)?
            }
            Err(e) => return Err(e),
        };
        elim += 1;
        bisect_iters += bis.iterations;
        trace.extend_from_slice(&bis.trace);
        gamma_trace.push(bis.gamma.as_f64());
        rank_history.push(ranks(&bis.w, tol));
        log::debug!("elimination {elim}: group {g}, γ = {}, ranks {:?}", bis.gamma.as_f64(), rank_history.last());
    }

    let mut precoders: Vec<_> = bis.w.iter().map(HermitianMatrix::dominant_factor).collect();
    scale_to_budget(ch, &mut precoders, p_max);
    let mut metrics = TrialMetrics::evaluate(ch, &precoders);
    let elapsed = relaxed.elapsed + start.elapsed();
    metrics.runtime_ms = elapsed.as_secs_f64() * 1e3;
    metrics.rank_history = rank_history.iter().map(|r| r.iter().copied().max().unwrap_or(0)).collect();
    Ok(MMFResult {
        covariances: bis.w,
        precoders,
        t_star: bis.gamma,
        metrics,
        rank_history,
        bisection_trace: trace,
        bisect_iters,
        elim_iters: elim,
        elapsed,
    })
}
