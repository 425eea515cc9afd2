//! Phase-alignment multicast heuristic built on RZF unicast precoding and
//! unicast max-min power allocation.

use std::time::{Duration, Instant};

use nalgebra::Cholesky;

use crate::channel::ChannelSet;
use crate::convex::SolverSettings;
use crate::error::{Error, Result};
use crate::metrics::TrialMetrics;
use crate::mmf_sdr::power::{maxmin_power, PowerProblem};
use crate::mmf_sdr::scale_to_budget;
use crate::scalar::{arg, creal, polar, CMat, CVec, Cplx, Real};

/// Diagonal loading used in the inter-group interference matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regularizer {
    /// `σ²/P_max · I`, as in the algorithm listing.
    #[default]
    NoiseOverPower,
    /// `σ² · I`.
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicParams {
    /// Phase-alignment steps per group; `None` means the total UE count.
    pub iterations: Option<usize>,
    /// Emphasis factor applied to the weakest UE at each step.
    pub emphasis: f64,
    pub p_max: f64,
    pub noise: f64,
    pub regularizer: Regularizer,
    /// Bisection accuracy of the unicast power allocation.
    pub unicast_eps: f64,
    pub solver: SolverSettings,
}

impl HeuristicParams {
    pub fn new(p_max: f64, noise: f64) -> Self {
        HeuristicParams {
            iterations: None,
            emphasis: 1.1,
            p_max,
            noise,
            regularizer: Regularizer::NoiseOverPower,
            unicast_eps: 0.01,
            solver: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.emphasis >= 1.0) {
            return Err(Error::Config(format!("emphasis factor must be at least 1, got {}", self.emphasis)));
        }
        if !(self.p_max > 0.0 && self.noise > 0.0) {
            return Err(Error::Config("power budget and noise must be positive".into()));
        }
        Ok(())
    }

    fn loading(&self) -> f64 {
        match self.regularizer {
            Regularizer::NoiseOverPower => self.noise / self.p_max,
            Regularizer::Noise => self.noise,
        }
    }
}

/// Unit-norm RZF directions `(Σ h h^H + σ²/P · I)^{-1} h_k`, one per UE.
pub fn rzf_unicast<T: Real>(ch: &ChannelSet<T>, p_max: T, noise: T) -> Vec<CVec<T>> {
    let n = ch.dim();
    let mut gram = CMat::<T>::identity(n, n) * creal(noise / p_max);
    for h in &ch.h {
        gram += h * h.adjoint();
    }
    let chol = Cholesky::new(gram).expect("regularized Gram matrix is positive definite");
    ch.h.iter()
        .map(|h| {
            let w = chol.solve(h);
            let nrm = w.norm();
            w.unscale(nrm)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct UnicastSolution<T: Real> {
    /// Unit-norm precoder per UE.
    pub directions: Vec<CVec<T>>,
    /// `ρ*_k`, with the most loaded AP at its budget.
    pub rho: Vec<T>,
    /// Achieved min SINR.
    pub t: T,
    pub sinr: Vec<T>,
    pub bisect_iters: usize,
}

/// Max-min SINR powers for one unicast stream per UE under per-AP budgets.
pub fn unicast_maxmin_power<T: Real>(
    ch: &ChannelSet<T>,
    directions: &[CVec<T>],
    p_max: T,
    eps: T,
    settings: &SolverSettings,
) -> Result<UnicastSolution<T>> {
    let k = ch.num_ues();
    let serving: Vec<usize> = (0..k).collect();
    let prob = PowerProblem::from_directions(ch, directions, &serving, &vec![T::one(); k], &vec![p_max; ch.num_aps])?;
    let alloc = maxmin_power(&prob, eps, settings)?;
    Ok(UnicastSolution {
        directions: directions.to_vec(),
        sinr: prob.sinr(&alloc.p),
        rho: alloc.p,
        t: alloc.t,
        bisect_iters: alloc.trace.len(),
    })
}

/// One phase-alignment update.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStep<T: Real> {
    pub group: usize,
    pub k_min: usize,
    pub theta: T,
    /// `R_g[k_min, k_min]` before the update.
    pub ue_min: Cplx<T>,
    /// `DS_{k_min} − R_g[k_min, k_min]` before the update.
    pub rest: Cplx<T>,
    /// Weights after the update.
    pub rho: CVec<T>,
}

/// Per-group state of the phase-alignment procedure.
#[derive(Debug, Clone)]
pub struct GroupWorkspace<T: Real> {
    pub group: usize,
    r_int: Cholesky<Cplx<T>, nalgebra::Dyn>,
    /// `R_int^{-1} H_g`.
    pub h_bar: CMat<T>,
    /// Columns of `h_bar` normalized.
    pub h_tilde: CMat<T>,
    pub rho: CVec<T>,
    /// `H̄^H (P ∘ H̃)`, i.e. `R[k, j] = ρ_j h̄_k^H h̃_j`.
    pub r: CMat<T>,
}

impl<T: Real> GroupWorkspace<T> {
    pub fn new(ch: &ChannelSet<T>, group: usize, loading: T, rho: CVec<T>) -> Self {
        let n = ch.dim();
        let members = ch.members(group);
        let mut r_int = CMat::<T>::identity(n, n) * creal(loading);
        for (k, h) in ch.h.iter().enumerate() {
            if ch.group_of_ue[k] != group {
                r_int += h * h.adjoint();
            }
        }
        let r_int = Cholesky::new(r_int).expect("interference matrix is positive definite");
        let h_g = CMat::from_fn(n, members.len(), |i, j| ch.h[members[j]][i]);
        let h_bar = r_int.solve(&h_g);
        let mut h_tilde = h_bar.clone();
        for mut col in h_tilde.column_iter_mut() {
            let nrm = col.norm();
            if nrm > T::zero() {
                col.unscale_mut(nrm);
            }
        }
        let mut ws = GroupWorkspace {
            group,
            r_int,
            h_bar,
            h_tilde,
            rho,
            r: CMat::zeros(0, 0),
        };
        ws.refresh();
        ws
    }

    pub fn refresh(&mut self) {
        let weighted = CMat::from_fn(self.h_tilde.nrows(), self.h_tilde.ncols(), |i, j| {
            self.h_tilde[(i, j)] * self.rho[j]
        });
        self.r = self.h_bar.adjoint() * weighted;
    }

    /// Row sums of `R`, `DS_k = h̄_k^H d`.
    pub fn desired_signal(&self) -> CVec<T> {
        CVec::from_fn(self.r.nrows(), |k, _| self.r.row(k).iter().fold(Cplx::new(T::zero(), T::zero()), |a, &b| a + b))
    }

    /// Weakest UE by `|DS_k|`, lowest index on ties.
    pub fn weakest(&self) -> usize {
        let ds = self.desired_signal();
        let mut best = 0;
        for k in 1..ds.len() {
            if ds[k].norm_sqr() < ds[best].norm_sqr() {
                best = k;
            }
        }
        best
    }

    /// Rotates and scales the weakest UE's weight so its own term is in phase
    /// with the rest of its desired-signal sum.
    pub fn step(&mut self, emphasis: T) -> PhaseStep<T> {
        let k = self.weakest();
        let ds = self.desired_signal()[k];
        let ue_min = self.r[(k, k)];
        let rest = ds - ue_min;
        let theta = arg(rest) - arg(ue_min);
        self.rho[k] *= polar(emphasis, theta);
        self.refresh();
        PhaseStep {
            group: self.group,
            k_min: k,
            theta,
            ue_min,
            rest,
            rho: self.rho.clone(),
        }
    }

    /// `d = Σ_k ρ_k h̃_k`.
    pub fn direction(&self) -> CVec<T> {
        &self.h_tilde * &self.rho
    }

    /// Unit-norm `R_int^{-1} d`.
    pub fn precoder(&self) -> CVec<T> {
        let w = self.r_int.solve(&self.direction());
        let n = w.norm();
        w.unscale(n)
    }
}

#[derive(Debug, Clone)]
pub struct HeuristicResult<T: Real> {
    /// Group precoders scaled so the most loaded AP is at its budget.
    pub precoders: Vec<CVec<T>>,
    pub metrics: TrialMetrics,
    pub steps: Vec<PhaseStep<T>>,
    pub elapsed: Duration,
}

/// Phase alignment starting from a unicast solution.
pub fn phase_align<T: Real>(
    ch: &ChannelSet<T>,
    params: &HeuristicParams,
    unicast: &UnicastSolution<T>,
) -> Result<HeuristicResult<T>> {
    params.validate()?;
    let start = Instant::now();
    let s = params.iterations.unwrap_or(ch.num_ues());
    let emphasis = T::lit(params.emphasis);
    let loading = T::lit(params.loading());
    let mut steps = Vec::new();
    let mut precoders = Vec::with_capacity(ch.num_groups);
    for g in 0..ch.num_groups {
        let members = ch.members(g);
        let rho = CVec::from_iterator(members.len(), members.iter().map(|&k| creal(unicast.rho[k].sqrt())));
        let mut ws = GroupWorkspace::new(ch, g, loading, rho);
        for _ in 0..s {
            steps.push(ws.step(emphasis));
        }
        precoders.push(ws.precoder());
    }
    scale_to_budget(ch, &mut precoders, &vec![T::lit(params.p_max); ch.num_aps]);
    let mut metrics = TrialMetrics::evaluate(ch, &precoders);
    let elapsed = start.elapsed();
    metrics.runtime_ms = elapsed.as_secs_f64() * 1e3;
    Ok(HeuristicResult {
        precoders,
        metrics,
        steps,
        elapsed,
    })
}

/// RZF unicast, unicast max-min powers, then phase alignment. The reported
/// runtime covers all three stages.
pub fn heuristic<T: Real>(ch: &ChannelSet<T>, params: &HeuristicParams) -> Result<(HeuristicResult<T>, UnicastSolution<T>)> {
    params.validate()?;
    let start = Instant::now();
    let p_max = T::lit(params.p_max);
    let dirs = rzf_unicast(ch, p_max, T::lit(params.noise));
    let uni = unicast_maxmin_power(ch, &dirs, p_max, T::lit(params.unicast_eps), &params.solver)?;
    let mut out = phase_align(ch, params, &uni)?;
    out.elapsed = start.elapsed();
    out.metrics.runtime_ms = out.elapsed.as_secs_f64() * 1e3;
    Ok((out, uni))
}

/// Metrics of the unicast baseline (one stream per UE).
pub fn unicast_metrics<T: Real>(ch: &ChannelSet<T>, uni: &UnicastSolution<T>) -> TrialMetrics {
    let streams: Vec<CVec<T>> = uni
        .directions
        .iter()
        .zip(&uni.rho)
        .map(|(d, &p)| d * creal(p.sqrt()))
        .collect();
    let powers = crate::metrics::ap_powers(ch, &streams);
    TrialMetrics::from_sinr(
        uni.sinr.iter().map(|s| s.as_f64()).collect(),
        &ch.group_of_ue,
        ch.num_groups,
        powers.into_iter().map(|p| p.as_f64()).collect(),
    )
}
