//! Relaxed QoS problem and the bisection linking it to max-min fairness.

use crate::channel::ChannelSet;
use crate::convex::{solve_conic, ConicProblem, HermitianMatrix, LinearForm, Sense, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::scalar::{creal, CMat, CVec, Real};

/// Quadratic penalty `weight · u^H W_g u` added to every AP power row.
#[derive(Debug, Clone, PartialEq)]
pub struct Penalty<T: Real> {
    pub group: usize,
    pub u: CVec<T>,
    pub weight: T,
}

/// Minimize the normalized peak AP power subject to weighted SINR targets.
#[derive(Debug, Clone)]
pub struct QoSInstance<'a, T: Real> {
    pub channels: &'a ChannelSet<T>,
    pub eta: Vec<T>,
    pub gamma: T,
    pub p_max: Vec<T>,
    pub penalties: Vec<Penalty<T>>,
}

impl<T: Real> QoSInstance<'_, T> {
    pub fn validate(&self) -> Result<()> {
        let ch = self.channels;
        let dom = |m: String| Err(Error::Domain(m));
        if !(self.gamma >= T::zero()) {
            return dom(format!("negative SINR target {}", self.gamma.as_f64()));
        }
        if self.eta.len() != ch.num_groups || self.eta.iter().any(|&e| !(e > T::zero() && e <= T::one())) {
            return dom("one weight in (0, 1] per group required".into());
        }
        if self.p_max.len() != ch.num_aps || self.p_max.iter().any(|&p| !(p > T::zero())) {
            return dom("one positive budget per AP required".into());
        }
        for pen in &self.penalties {
            if pen.group >= ch.num_groups || pen.u.len() != ch.dim() {
                return dom("penalty refers to an unknown group or has the wrong length".into());
            }
            if !(pen.weight >= T::zero()) {
                return dom("penalty weight must be nonnegative".into());
            }
            if (pen.u.norm() - T::one()).abs() > T::lit(1e-6) {
                return dom("penalty direction must be unit norm".into());
            }
        }
        Ok(())
    }
}

/// Conic form: blocks `W_1..W_G ⪰ 0`, one scalar `x ≥ 0`, `min x`, SINR rows
/// divided by `σ²_k` and one power row per AP.
pub fn build_qos_sdp<T: Real>(inst: &QoSInstance<'_, T>) -> Result<ConicProblem<T>> {
    inst.validate()?;
    let ch = inst.channels;
    let g_count = ch.num_groups;
    let n = ch.dim();
    let mut prob = ConicProblem::new(vec![n; g_count], 1);
    prob.minimize(LinearForm::new().scalar(0, T::one()));

    for k in 0..ch.num_ues() {
        let g = ch.group_of_ue[k];
        let hk = &ch.h[k] * ch.h[k].adjoint() / creal(ch.noise[k]);
        let target = inst.eta[g] * inst.gamma;
        let mut f = LinearForm::new();
        f.add_block(g, hk.clone());
        if target > T::zero() {
            for j in (0..g_count).filter(|&j| j != g) {
                f.add_block(j, &hk * creal(-target));
            }
        }
        prob.add_constraint(f, Sense::Ge, target);
    }

    let mut extra: Vec<CMat<T>> = vec![CMat::zeros(n, n); g_count];
    for pen in &inst.penalties {
        extra[pen.group] += &pen.u * pen.u.adjoint() * creal(pen.weight);
    }
    for l in 0..ch.num_aps {
        let mut d = CMat::<T>::zeros(n, n);
        for i in ch.ap_range(l) {
            d[(i, i)] = creal(T::one());
        }
        let mut f = LinearForm::new().scalar(0, -inst.p_max[l]);
        for (g, e) in extra.iter().enumerate() {
            f.add_block(g, &d + e);
        }
        prob.add_constraint(f, Sense::Le, T::zero());
    }
    Ok(prob)
}

#[derive(Debug, Clone)]
pub enum QoSOutcome<T: Real> {
    Feasible {
        x: T,
        w: Vec<HermitianMatrix<T>>,
        iterations: usize,
    },
    Infeasible,
}

pub fn solve_qos<T: Real>(inst: &QoSInstance<'_, T>, settings: &SolverSettings) -> Result<QoSOutcome<T>> {
    let prob = build_qos_sdp(inst)?;
    let sol = solve_conic(&prob, settings)?;
    match sol.status {
        SolveStatus::Optimal => Ok(QoSOutcome::Feasible {
            x: if sol.scalars[0] > T::zero() { sol.scalars[0] } else { T::zero() },
            w: sol.blocks,
            iterations: sol.iterations,
        }),
        SolveStatus::Infeasible => Ok(QoSOutcome::Infeasible),
        status => Err(Error::Solver(format!(
            "QoS problem at target {} ended with {status:?} after {} iterations",
            inst.gamma.as_f64(),
            sol.iterations
        ))),
    }
}

/// `min_k P_T ‖h_k‖² / (σ²_k η_g)`: no beamformer can do better.
pub fn gamma_upper_bound<T: Real>(ch: &ChannelSet<T>, eta: &[T], p_max: &[T]) -> T {
    let total = p_max.iter().fold(T::zero(), |a, &b| a + b);
    (0..ch.num_ues())
        .map(|k| total * ch.h[k].norm_squared() / (ch.noise[k] * eta[ch.group_of_ue[k]]))
        .fold(T::max_value().unwrap_or_else(T::one), |a, b| if b < a { b } else { a })
}

#[derive(Debug, Clone)]
pub struct Bisection<T: Real> {
    /// Largest target certified feasible with `x ≤ 1`.
    pub gamma: T,
    /// QoS solution at `gamma`.
    pub x: T,
    pub w: Vec<HermitianMatrix<T>>,
    /// `(lo, hi)` after every step.
    pub trace: Vec<(T, T)>,
    pub iterations: usize,
    /// Midpoints where the solver failed and the target was treated as infeasible.
    pub solver_failures: usize,
}

/// Bisection on the common SINR target over `[lo, hi]`.
pub fn bisect_mmf<T: Real>(
    ch: &ChannelSet<T>,
    eta: &[T],
    p_max: &[T],
    eps: T,
    penalties: &[Penalty<T>],
    interval: (T, T),
    settings: &SolverSettings,
) -> Result<Bisection<T>> {
    if !(eps > T::zero()) {
        return Err(Error::Domain("bisection accuracy must be positive".into()));
    }
    let (mut lo, mut hi) = interval;
    let entry_lo = lo;
    let mut inst = QoSInstance {
        channels: ch,
        eta: eta.to_vec(),
        gamma: lo,
        p_max: p_max.to_vec(),
        penalties: penalties.to_vec(),
    };
    inst.validate()?;

    let accept = |inst: &QoSInstance<'_, T>, failures: &mut usize| -> Result<Option<(T, Vec<HermitianMatrix<T>>)>> {
        match solve_qos(inst, settings) {
            Ok(QoSOutcome::Feasible { x, w, .. }) if x <= T::one() + T::lit(1e-9) => Ok(Some((x, w))),
            Ok(_) => Ok(None),
            Err(Error::Solver(msg)) => {
                log::warn!("{msg}; treating target as infeasible");
                *failures += 1;
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };

    let mut best = None;
    let mut trace = Vec::new();
    let mut failures = 0;
    while hi - lo > eps {
        let mid = (lo + hi) / T::lit(2.0);
        inst.gamma = mid;
        match accept(&inst, &mut failures)? {
            Some(sol) => {
                lo = mid;
                best = Some(sol);
            }
            None => hi = mid,
        }
        trace.push((lo, hi));
    }
    let iterations = trace.len();
    let (x, w) = match best {
        Some(sol) => sol,
        None if entry_lo <= T::zero() => (T::zero(), vec![HermitianMatrix::zeros(ch.dim()); ch.num_groups]),
        None => {
            inst.gamma = entry_lo;
            accept(&inst, &mut failures)?.ok_or_else(|| {
                log::warn!("lower bisection end {} is infeasible", entry_lo.as_f64());
                Error::Bisection(format!("target {} is not attainable", entry_lo.as_f64()))
            })?
        }
    };
    Ok(Bisection {
        gamma: lo,
        x,
        w,
        trace,
        iterations,
        solver_failures: failures,
    })
}
