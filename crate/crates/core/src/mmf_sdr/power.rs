//! Max-min weighted SINR power allocation over fixed beam directions.
//!
//! At a fixed target `t` every SINR constraint is linear in the stream
//! powers, so feasibility is a small LP; the target is found by bisection.

use crate::channel::ChannelSet;
use crate::convex::{solve_conic, ConicProblem, LinearForm, Sense, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::scalar::{abs2, CVec, RMat, RVec, Real};

/// Power allocation data for `J` streams serving `K` UEs.
#[derive(Debug, Clone)]
pub struct PowerProblem<T: Real> {
    /// `gain[k][j] = |h_k^H ŵ_j|²` with unit-norm directions `ŵ_j`.
    pub gain: Vec<Vec<T>>,
    /// Stream carrying UE `k`'s data.
    pub serving: Vec<usize>,
    pub noise: Vec<T>,
    /// SINR weight per UE.
    pub eta: Vec<T>,
    /// `load[j][l] = ‖ŵ_{j,l}‖²`.
    pub load: Vec<Vec<T>>,
    pub p_max: Vec<T>,
}

impl<T: Real> PowerProblem<T> {
    /// Normalizes `directions` and tabulates gains and AP loads.
    pub fn from_directions(
        ch: &ChannelSet<T>,
        directions: &[CVec<T>],
        serving: &[usize],
        eta: &[T],
        p_max: &[T],
    ) -> Result<Self> {
        if p_max.len() != ch.num_aps {
            return Err(Error::Domain(format!("expected {} AP budgets, got {}", ch.num_aps, p_max.len())));
        }
        let mut unit = Vec::with_capacity(directions.len());
        for (j, d) in directions.iter().enumerate() {
            let n = d.norm();
            if !(n > T::zero()) || !n.is_finite() {
                return Err(Error::Domain(format!("beam direction {j} is zero or not finite")));
            }
            unit.push(d.unscale(n));
        }
        let gain = ch
            .h
            .iter()
            .map(|h| unit.iter().map(|w| abs2(h.dotc(w))).collect())
            .collect();
        let load = unit
            .iter()
            .map(|w| {
                (0..ch.num_aps)
                    .map(|l| {
                        let r = ch.ap_range(l);
                        w.rows(r.start, r.len()).norm_squared()
                    })
                    .collect()
            })
            .collect();
        Ok(PowerProblem {
            gain,
            serving: serving.to_vec(),
            noise: ch.noise.clone(),
            eta: eta.to_vec(),
            load,
            p_max: p_max.to_vec(),
        })
    }

    pub fn num_streams(&self) -> usize {
        self.load.len()
    }

    /// Largest power stream `j` can carry alone, `min_l P_l / load[j][l]`.
    fn solo_power(&self, j: usize) -> T {
        self.load[j]
            .iter()
            .zip(&self.p_max)
            .filter(|(c, _)| **c > T::zero())
            .map(|(c, p)| *p / *c)
            .fold(T::max_value().unwrap_or_else(T::one), |a, b| if b < a { b } else { a })
    }

    /// Interference-free bound on the max-min weighted SINR.
    pub fn target_upper_bound(&self) -> T {
        (0..self.gain.len())
            .map(|k| {
                let s = self.serving[k];
                self.solo_power(s) * self.gain[k][s] / (self.noise[k] * self.eta[k])
            })
            .fold(T::max_value().unwrap_or_else(T::one), |a, b| if b < a { b } else { a })
    }

    /// Normalized peak AP load `max_l Σ_j p_j load[j][l] / P_l`.
    pub fn peak_load(&self, p: &[T]) -> T {
        (0..self.p_max.len())
            .map(|l| {
                let used = p.iter().zip(&self.load).fold(T::zero(), |a, (&pj, c)| a + pj * c[l]);
                used / self.p_max[l]
            })
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Per-UE SINR under powers `p`.
    pub fn sinr(&self, p: &[T]) -> Vec<T> {
        (0..self.gain.len())
            .map(|k| {
                let s = self.serving[k];
                let mut interference = self.noise[k];
                for (j, &pj) in p.iter().enumerate() {
                    if j != s {
                        interference += pj * self.gain[k][j];
                    }
                }
                p[s] * self.gain[k][s] / interference
            })
            .collect()
    }

    pub fn min_weighted_sinr(&self, p: &[T]) -> T {
        self.sinr(p)
            .into_iter()
            .zip(&self.eta)
            .map(|(s, &e)| s / e)
            .fold(T::max_value().unwrap_or_else(T::one), |a, b| if b < a { b } else { a })
    }

    /// Minimal normalized peak load meeting target `t`, as an LP:
    /// `min x` s.t. SINR rows and `Σ_j p_j load[j][l] ≤ P_l x`.
    fn lp(&self, t: T) -> ConicProblem<T> {
        let j_count = self.num_streams();
        let x = j_count;
        let mut prob = ConicProblem::new(Vec::new(), j_count + 1);
        prob.minimize(LinearForm::new().scalar(x, T::one()));
        for k in 0..self.gain.len() {
            let s = self.serving[k];
            let et = self.eta[k] * t;
            let mut f = LinearForm::new();
            for j in 0..j_count {
                let g = self.gain[k][j] / self.noise[k];
                if j == s {
                    f.add_scalar(j, g);
                } else if g > T::zero() {
                    f.add_scalar(j, -et * g);
                }
            }
            prob.add_constraint(f, Sense::Ge, et);
        }
        for l in 0..self.p_max.len() {
            let mut f = LinearForm::new().scalar(x, -self.p_max[l]);
            for j in 0..j_count {
                if self.load[j][l] > T::zero() {
                    f.add_scalar(j, self.load[j][l]);
                }
            }
            prob.add_constraint(f, Sense::Le, T::zero());
        }
        prob
    }

    /// True when stream `k` serves exactly UE `k`.
    pub fn is_unicast(&self) -> bool {
        self.num_streams() == self.gain.len() && self.serving.iter().enumerate().all(|(k, &s)| k == s)
    }

    /// Unicast feasibility by a direct solve. The target system
    /// `a_kk ρ_k − η_k t Σ_{j≠k} a_kj ρ_j = η_k t σ²_k` has a Z-matrix, so a
    /// strictly positive solution certifies it is a nonsingular M-matrix and
    /// that solution is the componentwise minimal feasible power vector.
    pub fn feasible_direct(&self, t: T) -> Option<Vec<T>> {
        let k = self.gain.len();
        let a = RMat::from_fn(k, k, |i, j| {
            let g = self.gain[i][j] / self.noise[i];
            if i == j {
                g
            } else {
                -self.eta[i] * t * g
            }
        });
        let b = RVec::from_fn(k, |i, _| self.eta[i] * t);
        let p = a.lu().solve(&b)?;
        if p.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return None;
        }
        let p: Vec<T> = p.iter().copied().collect();
        (self.peak_load(&p) <= T::one()).then_some(p)
    }

    /// Powers meeting target `t` within the budgets, if any exist.
    pub fn feasible(&self, t: T, settings: &SolverSettings) -> Result<Option<Vec<T>>> {
        if t <= T::zero() {
            return Ok(Some(vec![T::zero(); self.num_streams()]));
        }
        if self.is_unicast() {
            return Ok(self.feasible_direct(t));
        }
        self.feasible_lp(t, settings)
    }

    /// LP feasibility; works for any stream-to-UE map.
    pub fn feasible_lp(&self, t: T, settings: &SolverSettings) -> Result<Option<Vec<T>>> {
        let sol = solve_conic(&self.lp(t), settings)?;
        match sol.status {
            SolveStatus::Optimal => {
                let p: Vec<T> = sol.scalars[..self.num_streams()]
                    .iter()
                    .map(|&v| if v > T::zero() { v } else { T::zero() })
                    .collect();
                let x = self.peak_load(&p);
                Ok((x <= T::one() + T::lit(1e-9)).then_some(p))
            }
            SolveStatus::MaxIter => {
                // Happens at targets on the boundary of the feasible set,
                // where the LP has no interior; counted as infeasible.
                log::debug!("power LP hit the iteration cap at target {}", t.as_f64());
                Ok(None)
            }
            _ => Ok(None),
        }
    }
}

/// Outcome of a max-min power allocation.
#[derive(Debug, Clone)]
pub struct PowerAllocation<T: Real> {
    /// Stream powers scaled so the most loaded AP meets its budget.
    pub p: Vec<T>,
    /// Achieved min weighted SINR at `p`.
    pub t: T,
    /// `(lo, hi)` after every bisection step.
    pub trace: Vec<(T, T)>,
}

/// Scales `p` so the most loaded AP is exactly at its budget; a zero
/// allocation is replaced by equal stream powers first.
pub fn tighten<T: Real>(prob: &PowerProblem<T>, p: &mut [T]) {
    if prob.peak_load(p) <= T::zero() {
        p.iter_mut().for_each(|v| *v = T::one());
    }
    let x = prob.peak_load(p);
    if x > T::zero() {
        p.iter_mut().for_each(|v| *v /= x);
    }
}

/// Bisection on the target starting from `[lo, t_up]`. With `require_lo` the
/// search is abandoned (returns `None`) when `lo` itself is not attainable.
pub fn maxmin_power_from<T: Real>(
    prob: &PowerProblem<T>,
    lo: T,
    eps: T,
    require_lo: bool,
    settings: &SolverSettings,
) -> Result<Option<PowerAllocation<T>>> {
    let mut hi = prob.target_upper_bound();
    let mut lo = if lo < hi { lo } else { hi };
    let mut best = if require_lo {
        match prob.feasible(lo, settings)? {
            Some(p) => Some(p),
            None => return Ok(None),
        }
    } else {
        None
    };
    let mut trace = Vec::new();
    while hi - lo > eps {
        let mid = (lo + hi) / T::lit(2.0);
        match prob.feasible(mid, settings)? {
            Some(p) => {
                lo = mid;
                best = Some(p);
            }
            None => hi = mid,
        }
        trace.push((lo, hi));
    }
    let mut p = match best {
        Some(p) => p,
        None => prob
            .feasible(lo, settings)?
            .unwrap_or_else(|| vec![T::zero(); prob.num_streams()]),
    };
    tighten(prob, &mut p);
    let t = prob.min_weighted_sinr(&p);
    Ok(Some(PowerAllocation { p, t, trace }))
}

/// Max-min weighted SINR powers within `eps` of the supremum.
pub fn maxmin_power<T: Real>(prob: &PowerProblem<T>, eps: T, settings: &SolverSettings) -> Result<PowerAllocation<T>> {
    Ok(maxmin_power_from(prob, T::zero(), eps, false, settings)?.expect("lower end zero is always feasible"))
}
