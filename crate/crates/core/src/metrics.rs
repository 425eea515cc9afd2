//! SINR, spectral efficiency, per-AP power accounting and empirical CDFs.

use crate::channel::ChannelSet;
use crate::convex::HermitianMatrix;
use crate::error::{Error, Result};
use crate::scalar::{abs2, CVec, Real};

/// `log2(1 + sinr)`.
pub fn spectral_efficiency<T: Real>(sinr: T) -> T {
    (T::one() + sinr).log2()
}

/// Per-UE SINR for vector precoders `w[g]`:
/// `|h_k^H w_g|² / (Σ_{j≠g} |h_k^H w_j|² + σ²_k)`.
pub fn sinr<T: Real>(ch: &ChannelSet<T>, w: &[CVec<T>]) -> Vec<T> {
    (0..ch.num_ues())
        .map(|k| {
            let g = ch.group_of_ue[k];
            let h = &ch.h[k];
            let mut signal = T::zero();
            let mut interference = T::zero();
            for (j, wj) in w.iter().enumerate() {
                let p = abs2(h.dotc(wj));
                if j == g {
                    signal = p;
                } else {
                    interference += p;
                }
            }
            signal / (interference + ch.noise[k])
        })
        .collect()
}

/// Per-UE SINR for covariance precoders using `tr(h h^H W) = h^H W h`.
pub fn sinr_trace<T: Real>(ch: &ChannelSet<T>, w: &[HermitianMatrix<T>]) -> Vec<T> {
    (0..ch.num_ues())
        .map(|k| {
            let g = ch.group_of_ue[k];
            let h = &ch.h[k];
            let mut signal = T::zero();
            let mut interference = T::zero();
            for (j, wj) in w.iter().enumerate() {
                let p = wj.quad_form(h);
                if j == g {
                    signal = p;
                } else {
                    interference += p;
                }
            }
            signal / (interference + ch.noise[k])
        })
        .collect()
}

/// `min_k SINR_k / η_{g(k)}`.
pub fn min_weighted_sinr<T: Real>(sinr: &[T], group_of_ue: &[usize], eta: &[T]) -> T {
    sinr.iter()
        .zip(group_of_ue)
        .map(|(&s, &g)| s / eta[g])
        .fold(T::max_value().unwrap_or_else(T::one), |a, b| if b < a { b } else { a })
}

/// Transmit power of every AP, `Σ_g ‖w_{g,l}‖²`.
pub fn ap_powers<T: Real>(ch: &ChannelSet<T>, w: &[CVec<T>]) -> Vec<T> {
    (0..ch.num_aps)
        .map(|l| {
            let r = ch.ap_range(l);
            w.iter()
                .fold(T::zero(), |acc, wg| acc + wg.rows(r.start, r.len()).norm_squared())
        })
        .collect()
}

/// `tr(D_l Σ_g W_g)` for every AP.
pub fn ap_powers_trace<T: Real>(ch: &ChannelSet<T>, w: &[HermitianMatrix<T>]) -> Vec<T> {
    (0..ch.num_aps)
        .map(|l| {
            ch.ap_range(l).fold(T::zero(), |acc, i| {
                acc + w.iter().fold(T::zero(), |a, wg| a + wg.as_matrix()[(i, i)].re)
            })
        })
        .collect()
}

/// Evaluation of one precoder set on one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub sinr: Vec<f64>,
    pub se: Vec<f64>,
    pub group_min_se: Vec<f64>,
    pub min_se: f64,
    pub sum_se: f64,
    pub ap_power: Vec<f64>,
    pub runtime_ms: f64,
    /// Largest numerical rank across groups after each elimination step.
    pub rank_history: Vec<usize>,
}

impl TrialMetrics {
    pub fn from_sinr(sinr: Vec<f64>, group_of_ue: &[usize], num_groups: usize, ap_power: Vec<f64>) -> Self {
        let se: Vec<f64> = sinr.iter().map(|&s| spectral_efficiency(s)).collect();
        let mut group_min_se = vec![f64::INFINITY; num_groups];
        for (&s, &g) in se.iter().zip(group_of_ue) {
            group_min_se[g] = group_min_se[g].min(s);
        }
        let min_se = se.iter().copied().fold(f64::INFINITY, f64::min);
        let sum_se = se.iter().sum();
        TrialMetrics {
            sinr,
            se,
            group_min_se,
            min_se,
            sum_se,
            ap_power,
            runtime_ms: 0.0,
            rank_history: Vec::new(),
        }
    }

    pub fn evaluate<T: Real>(ch: &ChannelSet<T>, w: &[CVec<T>]) -> Self {
        let to64 = |v: Vec<T>| v.into_iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        Self::from_sinr(to64(sinr(ch, w)), &ch.group_of_ue, ch.num_groups, to64(ap_powers(ch, w)))
    }

    pub fn evaluate_relaxed<T: Real>(ch: &ChannelSet<T>, w: &[HermitianMatrix<T>]) -> Self {
        let to64 = |v: Vec<T>| v.into_iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        Self::from_sinr(
            to64(sinr_trace(ch, w)),
            &ch.group_of_ue,
            ch.num_groups,
            to64(ap_powers_trace(ch, w)),
        )
    }
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Domain("empty sample set".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("NaN in sample set".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(v)
}

/// Empirical CDF as `(value, P[X ≤ value])` points, ascending.
pub fn cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    Ok(v.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect())
}

/// Percentile `q ∈ [0, 100]` by linear interpolation between order
/// statistics at rank `q/100 · (n − 1)`.
pub fn percentile(samples: &[f64], q: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::Domain(format!("percentile {q} outside [0, 100]")));
    }
    let v = sorted(samples)?;
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

/// The level exceeded with 90% probability: the 10th percentile.
pub fn ninety_percent_likely(samples: &[f64]) -> Result<f64> {
    percentile(samples, 10.0)
}

pub fn mean(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("empty sample set".into()));
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cplx, Cplx};
    use proptest::prelude::*;

    fn e(n: usize, i: usize) -> CVec<f64> {
        let mut v = CVec::zeros(n);
        v[i] = cplx(1.0, 0.0);
        v
    }

    #[test]
    fn unit_link() {
        let ch = ChannelSet::from_vectors(1, 1, vec![0], vec![e(1, 0)], vec![1.0]).unwrap();
        let s = sinr(&ch, &[e(1, 0)]);
        assert_eq!(s, vec![1.0]);
        assert_eq!(spectral_efficiency(s[0]), 1.0);
    }

    #[test]
    fn aligned_interferer() {
        let g = 3.0f64;
        let h = e(2, 0) * cplx(g.sqrt(), 0.0);
        let ch = ChannelSet::from_vectors(1, 2, vec![0, 1], vec![h.clone(), e(2, 1)], vec![1.0, 1.0]).unwrap();
        let w = vec![e(2, 0), e(2, 0)];
        let s = sinr(&ch, &w);
        assert!((s[0] - 1.0 / (1.0 + 1.0 / g)).abs() < 1e-12);
        let ww: Vec<_> = w.iter().map(HermitianMatrix::rank_one).collect();
        let t = sinr_trace(&ch, &ww);
        for (a, b) in s.iter().zip(&t) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn orthogonal_precoder_gives_zero() {
        let ch = ChannelSet::from_vectors(1, 2, vec![0], vec![e(2, 0)], vec![1.0]).unwrap();
        assert_eq!(sinr(&ch, &[e(2, 1)]), vec![0.0]);
    }

    #[test]
    fn weighted_minimum() {
        assert_eq!(min_weighted_sinr(&[1.0, 0.5], &[0, 1], &[1.0, 0.5]), 1.0);
        assert_eq!(min_weighted_sinr(&[0.3, 0.7], &[0, 0], &[1.0]), 0.3);
        assert_eq!(min_weighted_sinr(&[0.4], &[0], &[0.5]), 0.8);
    }

    #[test]
    fn percentile_examples() {
        let s = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&s, 50.0).unwrap(), 2.5);
        assert_eq!(percentile(&s, 0.0).unwrap(), 1.0);
        assert_eq!(percentile(&s, 100.0).unwrap(), 4.0);
        assert!(matches!(percentile(&[], 50.0), Err(Error::Domain(_))));
        assert!(matches!(cdf(&[]), Err(Error::Domain(_))));
        assert!((ninety_percent_likely(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_cdf_is_a_step() {
        let c = cdf(&[2.0, 2.0, 2.0]).unwrap();
        assert!(c.iter().all(|&(x, _)| x == 2.0));
        assert_eq!(c.last().unwrap().1, 1.0);
        assert_eq!(cdf(&[5.0]).unwrap(), vec![(5.0, 1.0)]);
    }

    #[test]
    fn trial_metrics_summary() {
        let ch = ChannelSet::from_vectors(2, 1, vec![0, 0], vec![e(2, 0), e(2, 1)], vec![1.0, 1.0]).unwrap();
        let w = CVec::from_vec(vec![cplx(1.0, 0.0), cplx(0.0, 3f64.sqrt())]);
        let m = TrialMetrics::evaluate(&ch, &[w]);
        assert!((m.se[0] - 1.0).abs() < 1e-12);
        assert!((m.se[1] - 2.0).abs() < 1e-12);
        assert_eq!(m.min_se, m.group_min_se[0]);
        assert!((m.sum_se - 3.0).abs() < 1e-12);
        assert!((m.ap_power[0] - 1.0).abs() < 1e-12 && (m.ap_power[1] - 3.0).abs() < 1e-12);
    }

    fn cvec(len: usize) -> impl Strategy<Value = CVec<f64>> {
        proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
            .prop_map(|v| CVec::from_iterator(v.len(), v.into_iter().map(|(a, b)| Cplx::new(a, b))))
    }

    proptest! {
        #[test]
        fn vector_and_trace_forms_agree(
            hs in proptest::collection::vec(cvec(4), 3),
            ws in proptest::collection::vec(cvec(4), 2),
        ) {
            let ch = ChannelSet::from_vectors(2, 2, vec![0, 1, 1], hs, vec![0.1, 0.2, 0.3]).unwrap();
            let ww: Vec<_> = ws.iter().map(HermitianMatrix::rank_one).collect();
            for (a, b) in sinr(&ch, &ws).iter().zip(sinr_trace(&ch, &ww)) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
            }
            for (a, b) in ap_powers(&ch, &ws).iter().zip(ap_powers_trace(&ch, &ww)) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
            }
            let m = TrialMetrics::evaluate(&ch, &ws);
            for (&s, &g) in m.se.iter().zip(&ch.group_of_ue) {
                prop_assert!(m.min_se <= s && m.group_min_se[g] <= s);
            }
        }

        #[test]
        fn cdf_is_monotone(v in proptest::collection::vec(-10.0..10.0f64, 1..40), q in 0.0..100.0f64) {
            let c = cdf(&v).unwrap();
            for pair in c.windows(2) {
                prop_assert!(pair[0].0 <= pair[1].0 && pair[0].1 < pair[1].1);
            }
            let p = percentile(&v, q).unwrap();
            prop_assert!(p >= c[0].0 && p <= c[c.len() - 1].0);
        }
    }
}
