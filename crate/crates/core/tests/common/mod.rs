//! Oracles and instance generators shared by the integration tests.
#![allow(dead_code)]

use cfmc::channel::ChannelSet;
use cfmc::convex::{ConicProblem, LinearForm, Sense};
use cfmc::scalar::{abs2, cplx, CMat, CVec, Complex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> CVec<f64> {
    CVec::from_fn(n, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        cplx(a, b) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// i.i.d. CN(0, 1) channels with the given group sizes.
pub fn random_small(seed: u64, l: usize, n: usize, groups: &[usize], noise: f64) -> ChannelSet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut group_of_ue = Vec::new();
    for (g, &k) in groups.iter().enumerate() {
        group_of_ue.extend(std::iter::repeat(g).take(k));
    }
    let h = group_of_ue.iter().map(|_| gaussian(l * n, &mut rng)).collect();
    let noise = vec![noise; group_of_ue.len()];
    ChannelSet::from_vectors(l, n, group_of_ue, h, noise).unwrap()
}

/// Exhaustive max-min SINR over `w = (r1, r2·e^{jφ})` under per-element
/// power limits `|w_i|² ≤ P`, refined twice around the best point.
pub fn grid_two_antenna(h: &[CVec<f64>], noise: f64, p: f64, per_element: bool) -> f64 {
    let eval = |r1: f64, r2: f64, phi: f64| {
        let w = CVec::from_vec(vec![cplx(r1, 0.0), cplx(r2 * phi.cos(), r2 * phi.sin())]);
        h.iter().map(|hk| abs2(hk.dotc(&w)) / noise).fold(f64::INFINITY, f64::min)
    };
    let rmax = p.sqrt();
    let feasible = |r1: f64, r2: f64| if per_element { true } else { r1 * r1 + r2 * r2 <= p * (1.0 + 1e-12) };
    let mut best = (0.0, 0.0, 0.0, 0.0);
    let mut span = (rmax, rmax, 2.0 * std::f64::consts::PI);
    let mut center = (rmax / 2.0, rmax / 2.0, std::f64::consts::PI);
    let steps = 200;
    for _round in 0..3 {
        for a in 0..=steps {
            let r1 = (center.0 - span.0 / 2.0 + span.0 * a as f64 / steps as f64).clamp(0.0, rmax);
            for b in 0..=steps {
                let r2 = (center.1 - span.1 / 2.0 + span.1 * b as f64 / steps as f64).clamp(0.0, rmax);
                if !feasible(r1, r2) {
                    continue;
                }
                for c in 0..=steps {
                    let phi = center.2 - span.2 / 2.0 + span.2 * c as f64 / steps as f64;
                    let v = eval(r1, r2, phi);
                    if v > best.0 {
                        best = (v, r1, r2, phi);
                    }
                }
            }
        }
        center = (best.1, best.2, best.3);
        span = (span.0 / 20.0, span.1 / 20.0, span.2 / 20.0);
    }
    best.0
}


pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> CMat<f64> {
    let g = CMat::from_fn(n, n, |_, _| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    &g * g.adjoint() + CMat::identity(n, n) * Complex::new(0.05, 0.0)
}

pub struct Tiny {
    pub c: CMat<f64>,
    pub a: Vec<CMat<f64>>,
    pub b: Vec<f64>,
}

pub fn tiny_problem(seed: u64) -> Tiny {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = random_psd(&mut rng, 2);
    let a: Vec<_> = (0..3).map(|_| random_psd(&mut rng, 2)).collect();
    let b: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..2.0)).collect();
    Tiny { c, a, b }
}

pub fn as_conic(t: &Tiny) -> ConicProblem<f64> {
    let mut p = ConicProblem::new(vec![2], 0);
    p.minimize(LinearForm::new().block(0, t.c.clone()));
    for (a, b) in t.a.iter().zip(&t.b) {
        p.add_constraint(LinearForm::new().block(0, a.clone()), Sense::Ge, *b);
    }
    p
}

pub fn pair(a: &CMat<f64>, x: &CMat<f64>) -> f64 {
    (a * x).trace().re
}

/// Exhaustive search over rank-one points `X = t v v^H`.
///
/// With three constraints on a 2×2 complex block some optimum has rank one,
/// and for a unit direction `v` the cheapest feasible scale is
/// `t = max_i b_i / v^H A_i v`. This leaves a 2-D search over `v`.
pub fn grid_oracle(t: &Tiny) -> f64 {
    let quad = |m: &CMat<f64>, v: &[Complex<f64>; 2]| {
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += (v[i].conj() * m[(i, j)] * v[j]).re;
            }
        }
        acc
    };
    let eval = |theta: f64, phi: f64| {
        let v = [Complex::new(theta.cos(), 0.0), Complex::from_polar(theta.sin(), phi)];
        let scale = t.a.iter().zip(&t.b).map(|(a, b)| b / quad(a, &v)).fold(0.0, f64::max);
        scale * quad(&t.c, &v)
    };
    let pi = std::f64::consts::PI;
    let n = 400;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let (mut c_theta, mut c_phi) = (pi / 4.0, pi);
    let (mut h_theta, mut h_phi) = (pi / 4.0, pi);
    for _ in 0..12 {
        for i in 0..=n {
            let theta = (c_theta - h_theta + 2.0 * h_theta * i as f64 / n as f64).clamp(0.0, pi / 2.0);
            for j in 0..=n {
                let phi = c_phi - h_phi + 2.0 * h_phi * j as f64 / n as f64;
                let f = eval(theta, phi);
                if f < best.0 {
                    best = (f, theta, phi);
                }
            }
        }
        c_theta = best.1;
        c_phi = best.2;
        h_theta *= 0.1;
        h_phi *= 0.1;
    }
    best.0
}
