//! Cell-free network geometry and correlated Rayleigh fading.
//!
//! APs sit at the centers of a square grid tiling a square area with
//! wrap-around (toroidal) distances. Large-scale gains follow the urban
//! microcell model `-30.5 - 36.7·log10(d) + F` dB with log-normal shadowing
//! correlated across UEs seen from the same AP. Small-scale fading is
//! `h ~ CN(0, R)` with Gaussian local-scattering spatial correlation on a
//! half-wavelength uniform linear array.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::convex::HermitianMatrix;
use crate::error::{Error, Result};
use crate::scalar::{cplx, CMat, CVec, Cplx, Real};

/// Large-scale fading constants (dB, meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathlossModel {
    pub intercept_db: f64,
    pub slope_db: f64,
    pub shadow_std_db: f64,
    pub decorrelation_m: f64,
    pub min_distance_m: f64,
}

impl Default for PathlossModel {
    fn default() -> Self {
        PathlossModel {
            intercept_db: -30.5,
            slope_db: 36.7,
            shadow_std_db: 4.0,
            decorrelation_m: 9.0,
            min_distance_m: 1.0,
        }
    }
}

impl PathlossModel {
    pub fn gain_db(&self, d: f64, shadow_db: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::Domain(format!("pathloss distance must be positive, got {d}")));
        }
        Ok(self.intercept_db - self.slope_db * d.log10() + shadow_db)
    }

    /// Shadowing covariance between two UEs at distance `delta` (same AP).
    pub fn shadow_cov(&self, delta: f64) -> f64 {
        self.shadow_std_db.powi(2) * 2f64.powf(-delta / self.decorrelation_m)
    }
}

/// Channel gain in dB at distance `d` meters with shadowing `shadow_db`.
pub fn pathloss_db(d: f64, shadow_db: f64) -> Result<f64> {
    PathlossModel::default().gain_db(d, shadow_db)
}

/// One trial's scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub area_side: f64,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    /// `K_g` per group; the number of groups is the list length.
    pub group_sizes: Vec<usize>,
    /// Per-AP budget in watts.
    pub max_power_per_ap: f64,
    pub noise_power_dbm: f64,
    /// Documentation only.
    pub bandwidth_hz: f64,
    pub pathloss: PathlossModel,
    /// Angular standard deviation of the local scattering model, degrees.
    pub asd_deg: f64,
    /// `η_g`; empty means all ones.
    pub sinr_weights: Vec<f64>,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::preset("small").expect("small preset")
    }
}

impl ScenarioConfig {
    /// `small`, `mid`, `paper9x4` or `paper4x8`.
    pub fn preset(name: &str) -> Result<Self> {
        let base = |l: usize, n: usize, groups: usize, kg: usize, p: f64| ScenarioConfig {
            area_side: 750.0,
            num_aps: l,
            antennas_per_ap: n,
            group_sizes: vec![kg; groups],
            max_power_per_ap: p,
            noise_power_dbm: -94.0,
            bandwidth_hz: 20e6,
            pathloss: PathlossModel::default(),
            asd_deg: 15.0,
            sinr_weights: Vec::new(),
            rng_seed: 1,
        };
        match name {
            "small" => Ok(base(4, 2, 2, 3, 1.0)),
            "mid" => Ok(base(4, 4, 2, 8, 1.0)),
            "paper9x4" => Ok(base(9, 4, 3, 10, 1.0)),
            "paper4x8" => Ok(base(4, 8, 3, 10, 2.0)),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn num_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn num_ues(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    /// σ² in watts.
    pub fn noise_power(&self) -> f64 {
        10f64.powf((self.noise_power_dbm - 30.0) / 10.0)
    }

    pub fn weights(&self) -> Vec<f64> {
        if self.sinr_weights.is_empty() {
            vec![1.0; self.num_groups()]
        } else {
            self.sinr_weights.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.num_aps == 0 || self.antennas_per_ap == 0 {
            return bad("L and N must be at least 1");
        }
        if self.group_sizes.is_empty() || self.group_sizes.iter().any(|&k| k == 0) {
            return bad("every group needs at least one UE");
        }
        if !(self.max_power_per_ap > 0.0) {
            return bad("per-AP power must be positive");
        }
        if !(self.area_side > 0.0) {
            return bad("area side must be positive");
        }
        if !self.noise_power().is_finite() || !(self.noise_power() > 0.0) {
            return bad("noise power must be positive");
        }
        if !self.sinr_weights.is_empty() {
            if self.sinr_weights.len() != self.num_groups() {
                return bad("one SINR weight per group required");
            }
            if self.sinr_weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
                return bad("SINR weights must lie in (0, 1]");
            }
        }
        let side = (self.num_aps as f64).sqrt().round() as usize;
        if side * side != self.num_aps {
            return Err(Error::Config(format!("L = {} is not a perfect square", self.num_aps)));
        }
        Ok(())
    }
}

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGeometry {
    pub area_side: f64,
    pub ap_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
    pub group_of_ue: Vec<usize>,
}

/// APs at grid-cell centers, UEs uniform over the area, groups filled in
/// order of `group_sizes`.
pub fn place_network<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<NetworkGeometry> {
    cfg.validate()?;
    let per_side = (cfg.num_aps as f64).sqrt().round() as usize;
    let spacing = cfg.area_side / per_side as f64;
    let mut ap_positions = Vec::with_capacity(cfg.num_aps);
    for iy in 0..per_side {
        for ix in 0..per_side {
            ap_positions.push([(ix as f64 + 0.5) * spacing, (iy as f64 + 0.5) * spacing]);
        }
    }
    let mut ue_positions = Vec::with_capacity(cfg.num_ues());
    let mut group_of_ue = Vec::with_capacity(cfg.num_ues());
    for (g, &kg) in cfg.group_sizes.iter().enumerate() {
        for _ in 0..kg {
            let x = rng.random::<f64>() * cfg.area_side;
            let y = rng.random::<f64>() * cfg.area_side;
            ue_positions.push([x, y]);
            group_of_ue.push(g);
        }
    }
    Ok(NetworkGeometry {
        area_side: cfg.area_side,
        ap_positions,
        ue_positions,
        group_of_ue,
    })
}

/// Displacement from `a` to the nearest toroidal image of `b`.
pub fn wrap_delta(a: Point, b: Point, side: f64) -> Point {
    let mut best = [b[0] - a[0], b[1] - a[1]];
    let mut best_d = f64::INFINITY;
    for sx in [-1.0, 0.0, 1.0] {
        for sy in [-1.0, 0.0, 1.0] {
            let dx = b[0] + sx * side - a[0];
            let dy = b[1] + sy * side - a[1];
            let d = dx * dx + dy * dy;
            if d < best_d {
                best_d = d;
                best = [dx, dy];
            }
        }
    }
    best
}

pub fn wrap_distance(a: Point, b: Point, side: f64) -> f64 {
    let [dx, dy] = wrap_delta(a, b, side);
    dx.hypot(dy)
}

/// Shadowing covariance among all UEs seen from any one AP; APs are
/// mutually uncorrelated so the same matrix applies to every AP.
#[derive(Debug, Clone)]
pub struct ShadowCovariance {
    pub matrix: DMatrix<f64>,
    /// Lower factor with `L L^T = matrix` (after repair, if any).
    pub factor: DMatrix<f64>,
    /// Set when the matrix was numerically indefinite and eigenvalue-clipped.
    pub repaired: bool,
}

pub fn shadow_covariance(geom: &NetworkGeometry, model: &PathlossModel) -> ShadowCovariance {
    let k = geom.ue_positions.len();
    let matrix = DMatrix::from_fn(k, k, |i, j| {
        model.shadow_cov(wrap_distance(geom.ue_positions[i], geom.ue_positions[j], geom.area_side))
    });
    match Cholesky::new(matrix.clone()) {
        Some(c) => ShadowCovariance {
            factor: c.unpack(),
            matrix,
            repaired: false,
        },
        None => {
            let se = SymmetricEigen::new(matrix.clone());
            let mut vs = se.eigenvectors.clone();
            for (j, &l) in se.eigenvalues.iter().enumerate() {
                let s = l.max(0.0).sqrt();
                vs.column_mut(j).scale_mut(s);
            }
            log::warn!("shadow covariance indefinite; clipped to nearest PSD");
            ShadowCovariance {
                matrix,
                factor: vs,
                repaired: true,
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LargeScaleFading {
    /// Linear gains, K×L.
    pub beta: DMatrix<f64>,
    /// Shadowing realizations in dB, K×L.
    pub shadow: DMatrix<f64>,
    /// Wrap-aware AP-to-UE distances (clamped at the minimum distance), K×L.
    pub distance: DMatrix<f64>,
    pub shadow_repaired: bool,
}

pub fn draw_shadowing<R: Rng + ?Sized>(cov: &ShadowCovariance, num_aps: usize, rng: &mut R) -> DMatrix<f64> {
    let k = cov.matrix.nrows();
    let mut out = DMatrix::zeros(k, num_aps);
    for l in 0..num_aps {
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        out.set_column(l, &(&cov.factor * z));
    }
    out
}

pub fn large_scale_fading<R: Rng + ?Sized>(
    geom: &NetworkGeometry,
    model: &PathlossModel,
    rng: &mut R,
) -> Result<LargeScaleFading> {
    let cov = shadow_covariance(geom, model);
    let l = geom.ap_positions.len();
    let shadow = draw_shadowing(&cov, l, rng);
    let k = geom.ue_positions.len();
    let mut beta = DMatrix::zeros(k, l);
    let mut distance = DMatrix::zeros(k, l);
    for ue in 0..k {
        for ap in 0..l {
            let d = wrap_distance(geom.ap_positions[ap], geom.ue_positions[ue], geom.area_side)
                .max(model.min_distance_m);
            distance[(ue, ap)] = d;
            beta[(ue, ap)] = 10f64.powf(model.gain_db(d, shadow[(ue, ap)])? / 10.0);
        }
    }
    Ok(LargeScaleFading {
        beta,
        shadow,
        distance,
        shadow_repaired: cov.repaired,
    })
}

/// Gaussian local-scattering correlation (small-angle closed form) for a
/// half-wavelength ULA: `[C]_{m,n} = e^{jπ(m−n)sinφ} · e^{−σ²(π(m−n)cosφ)²/2}`.
pub fn local_scattering<T: Real>(n: usize, angle: f64, asd_rad: f64) -> HermitianMatrix<T> {
    let m = CMat::from_fn(n, n, |r, c| {
        let dist = r as f64 - c as f64;
        let phase = PI * dist * angle.sin();
        let spread = (-0.5 * (asd_rad * PI * dist * angle.cos()).powi(2)).exp();
        cplx(T::lit(spread * phase.cos()), T::lit(spread * phase.sin()))
    });
    HermitianMatrix::new(m)
}

/// `R_{k,l} = β_{k,l} · C(φ_{k,l})` indexed `[ue][ap]`.
pub fn build_spatial_correlation<T: Real>(
    geom: &NetworkGeometry,
    cfg: &ScenarioConfig,
    large: &LargeScaleFading,
) -> Vec<Vec<HermitianMatrix<T>>> {
    let asd = cfg.asd_deg.to_radians();
    geom.ue_positions
        .iter()
        .enumerate()
        .map(|(k, &ue)| {
            geom.ap_positions
                .iter()
                .enumerate()
                .map(|(l, &ap)| {
                    let [dx, dy] = wrap_delta(ap, ue, geom.area_side);
                    let angle = dy.atan2(dx);
                    let c = local_scattering::<T>(cfg.antennas_per_ap, angle, asd);
                    let b = T::lit(large.beta[(k, l)]);
                    HermitianMatrix::new(c.into_inner().map(|z| z.scale(b)))
                })
                .collect()
        })
        .collect()
}

/// Stacked channels `h_k ∈ C^{LN}` ordered AP by AP.
#[derive(Debug, Clone)]
pub struct ChannelSet<T: Real> {
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub num_groups: usize,
    pub group_of_ue: Vec<usize>,
    pub h: Vec<CVec<T>>,
    /// σ²_k per UE.
    pub noise: Vec<T>,
    /// Spatial correlation `[ue][ap]`; empty for hand-built channel sets.
    pub correlation: Vec<Vec<HermitianMatrix<T>>>,
}

impl<T: Real> ChannelSet<T> {
    /// Hand-built channel set (no correlation metadata).
    pub fn from_vectors(
        num_aps: usize,
        antennas_per_ap: usize,
        group_of_ue: Vec<usize>,
        h: Vec<CVec<T>>,
        noise: Vec<T>,
    ) -> Result<Self> {
        let dim = num_aps * antennas_per_ap;
        if h.is_empty() || h.len() != group_of_ue.len() || h.len() != noise.len() {
            return Err(Error::Domain("channel, group and noise lists must be non-empty and equal length".into()));
        }
        if h.iter().any(|v| v.len() != dim) {
            return Err(Error::Domain(format!("every channel must have length {dim}")));
        }
        let num_groups = group_of_ue.iter().copied().max().unwrap_or(0) + 1;
        if (0..num_groups).any(|g| !group_of_ue.contains(&g)) {
            return Err(Error::Domain("every group needs at least one UE".into()));
        }
        Ok(ChannelSet {
            num_aps,
            antennas_per_ap,
            num_groups,
            group_of_ue,
            h,
            noise,
            correlation: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.num_aps * self.antennas_per_ap
    }

    pub fn num_ues(&self) -> usize {
        self.h.len()
    }

    pub fn members(&self, g: usize) -> Vec<usize> {
        (0..self.num_ues()).filter(|&k| self.group_of_ue[k] == g).collect()
    }

    /// Index range of AP `l` inside a stacked vector.
    pub fn ap_range(&self, l: usize) -> Range<usize> {
        l * self.antennas_per_ap..(l + 1) * self.antennas_per_ap
    }

    /// Copy with every channel multiplied by `c`.
    pub fn scaled(&self, c: Cplx<T>) -> Self {
        let mut out = self.clone();
        for h in out.h.iter_mut() {
            *h *= c;
        }
        out
    }

    /// Order-sensitive digest of the channel coefficients.
    pub fn fingerprint(&self) -> u64 {
        let mut acc: u64 = 0xcbf2_9ce4_8422_2325;
        for h in &self.h {
            for z in h.iter() {
                for v in [z.re.as_f64().to_bits(), z.im.as_f64().to_bits()] {
                    acc ^= v;
                    acc = acc.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        acc
    }
}

/// `h_{k,l} = R_{k,l}^{1/2} z` with `z ~ CN(0, I)`, blocks concatenated in AP
/// order.
pub fn sample_channels<T: Real, R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    geom: &NetworkGeometry,
    correlation: Vec<Vec<HermitianMatrix<T>>>,
    rng: &mut R,
) -> ChannelSet<T> {
    let n = cfg.antennas_per_ap;
    let l = cfg.num_aps;
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let h = correlation
        .iter()
        .map(|per_ap| {
            let mut h = CVec::zeros(l * n);
            for (ap, r) in per_ap.iter().enumerate() {
                let z = CVec::from_fn(n, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    cplx(T::lit(re * half), T::lit(im * half))
                });
                let block = r.psd_sqrt() * z;
                h.rows_mut(ap * n, n).copy_from(&block);
            }
            h
        })
        .collect();
    let noise = T::lit(cfg.noise_power());
    ChannelSet {
        num_aps: l,
        antennas_per_ap: n,
        num_groups: cfg.num_groups(),
        group_of_ue: geom.group_of_ue.clone(),
        h,
        noise: vec![noise; geom.group_of_ue.len()],
        correlation,
    }
}

/// Everything drawn for one Monte Carlo trial.
#[derive(Debug, Clone)]
pub struct Realization<T: Real> {
    pub geometry: NetworkGeometry,
    pub large_scale: LargeScaleFading,
    pub channels: ChannelSet<T>,
}

/// Geometry, large-scale fading and small-scale fading from one generator.
pub fn realize<T: Real, R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Realization<T>> {
    let geometry = place_network(cfg, rng)?;
    let large_scale = large_scale_fading(&geometry, &cfg.pathloss, rng)?;
    let correlation = build_spatial_correlation::<T>(&geometry, cfg, &large_scale);
    let channels = sample_channels(cfg, &geometry, correlation, rng);
    Ok(Realization {
        geometry,
        large_scale,
        channels,
    })
}
