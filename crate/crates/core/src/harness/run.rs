//! Seeded Monte Carlo trials and campaign driver.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Algorithm, CampaignSpec};
use super::output::{write_records, write_summary, emit_plotdata, Summary};
use crate::channel::{realize, ChannelSet};
use crate::error::{Error, Result};
use crate::heuristic::{heuristic, rzf_unicast, unicast_maxmin_power, unicast_metrics};
use crate::metrics::TrialMetrics;
use crate::mmf_sdr::{relaxed_mmf, sdr_dominant, sdr_randomize, sdr_upper, sea_from_relaxed, MMFResult, RelaxedSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Ok,
    SeaStalled,
    SolverError,
    BisectionError,
    PowerViolation,
    Failed,
}

impl TrialStatus {
    pub fn name(self) -> &'static str {
        match self {
            TrialStatus::Ok => "ok",
            TrialStatus::SeaStalled => "sea_stalled",
            TrialStatus::SolverError => "solver_error",
            TrialStatus::BisectionError => "bisection_error",
            TrialStatus::PowerViolation => "power_violation",
            TrialStatus::Failed => "failed",
        }
    }

    pub fn is_fatal(self) -> bool {
        self != TrialStatus::Ok
    }

    fn from_error(e: &Error) -> Self {
        match e {
            Error::SeaStalled { .. } => TrialStatus::SeaStalled,
            Error::Solver(_) => TrialStatus::SolverError,
            Error::Bisection(_) => TrialStatus::BisectionError,
            _ => TrialStatus::Failed,
        }
    }
}

/// One `(trial, algorithm)` outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub min_se: f64,
    pub sum_se: f64,
    pub group_min_se: Vec<f64>,
    pub runtime_ms: f64,
    pub elim_iters: usize,
    pub bisect_iters: usize,
    pub max_rank_final: usize,
    pub status: TrialStatus,
    pub channel_fingerprint: u64,
    /// Digest of the shared relaxed solution, for relaxation-based algorithms.
    pub relaxed_fingerprint: Option<u64>,
}

/// Seed of trial `index`.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    base ^ index as u64
}

struct Context<'a> {
    spec: &'a CampaignSpec,
    trial: usize,
    seed: u64,
    channels: &'a ChannelSet<f64>,
    p_max: Vec<f64>,
}

impl Context<'_> {
    fn record(&self, algorithm: Algorithm, m: Option<&TrialMetrics>, status: TrialStatus) -> TrialRecord {
        let nan = f64::NAN;
        let mut status = status;
        if let Some(m) = m {
            let tol = 1.0 + 1e-6;
            if m.ap_power.iter().zip(&self.p_max).any(|(&p, &cap)| p > cap * tol) {
                status = TrialStatus::PowerViolation;
            }
        }
        TrialRecord {
            trial: self.trial,
            seed: self.seed,
            algorithm,
            min_se: m.map_or(nan, |m| m.min_se),
            sum_se: m.map_or(nan, |m| m.sum_se),
            group_min_se: m.map_or_else(Vec::new, |m| m.group_min_se.clone()),
            runtime_ms: if self.spec.params.record_runtime { m.map_or(0.0, |m| m.runtime_ms) } else { 0.0 },
            elim_iters: 0,
            bisect_iters: 0,
            max_rank_final: 1,
            status,
            channel_fingerprint: self.channels.fingerprint(),
            relaxed_fingerprint: None,
        }
    }

    fn from_mmf(&self, algorithm: Algorithm, r: Result<MMFResult<f64>>, relaxed: Option<u64>) -> TrialRecord {
        match r {
            Ok(r) => {
                let mut rec = self.record(algorithm, Some(&r.metrics), TrialStatus::Ok);
                rec.elim_iters = r.elim_iters;
                rec.bisect_iters = r.bisect_iters;
                rec.max_rank_final = r.max_rank_final();
                rec.relaxed_fingerprint = relaxed;
                rec
            }
            Err(e) => self.failure(algorithm, &e),
        }
    }

    fn failure(&self, algorithm: Algorithm, e: &Error) -> TrialRecord {
        log::warn!("trial {} {}: {e}", self.trial, algorithm);
        let mut rec = self.record(algorithm, None, TrialStatus::from_error(e));
        if let Error::SeaStalled { iterations, max_rank, .. } = e {
            rec.elim_iters = *iterations;
            rec.max_rank_final = *max_rank;
        }
        rec
    }
}

/// Draws trial `index` and runs every requested algorithm on the same
/// channel realization. Relaxation-based algorithms share one relaxed solve.
pub fn run_trial(spec: &CampaignSpec, index: usize) -> Result<Vec<TrialRecord>> {
    let seed = trial_seed(spec.scenario.rng_seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let real = realize::<f64, _>(&spec.scenario, &mut rng)?;
    let ch = &real.channels;
    let ctx = Context {
        spec,
        trial: index,
        seed,
        channels: ch,
        p_max: vec![spec.scenario.max_power_per_ap; ch.num_aps],
    };
    log::debug!("trial {index}: seed {seed}, channel fingerprint {:016x}", ch.fingerprint());
    let eta = spec.scenario.weights();
    let mmf = &spec.params.mmf;

    let relaxed: Option<Result<RelaxedSolution<f64>>> = spec
        .algorithms
        .iter()
        .any(|a| a.uses_relaxation())
        .then(|| relaxed_mmf(ch, &eta, &ctx.p_max, mmf));
    if let Some(Ok(r)) = &relaxed {
        log::debug!("trial {index}: relaxed γ = {}, fingerprint {:016x}", r.bisection.gamma, r.fingerprint());
    }

    let mut out = Vec::with_capacity(spec.algorithms.len());
    for &alg in &spec.algorithms {
        let rec = if alg.uses_relaxation() {
            match relaxed.as_ref().expect("relaxation computed") {
                Err(e) => ctx.failure(alg, e),
                Ok(r) => {
                    let fp = Some(r.fingerprint());
                    let res = match alg {
                        Algorithm::Sea => sea_from_relaxed(ch, &eta, &ctx.p_max, mmf, r),
                        Algorithm::SdrUpper => Ok(sdr_upper(ch, &ctx.p_max, r)),
                        Algorithm::SdrD => sdr_dominant(ch, &eta, &ctx.p_max, mmf, r),
                        Algorithm::SdrG => sdr_randomize(ch, &eta, &ctx.p_max, mmf, r, seed),
                        _ => unreachable!(),
                    };
                    ctx.from_mmf(alg, res, fp)
                }
            }
        } else {
            let hp = spec.params.heuristic(&spec.scenario);
            match alg {
                Algorithm::Heuristic => match heuristic(ch, &hp) {
                    Ok((h, _)) => ctx.record(alg, Some(&h.metrics), TrialStatus::Ok),
                    Err(e) => ctx.failure(alg, &e),
                },
                Algorithm::Unicast => {
                    let start = Instant::now();
                    let dirs = rzf_unicast(ch, hp.p_max, hp.noise);
                    match unicast_maxmin_power(ch, &dirs, hp.p_max, hp.unicast_eps, &hp.solver) {
                        Ok(u) => {
                            let mut m = unicast_metrics(ch, &u);
                            m.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
                            let mut rec = ctx.record(alg, Some(&m), TrialStatus::Ok);
                            rec.bisect_iters = u.bisect_iters;
                            rec
                        }
                        Err(e) => ctx.failure(alg, &e),
                    }
                }
                _ => unreachable!(),
            }
        };
        out.push(rec);
    }
    Ok(out)
}

/// Records plus per-algorithm statistics.
#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<Summary>,
}

impl CampaignOutcome {
    pub fn any_fatal(&self) -> bool {
        self.records.iter().any(|r| r.status.is_fatal())
    }
}

/// Runs all trials on `threads` workers and writes `records.csv`,
/// `summary.csv` and `cdf_<algorithm>.txt` into the output directory. The
/// directory is checked for writability before any computation.
pub fn run_campaign(spec: &CampaignSpec, threads: usize) -> Result<CampaignOutcome> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.out_dir)?;
    let records_path = spec.out_dir.join("records.csv");
    let mut records_file = BufWriter::new(File::create(&records_path)?);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let per_trial: Vec<Result<Vec<TrialRecord>>> =
        pool.install(|| (0..spec.trials).into_par_iter().map(|i| run_trial(spec, i)).collect());
    let mut records = Vec::with_capacity(spec.trials * spec.algorithms.len());
    for r in per_trial {
        records.extend(r?);
    }

    write_records(&mut records_file, &records)?;
    records_file.flush()?;
    let summary = Summary::from_records(&spec.algorithms, &records);
    let mut summary_file = BufWriter::new(File::create(spec.out_dir.join("summary.csv"))?);
    write_summary(&mut summary_file, &summary)?;
    summary_file.flush()?;
    emit_plotdata(&spec.out_dir, &spec.algorithms, &records)?;
    Ok(CampaignOutcome { records, summary })
}
