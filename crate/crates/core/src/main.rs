//! Command-line driver for Monte Carlo campaigns.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cfmc::channel::ScenarioConfig;
use cfmc::harness::{parse_algorithms, run_campaign, CampaignSpec};

#[derive(Debug, Parser)]
#[command(name = "cfmc", version, about = "Multicast precoding campaigns for cell-free massive MIMO")]
struct Cli {
    /// TOML campaign file with [scenario], [algorithms] and [params].
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario preset: small, mid, paper9x4 or paper4x8.
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated subset of sea,sdr_upper,sdr_d,sdr_g,heuristic,unicast.
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent trials.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn build_spec(cli: &Cli) -> cfmc::Result<CampaignSpec> {
    let mut spec = match &cli.config {
        Some(path) => CampaignSpec::from_file(path)?,
        None => CampaignSpec::default(),
    };
    if let Some(p) = &cli.preset {
        let seed = spec.scenario.rng_seed;
        spec.scenario = ScenarioConfig::preset(p)?;
        spec.scenario.rng_seed = seed;
    }
    if let Some(list) = &cli.algorithms {
        spec.algorithms = parse_algorithms(list)?;
    }
    if let Some(n) = cli.trials {
        spec.trials = n;
    }
    if let Some(s) = cli.seed {
        spec.scenario.rng_seed = s;
    }
    if let Some(out) = &cli.out {
        spec.out_dir = out.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let spec = match build_spec(&cli) {
        Ok(s) => s,
        Err(e) => {
            log::error!("{e}");
            return ExitCode::from(2);
        }
    };
    log::info!(
        "{} trials of {:?} on L={} N={} groups={:?}",
        spec.trials,
        spec.algorithms.iter().map(|a| a.name()).collect::<Vec<_>>(),
        spec.scenario.num_aps,
        spec.scenario.antennas_per_ap,
        spec.scenario.group_sizes
    );
    match run_campaign(&spec, cli.threads) {
        Ok(outcome) => {
            for s in &outcome.summary {
                println!(
                    "{:<10} ok {}/{}  mean min-SE {:.3}  p10 {:.3}  median {:.3}  mean runtime {:.1} ms",
                    s.algorithm.name(),
                    s.ok,
                    s.records,
                    s.mean_min_se,
                    s.p10_min_se,
                    s.p50_min_se,
                    s.mean_runtime_ms
                );
            }
            if outcome.any_fatal() {
                log::error!("some trials ended with a failure status; see records.csv");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
    }
}
