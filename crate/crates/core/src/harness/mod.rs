//! Monte Carlo campaigns: configuration, trial execution and result files.

mod config;
mod output;
mod run;

pub use config::{parse_algorithms, Algorithm, CampaignParams, CampaignSpec};
pub use output::{cdf_path, emit_plotdata, read_cdf, write_records, write_summary, Summary, CSV_HEADER};
pub use run::{run_campaign, run_trial, trial_seed, CampaignOutcome, TrialRecord, TrialStatus};
