//! Evaluation protocol: success-rate runs on the test pools, the random
//! baseline, pitch-shift robustness and the one-utterance comparison.

mod report;
mod run;

pub use report::{read_report, summarize, write_report, write_summary, EpisodeRecord, EvalReport, SummaryRow, TargetSummary};
pub use run::{
    agent_seeds, eval_seed, run_eval, run_few_shot_experiment, run_pitch_shift_eval, train_agent, EvalConfig, FewShotConfig, FewShotReport,
    Policy, PolicyMode,
};
