//! Data collection, training, redeployment and evaluation.

mod evaluate;
pub mod files;
mod goodness;
mod pipeline;
mod report;
mod rollout;

use thiserror::Error;

pub use evaluate::{
    baseline_policies, baseline_rules, choice_decisions, default_mixed, is_consistent, mc_estimate, mc_evaluate,
    McEstimate, PreferenceRule,
};
pub use goodness::{
    goodness_check, goodness_rows, random_deterministic_policy, sample_policies, GoodnessFit, GoodnessRow,
    PolicySample,
};
pub use pipeline::{
    baseline_comparison, calibrated_machine, compare_arms, compare_task_group, estimate, optimize, run_pipeline, subject_means,
    write_artifacts, BaselineRow, Comparison, EvaluationReport, PipelineConfig, PipelineOutput, StageSeeds,
    CONVERGENCE_THRESHOLD, DEFAULT_TIE_EPSILON, SUBJECT_SIZE,
};
pub use report::{baseline_table, format_p, goodness_table, render_report};
pub use rollout::{collect, derive_seed, run_dialogue, CollectMode};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Mdp(#[from] crate::mdp::MdpError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error("{0}")]
    Format(String),
    #[error("corpus was not collected exploratorily; estimates would be biased")]
    NotExploratory,
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
