//! The slot-filling dialogue domain: learning state, actions, operations
//! vector, choice table, rewards and the activity database.

mod action;
mod confidence;
mod database;
mod machine;
mod ops;
mod state;
mod task;

use thiserror::Error;

pub use action::{ActionKind, DialogueAction, Grammar, Initiative, PromptType};
pub use confidence::{bin_confidence, ConfidenceBins};
pub use database::{ActivityDatabase, ActivityRow};
pub use machine::{enumerate_reachable, AsrResult, ChoiceTable, DialogueMachine, StateGraph, YesNo};
pub use ops::{compute_history, estimate_state, OperationsVector, SlotRecord};
pub use state::DialogueState;
pub use task::{
    evaluate_rewards, standard_tasks, Attribute, Measure, QueryBinding, RewardBundle, TaskSpec, ACTIVITIES, TIMES,
};

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("{field} = {value} is out of range")]
    FeatureOutOfRange { field: &'static str, value: u8 },
    #[error("'{0}' is not a seven-digit state")]
    BadStateString(String),
    #[error("unknown action '{0}'")]
    UnknownAction(String),
    #[error("unknown {attribute} value '{value}'")]
    UnknownValue { attribute: &'static str, value: String },
    #[error("reward field {field} out of range")]
    BadReward { field: &'static str },
    #[error("action {action} is not allowed in state {state}")]
    IllegalAction { state: DialogueState, action: DialogueAction },
    #[error("action {action} needs a recognizer result of the matching kind")]
    MissingAsr { action: DialogueAction },
    #[error("inconsistent operations vector: {0}")]
    InconsistentOps(String),
    #[error("choice table line {line}: {reason}")]
    ChoiceTable { line: usize, reason: String },
    #[error("database line {line}: {reason}")]
    Database { line: usize, reason: String },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
