//! Line-delimited JSON trajectory logs.
//!
//! One record per line:
//!
//! ```text
//! {"dialogue_id":0,"task_id":4,"seed":17,"policy_mode":"exploratory",
//!  "steps":[{"state":"0100000","action":"GreetU","reward":0.0}, ...],
//!  "rewards":{"binary_completion":1,"weak_completion":3,"asr_score":3.0,"web_feedback":1}}
//! ```
//!
//! Step rewards are zero except on the final Tell, which carries the
//! binary completion score.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ChoiceTable, DialogueAction, DialogueState, Measure, RewardBundle};
use crate::mdp::{Episode, Step};
use crate::space::StateSpace;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("dialogue {dialogue_id}: bad {field}: {reason}")]
    Invalid { dialogue_id: u64, field: &'static str, reason: String },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

/// How the dialogue's actions were chosen.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PolicyMode {
    Exploratory,
    Fixed(String),
}

impl fmt::Display for PolicyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyMode::Exploratory => f.write_str("exploratory"),
            PolicyMode::Fixed(name) => write!(f, "fixed:{name}"),
        }
    }
}

impl FromStr for PolicyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "exploratory" => Ok(PolicyMode::Exploratory),
            Some(("fixed", name)) if !name.is_empty() => Ok(PolicyMode::Fixed(name.into())),
            _ => Err(format!("policy mode must be 'exploratory' or 'fixed:<name>', got '{s}'")),
        }
    }
}

impl Serialize for PolicyMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PolicyMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedStep {
    pub state: DialogueState,
    pub action: DialogueAction,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRecord {
    pub dialogue_id: u64,
    /// 1-based task number.
    pub task_id: u32,
    pub seed: u64,
    pub policy_mode: PolicyMode,
    pub steps: Vec<LoggedStep>,
    pub rewards: RewardBundle,
}

impl TrajectoryRecord {
    /// Checks every step against the choice table, the Tell ending and the
    /// reward bundle. Errors name the offending field.
    pub fn validate(&self, table: &ChoiceTable) -> Result<(), CorpusError> {
        let bad = |field: &'static str, reason: String| {
            Err(CorpusError::Invalid { dialogue_id: self.dialogue_id, field, reason })
        };
        if let Err(e) = self.rewards.validate() {
            return bad("rewards", e.to_string());
        }
        let Some(last) = self.steps.last() else {
            return bad("steps", "empty trajectory".into());
        };
        if last.action != DialogueAction::Tell {
            return bad("steps", format!("last action is {}, not Tell", last.action));
        }
        if self.steps.first().map(|s| s.state) != Some(DialogueState::INITIAL) {
            return bad("steps", "does not start in the initial state".into());
        }
        for (i, step) in self.steps.iter().enumerate() {
            match table.allowed(&step.state) {
                None => return bad("state", format!("step {i}: {} is not a dialogue state", step.state)),
                Some(acts) if !acts.contains(&step.action) => {
                    return bad("action", format!("step {i}: {} not allowed in {}", step.action, step.state))
                }
                _ => {}
            }
            let expected = if i + 1 == self.steps.len() { f64::from(self.rewards.binary_completion) } else { 0.0 };
            if step.reward != expected {
                return bad("reward", format!("step {i}: reward {} where {expected} was expected", step.reward));
            }
        }
        Ok(())
    }

    /// User turns: every step whose action expects a reply.
    pub fn user_turns(&self) -> usize {
        self.steps.iter().filter(|s| s.action.elicits_reply()).count()
    }

    /// The trajectory as a solver episode rewarded by `measure`.
    ///
    /// Every dialogue ends in the same final state, so a reward attached to
    /// the closing Tell would be identical for all of them. The outcome is
    /// instead credited to the transition that reaches the final state.
    pub fn episode(&self, space: &StateSpace, measure: Measure) -> Episode {
        let credited = self.steps.len().saturating_sub(2);
        Episode::new(
            self.steps
                .iter()
                .enumerate()
                .map(|(i, s)| Step {
                    state: space.state_id(&s.state).expect("validated state"),
                    action: space.action_id(s.action),
                    reward: if i == credited { self.rewards.measure(measure) } else { 0.0 },
                })
                .collect(),
        )
    }
}

fn table() -> &'static ChoiceTable {
    static TABLE: OnceLock<ChoiceTable> = OnceLock::new();
    TABLE.get_or_init(ChoiceTable::bundled)
}

/// Validates and writes one record as a single line.
pub fn append<W: Write>(record: &TrajectoryRecord, sink: &mut W) -> Result<(), CorpusError> {
    record.validate(table())?;
    let line = serde_json::to_string(record).expect("records serialize");
    writeln!(sink, "{line}").map_err(|e| CorpusError::Io("corpus sink".into(), e))
}

/// Append-only file writer.
pub struct CorpusWriter {
    out: BufWriter<File>,
    path: String,
}

impl CorpusWriter {
    pub fn open(path: &Path) -> Result<Self, CorpusError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| CorpusError::Io(path.display().to_string(), e))?;
        Ok(Self { out: BufWriter::new(file), path: path.display().to_string() })
    }

    pub fn append(&mut self, record: &TrajectoryRecord) -> Result<(), CorpusError> {
        append(record, &mut self.out).map_err(|e| match e {
            CorpusError::Io(_, e) => CorpusError::Io(self.path.clone(), e),
            other => other,
        })
    }

    pub fn finish(mut self) -> Result<(), CorpusError> {
        self.out.flush().map_err(|e| CorpusError::Io(self.path.clone(), e))
    }
}

/// Writes a whole corpus to a fresh file, replacing any previous contents.
pub fn write_corpus(path: &Path, records: &[TrajectoryRecord]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::Io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        append(r, &mut out)?;
    }
    out.flush().map_err(|e| CorpusError::Io(path.display().to_string(), e))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub records: Vec<TrajectoryRecord>,
}

impl Corpus {
    pub fn new(records: Vec<TrajectoryRecord>) -> Self {
        Self { records }
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|e| CorpusError::Io(path.display().to_string(), e))?;
        Self::from_reader(file)
    }

    /// Blank lines are skipped. A line that fails to parse or validate is
    /// reported by its 1-based number.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, CorpusError> {
        let mut records = Vec::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| CorpusError::Line { line: line_no, reason: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TrajectoryRecord = serde_json::from_str(&line)
                .map_err(|e| CorpusError::Line { line: line_no, reason: e.to_string() })?;
            rec.validate(table()).map_err(|e| CorpusError::Line { line: line_no, reason: e.to_string() })?;
            records.push(rec);
        }
        Ok(Self { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Visits per (state, action) over all records.
    pub fn tally(&self) -> BTreeMap<(DialogueState, DialogueAction), u64> {
        let mut out = BTreeMap::new();
        for r in &self.records {
            for s in &r.steps {
                *out.entry((s.state, s.action)).or_insert(0) += 1;
            }
        }
        out
    }

    pub fn episodes(&self, space: &StateSpace, measure: Measure) -> Vec<Episode> {
        self.records.iter().map(|r| r.episode(space, measure)).collect()
    }

    /// True when every record came from exploratory collection.
    pub fn is_exploratory(&self) -> bool {
        self.records.iter().all(|r| r.policy_mode == PolicyMode::Exploratory)
    }

    /// Mean of `measure` over all records; `None` when empty.
    pub fn mean(&self, measure: Measure) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        Some(self.records.iter().map(|r| r.rewards.measure(measure)).sum::<f64>() / self.records.len() as f64)
    }
}
