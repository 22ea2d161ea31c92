//! Stochastic user and speech-recognizer stand-in.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Triangular};
use thiserror::Error;

use crate::domain::{
    ActivityDatabase, AsrResult, Attribute, ConfidenceBins, DialogueAction, Grammar, Initiative, PromptType, TaskSpec,
    YesNo, ACTIVITIES, TIMES,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("invalid simulator parameter {key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserProfile {
    pub p_overanswer: f64,
    pub p_silent: f64,
    pub p_yesno_flip: f64,
}

/// Per-slot recognition outcome probabilities for one grammar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotNoise {
    pub p_capture: f64,
    pub p_substitute: f64,
    pub p_delete: f64,
}

impl SlotNoise {
    pub const PERFECT: SlotNoise = SlotNoise { p_capture: 1.0, p_substitute: 0.0, p_delete: 0.0 };

    /// Capture rate given; the remainder is split 70/30 between
    /// substitution and deletion.
    pub fn with_capture(p_capture: f64) -> Self {
        let rest = 1.0 - p_capture;
        SlotNoise { p_capture, p_substitute: 0.7 * rest, p_delete: 0.3 * rest }
    }
}

/// Triangular score distribution on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreDist {
    pub min: f64,
    pub mode: f64,
    pub max: f64,
}

impl ScoreDist {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Triangular::new(self.min, self.max, self.mode).expect("validated").sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsrParams {
    pub restrictive: SlotNoise,
    pub nonrestrictive: SlotNoise,
    /// Score of an utterance with no substituted slot.
    pub correct: ScoreDist,
    /// Score of an utterance with at least one substituted slot.
    pub corrupted: ScoreDist,
}

impl AsrParams {
    pub fn noise(&self, grammar: Grammar) -> &SlotNoise {
        match grammar {
            Grammar::Restrictive => &self.restrictive,
            Grammar::Nonrestrictive => &self.nonrestrictive,
        }
    }
}

/// Distribution of the feedback score given task success (row 0) or failure
/// (row 1); columns are P(-1), P(0), P(+1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackConfusion {
    pub success: [f64; 3],
    pub failure: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskMode {
    /// The six scripted tasks.
    Fixed,
    /// Every activity, town and time combination in the database vocabulary.
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub profile: UserProfile,
    pub asr: AsrParams,
    pub feedback: FeedbackConfusion,
    pub task_mode: TaskMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            profile: UserProfile { p_overanswer: 0.6, p_silent: 0.05, p_yesno_flip: 0.05 },
            asr: AsrParams {
                restrictive: SlotNoise::with_capture(0.92),
                nonrestrictive: SlotNoise::with_capture(0.75),
                correct: ScoreDist { min: 0.0, mode: 0.8, max: 1.0 },
                corrupted: ScoreDist { min: 0.0, mode: 0.35, max: 1.0 },
            },
            feedback: FeedbackConfusion { success: [0.1, 0.2, 0.7], failure: [0.6, 0.25, 0.15] },
            task_mode: TaskMode::Fixed,
        }
    }
}

const KEYS: [&str; 18] = [
    "p_overanswer",
    "p_silent",
    "p_yesno_flip",
    "restrictive.p_capture",
    "restrictive.p_substitute",
    "restrictive.p_delete",
    "nonrestrictive.p_capture",
    "nonrestrictive.p_substitute",
    "nonrestrictive.p_delete",
    "confidence.correct.min",
    "confidence.correct.mode",
    "confidence.correct.max",
    "confidence.corrupted.min",
    "confidence.corrupted.mode",
    "confidence.corrupted.max",
    "feedback.success",
    "feedback.failure",
    "task_mode",
];

impl SimConfig {
    /// Every noise source off and users always volunteer later slots.
    pub fn noiseless() -> Self {
        let mut c = SimConfig {
            profile: UserProfile { p_overanswer: 1.0, p_silent: 0.0, p_yesno_flip: 0.0 },
            ..SimConfig::default()
        };
        c.asr.restrictive = SlotNoise::PERFECT;
        c.asr.nonrestrictive = SlotNoise::PERFECT;
        c
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(path.display().to_string(), e))?;
        text.parse()
    }

    fn field_mut(&mut self, key: &str) -> Option<&mut f64> {
        let a = &mut self.asr;
        Some(match key {
            "p_overanswer" => &mut self.profile.p_overanswer,
            "p_silent" => &mut self.profile.p_silent,
            "p_yesno_flip" => &mut self.profile.p_yesno_flip,
            "restrictive.p_capture" => &mut a.restrictive.p_capture,
            "restrictive.p_substitute" => &mut a.restrictive.p_substitute,
            "restrictive.p_delete" => &mut a.restrictive.p_delete,
            "nonrestrictive.p_capture" => &mut a.nonrestrictive.p_capture,
            "nonrestrictive.p_substitute" => &mut a.nonrestrictive.p_substitute,
            "nonrestrictive.p_delete" => &mut a.nonrestrictive.p_delete,
            "confidence.correct.min" => &mut a.correct.min,
            "confidence.correct.mode" => &mut a.correct.mode,
            "confidence.correct.max" => &mut a.correct.max,
            "confidence.corrupted.min" => &mut a.corrupted.min,
            "confidence.corrupted.mode" => &mut a.corrupted.mode,
            "confidence.corrupted.max" => &mut a.corrupted.max,
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |key: &str, reason: String| Err(SimError::Invalid { key: key.into(), reason });
        let p = &self.profile;
        for (key, v) in [("p_overanswer", p.p_overanswer), ("p_silent", p.p_silent), ("p_yesno_flip", p.p_yesno_flip)] {
            if !(0.0..=1.0).contains(&v) {
                return invalid(key, format!("{v} is not a probability"));
            }
        }
        for (name, n) in [("restrictive", self.asr.restrictive), ("nonrestrictive", self.asr.nonrestrictive)] {
            let parts = [n.p_capture, n.p_substitute, n.p_delete];
            if parts.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return invalid(name, "probabilities must lie in [0, 1]".into());
            }
            let sum: f64 = parts.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return invalid(name, format!("capture + substitute + delete = {sum}, not 1"));
            }
        }
        for (name, d) in [("confidence.correct", self.asr.correct), ("confidence.corrupted", self.asr.corrupted)] {
            if !(d.min <= d.mode && d.mode <= d.max && d.min < d.max) {
                return invalid(name, format!("need min <= mode <= max and min < max, got {d:?}"));
            }
        }
        for (name, row) in [("feedback.success", self.feedback.success), ("feedback.failure", self.feedback.failure)] {
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return invalid(name, format!("{row:?} is not a distribution"));
            }
        }
        Ok(())
    }

    /// Flat `key = value` text; parses back to the same config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut copy = self.clone();
        for key in &KEYS[..15] {
            let v = *copy.field_mut(key).unwrap();
            writeln!(out, "{key} = {v}").unwrap();
        }
        let row = |r: [f64; 3]| format!("{} {} {}", r[0], r[1], r[2]);
        writeln!(out, "feedback.success = {}", row(self.feedback.success)).unwrap();
        writeln!(out, "feedback.failure = {}", row(self.feedback.failure)).unwrap();
        let mode = match self.task_mode {
            TaskMode::Fixed => "fixed",
            TaskMode::Grid => "grid",
        };
        writeln!(out, "task_mode = {mode}").unwrap();
        out
    }
}

impl FromStr for SimConfig {
    type Err = SimError;

    /// Starts from the defaults and overrides each listed key. Unknown keys
    /// are rejected.
    fn from_str(text: &str) -> Result<Self, SimError> {
        let mut cfg = SimConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| SimError::Config { line: i + 1, reason };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key '{key}'")));
            }
            let number = |s: &str| s.parse::<f64>().map_err(|_| err(format!("'{s}' is not a number")));
            match key {
                "feedback.success" | "feedback.failure" => {
                    let parts = value.split_whitespace().map(number).collect::<Result<Vec<_>, _>>()?;
                    let row: [f64; 3] = parts.try_into().map_err(|_| err("expected three numbers".into()))?;
                    if key == "feedback.success" {
                        cfg.feedback.success = row;
                    } else {
                        cfg.feedback.failure = row;
                    }
                }
                "task_mode" => {
                    cfg.task_mode = match value {
                        "fixed" => TaskMode::Fixed,
                        "grid" => TaskMode::Grid,
                        other => return Err(err(format!("task_mode must be fixed or grid, got '{other}'"))),
                    }
                }
                _ => *cfg.field_mut(key).expect("listed key") = number(value)?,
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// In-domain values per attribute, used for substitutions and task grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub values: [Vec<String>; 3],
}

impl Vocabulary {
    pub fn from_database(db: &ActivityDatabase) -> Self {
        Vocabulary {
            values: [
                ACTIVITIES.iter().map(|s| s.to_string()).collect(),
                db.locations().into_iter().map(String::from).collect(),
                TIMES.iter().map(|s| s.to_string()).collect(),
            ],
        }
    }

    pub fn values(&self, attr: Attribute) -> &[String] {
        &self.values[attr.slot()]
    }
}

/// The simulator: config plus vocabulary.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub config: SimConfig,
    pub vocab: Vocabulary,
    tasks: Vec<TaskSpec>,
}

impl Simulator {
    pub fn new(config: SimConfig, db: &ActivityDatabase) -> Self {
        let vocab = Vocabulary::from_database(db);
        let tasks = match config.task_mode {
            TaskMode::Fixed => crate::domain::standard_tasks().to_vec(),
            TaskMode::Grid => {
                let mut out = Vec::new();
                for a in vocab.values(Attribute::Activity) {
                    for l in vocab.values(Attribute::Location) {
                        for t in vocab.values(Attribute::Time) {
                            out.push(TaskSpec::new(a, l, t).expect("vocabulary values are valid"));
                        }
                    }
                }
                out
            }
        };
        Simulator { config, vocab, tasks }
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    /// Uniform draw over the task set. Returns the 0-based task index too.
    pub fn sample_task<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, TaskSpec) {
        let i = rng.random_range(0..self.tasks.len());
        (i, self.tasks[i].clone())
    }

    /// What the user means to say in reply to an ask.
    pub fn user_utterance<R: Rng + ?Sized>(
        &self,
        task: &TaskSpec,
        asked: Attribute,
        initiative: Initiative,
        rng: &mut R,
    ) -> [Option<String>; 3] {
        user_utterance(task, asked, initiative, &self.config.profile, rng)
    }

    pub fn asr_decode<R: Rng + ?Sized>(
        &self,
        intent: &[Option<String>; 3],
        asked: Attribute,
        grammar: Grammar,
        rng: &mut R,
    ) -> AsrResult {
        asr_decode(intent, asked, grammar, &self.config.asr, &self.vocab, rng)
    }

    pub fn confirm_response<R: Rng + ?Sized>(&self, true_value: &str, perceived: &str, rng: &mut R) -> YesNo {
        confirm_response(true_value, perceived, &self.config.profile, rng)
    }

    /// Full recognizer reply to a system action, or `None` for actions the
    /// user does not answer.
    pub fn respond<R: Rng + ?Sized>(
        &self,
        task: &TaskSpec,
        action: DialogueAction,
        perceived: Option<&str>,
        rng: &mut R,
    ) -> Option<AsrResult> {
        let attr = action.attribute()?;
        if is_ask(action) {
            let init = action.initiative().expect("asks have an initiative");
            let intent = self.user_utterance(task, attr, init, rng);
            Some(self.asr_decode(&intent, attr, init.grammar(), rng))
        } else if action.elicits_reply() {
            let heard = perceived.expect("confirmation needs a perceived value");
            Some(AsrResult::Answer(self.confirm_response(task.value(attr), heard, rng)))
        } else {
            None
        }
    }

    pub fn web_feedback<R: Rng + ?Sized>(&self, binary_completion: i8, rng: &mut R) -> i8 {
        web_feedback(binary_completion, &self.config.feedback, rng)
    }

    /// Tertile thresholds of the utterance scores this simulator produces,
    /// estimated from `samples` scored utterances to random asks.
    pub fn calibrate<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> ConfidenceBins {
        let asks: Vec<DialogueAction> = DialogueAction::ALL.into_iter().filter(|a| is_ask(*a)).collect();
        let mut scores = Vec::with_capacity(samples);
        while scores.len() < samples {
            let (_, task) = self.sample_task(rng);
            let action = *asks.choose(rng).unwrap();
            let attr = action.attribute().unwrap();
            let init = action.initiative().unwrap();
            let intent = self.user_utterance(&task, attr, init, rng);
            if let AsrResult::Slots { confidence: Some(c), .. } = self.asr_decode(&intent, attr, init.grammar(), rng) {
                scores.push(c);
            }
        }
        ConfidenceBins::calibrate(&scores)
    }
}

fn is_ask(action: DialogueAction) -> bool {
    matches!(action.kind(), crate::domain::ActionKind::Ask { .. })
}

/// Silent with probability `p_silent`; otherwise the asked slot's true value,
/// plus each later slot with probability `p_overanswer` when the prompt is
/// open or the grammar nonrestrictive.
pub fn user_utterance<R: Rng + ?Sized>(
    task: &TaskSpec,
    asked: Attribute,
    initiative: Initiative,
    profile: &UserProfile,
    rng: &mut R,
) -> [Option<String>; 3] {
    let mut intent: [Option<String>; 3] = Default::default();
    if rng.random_bool(profile.p_silent) {
        return intent;
    }
    intent[asked.slot()] = Some(task.value(asked).to_string());
    let volunteers = initiative.prompt_type() == PromptType::Open || initiative.grammar() == Grammar::Nonrestrictive;
    if volunteers {
        for later in asked.later() {
            if rng.random_bool(profile.p_overanswer) {
                intent[later.slot()] = Some(task.value(later).to_string());
            }
        }
    }
    intent
}

/// Passes each in-grammar intended slot through capture / substitution /
/// deletion. The score comes from the corrupted distribution iff some slot
/// was substituted. Nothing perceived means no output and no score.
pub fn asr_decode<R: Rng + ?Sized>(
    intent: &[Option<String>; 3],
    asked: Attribute,
    grammar: Grammar,
    params: &AsrParams,
    vocab: &Vocabulary,
    rng: &mut R,
) -> AsrResult {
    let noise = params.noise(grammar);
    let mut slots: [Option<String>; 3] = Default::default();
    let mut substituted = false;
    for attr in Attribute::ALL {
        let in_grammar = match grammar {
            Grammar::Restrictive => attr == asked,
            Grammar::Nonrestrictive => attr >= asked,
        };
        let Some(value) = intent[attr.slot()].as_ref().filter(|_| in_grammar) else {
            continue;
        };
        let u: f64 = rng.random();
        if u < noise.p_capture {
            slots[attr.slot()] = Some(value.clone());
        } else if u < noise.p_capture + noise.p_substitute {
            let wrong: Vec<&String> = vocab.values(attr).iter().filter(|v| *v != value).collect();
            if let Some(w) = wrong.choose(rng) {
                slots[attr.slot()] = Some((*w).clone());
                substituted = true;
            }
        }
    }
    if slots.iter().all(Option::is_none) {
        return AsrResult::nothing();
    }
    let dist = if substituted { &params.corrupted } else { &params.correct };
    AsrResult::Slots { slots, confidence: Some(dist.sample(rng)) }
}

/// Truthful yes/no, flipped with probability `p_yesno_flip`; silent with
/// probability `p_silent`.
pub fn confirm_response<R: Rng + ?Sized>(true_value: &str, perceived: &str, profile: &UserProfile, rng: &mut R) -> YesNo {
    if rng.random_bool(profile.p_silent) {
        return YesNo::Silence;
    }
    let truthful = true_value == perceived;
    if truthful != rng.random_bool(profile.p_yesno_flip) {
        YesNo::Yes
    } else {
        YesNo::No
    }
}

/// Noisy feedback score drawn from the confusion row for the outcome.
pub fn web_feedback<R: Rng + ?Sized>(binary_completion: i8, confusion: &FeedbackConfusion, rng: &mut R) -> i8 {
    let row = if binary_completion == 1 { confusion.success } else { confusion.failure };
    let u: f64 = rng.random();
    if u < row[0] {
        -1
    } else if u < row[0] + row[1] {
        0
    } else {
        1
    }
}
