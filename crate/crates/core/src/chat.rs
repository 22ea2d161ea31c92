//! Interactive dialogues: a person types the user side.
//!
//! Replies to asks are scanned for known slot values ("wineries in
//! Lambertville" names an activity and a town); replies to confirmations are
//! read as yes or no, and an empty line is silence. Unless verbatim, replies
//! go through the simulated recognizer before the dialogue machine sees them.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::corpus::LoggedStep;
use crate::domain::{
    estimate_state, evaluate_rewards, ActionKind, ActivityDatabase, AsrResult, Attribute, DialogueAction,
    DialogueMachine, Grammar, OperationsVector, RewardBundle, TaskSpec, YesNo,
};
use crate::harness::CollectMode;
use crate::sim::{Simulator, Vocabulary};

/// Slot values mentioned in `line`, matched case-insensitively on word
/// boundaries; longer values win over values they contain.
pub fn parse_slots(line: &str, vocab: &Vocabulary) -> [Option<String>; 3] {
    let text = format!(" {} ", normalize(line));
    let mut out: [Option<String>; 3] = Default::default();
    for attr in Attribute::ALL {
        let mut best: Option<&String> = None;
        for v in vocab.values(attr) {
            if text.contains(&format!(" {} ", normalize(v))) && best.is_none_or(|b| v.len() > b.len()) {
                best = Some(v);
            }
        }
        out[attr.slot()] = best.cloned();
    }
    out
}

fn normalize(s: &str) -> String {
    s.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_yes_no(line: &str) -> YesNo {
    let words = normalize(line);
    match words.split(' ').next().unwrap_or("") {
        "" => YesNo::Silence,
        "yes" | "y" | "yeah" | "yep" | "correct" | "right" => YesNo::Yes,
        _ => YesNo::No,
    }
}

/// Outcome of one interactive dialogue.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatOutcome {
    pub steps: Vec<LoggedStep>,
    pub rewards: RewardBundle,
    /// Prompts spoken by the system.
    pub system_turns: usize,
}

fn describe(slots: &[Option<String>; 3]) -> String {
    let parts: Vec<&str> = slots.iter().map(|s| s.as_deref().unwrap_or("-")).collect();
    format!("({})", parts.join(", "))
}

/// Runs one dialogue against `input`, writing the transcript to `output`.
/// Running out of input counts as silence.
#[allow(clippy::too_many_arguments)]
pub fn run_chat<I: BufRead, O: Write, R: Rng>(
    mut input: I,
    output: &mut O,
    machine: &DialogueMachine,
    sim: &Simulator,
    db: &ActivityDatabase,
    task: &TaskSpec,
    mode: &CollectMode<'_>,
    verbatim: bool,
    rng: &mut R,
) -> std::io::Result<ChatOutcome> {
    let mut ops = OperationsVector::new();
    let mut steps = Vec::new();
    let mut system_turns = 0;
    writeln!(output, "task: {task}")?;
    loop {
        let state = estimate_state(&ops);
        let allowed = machine.table().allowed(&state).expect("machine stays in legal states");
        let action = mode.choose(&state, &allowed, rng);
        writeln!(output, "[{state}] {action}")?;
        let perceived = match action.kind() {
            ActionKind::Confirm => action.attribute().and_then(|a| ops.slot(a).value.clone()),
            _ => None,
        };
        let prompt = action.prompt(perceived.as_deref());
        if !prompt.is_empty() {
            writeln!(output, "S: {prompt}")?;
            system_turns += 1;
        }
        if action == DialogueAction::Tell {
            let query = ops.query_binding();
            let mut rewards = evaluate_rewards(&query, task);
            rewards.web_feedback = sim.web_feedback(rewards.binary_completion, rng);
            let hits = db.query(&query);
            writeln!(output, "query {query}: {} match(es)", hits.len())?;
            for row in hits.iter().take(10) {
                writeln!(output, "  {} ({}, {}, {})", row.name, row.activity, row.location, row.time)?;
            }
            writeln!(
                output,
                "rewards: binary={} weak={} asr={} web_feedback={}",
                rewards.binary_completion, rewards.weak_completion, rewards.asr_score, rewards.web_feedback
            )?;
            steps.push(LoggedStep { state, action, reward: f64::from(rewards.binary_completion) });
            return Ok(ChatOutcome { steps, rewards, system_turns });
        }
        let asr = if action.elicits_reply() {
            write!(output, "U> ")?;
            output.flush()?;
            let mut line = String::new();
            input.read_line(&mut line)?;
            let line = line.trim_end_matches(['\n', '\r']);
            writeln!(output, "{line}")?;
            let heard = hear(action, line, sim, verbatim, rng);
            match &heard {
                AsrResult::Slots { slots, confidence: Some(c) } => {
                    writeln!(output, "   heard {} score {c:.3} bin {}", describe(slots), machine.bins().bin(*c))?
                }
                AsrResult::Slots { .. } => writeln!(output, "   heard nothing")?,
                AsrResult::Answer(a) => writeln!(output, "   heard {a:?}")?,
            }
            Some(heard)
        } else {
            None
        };
        ops = machine.advance(&ops, action, asr.as_ref()).expect("chosen actions are legal");
        steps.push(LoggedStep { state, action, reward: 0.0 });
    }
}

fn hear<R: Rng>(
    action: DialogueAction,
    line: &str,
    sim: &Simulator,
    verbatim: bool,
    rng: &mut R,
) -> AsrResult {
    if action.kind() == ActionKind::Confirm {
        let said = parse_yes_no(line);
        if verbatim || said == YesNo::Silence || !rng.random_bool(sim.config.profile.p_yesno_flip) {
            return AsrResult::Answer(said);
        }
        return AsrResult::Answer(if said == YesNo::Yes { YesNo::No } else { YesNo::Yes });
    }
    let attr = action.attribute().expect("asks name an attribute");
    let grammar = action.initiative().expect("asks have an initiative").grammar();
    let intent = parse_slots(line, &sim.vocab);
    if !verbatim {
        return sim.asr_decode(&intent, attr, grammar, rng);
    }
    let mut slots: [Option<String>; 3] = Default::default();
    for a in Attribute::ALL {
        let in_grammar = if grammar == Grammar::Restrictive { a == attr } else { a >= attr };
        if in_grammar {
            slots[a.slot()] = intent[a.slot()].clone();
        }
    }
    if slots.iter().all(Option::is_none) {
        AsrResult::nothing()
    } else {
        AsrResult::Slots { slots, confidence: Some(1.0) }
    }
}
