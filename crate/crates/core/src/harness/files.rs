//! Text formats for model snapshots and policies.
//!
//! Snapshot:
//!
//! ```text
//! measure binary
//! states 62
//! actions 15
//! 0100000 GreetS 155 -87 1101010:52 1111010:49 1121010:43 1100100:11
//! ```
//!
//! Each data row is `state action visits reward_sum successor:count...`.
//! The terminal is written `TERMINAL`.
//!
//! Policy: one choice-state per line, `state action [action] [unlearned]`.
//! Non-choice states take their single allowed action on load.

use std::fmt::Write as _;

use crate::domain::{DialogueAction, Measure};
use crate::mdp::{ActionId, Choice, EmpiricalMdp, Policy, StateId};
use crate::space::StateSpace;

use super::HarnessError;

fn bad(line: usize, reason: impl Into<String>) -> HarnessError {
    HarnessError::Format(format!("line {line}: {}", reason.into()))
}

pub fn write_snapshot(mdp: &EmpiricalMdp, space: &StateSpace, measure: Measure) -> String {
    let mut out = String::new();
    writeln!(out, "# empirical dialogue model: state action visits reward_sum successor:count...").unwrap();
    writeln!(out, "measure {}", measure.name()).unwrap();
    writeln!(out, "states {}", mdp.n_states()).unwrap();
    writeln!(out, "actions {}", mdp.n_actions()).unwrap();
    for (s, a) in mdp.observed_pairs() {
        write!(out, "{} {} {} {}", space.label(s), space.action(a), mdp.visit_count(s, a), mdp.reward_sum(s, a)).unwrap();
        for (next, count) in mdp.successor_counts(s, a) {
            write!(out, " {}:{count}", space.label(next)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_snapshot(text: &str, space: &StateSpace) -> Result<(EmpiricalMdp, Measure), HarnessError> {
    let mut measure = None;
    let mut mdp = EmpiricalMdp::new(space.n_states(), space.n_actions(), space.terminal());
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["measure", m] => measure = Some(Measure::parse(m).ok_or_else(|| bad(n, format!("unknown measure '{m}'")))?),
            ["states", k] => {
                if k.parse::<usize>().ok() != Some(space.n_states()) {
                    return Err(bad(n, format!("snapshot has {k} states, expected {}", space.n_states())));
                }
            }
            ["actions", k] => {
                if k.parse::<usize>().ok() != Some(space.n_actions()) {
                    return Err(bad(n, format!("snapshot has {k} actions, expected {}", space.n_actions())));
                }
            }
            [state, action, visits, reward_sum, successors @ ..] => {
                let s = space.parse_label(state).ok_or_else(|| bad(n, format!("unknown state '{state}'")))?;
                let a: DialogueAction = action.parse().map_err(|e: crate::domain::DomainError| bad(n, e.to_string()))?;
                let visits: u64 = visits.parse().map_err(|_| bad(n, format!("bad visit count '{visits}'")))?;
                let reward_sum: f64 = reward_sum.parse().map_err(|_| bad(n, format!("bad reward sum '{reward_sum}'")))?;
                let mut succ = Vec::new();
                for item in successors {
                    let (label, count) = item.split_once(':').ok_or_else(|| bad(n, format!("bad successor '{item}'")))?;
                    let next = space.parse_label(label).ok_or_else(|| bad(n, format!("unknown state '{label}'")))?;
                    let count: u64 = count.parse().map_err(|_| bad(n, format!("bad count '{count}'")))?;
                    succ.push((next, count));
                }
                if succ.iter().map(|(_, c)| c).sum::<u64>() != visits {
                    return Err(bad(n, "successor counts do not add up to the visit count"));
                }
                mdp.add_counts(s, space.action_id(a), reward_sum, &succ);
            }
            _ => return Err(bad(n, format!("unrecognized line '{line}'"))),
        }
    }
    let measure = measure.ok_or_else(|| HarnessError::Format("snapshot has no measure line".into()))?;
    Ok((mdp, measure))
}

/// Lists every choice-state the policy covers.
pub fn write_policy(policy: &Policy, space: &StateSpace, name: &str) -> String {
    let mut out = String::new();
    writeln!(out, "# policy {name}: choice-state actions").unwrap();
    for s in space.choice_states() {
        let Some(c) = policy.choice(s) else { continue };
        write!(out, "{}", space.label(s)).unwrap();
        for &a in &c.actions {
            write!(out, " {}", space.action(a)).unwrap();
        }
        if c.unlearned {
            out.push_str(" unlearned");
        }
        out.push('\n');
    }
    out
}

/// Choice-states missing from the file allow both actions.
pub fn read_policy(text: &str, space: &StateSpace) -> Result<Policy, HarnessError> {
    let mut choices: Vec<Option<Choice>> = (0..space.n_states())
        .map(|s| {
            let acts: Vec<ActionId> = space.allowed(StateId(s)).iter().map(|&a| space.action_id(a)).collect();
            (!acts.is_empty()).then_some(Choice { actions: acts, unlearned: false })
        })
        .collect();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = tokens.next().expect("non-empty line");
        let s = space.parse_label(label).ok_or_else(|| bad(n, format!("unknown state '{label}'")))?;
        let mut actions = Vec::new();
        let mut unlearned = false;
        for t in tokens {
            if t == "unlearned" {
                unlearned = true;
                continue;
            }
            let a: DialogueAction = t.parse().map_err(|e: crate::domain::DomainError| bad(n, e.to_string()))?;
            if !space.allowed(s).contains(&a) {
                return Err(bad(n, format!("{a} is not allowed in {label}")));
            }
            actions.push(space.action_id(a));
        }
        if actions.is_empty() {
            return Err(bad(n, format!("no action for {label}")));
        }
        choices[s.0] = Some(Choice { actions, unlearned });
    }
    Ok(Policy::new(choices))
}
