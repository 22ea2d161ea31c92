use crate::corpus::Corpus;
use crate::domain::{DialogueAction, Measure};
use crate::mdp::{ActionId, Episode, Policy, StateId};
use crate::space::StateSpace;

use super::HarnessError;

/// Monte Carlo estimate of a policy from logged dialogues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub n_consistent: usize,
    /// `None` when no logged dialogue is consistent with the policy.
    pub mean: Option<f64>,
}

/// The choice-state decisions of one episode, in order.
pub fn choice_decisions(episode: &Episode, allowed: &[Vec<ActionId>]) -> Vec<(StateId, ActionId)> {
    episode
        .steps
        .iter()
        .filter(|s| allowed.get(s.state.0).is_some_and(|a| a.len() > 1))
        .map(|s| (s.state, s.action))
        .collect()
}

/// An episode is consistent with `policy` when each logged choice-state
/// action is in the policy's choice set there.
pub fn is_consistent(decisions: &[(StateId, ActionId)], policy: &Policy) -> bool {
    decisions.iter().all(|&(s, a)| policy.allows(s, a))
}

/// Mean return over the episodes consistent with `policy`.
pub fn mc_estimate(episodes: &[Episode], allowed: &[Vec<ActionId>], policy: &Policy) -> McEstimate {
    let mut n = 0;
    let mut total = 0.0;
    for e in episodes {
        if is_consistent(&choice_decisions(e, allowed), policy) {
            n += 1;
            total += e.steps.iter().map(|s| s.reward).sum::<f64>();
        }
    }
    McEstimate { n_consistent: n, mean: (n > 0).then(|| total / n as f64) }
}

/// Monte Carlo estimate over a logged corpus. Only exploratory corpora give
/// unbiased estimates; anything else is refused unless `allow_biased`.
pub fn mc_evaluate(
    corpus: &Corpus,
    space: &StateSpace,
    policy: &Policy,
    measure: Measure,
    allow_biased: bool,
) -> Result<McEstimate, HarnessError> {
    if !allow_biased && !corpus.is_exploratory() {
        return Err(HarnessError::NotExploratory);
    }
    Ok(mc_estimate(&corpus.episodes(space, measure), &space.allowed_ids(), policy))
}

/// A fixed policy defined by a set of preferred actions: at every
/// choice-state it takes the one listed action among the two allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceRule {
    pub name: String,
    pub prefer: Vec<DialogueAction>,
}

impl PreferenceRule {
    pub fn new(name: &str, prefer: &[DialogueAction]) -> Self {
        Self { name: name.into(), prefer: prefer.to_vec() }
    }

    /// Parses a comma- or space-separated action list.
    pub fn parse(name: &str, text: &str) -> Result<Self, HarnessError> {
        let prefer = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<DialogueAction>().map_err(|e| HarnessError::Format(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { name: name.into(), prefer })
    }

    /// Fails if some choice-state has zero or two preferred actions.
    pub fn policy(&self, space: &StateSpace) -> Result<Policy, HarnessError> {
        let mut picks = Vec::new();
        for s in 0..space.n_states() {
            let s = StateId(s);
            let allowed = space.allowed(s);
            let chosen: Vec<DialogueAction> = if allowed.len() == 1 {
                allowed.to_vec()
            } else {
                allowed.iter().copied().filter(|a| self.prefer.contains(a)).collect()
            };
            match chosen.as_slice() {
                [] if allowed.is_empty() => {}
                [a] => picks.push((s, space.action_id(*a))),
                _ => {
                    return Err(HarnessError::Format(format!(
                        "policy {} must prefer exactly one of {:?} at {}",
                        self.name,
                        allowed,
                        space.label(s)
                    )))
                }
            }
        }
        Ok(Policy::deterministic(space.n_states(), picks))
    }
}

/// The five standard fixed policies, in report order. `mixed` overrides the
/// default Mixed definition.
pub fn baseline_rules(mixed: Option<PreferenceRule>) -> Vec<PreferenceRule> {
    use DialogueAction::*;
    let sys = [GreetS, ReAsk1S, Ask2S, ReAsk2S];
    let user = [GreetU, ReAsk1M, Ask2U, ReAsk2M];
    let with = |asks: &[DialogueAction], extra: &[DialogueAction]| [asks, extra].concat();
    vec![
        PreferenceRule::new("SysNoconfirm", &with(&sys, &[NoConf])),
        PreferenceRule::new("SysConfirm", &with(&sys, &[ExpConf1, ExpConf2, ExpConf3])),
        PreferenceRule::new("UserNoconfirm", &with(&user, &[NoConf])),
        PreferenceRule::new("UserConfirm", &with(&user, &[ExpConf1, ExpConf2, ExpConf3])),
        mixed.unwrap_or_else(default_mixed),
    ]
}

/// Open greeting, system-initiative first ask for the location,
/// mixed-initiative reasks, no confirmation.
pub fn default_mixed() -> PreferenceRule {
    use DialogueAction::*;
    PreferenceRule::new("Mixed", &[GreetU, ReAsk1M, Ask2S, ReAsk2M, NoConf])
}

pub fn baseline_policies(space: &StateSpace, mixed: Option<PreferenceRule>) -> Vec<(String, Policy)> {
    baseline_rules(mixed)
        .into_iter()
        .map(|r| {
            let p = r.policy(space).expect("standard rules cover every choice-state");
            (r.name, p)
        })
        .collect()
}
