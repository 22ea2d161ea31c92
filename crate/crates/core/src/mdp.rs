//! Tabular MDP estimation from logged episodes, Q-value iteration, greedy
//! policy extraction and policy evaluation.
//!
//! Everything here works over dense integer ids; the dialogue domain maps its
//! feature vectors and named actions onto them. Pairs that never occur in the
//! data stay *unobserved*: they are skipped by every maximum and never enter a
//! learned policy unless a state has nothing else to offer.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

/// Dense index into a state table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

/// Dense index into an action table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub usize);

#[derive(Debug, Error, PartialEq)]
pub enum MdpError {
    #[error("trajectory {trajectory}, step {step}: {what} id {id} out of range")]
    InvalidId {
        trajectory: usize,
        step: usize,
        what: &'static str,
        id: usize,
    },
    #[error("trajectory {trajectory}, step {step}: transition out of the terminal state")]
    FromTerminal { trajectory: usize, step: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("observed transitions contain a cycle through state {0}; gamma = 1 may diverge")]
    Cycle(usize),
    #[error("value iteration did not converge within {0} sweeps")]
    NotConverged(usize),
}

/// One logged exchange: the system was in `state`, took `action` and
/// received `reward`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: StateId,
    pub action: ActionId,
    pub reward: f64,
}

/// A complete episode. Step `i` transitions into the state of step `i + 1`;
/// the last step transitions into the terminal state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Episode {
    pub steps: Vec<Step>,
}

impl Episode {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }
}

/// Transition counts and reward sums over (state, action) pairs.
///
/// Probabilities and mean rewards are derived from the counts on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMdp {
    n_states: usize,
    n_actions: usize,
    terminal: StateId,
    visits: Vec<u64>,
    reward_sums: Vec<f64>,
    transitions: Vec<BTreeMap<usize, u64>>,
}

impl EmpiricalMdp {
    /// An empty model in which every pair is unobserved.
    pub fn new(n_states: usize, n_actions: usize, terminal: StateId) -> Self {
        assert!(terminal.0 < n_states, "terminal id outside the state table");
        let pairs = n_states * n_actions;
        Self {
            n_states,
            n_actions,
            terminal,
            visits: vec![0; pairs],
            reward_sums: vec![0.0; pairs],
            transitions: vec![BTreeMap::new(); pairs],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn terminal(&self) -> StateId {
        self.terminal
    }

    fn pair(&self, s: StateId, a: ActionId) -> usize {
        s.0 * self.n_actions + a.0
    }

    /// Records one observed transition. Ids must be in range.
    pub fn observe(&mut self, s: StateId, a: ActionId, reward: f64, next: StateId) {
        assert!(s.0 < self.n_states && a.0 < self.n_actions && next.0 < self.n_states);
        let p = self.pair(s, a);
        self.visits[p] += 1;
        self.reward_sums[p] += reward;
        *self.transitions[p].entry(next.0).or_insert(0) += 1;
    }

    /// Adds a batch of counts for one pair at once (snapshot loading).
    pub fn add_counts(
        &mut self,
        s: StateId,
        a: ActionId,
        reward_sum: f64,
        successors: &[(StateId, u64)],
    ) {
        let p = self.pair(s, a);
        for &(next, count) in successors {
            assert!(next.0 < self.n_states);
            self.visits[p] += count;
            *self.transitions[p].entry(next.0).or_insert(0) += count;
        }
        self.reward_sums[p] += reward_sum;
    }

    pub fn visit_count(&self, s: StateId, a: ActionId) -> u64 {
        self.visits[self.pair(s, a)]
    }

    pub fn is_observed(&self, s: StateId, a: ActionId) -> bool {
        self.visit_count(s, a) > 0
    }

    pub fn transition_count(&self, s: StateId, a: ActionId, next: StateId) -> u64 {
        self.transitions[self.pair(s, a)]
            .get(&next.0)
            .copied()
            .unwrap_or(0)
    }

    pub fn reward_sum(&self, s: StateId, a: ActionId) -> f64 {
        self.reward_sums[self.pair(s, a)]
    }

    /// `None` when the pair is unobserved.
    pub fn transition_prob(&self, s: StateId, a: ActionId, next: StateId) -> Option<f64> {
        let n = self.visit_count(s, a);
        (n > 0).then(|| self.transition_count(s, a, next) as f64 / n as f64)
    }

    /// Mean reward; `None` when the pair is unobserved.
    pub fn reward(&self, s: StateId, a: ActionId) -> Option<f64> {
        let n = self.visit_count(s, a);
        (n > 0).then(|| self.reward_sum(s, a) / n as f64)
    }

    /// Successor states with their probabilities, in state-id order.
    pub fn successors(&self, s: StateId, a: ActionId) -> impl Iterator<Item = (StateId, f64)> + '_ {
        let p = self.pair(s, a);
        let n = self.visits[p] as f64;
        self.transitions[p]
            .iter()
            .map(move |(&next, &c)| (StateId(next), c as f64 / n))
    }

    /// Successor states with raw counts.
    pub fn successor_counts(&self, s: StateId, a: ActionId) -> impl Iterator<Item = (StateId, u64)> + '_ {
        self.transitions[self.pair(s, a)]
            .iter()
            .map(|(&next, &c)| (StateId(next), c))
    }

    /// Every observed pair in (state, action) order.
    pub fn observed_pairs(&self) -> impl Iterator<Item = (StateId, ActionId)> + '_ {
        (0..self.n_states).flat_map(move |s| {
            (0..self.n_actions)
                .map(move |a| (StateId(s), ActionId(a)))
                .filter(move |&(s, a)| self.is_observed(s, a))
        })
    }

    /// Multiplies every reward sum by `factor`.
    pub fn scale_rewards(&mut self, factor: f64) {
        for r in &mut self.reward_sums {
            *r *= factor;
        }
    }

    /// Fails with the first state found on a cycle of observed transitions
    /// among non-terminal states (self-loops included).
    pub fn check_acyclic(&self) -> Result<(), MdpError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let mut marks = vec![Mark::New; self.n_states];
        for root in 0..self.n_states {
            if marks[root] != Mark::New || root == self.terminal.0 {
                continue;
            }
            // iterative DFS; frame = (state, next action to expand, successor cursor)
            let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
            marks[root] = Mark::Open;
            stack.push((root, self.next_states(root), 0));
            while let Some((s, succ, cursor)) = stack.last_mut() {
                if *cursor == succ.len() {
                    marks[*s] = Mark::Done;
                    stack.pop();
                    continue;
                }
                let next = succ[*cursor];
                *cursor += 1;
                if next == self.terminal.0 {
                    continue;
                }
                match marks[next] {
                    Mark::Open => return Err(MdpError::Cycle(next)),
                    Mark::Done => {}
                    Mark::New => {
                        marks[next] = Mark::Open;
                        let succ = self.next_states(next);
                        stack.push((next, succ, 0));
                    }
                }
            }
        }
        Ok(())
    }

    fn next_states(&self, s: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.n_actions)
            .flat_map(|a| self.transitions[s * self.n_actions + a].keys().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Samples one episode from the model, starting at `start` and choosing
    /// actions with `choose`. Rewards are the model's mean rewards. Sampling
    /// stops at the terminal state, or when `choose` picks an unobserved pair.
    pub fn sample_episode<R: Rng + ?Sized>(
        &self,
        start: StateId,
        mut choose: impl FnMut(StateId, &mut R) -> ActionId,
        rng: &mut R,
    ) -> Episode {
        let mut steps = Vec::new();
        let mut s = start;
        while s != self.terminal {
            let a = choose(s, rng);
            let n = self.visit_count(s, a);
            if n == 0 {
                break;
            }
            let reward = self.reward(s, a).unwrap_or(0.0);
            steps.push(Step { state: s, action: a, reward });
            let mut ticket = rng.random_range(0..n);
            let mut next = self.terminal;
            for (cand, count) in self.successor_counts(s, a) {
                if ticket < count {
                    next = cand;
                    break;
                }
                ticket -= count;
            }
            s = next;
        }
        Episode { steps }
    }
}

/// Builds the empirical model by counting over every logged transition.
pub fn estimate_mdp(
    episodes: &[Episode],
    n_states: usize,
    n_actions: usize,
    terminal: StateId,
) -> Result<EmpiricalMdp, MdpError> {
    let mut mdp = EmpiricalMdp::new(n_states, n_actions, terminal);
    for (t, ep) in episodes.iter().enumerate() {
        for (i, step) in ep.steps.iter().enumerate() {
            if step.state.0 >= n_states {
                return Err(MdpError::InvalidId { trajectory: t, step: i, what: "state", id: step.state.0 });
            }
            if step.action.0 >= n_actions {
                return Err(MdpError::InvalidId { trajectory: t, step: i, what: "action", id: step.action.0 });
            }
            if step.state == terminal {
                return Err(MdpError::FromTerminal { trajectory: t, step: i });
            }
        }
        for (i, step) in ep.steps.iter().enumerate() {
            let next = ep.steps.get(i + 1).map_or(terminal, |n| n.state);
            mdp.observe(step.state, step.action, step.reward, next);
        }
    }
    Ok(mdp)
}

/// Q-values for every observed pair.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    q: Vec<Option<f64>>,
    gamma: f64,
    sweeps: usize,
}

impl QTable {
    /// `None` marks an unobserved pair.
    pub fn q(&self, s: StateId, a: ActionId) -> Option<f64> {
        self.q[s.0 * self.n_actions + a.0]
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Number of full sweeps performed, including the one that detected convergence.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// max over observed actions, 0 when the state has none.
    pub fn state_value(&self, s: StateId) -> f64 {
        max_observed(&self.q[s.0 * self.n_actions..(s.0 + 1) * self.n_actions]).unwrap_or(0.0)
    }
}

fn max_observed(row: &[Option<f64>]) -> Option<f64> {
    row.iter().flatten().copied().reduce(f64::max)
}

const MAX_SWEEPS: usize = 1_000_000;

fn check_discount(mdp: &EmpiricalMdp, gamma: f64) -> Result<(), MdpError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(MdpError::InvalidParameter(format!("gamma {gamma} outside [0, 1]")));
    }
    if gamma == 1.0 {
        mdp.check_acyclic()?;
    }
    Ok(())
}

/// Synchronous Q-value iteration until the max-norm change of a sweep drops
/// below `threshold`.
pub fn value_iterate(mdp: &EmpiricalMdp, gamma: f64, threshold: f64) -> Result<QTable, MdpError> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(MdpError::InvalidParameter(format!("threshold {threshold} must be positive")));
    }
    check_discount(mdp, gamma)?;

    let na = mdp.n_actions;
    let pairs: Vec<(StateId, ActionId)> = mdp.observed_pairs().collect();
    let mut q: Vec<Option<f64>> = vec![None; mdp.n_states * na];
    for &(s, a) in &pairs {
        q[s.0 * na + a.0] = Some(0.0);
    }

    let mut sweeps = 0;
    loop {
        if sweeps == MAX_SWEEPS {
            return Err(MdpError::NotConverged(MAX_SWEEPS));
        }
        sweeps += 1;
        let values: Vec<f64> = (0..mdp.n_states)
            .map(|s| {
                if s == mdp.terminal.0 {
                    0.0
                } else {
                    max_observed(&q[s * na..(s + 1) * na]).unwrap_or(0.0)
                }
            })
            .collect();
        let mut delta: f64 = 0.0;
        for &(s, a) in &pairs {
            let backup: f64 = mdp.successors(s, a).map(|(n, p)| p * values[n.0]).sum();
            let new = mdp.reward(s, a).unwrap_or(0.0) + gamma * backup;
            let slot = &mut q[s.0 * na + a.0];
            delta = delta.max((new - slot.unwrap_or(0.0)).abs());
            *slot = Some(new);
        }
        if delta < threshold {
            break;
        }
    }

    Ok(QTable { n_states: mdp.n_states, n_actions: na, q, gamma, sweeps })
}

/// Allowed actions at one state, as chosen by a policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choice {
    pub actions: Vec<ActionId>,
    /// Set when the state had no observed action and the choice fell back to
    /// the full allowed set.
    pub unlearned: bool,
}

/// Maps states to non-empty action subsets. Multi-action sets are resolved
/// uniformly at random when executed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    choices: Vec<Option<Choice>>,
}

impl Policy {
    pub fn new(choices: Vec<Option<Choice>>) -> Self {
        debug_assert!(choices.iter().flatten().all(|c| !c.actions.is_empty()));
        Self { choices }
    }

    /// A policy picking exactly one action per listed state.
    pub fn deterministic(n_states: usize, picks: impl IntoIterator<Item = (StateId, ActionId)>) -> Self {
        let mut choices = vec![None; n_states];
        for (s, a) in picks {
            choices[s.0] = Some(Choice { actions: vec![a], unlearned: false });
        }
        Self { choices }
    }

    pub fn n_states(&self) -> usize {
        self.choices.len()
    }

    pub fn choice(&self, s: StateId) -> Option<&Choice> {
        self.choices.get(s.0).and_then(Option::as_ref)
    }

    pub fn allows(&self, s: StateId, a: ActionId) -> bool {
        self.choice(s).is_some_and(|c| c.actions.contains(&a))
    }

    pub fn is_deterministic(&self) -> bool {
        self.choices.iter().flatten().all(|c| c.actions.len() == 1)
    }

    pub fn choices(&self) -> impl Iterator<Item = (StateId, &Choice)> {
        self.choices
            .iter()
            .enumerate()
            .filter_map(|(s, c)| c.as_ref().map(|c| (StateId(s), c)))
    }

    /// Resolves every tie with `pick`, which receives the tied set.
    pub fn refine(&self, mut pick: impl FnMut(StateId, &[ActionId]) -> ActionId) -> Policy {
        let choices = self
            .choices
            .iter()
            .enumerate()
            .map(|(s, c)| {
                c.as_ref().map(|c| {
                    let a = if c.actions.len() == 1 { c.actions[0] } else { pick(StateId(s), &c.actions) };
                    debug_assert!(c.actions.contains(&a));
                    Choice { actions: vec![a], unlearned: c.unlearned }
                })
            })
            .collect();
        Policy { choices }
    }
}

/// Keeps, at every state, the observed actions whose Q-value is within
/// `tie_epsilon` of the best. `allowed[s]` is the domain's action set at `s`;
/// states with an empty set get no entry.
pub fn greedy_policy(qtable: &QTable, allowed: &[Vec<ActionId>], tie_epsilon: f64) -> Policy {
    assert!(tie_epsilon >= 0.0, "tie_epsilon must be non-negative");
    let choices = allowed
        .iter()
        .enumerate()
        .map(|(s, acts)| {
            if acts.is_empty() {
                return None;
            }
            if acts.len() == 1 {
                return Some(Choice { actions: acts.clone(), unlearned: false });
            }
            let s = StateId(s);
            let observed: Vec<(ActionId, f64)> =
                acts.iter().filter_map(|&a| qtable.q(s, a).map(|q| (a, q))).collect();
            let Some(best) = observed.iter().map(|&(_, q)| q).reduce(f64::max) else {
                return Some(Choice { actions: acts.clone(), unlearned: true });
            };
            let actions = observed
                .into_iter()
                .filter(|&(_, q)| q >= best - tie_epsilon)
                .map(|(a, _)| a)
                .collect();
            Some(Choice { actions, unlearned: false })
        })
        .collect();
    Policy { choices }
}

/// State values of a policy under the model.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValues {
    pub values: Vec<f64>,
    /// States whose policy actions are all unobserved (value forced to 0).
    pub unobserved: Vec<bool>,
}

impl PolicyValues {
    pub fn value(&self, s: StateId) -> f64 {
        self.values[s.0]
    }
}

/// Iterative policy evaluation. Tie sets are averaged uniformly over their
/// observed members.
pub fn policy_value(mdp: &EmpiricalMdp, policy: &Policy, gamma: f64) -> Result<PolicyValues, MdpError> {
    check_discount(mdp, gamma)?;
    let n = mdp.n_states;
    let mut unobserved = vec![false; n];
    // (state, observed actions of its choice)
    let mut rows: Vec<(StateId, Vec<ActionId>)> = Vec::new();
    for s in 0..n {
        let s_id = StateId(s);
        if s_id == mdp.terminal {
            continue;
        }
        if let Some(choice) = policy.choice(s_id) {
            let obs: Vec<ActionId> = choice.actions.iter().copied().filter(|&a| mdp.is_observed(s_id, a)).collect();
            if obs.is_empty() {
                unobserved[s] = true;
            } else {
                rows.push((s_id, obs));
            }
        }
    }

    let mut values = vec![0.0; n];
    let mut sweeps = 0;
    loop {
        if sweeps == MAX_SWEEPS {
            return Err(MdpError::NotConverged(MAX_SWEEPS));
        }
        sweeps += 1;
        let mut next = values.clone();
        let mut delta: f64 = 0.0;
        for (s, acts) in &rows {
            let total: f64 = acts
                .iter()
                .map(|&a| {
                    let backup: f64 = mdp.successors(*s, a).map(|(n, p)| p * values[n.0]).sum();
                    mdp.reward(*s, a).unwrap_or(0.0) + gamma * backup
                })
                .sum();
            let v = total / acts.len() as f64;
            delta = delta.max((v - values[s.0]).abs());
            next[s.0] = v;
        }
        values = next;
        if delta <= 1e-13 {
            break;
        }
    }
    Ok(PolicyValues { values, unobserved })
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: StateId = StateId(3);

    fn ep(steps: &[(usize, usize, f64)]) -> Episode {
        Episode::new(
            steps
                .iter()
                .map(|&(s, a, r)| Step { state: StateId(s), action: ActionId(a), reward: r })
                .collect(),
        )
    }

    /// s0 -a(0)-> s1; s1 -b(1)-> T; s1 -c(0)-> T
    fn chain() -> EmpiricalMdp {
        estimate_mdp(&[ep(&[(0, 0, 0.0), (1, 1, 1.0)]), ep(&[(0, 0, 0.0), (1, 2, 0.0)])], 4, 3, T).unwrap()
    }

    #[test]
    fn single_observation_is_certain() {
        let m = estimate_mdp(&[ep(&[(0, 0, 1.0)])], 4, 3, T).unwrap();
        assert_eq!(m.transition_prob(StateId(0), ActionId(0), T), Some(1.0));
        assert_eq!(m.reward(StateId(0), ActionId(0)), Some(1.0));
    }

    #[test]
    fn hand_counted_split() {
        let m = estimate_mdp(
            &[ep(&[(0, 0, 0.0), (1, 0, 0.0)]), ep(&[(0, 0, 0.0), (1, 1, 0.0)]), ep(&[(0, 0, 0.0), (2, 0, 0.0)])],
            4,
            3,
            T,
        )
        .unwrap();
        let p1 = m.transition_prob(StateId(0), ActionId(0), StateId(1)).unwrap();
        let p2 = m.transition_prob(StateId(0), ActionId(0), StateId(2)).unwrap();
        assert!((p1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((p2 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.visit_count(StateId(0), ActionId(0)), 3);
    }

    #[test]
    fn empty_corpus_is_all_unobserved() {
        let m = estimate_mdp(&[], 4, 3, T).unwrap();
        assert_eq!(m.observed_pairs().count(), 0);
        assert_eq!(m.reward(StateId(0), ActionId(0)), None);
        let q = value_iterate(&m, 1.0, 1e-9).unwrap();
        assert_eq!(q.q(StateId(0), ActionId(0)), None);
    }

    #[test]
    fn invalid_ids_name_the_trajectory() {
        let err = estimate_mdp(&[ep(&[(0, 0, 0.0)]), ep(&[(0, 7, 0.0)])], 4, 3, T).unwrap_err();
        assert_eq!(err, MdpError::InvalidId { trajectory: 1, step: 0, what: "action", id: 7 });
        let err = estimate_mdp(&[ep(&[(9, 0, 0.0)])], 4, 3, T).unwrap_err();
        assert!(matches!(err, MdpError::InvalidId { trajectory: 0, what: "state", .. }));
    }

    #[test]
    fn chain_values_match_enumeration() {
        // two deterministic policies at s1: b gives 1, c gives 0
        let q = value_iterate(&chain(), 1.0, 1e-9).unwrap();
        assert_eq!(q.q(StateId(1), ActionId(1)), Some(1.0));
        assert_eq!(q.q(StateId(1), ActionId(2)), Some(0.0));
        assert_eq!(q.q(StateId(0), ActionId(0)), Some(1.0));
        assert!(q.sweeps() <= 4);

        let allowed = vec![vec![ActionId(0)], vec![ActionId(1), ActionId(2)], vec![], vec![]];
        let pi = greedy_policy(&q, &allowed, 1e-9);
        assert_eq!(pi.choice(StateId(1)).unwrap().actions, vec![ActionId(1)]);

        let m = chain();
        let to_b = Policy::deterministic(4, [(StateId(0), ActionId(0)), (StateId(1), ActionId(1))]);
        let to_c = Policy::deterministic(4, [(StateId(0), ActionId(0)), (StateId(1), ActionId(2))]);
        assert_eq!(policy_value(&m, &to_b, 1.0).unwrap().value(StateId(0)), 1.0);
        assert_eq!(policy_value(&m, &to_c, 1.0).unwrap().value(StateId(0)), 0.0);
    }

    #[test]
    fn zero_discount_gives_immediate_reward() {
        let q = value_iterate(&chain(), 0.0, 1e-9).unwrap();
        assert_eq!(q.q(StateId(0), ActionId(0)), Some(0.0));
        assert_eq!(q.q(StateId(1), ActionId(1)), Some(1.0));
    }

    #[test]
    fn terminal_only_model_returns_rewards() {
        let m = estimate_mdp(&[ep(&[(0, 0, 0.5)]), ep(&[(0, 1, -0.25)]), ep(&[(1, 0, 2.0)])], 4, 2, T).unwrap();
        for gamma in [0.0, 0.5, 1.0] {
            let q = value_iterate(&m, gamma, 1e-9).unwrap();
            for (s, a) in m.observed_pairs() {
                assert_eq!(q.q(s, a), m.reward(s, a));
            }
        }
        let tie = Policy::new(vec![
            Some(Choice { actions: vec![ActionId(0), ActionId(1)], unlearned: false }),
            None,
            None,
            None,
        ]);
        let v = policy_value(&m, &tie, 1.0).unwrap();
        assert!((v.value(StateId(0)) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn exact_ties_are_kept() {
        let m = estimate_mdp(&[ep(&[(0, 0, 0.5)]), ep(&[(0, 1, 0.5)])], 4, 2, T).unwrap();
        let q = value_iterate(&m, 1.0, 1e-9).unwrap();
        let pi = greedy_policy(&q, &[vec![ActionId(0), ActionId(1)], vec![], vec![], vec![]], 1e-9);
        assert_eq!(pi.choice(StateId(0)).unwrap().actions, vec![ActionId(0), ActionId(1)]);
        assert!(!pi.is_deterministic());
    }

    #[test]
    fn single_allowed_action_ignores_q() {
        let m = estimate_mdp(&[ep(&[(0, 1, 5.0)])], 4, 2, T).unwrap();
        let q = value_iterate(&m, 1.0, 1e-9).unwrap();
        let pi = greedy_policy(&q, &[vec![ActionId(0)], vec![], vec![], vec![]], 1e-9);
        assert_eq!(pi.choice(StateId(0)).unwrap().actions, vec![ActionId(0)]);
    }

    #[test]
    fn unobserved_state_falls_back_to_allowed_set() {
        let m = estimate_mdp(&[], 4, 2, T).unwrap();
        let q = value_iterate(&m, 1.0, 1e-9).unwrap();
        let pi = greedy_policy(&q, &[vec![ActionId(0), ActionId(1)], vec![], vec![], vec![]], 1e-9);
        let c = pi.choice(StateId(0)).unwrap();
        assert!(c.unlearned);
        assert_eq!(c.actions.len(), 2);
        let v = policy_value(&m, &pi, 1.0).unwrap();
        assert_eq!(v.value(StateId(0)), 0.0);
        assert!(v.unobserved[0]);
    }

    #[test]
    fn doubling_rewards_doubles_values() {
        let mut m = chain();
        let q1 = value_iterate(&m, 1.0, 1e-12).unwrap();
        let allowed = vec![vec![ActionId(0)], vec![ActionId(1), ActionId(2)], vec![], vec![]];
        let pi1 = greedy_policy(&q1, &allowed, 1e-9);
        let v1 = policy_value(&m, &pi1, 1.0).unwrap();
        m.scale_rewards(2.0);
        let q2 = value_iterate(&m, 1.0, 1e-12).unwrap();
        let pi2 = greedy_policy(&q2, &allowed, 1e-9);
        let v2 = policy_value(&m, &pi1, 1.0).unwrap();
        assert_eq!(pi1, pi2);
        for s in 0..4 {
            assert_eq!(v2.values[s], 2.0 * v1.values[s]);
        }
    }

    #[test]
    fn cycles_are_rejected_at_gamma_one() {
        let m = estimate_mdp(&[ep(&[(0, 0, 0.0), (1, 0, 0.0), (0, 1, 1.0)])], 4, 2, T).unwrap();
        assert!(matches!(value_iterate(&m, 1.0, 1e-9), Err(MdpError::Cycle(_))));
        let q = value_iterate(&m, 0.9, 1e-12).unwrap();
        assert!(q.q(StateId(0), ActionId(1)).unwrap() > 0.99);
    }

    #[test]
    fn bad_parameters() {
        let m = chain();
        assert!(matches!(value_iterate(&m, 1.5, 1e-9), Err(MdpError::InvalidParameter(_))));
        assert!(matches!(value_iterate(&m, 1.0, 0.0), Err(MdpError::InvalidParameter(_))));
    }
}
