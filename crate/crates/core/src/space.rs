//! Dense numbering of dialogue states and actions for the tabular solver.

use std::collections::HashMap;

use crate::domain::{ChoiceTable, DialogueAction, DialogueState};
use crate::mdp::{ActionId, Policy, StateId};

/// Label used for the absorbing end-of-dialogue state in text formats.
pub const TERMINAL_LABEL: &str = "TERMINAL";

/// Every legal dialogue state (sorted by digits) followed by the absorbing
/// terminal reached after Tell.
#[derive(Debug, Clone)]
pub struct StateSpace {
    states: Vec<DialogueState>,
    index: HashMap<DialogueState, usize>,
    allowed: Vec<Vec<DialogueAction>>,
}

impl StateSpace {
    pub fn new(table: &ChoiceTable) -> Self {
        let mut states = Vec::new();
        let mut allowed = Vec::new();
        for s in DialogueState::all() {
            if let Some(a) = table.allowed(&s) {
                states.push(s);
                allowed.push(a);
            }
        }
        allowed.push(Vec::new());
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Self { states, index, allowed }
    }

    pub fn bundled() -> Self {
        Self::new(&ChoiceTable::bundled())
    }

    /// Dialogue states plus the terminal.
    pub fn n_states(&self) -> usize {
        self.states.len() + 1
    }

    pub fn n_actions(&self) -> usize {
        DialogueAction::ALL.len()
    }

    pub fn terminal(&self) -> StateId {
        StateId(self.states.len())
    }

    pub fn start(&self) -> StateId {
        self.state_id(&DialogueState::INITIAL).expect("initial state is legal")
    }

    pub fn state_id(&self, s: &DialogueState) -> Option<StateId> {
        self.index.get(s).map(|&i| StateId(i))
    }

    /// `None` for the terminal.
    pub fn state(&self, id: StateId) -> Option<DialogueState> {
        self.states.get(id.0).copied()
    }

    pub fn label(&self, id: StateId) -> String {
        self.state(id).map_or_else(|| TERMINAL_LABEL.to_string(), |s| s.to_string())
    }

    pub fn parse_label(&self, label: &str) -> Option<StateId> {
        if label == TERMINAL_LABEL {
            return Some(self.terminal());
        }
        self.state_id(&label.parse().ok()?)
    }

    pub fn action_id(&self, a: DialogueAction) -> ActionId {
        ActionId(a.index())
    }

    pub fn action(&self, id: ActionId) -> DialogueAction {
        DialogueAction::ALL[id.0]
    }

    pub fn allowed(&self, id: StateId) -> &[DialogueAction] {
        &self.allowed[id.0]
    }

    /// Allowed action ids per state, in the shape the policy builder takes.
    pub fn allowed_ids(&self) -> Vec<Vec<ActionId>> {
        self.allowed.iter().map(|acts| acts.iter().map(|&a| self.action_id(a)).collect()).collect()
    }

    pub fn choice_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).filter(|&i| self.allowed[i].len() > 1).map(StateId)
    }

    /// A policy that allows every legal action everywhere.
    pub fn exploratory_policy(&self) -> Policy {
        Policy::new(
            self.allowed_ids()
                .into_iter()
                .map(|actions| (!actions.is_empty()).then_some(crate::mdp::Choice { actions, unlearned: false }))
                .collect(),
        )
    }
}
