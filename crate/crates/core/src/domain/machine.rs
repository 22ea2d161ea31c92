use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::action::{ActionKind, DialogueAction, Grammar};
use super::confidence::ConfidenceBins;
use super::ops::{estimate_state, OperationsVector};
use super::state::DialogueState;
use super::task::Attribute;
use super::DomainError;

const BUNDLED_CHOICES: &str = include_str!("../../data/choice_table.txt");

/// A yes/no reply as heard by the recognizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum YesNo {
    Yes,
    No,
    Silence,
}

/// What the recognizer returned for one user turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AsrResult {
    /// Perceived slot values (indexed by attribute) and the utterance score.
    /// No perceived slot means no output, and then no score.
    Slots { slots: [Option<String>; 3], confidence: Option<f64> },
    Answer(YesNo),
}

impl AsrResult {
    pub fn nothing() -> Self {
        AsrResult::Slots { slots: Default::default(), confidence: None }
    }
}

/// Choice-states and their two candidate actions, loaded from text.
///
/// Each line holds seven feature digits and then the action names,
/// separated by commas or spaces. `#` starts a comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceTable {
    choices: BTreeMap<DialogueState, Vec<DialogueAction>>,
}

impl ChoiceTable {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CHOICES).expect("bundled choice table is valid")
    }

    pub fn parse(text: &str) -> Result<Self, DomainError> {
        let mut choices = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| DomainError::ChoiceTable { line: i + 1, reason };
            let tokens: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
            if tokens.len() < 9 {
                return Err(err(format!("expected 7 digits and 2 actions, got '{line}'")));
            }
            let state: DialogueState = tokens[..7].join("").parse().map_err(|e: DomainError| err(e.to_string()))?;
            let actions = tokens[7..]
                .iter()
                .map(|t| t.parse::<DialogueAction>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(e.to_string()))?;
            if choices.insert(state, actions).is_some() {
                return Err(err(format!("duplicate state {state}")));
            }
        }
        Ok(Self { choices })
    }

    /// Number of listed choice-states.
    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn choice_states(&self) -> impl Iterator<Item = (&DialogueState, &[DialogueAction])> {
        self.choices.iter().map(|(s, a)| (s, a.as_slice()))
    }

    pub fn is_choice_state(&self, s: &DialogueState) -> bool {
        self.choices.contains_key(s)
    }

    /// Actions legal at `s`: the listed pair at choice-states, otherwise the
    /// single fixed action. `None` for states the machine never produces.
    pub fn allowed(&self, s: &DialogueState) -> Option<Vec<DialogueAction>> {
        if let Some(a) = self.choices.get(s) {
            return Some(a.clone());
        }
        fixed_action(s).map(|a| vec![a])
    }
}

/// Non-choice states: Tell when done, a silent move-on after the second
/// failure, and the system-initiative asks for the time attribute.
fn fixed_action(s: &DialogueState) -> Option<DialogueAction> {
    if *s == DialogueState::DONE {
        return Some(DialogueAction::Tell);
    }
    if s.greet != 1 || s.value != 0 || s.grammar != 0 || !matches!(s.confidence_confirmed, 0 | 4) {
        return None;
    }
    let first_attr_history_ok = s.attribute != 1 || s.history == 0;
    match (s.attribute, s.tries) {
        (1..=3, 2) if first_attr_history_ok => Some(DialogueAction::NoConf),
        (3, 0) if s.confidence_confirmed == 0 => Some(DialogueAction::Ask3S),
        (3, 0 | 1) => Some(DialogueAction::ReAsk3S),
        _ => None,
    }
}

/// The slot-filling state machine: legality from the choice table, binning
/// of recognizer scores, and the operations-vector update rules.
#[derive(Debug, Clone)]
pub struct DialogueMachine {
    table: ChoiceTable,
    bins: ConfidenceBins,
}

impl DialogueMachine {
    pub fn new(table: ChoiceTable, bins: ConfidenceBins) -> Self {
        Self { table, bins }
    }

    pub fn table(&self) -> &ChoiceTable {
        &self.table
    }

    pub fn bins(&self) -> ConfidenceBins {
        self.bins
    }

    pub fn allowed_actions(&self, ops: &OperationsVector) -> Vec<DialogueAction> {
        self.table.allowed(&estimate_state(ops)).unwrap_or_default()
    }

    /// Applies one system action and the recognizer's reading of the reply.
    ///
    /// * Asks record their grammar and reasks bump the attribute's tries.
    ///   Values heard for later attributes are kept; earlier ones are never
    ///   touched. A value won on a reask is accepted and the dialogue moves on.
    /// * A "yes" to a confirmation marks the value confirmed and moves on; a
    ///   "no" (or silence) marks it disconfirmed and drops the value.
    /// * NoConf moves on. Tell leaves the vector unchanged.
    pub fn advance(
        &self,
        ops: &OperationsVector,
        action: DialogueAction,
        asr: Option<&AsrResult>,
    ) -> Result<OperationsVector, DomainError> {
        let state = estimate_state(ops);
        let legal = self.table.allowed(&state).is_some_and(|a| a.contains(&action));
        if !legal {
            return Err(DomainError::IllegalAction { state, action });
        }
        let mut next = ops.clone();
        match action.kind() {
            ActionKind::Ask { reask } => {
                let Some(AsrResult::Slots { slots, confidence }) = asr else {
                    return Err(DomainError::MissingAsr { action });
                };
                let attr = action.attribute().expect("asks name an attribute");
                let grammar = action.initiative().expect("asks have an initiative").grammar();
                let bin = confidence.map(|c| self.bins.bin(c));
                next.greeted = true;
                let heard = |a: Attribute| slots[a.slot()].clone().filter(|_| bin.is_some());
                for later in attr.later() {
                    if let Some(v) = heard(later) {
                        let slot = next.slot_mut(later);
                        slot.value = Some(v);
                        slot.confidence = bin;
                        slot.grammar = Some(grammar);
                    }
                }
                let slot = next.slot_mut(attr);
                if reask {
                    slot.tries += 1;
                }
                slot.grammar = Some(grammar);
                match heard(attr) {
                    Some(v) => {
                        slot.value = Some(v);
                        slot.confidence = bin;
                        if reask {
                            next.current += 1;
                        }
                    }
                    None => slot.value = None,
                }
            }
            ActionKind::Confirm => {
                let Some(AsrResult::Answer(answer)) = asr else {
                    return Err(DomainError::MissingAsr { action });
                };
                let attr = action.attribute().expect("confirmations name an attribute");
                let slot = next.slot_mut(attr);
                if *answer == YesNo::Yes {
                    slot.confidence = Some(3);
                    next.current += 1;
                } else {
                    slot.confidence = Some(4);
                    slot.value = None;
                }
            }
            ActionKind::NoConfirm => next.current += 1,
            ActionKind::Tell => {}
        }
        debug_assert!(next.check().is_ok(), "{next:?}");
        Ok(next)
    }
}

/// Every learning state the machine can produce, with the observed edges.
#[derive(Debug, Clone, Default)]
pub struct StateGraph {
    pub states: BTreeSet<DialogueState>,
    pub edges: BTreeSet<(DialogueState, DialogueAction, DialogueState)>,
    /// Longest possible dialogue, in user turns, before the database query.
    pub max_user_turns: usize,
    pub min_user_turns: usize,
}

impl StateGraph {
    /// States with more than one allowed action.
    pub fn choice_states<'a>(&'a self, table: &'a ChoiceTable) -> impl Iterator<Item = &'a DialogueState> {
        self.states.iter().filter(|s| table.allowed(s).is_some_and(|a| a.len() > 1))
    }
}

/// Outcome classes of a recognizer reply: for asks, every subset of the
/// in-grammar attributes at every confidence bin (or no output); for
/// confirmations, yes, no and silence. Slot values are placeholders since the
/// state never depends on them.
fn outcome_classes(action: DialogueAction, bins: ConfidenceBins) -> Vec<Option<AsrResult>> {
    match action.kind() {
        ActionKind::NoConfirm | ActionKind::Tell => vec![None],
        ActionKind::Confirm => [YesNo::Yes, YesNo::No, YesNo::Silence].map(|a| Some(AsrResult::Answer(a))).to_vec(),
        ActionKind::Ask { .. } => {
            let attr = action.attribute().unwrap();
            let grammar = action.initiative().unwrap().grammar();
            let in_grammar: Vec<Attribute> = match grammar {
                Grammar::Restrictive => vec![attr],
                Grammar::Nonrestrictive => Attribute::ALL.into_iter().filter(|a| *a >= attr).collect(),
            };
            let reps: Vec<f64> = [bins.low - 1.0, (bins.low + bins.high) / 2.0, bins.high + 1.0]
                .into_iter()
                .enumerate()
                .filter(|&(b, raw)| bins.bin(raw) as usize == b)
                .map(|(_, raw)| raw)
                .collect();
            let mut out = vec![Some(AsrResult::nothing())];
            for mask in 1u32..(1 << in_grammar.len()) {
                let mut slots: [Option<String>; 3] = Default::default();
                for (k, a) in in_grammar.iter().enumerate() {
                    if mask & (1 << k) != 0 {
                        slots[a.slot()] = Some("v".into());
                    }
                }
                for &raw in &reps {
                    out.push(Some(AsrResult::Slots { slots: slots.clone(), confidence: Some(raw) }));
                }
            }
            out
        }
    }
}

/// Exhaustive closure from the initial operations vector over every allowed
/// action and every recognizer outcome class.
pub fn enumerate_reachable(machine: &DialogueMachine) -> StateGraph {
    let mut graph = StateGraph { min_user_turns: usize::MAX, ..Default::default() };
    // ops vector -> (min, max) user turns so far
    let mut seen: HashMap<OperationsVector, (usize, usize)> = HashMap::new();
    let start = OperationsVector::new();
    seen.insert(start.clone(), (0, 0));
    let mut queue = VecDeque::from([start]);
    // The ops graph only moves forward, so a FIFO pass re-expanding improved
    // nodes settles the turn bounds.
    while let Some(ops) = queue.pop_front() {
        let (lo, hi) = seen[&ops];
        let state = estimate_state(&ops);
        graph.states.insert(state);
        for action in machine.allowed_actions(&ops) {
            if action == DialogueAction::Tell {
                graph.max_user_turns = graph.max_user_turns.max(hi);
                graph.min_user_turns = graph.min_user_turns.min(lo);
                continue;
            }
            let turn = usize::from(action.elicits_reply());
            for asr in outcome_classes(action, machine.bins) {
                let next = machine.advance(&ops, action, asr.as_ref()).expect("closure only takes legal actions");
                graph.edges.insert((state, action, estimate_state(&next)));
                let bounds = (lo + turn, hi + turn);
                match seen.get_mut(&next) {
                    None => {
                        seen.insert(next.clone(), bounds);
                        queue.push_back(next);
                    }
                    Some(b) => {
                        let merged = (b.0.min(bounds.0), b.1.max(bounds.1));
                        if merged != *b {
                            *b = merged;
                            queue.push_back(next);
                        }
                    }
                }
            }
        }
    }
    graph
}

#[cfg(test)]
mod tests {
    use super::*;
    use DialogueAction::*;

    fn machine() -> DialogueMachine {
        DialogueMachine::new(ChoiceTable::bundled(), ConfidenceBins::new(0.3, 0.6))
    }

    fn st(s: &str) -> DialogueState {
        s.parse().unwrap()
    }

    fn heard(a: Option<&str>, l: Option<&str>, t: Option<&str>, conf: f64) -> AsrResult {
        AsrResult::Slots { slots: [a.map(Into::into), l.map(Into::into), t.map(Into::into)], confidence: Some(conf) }
    }

    #[test]
    fn choice_table_rows() {
        let t = ChoiceTable::bundled();
        assert_eq!(t.len(), 42);
        assert_eq!(t.allowed(&st("0100000")).unwrap(), vec![GreetS, GreetU]);
        assert_eq!(t.allowed(&st("1121000")).unwrap(), vec![NoConf, ExpConf1]);
        assert_eq!(t.allowed(&st("1140100")).unwrap(), vec![ReAsk1S, ReAsk1M]);
        assert_eq!(t.allowed(&st("1400000")).unwrap(), vec![Tell]);
        assert_eq!(t.allowed(&st("1300001")).unwrap(), vec![Ask3S]);
        assert_eq!(t.allowed(&st("1340001")).unwrap(), vec![ReAsk3S]);
        assert_eq!(t.allowed(&st("1200200")).unwrap(), vec![NoConf]);
        assert_eq!(t.allowed(&st("1131000")), None);
    }

    #[test]
    fn choice_table_parse_errors() {
        assert!(matches!(ChoiceTable::parse("0 1 0 0 0 0 0 GreetS\n"), Err(DomainError::ChoiceTable { line: 1, .. })));
        assert!(ChoiceTable::parse("0 1 0 0 0 0 0 GreetS Hello\n").is_err());
        assert!(ChoiceTable::parse("0 1 0 0 0 0 0 GreetS GreetU\n0100000 GreetS GreetU").is_err());
    }

    #[test]
    fn winery_trace() {
        let m = machine();
        let ops = OperationsVector::new();
        let ops = m
            .advance(&ops, GreetU, Some(&heard(Some("wineries"), Some("Lambertville"), Some("morning"), 0.9)))
            .unwrap();
        assert_eq!(estimate_state(&ops).to_string(), "1121000");
        let ops = m.advance(&ops, NoConf, None).unwrap();
        assert_eq!(estimate_state(&ops).to_string(), "1221001");
        let ops = m.advance(&ops, ExpConf2, Some(&AsrResult::Answer(YesNo::Yes))).unwrap();
        assert_eq!(estimate_state(&ops).to_string(), "1321001");
        let ops = m.advance(&ops, ExpConf3, Some(&AsrResult::Answer(YesNo::Yes))).unwrap();
        assert_eq!(estimate_state(&ops).to_string(), "1400000");
        assert_eq!(m.allowed_actions(&ops), vec![Tell]);
    }

    #[test]
    fn disconfirmation_drops_value() {
        let m = machine();
        let ops = m.advance(&OperationsVector::new(), GreetS, Some(&heard(Some("zoos"), None, None, 0.1))).unwrap();
        assert_eq!(estimate_state(&ops).to_string(), "1101010");
        let ops = m.advance(&ops, ExpConf1, Some(&AsrResult::Answer(YesNo::No))).unwrap();
        assert_eq!(ops.slots[0].confidence, Some(4));
        assert_eq!(ops.slots[0].value, None);
        assert_eq!(estimate_state(&ops).to_string(), "1140000");
        assert_eq!(m.allowed_actions(&ops), vec![ReAsk1S, ReAsk1M]);
    }

    #[test]
    fn second_failure_moves_on() {
        let m = machine();
        let ops = m
            .advance(&OperationsVector::new(), GreetU, Some(&heard(Some("zoos"), None, None, 0.9)))
            .unwrap();
        let ops = m.advance(&ops, NoConf, None).unwrap();
        let ops = m.advance(&ops, Ask2S, Some(&AsrResult::nothing())).unwrap();
        assert_eq!(estimate_state(&ops).to_string(), "1200101");
        let ops = m.advance(&ops, ReAsk2S, Some(&AsrResult::nothing())).unwrap();
        assert_eq!(estimate_state(&ops).to_string(), "1200201");
        let ops = m.advance(&ops, NoConf, None).unwrap();
        assert_eq!(ops.current, 3);
        assert_eq!(ops.slots[1].value, None);
        assert_eq!(estimate_state(&ops).to_string(), "1300000");
    }

    #[test]
    fn reask_value_is_accepted() {
        let m = machine();
        let ops = m.advance(&OperationsVector::new(), GreetS, Some(&AsrResult::nothing())).unwrap();
        assert_eq!(estimate_state(&ops).to_string(), "1100100");
        let ops = m.advance(&ops, ReAsk1M, Some(&heard(Some("parks"), Some("Trenton"), None, 0.5))).unwrap();
        assert_eq!(ops.current, 2);
        // location over-captured by the mixed-initiative grammar; history bad after a reask
        assert_eq!(estimate_state(&ops).to_string(), "1211000");
    }

    #[test]
    fn restrictive_grammar_ignores_other_slots() {
        let m = machine();
        let ops = m
            .advance(&OperationsVector::new(), GreetS, Some(&heard(Some("zoos"), Some("Trenton"), None, 0.9)))
            .unwrap();
        // the recognizer already filtered by grammar; the machine still stores what it is given
        assert_eq!(ops.slots[1].value.as_deref(), Some("Trenton"));
        assert_eq!(ops.slots[0].grammar, Some(Grammar::Restrictive));
    }

    #[test]
    fn illegal_action_names_both() {
        let m = machine();
        let err = m.advance(&OperationsVector::new(), ExpConf2, Some(&AsrResult::Answer(YesNo::Yes))).unwrap_err();
        match err {
            DomainError::IllegalAction { state, action } => {
                assert_eq!(state, DialogueState::INITIAL);
                assert_eq!(action, ExpConf2);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            m.advance(&OperationsVector::new(), GreetS, None),
            Err(DomainError::MissingAsr { action: GreetS })
        ));
    }

    #[test]
    fn reachable_structure() {
        let m = machine();
        let g = enumerate_reachable(&m);
        let choice: Vec<_> = g.choice_states(m.table()).collect();
        assert_eq!(choice.len(), 42);
        for (s, _) in m.table().choice_states() {
            assert!(g.states.contains(s), "choice-state {s} unreachable");
        }
        assert_eq!(g.states.len(), 61);
        assert_eq!(g.max_user_turns, 12);
        assert_eq!(g.min_user_turns, 1);
    }

    #[test]
    fn legal_states_are_exactly_the_reachable_ones() {
        let m = machine();
        let g = enumerate_reachable(&m);
        let legal: BTreeSet<_> = DialogueState::all().filter(|s| m.table().allowed(s).is_some()).collect();
        assert_eq!(DialogueState::all().count(), 1200);
        assert_eq!(legal, g.states);
    }
}
