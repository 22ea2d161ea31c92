use serde::{Deserialize, Serialize};

use super::action::Grammar;
use super::state::DialogueState;
use super::task::{Attribute, QueryBinding};
use super::DomainError;

/// Everything the dialogue manager tracks about one attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SlotRecord {
    pub value: Option<String>,
    /// 0..=2 binned recognizer confidence, 3 confirmed, 4 disconfirmed.
    /// A disconfirmation outlives the value it rejected until a new value arrives.
    pub confidence: Option<u8>,
    /// Number of reasks issued for this attribute.
    pub tries: u8,
    /// Grammar of the utterance that last set or sought this attribute.
    pub grammar: Option<Grammar>,
}

impl SlotRecord {
    /// Asks that came back without a value: every reask was triggered by a
    /// failure or a disconfirmation, and a pending failure shows up as a
    /// sought-but-empty slot with no confidence.
    pub fn failed_asks(&self) -> u8 {
        let pending = self.value.is_none() && self.confidence.is_none() && self.grammar.is_some();
        self.tries + u8::from(pending)
    }
}

/// Internal dialogue record: greeting flag, current attribute, and four
/// variables for each of the three attributes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperationsVector {
    pub greeted: bool,
    /// 1..=3 while filling slots, 4 once every attribute is resolved.
    pub current: u8,
    pub slots: [SlotRecord; 3],
}

impl Default for OperationsVector {
    fn default() -> Self {
        Self::new()
    }
}

impl OperationsVector {
    pub fn new() -> Self {
        Self { greeted: false, current: 1, slots: Default::default() }
    }

    pub fn current_attribute(&self) -> Option<Attribute> {
        Attribute::from_number(self.current)
    }

    pub fn slot(&self, attr: Attribute) -> &SlotRecord {
        &self.slots[attr.slot()]
    }

    pub fn slot_mut(&mut self, attr: Attribute) -> &mut SlotRecord {
        &mut self.slots[attr.slot()]
    }

    pub fn is_done(&self) -> bool {
        self.current == 4
    }

    /// Concrete value for every obtained attribute, wildcard elsewhere.
    pub fn query_binding(&self) -> QueryBinding {
        QueryBinding { slots: self.slots.clone().map(|s| s.value) }
    }

    pub fn check(&self) -> Result<(), DomainError> {
        let bad = |why: String| Err(DomainError::InconsistentOps(why));
        if !(1..=4).contains(&self.current) {
            return bad(format!("current attribute {}", self.current));
        }
        if !self.greeted && (self.current != 1 || self.slots.iter().any(|s| *s != SlotRecord::default())) {
            return bad("progress recorded before the greeting".into());
        }
        for (i, s) in self.slots.iter().enumerate() {
            if s.tries > 2 {
                return bad(format!("slot {} tries {}", i + 1, s.tries));
            }
            match (s.value.is_some(), s.confidence) {
                (true, None) => return bad(format!("slot {} has a value but no confidence", i + 1)),
                (false, Some(c)) if c != 4 => return bad(format!("slot {} has confidence {c} but no value", i + 1)),
                (_, Some(c)) if c > 4 => return bad(format!("slot {} confidence {c}", i + 1)),
                _ => {}
            }
        }
        Ok(())
    }
}

/// Whether the attributes before the current one went smoothly: bad (0) when
/// any of them has no value, has a value with the lowest confidence, or
/// needed a reask. Vacuously good (1) on the first attribute.
pub fn compute_history(ops: &OperationsVector) -> u8 {
    let current = ops.current.min(4) as usize;
    let trouble = ops.slots[..current.saturating_sub(1).min(3)]
        .iter()
        .any(|s| s.value.is_none() || s.confidence == Some(0) || s.tries >= 1);
    u8::from(!trouble)
}

/// The hand-designed map from the operations vector to the learning state.
///
/// Only the current attribute's slot is visible. Grammar is reported only
/// while a value is held, and history only on the second and third attribute.
pub fn estimate_state(ops: &OperationsVector) -> DialogueState {
    if !ops.greeted {
        return DialogueState::INITIAL;
    }
    let Some(attr) = ops.current_attribute() else {
        return DialogueState::DONE;
    };
    let slot = ops.slot(attr);
    let has_value = slot.value.is_some();
    DialogueState {
        greet: 1,
        attribute: attr.number(),
        confidence_confirmed: slot.confidence.unwrap_or(0),
        value: u8::from(has_value),
        tries: slot.failed_asks().min(2),
        grammar: u8::from(has_value && slot.grammar == Some(Grammar::Restrictive)),
        history: if attr == Attribute::Activity { 0 } else { compute_history(ops) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled(value: &str, confidence: u8, grammar: Grammar) -> SlotRecord {
        SlotRecord { value: Some(value.into()), confidence: Some(confidence), tries: 0, grammar: Some(grammar) }
    }

    #[test]
    fn fresh_vector_is_initial_state() {
        assert_eq!(estimate_state(&OperationsVector::new()).to_string(), "0100000");
    }

    #[test]
    fn greeted_with_activity_captured() {
        let mut ops = OperationsVector::new();
        ops.greeted = true;
        ops.slots[0] = filled("wineries", 2, Grammar::Nonrestrictive);
        assert_eq!(estimate_state(&ops).to_string(), "1121000");
        ops.current = 2;
        ops.slots[1] = filled("Lambertville", 2, Grammar::Nonrestrictive);
        assert_eq!(estimate_state(&ops).to_string(), "1221001");
    }

    #[test]
    fn history_rules() {
        let mut ops = OperationsVector::new();
        ops.greeted = true;
        assert_eq!(compute_history(&ops), 1);
        ops.current = 2;
        assert_eq!(compute_history(&ops), 0, "no activity");
        ops.slots[0] = filled("zoos", 2, Grammar::Restrictive);
        assert_eq!(compute_history(&ops), 1);
        ops.slots[0].confidence = Some(0);
        assert_eq!(compute_history(&ops), 0, "no confidence in the activity");
        ops.slots[0].confidence = Some(1);
        ops.slots[0].tries = 1;
        assert_eq!(compute_history(&ops), 0, "two queries for the activity");
    }

    #[test]
    fn failed_asks_count_pending_failure() {
        let mut s = SlotRecord::default();
        assert_eq!(s.failed_asks(), 0);
        s.grammar = Some(Grammar::Restrictive);
        assert_eq!(s.failed_asks(), 1);
        s.confidence = Some(4);
        assert_eq!(s.failed_asks(), 0);
        s.tries = 1;
        assert_eq!(s.failed_asks(), 1);
    }

    #[test]
    fn consistency_check() {
        let mut ops = OperationsVector::new();
        assert!(ops.check().is_ok());
        ops.greeted = true;
        ops.slots[0].confidence = Some(2);
        assert!(ops.check().is_err());
        ops.slots[0].confidence = Some(4);
        assert!(ops.check().is_ok());
    }
}
