use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::DomainError;

/// The seven-feature learning state.
///
/// Rendered as seven digits in feature order
/// `greet attribute confidence value tries grammar history`, e.g. `1121000`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DialogueState {
    pub greet: u8,
    pub attribute: u8,
    /// 0, 1, 2: low/medium/high recognition confidence; 3: confirmed; 4: disconfirmed.
    pub confidence_confirmed: u8,
    pub value: u8,
    pub tries: u8,
    /// 1 when the value came from a restrictive grammar.
    pub grammar: u8,
    /// 1 when earlier attributes went smoothly.
    pub history: u8,
}

pub(crate) const FEATURES: [(&str, u8); 7] = [
    ("greet", 1),
    ("attribute", 4),
    ("confidence_confirmed", 4),
    ("value", 1),
    ("tries", 2),
    ("grammar", 1),
    ("history", 1),
];

impl DialogueState {
    pub const INITIAL: DialogueState = DialogueState::from_digits_unchecked([0, 1, 0, 0, 0, 0, 0]);
    pub const DONE: DialogueState = DialogueState::from_digits_unchecked([1, 4, 0, 0, 0, 0, 0]);

    const fn from_digits_unchecked(d: [u8; 7]) -> Self {
        DialogueState {
            greet: d[0],
            attribute: d[1],
            confidence_confirmed: d[2],
            value: d[3],
            tries: d[4],
            grammar: d[5],
            history: d[6],
        }
    }

    /// Checks every feature against its range; the error names the field.
    pub fn from_digits(d: [u8; 7]) -> Result<Self, DomainError> {
        for (i, &(name, max)) in FEATURES.iter().enumerate() {
            let min = u8::from(name == "attribute");
            if d[i] < min || d[i] > max {
                return Err(DomainError::FeatureOutOfRange { field: name, value: d[i] });
            }
        }
        Ok(Self::from_digits_unchecked(d))
    }

    /// Every in-range feature combination, in digit order.
    pub fn all() -> impl Iterator<Item = DialogueState> {
        let total: usize = FEATURES.iter().map(|&(_, max)| max as usize + 1).product();
        (0..total).map(|mut k| {
            let mut d = [0u8; 7];
            for i in (0..7).rev() {
                let radix = FEATURES[i].1 as usize + 1;
                d[i] = (k % radix) as u8;
                k /= radix;
            }
            DialogueState::from_digits_unchecked(d)
        })
    }

    pub fn digits(&self) -> [u8; 7] {
        [
            self.greet,
            self.attribute,
            self.confidence_confirmed,
            self.value,
            self.tries,
            self.grammar,
            self.history,
        ]
    }
}

impl fmt::Display for DialogueState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.digits() {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for DialogueState {
    type Err = DomainError;

    /// Accepts `1121000` or whitespace-separated `1 1 2 1 0 0 0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.len() != 7 || !compact.bytes().all(|b| b.is_ascii_digit()) {
            return Err(DomainError::BadStateString(s.to_string()));
        }
        let mut d = [0u8; 7];
        for (slot, b) in d.iter_mut().zip(compact.bytes()) {
            *slot = b - b'0';
        }
        Self::from_digits(d)
    }
}

impl Serialize for DialogueState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DialogueState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_digits() {
        let s: DialogueState = "1 2 2 1 0 0 1".parse().unwrap();
        assert_eq!(s.to_string(), "1221001");
        assert_eq!(s.attribute, 2);
        assert_eq!(DialogueState::INITIAL.to_string(), "0100000");
    }

    #[test]
    fn out_of_range_names_field() {
        let err = "1150000".parse::<DialogueState>().unwrap_err();
        assert!(matches!(err, DomainError::FeatureOutOfRange { field: "confidence_confirmed", value: 5 }));
        let err = "1000000".parse::<DialogueState>().unwrap_err();
        assert!(matches!(err, DomainError::FeatureOutOfRange { field: "attribute", .. }));
        assert!("12345".parse::<DialogueState>().is_err());
    }
}
