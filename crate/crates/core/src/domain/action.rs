use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Attribute, DomainError};

/// Wording of a system prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptType {
    Open,
    Directive,
}

/// Recognition grammar used on the user's reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Grammar {
    /// Recognizes only the attribute named in the prompt.
    Restrictive,
    /// Also recognizes values for the attributes that follow.
    Nonrestrictive,
}

/// Who constrains the exchange. An open prompt paired with a restrictive
/// grammar has no variant: it is not a usable combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Initiative {
    /// Directive prompt, restrictive grammar.
    System,
    /// Open prompt, nonrestrictive grammar.
    User,
    /// Directive prompt, nonrestrictive grammar.
    Mixed,
}

impl Initiative {
    pub fn prompt_type(self) -> PromptType {
        match self {
            Initiative::User => PromptType::Open,
            Initiative::System | Initiative::Mixed => PromptType::Directive,
        }
    }

    pub fn grammar(self) -> Grammar {
        match self {
            Initiative::System => Grammar::Restrictive,
            Initiative::User | Initiative::Mixed => Grammar::Nonrestrictive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DialogueAction {
    GreetS,
    GreetU,
    ReAsk1S,
    ReAsk1M,
    Ask2S,
    Ask2U,
    ReAsk2S,
    ReAsk2M,
    Ask3S,
    ReAsk3S,
    ExpConf1,
    ExpConf2,
    ExpConf3,
    NoConf,
    Tell,
}

/// Coarse role of an action in the slot-filling loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Ask { reask: bool },
    Confirm,
    NoConfirm,
    Tell,
}

use DialogueAction::*;

impl DialogueAction {
    pub const ALL: [DialogueAction; 15] = [
        GreetS, GreetU, ReAsk1S, ReAsk1M, Ask2S, Ask2U, ReAsk2S, ReAsk2M, Ask3S, ReAsk3S, ExpConf1,
        ExpConf2, ExpConf3, NoConf, Tell,
    ];

    /// Dense index into [`DialogueAction::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            GreetS => "GreetS",
            GreetU => "GreetU",
            ReAsk1S => "ReAsk1S",
            ReAsk1M => "ReAsk1M",
            Ask2S => "Ask2S",
            Ask2U => "Ask2U",
            ReAsk2S => "ReAsk2S",
            ReAsk2M => "ReAsk2M",
            Ask3S => "Ask3S",
            ReAsk3S => "ReAsk3S",
            ExpConf1 => "ExpConf1",
            ExpConf2 => "ExpConf2",
            ExpConf3 => "ExpConf3",
            NoConf => "NoConf",
            Tell => "Tell",
        }
    }

    pub fn kind(self) -> ActionKind {
        match self {
            GreetS | GreetU | Ask2S | Ask2U | Ask3S => ActionKind::Ask { reask: false },
            ReAsk1S | ReAsk1M | ReAsk2S | ReAsk2M | ReAsk3S => ActionKind::Ask { reask: true },
            ExpConf1 | ExpConf2 | ExpConf3 => ActionKind::Confirm,
            NoConf => ActionKind::NoConfirm,
            Tell => ActionKind::Tell,
        }
    }

    /// The attribute an ask or confirmation is about.
    pub fn attribute(self) -> Option<Attribute> {
        match self {
            GreetS | GreetU | ReAsk1S | ReAsk1M | ExpConf1 => Some(Attribute::Activity),
            Ask2S | Ask2U | ReAsk2S | ReAsk2M | ExpConf2 => Some(Attribute::Location),
            Ask3S | ReAsk3S | ExpConf3 => Some(Attribute::Time),
            NoConf | Tell => None,
        }
    }

    /// Initiative of asks and confirmations; `None` for NoConf and Tell.
    pub fn initiative(self) -> Option<Initiative> {
        match self {
            GreetU | Ask2U => Some(Initiative::User),
            ReAsk1M | ReAsk2M => Some(Initiative::Mixed),
            GreetS | ReAsk1S | Ask2S | ReAsk2S | Ask3S | ReAsk3S | ExpConf1 | ExpConf2 | ExpConf3 => {
                Some(Initiative::System)
            }
            NoConf | Tell => None,
        }
    }

    /// Whether the action is followed by a user turn.
    pub fn elicits_reply(self) -> bool {
        !matches!(self, NoConf | Tell)
    }

    /// System prompt text; confirmation templates take the perceived value.
    pub fn prompt(self, perceived: Option<&str>) -> String {
        let v = perceived.unwrap_or("...");
        match self {
            GreetS => "Hello. What kind of activity are you looking for?".into(),
            GreetU => "Hello. What would you like to do?".into(),
            ReAsk1S => "Activities include museums, parks, wineries, zoos, cruises and more. Which activity?".into(),
            ReAsk1M => "Which activity? Feel free to add where and when.".into(),
            Ask2S => "Which town?".into(),
            Ask2U => "Anything else about your plans?".into(),
            ReAsk2S => "Sorry, which town was that?".into(),
            ReAsk2M => "Where would you like to go? Feel free to add when.".into(),
            Ask3S => "What time of day?".into(),
            ReAsk3S => "Morning, afternoon or evening?".into(),
            ExpConf1 => format!("Looking for {v}, right?"),
            ExpConf2 => format!("In {v}, right?"),
            ExpConf3 => format!("In the {v}, right?"),
            NoConf => String::new(),
            Tell => "Here is what I found.".into(),
        }
    }
}

impl fmt::Display for DialogueAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DialogueAction {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DialogueAction::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| DomainError::UnknownAction(s.to_string()))
    }
}

impl Serialize for DialogueAction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for DialogueAction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
