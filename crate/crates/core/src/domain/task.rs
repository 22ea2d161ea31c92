use std::fmt;

use serde::{Deserialize, Serialize};

use super::DomainError;

/// The three slots, in the order the dialogue works through them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    Activity = 1,
    Location = 2,
    Time = 3,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Activity, Attribute::Location, Attribute::Time];

    /// 1-based position.
    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn slot(self) -> usize {
        self as usize - 1
    }

    pub fn from_number(n: u8) -> Option<Attribute> {
        match n {
            1 => Some(Attribute::Activity),
            2 => Some(Attribute::Location),
            3 => Some(Attribute::Time),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Activity => "activity",
            Attribute::Location => "location",
            Attribute::Time => "time",
        }
    }

    /// Attributes after this one.
    pub fn later(self) -> impl Iterator<Item = Attribute> {
        Attribute::ALL.into_iter().filter(move |a| *a > self)
    }
}

pub const ACTIVITIES: [&str; 9] = [
    "amusement parks",
    "aquariums",
    "cruises",
    "historic sites",
    "museums",
    "parks",
    "theaters",
    "wineries",
    "zoos",
];

pub const TIMES: [&str; 3] = ["morning", "afternoon", "evening"];

/// What the (simulated) user wants.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub activity: String,
    pub location: String,
    pub time: String,
}

impl TaskSpec {
    pub fn new(activity: &str, location: &str, time: &str) -> Result<Self, DomainError> {
        if !ACTIVITIES.contains(&activity) {
            return Err(DomainError::UnknownValue { attribute: "activity", value: activity.into() });
        }
        if !TIMES.contains(&time) {
            return Err(DomainError::UnknownValue { attribute: "time", value: time.into() });
        }
        if location.trim().is_empty() {
            return Err(DomainError::UnknownValue { attribute: "location", value: location.into() });
        }
        Ok(Self { activity: activity.into(), location: location.into(), time: time.into() })
    }

    pub fn value(&self, attr: Attribute) -> &str {
        match attr {
            Attribute::Activity => &self.activity,
            Attribute::Location => &self.location,
            Attribute::Time => &self.time,
        }
    }
}

impl fmt::Display for TaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in {} in the {}", self.activity, self.location, self.time)
    }
}

/// The six scripted tasks used for every synthetic subject, in order.
pub fn standard_tasks() -> [TaskSpec; 6] {
    let t = |a: &str, l: &str, m: &str| TaskSpec::new(a, l, m).expect("valid task");
    [
        t("museums", "Morristown", "afternoon"),
        t("cruises", "Cape May", "evening"),
        t("historic sites", "Stanhope", "morning"),
        t("wineries", "Lambertville", "morning"),
        t("theaters", "Florham Park", "evening"),
        t("parks", "Jersey City", "afternoon"),
    ]
}

/// One database query: a concrete value or a wildcard per attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct QueryBinding {
    pub slots: [Option<String>; 3],
}

impl QueryBinding {
    pub fn new(activity: Option<&str>, location: Option<&str>, time: Option<&str>) -> Self {
        Self { slots: [activity.map(Into::into), location.map(Into::into), time.map(Into::into)] }
    }

    pub fn get(&self, attr: Attribute) -> Option<&str> {
        self.slots[attr.slot()].as_deref()
    }
}

impl fmt::Display for QueryBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.slots.iter().map(|s| s.as_deref().unwrap_or("*")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// The objective measures computed at the end of a dialogue, plus the
/// recorded feedback score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBundle {
    pub binary_completion: i8,
    pub weak_completion: i8,
    pub asr_score: f64,
    pub web_feedback: i8,
}

impl RewardBundle {
    /// Checks ranges and the completion implication; the error names the field.
    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |field: &'static str| Err(DomainError::BadReward { field });
        if !matches!(self.binary_completion, -1 | 1) {
            return bad("binary_completion");
        }
        if !(-1..=3).contains(&self.weak_completion) {
            return bad("weak_completion");
        }
        if !(0.0..=3.0).contains(&self.asr_score) || (self.asr_score * 2.0).fract() != 0.0 {
            return bad("asr_score");
        }
        if !(-1..=1).contains(&self.web_feedback) {
            return bad("web_feedback");
        }
        if self.binary_completion == 1 && (self.weak_completion != 3 || self.asr_score != 3.0) {
            return bad("binary_completion");
        }
        Ok(())
    }

    pub fn measure(&self, m: Measure) -> f64 {
        match m {
            Measure::Binary => f64::from(self.binary_completion),
            Measure::Weak => f64::from(self.weak_completion),
            Measure::Asr => self.asr_score,
            Measure::WebFeedback => f64::from(self.web_feedback),
        }
    }
}

/// Which reward measure to optimize or report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Measure {
    Binary,
    Weak,
    Asr,
    WebFeedback,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::Binary, Measure::Weak, Measure::Asr, Measure::WebFeedback];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Binary => "binary",
            Measure::Weak => "weak",
            Measure::Asr => "asr",
            Measure::WebFeedback => "web_feedback",
        }
    }

    pub fn parse(s: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Scores a query against the task. `web_feedback` is left at 0.
pub fn evaluate_rewards(query: &QueryBinding, task: &TaskSpec) -> RewardBundle {
    let mut correct = 0i8;
    let mut wildcards = 0i8;
    let mut wrong = 0i8;
    for attr in Attribute::ALL {
        match query.get(attr) {
            None => wildcards += 1,
            Some(v) if v == task.value(attr) => correct += 1,
            Some(_) => wrong += 1,
        }
    }
    RewardBundle {
        binary_completion: if correct == 3 { 1 } else { -1 },
        weak_completion: if wrong == 0 { correct } else { -1 },
        asr_score: f64::from(correct) + 0.5 * f64::from(wildcards),
        web_feedback: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wine() -> TaskSpec {
        TaskSpec::new("wineries", "Lambertville", "morning").unwrap()
    }

    fn scores(q: QueryBinding) -> (i8, i8, f64) {
        let r = evaluate_rewards(&q, &wine());
        r.validate().unwrap();
        (r.binary_completion, r.weak_completion, r.asr_score)
    }

    #[test]
    fn worked_example() {
        assert_eq!(scores(QueryBinding::new(None, None, Some("morning"))), (-1, 1, 2.0));
    }

    #[test]
    fn corner_cases() {
        assert_eq!(scores(QueryBinding::new(Some("wineries"), Some("Lambertville"), Some("morning"))), (1, 3, 3.0));
        assert_eq!(scores(QueryBinding::default()), (-1, 0, 1.5));
        assert_eq!(scores(QueryBinding::new(Some("wineries"), Some("Morristown"), Some("morning"))), (-1, -1, 2.0));
    }

    #[test]
    fn bundle_validation() {
        let ok = RewardBundle { binary_completion: 1, weak_completion: 3, asr_score: 3.0, web_feedback: 1 };
        assert!(ok.validate().is_ok());
        let bad = RewardBundle { weak_completion: 2, ..ok };
        assert!(matches!(bad.validate(), Err(DomainError::BadReward { field: "binary_completion" })));
        let bad = RewardBundle { binary_completion: -1, weak_completion: 1, asr_score: 2.25, web_feedback: 0 };
        assert!(matches!(bad.validate(), Err(DomainError::BadReward { field: "asr_score" })));
    }

    #[test]
    fn standard_task_values() {
        let t = standard_tasks();
        assert_eq!(t[3], wine());
        assert_eq!(t[0], TaskSpec::new("museums", "Morristown", "afternoon").unwrap());
    }
}
