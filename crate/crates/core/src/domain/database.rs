use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::task::{Attribute, QueryBinding, ACTIVITIES, TIMES};
use super::DomainError;

const BUNDLED: &str = include_str!("../../data/activities.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityRow {
    pub activity: String,
    pub location: String,
    pub time: String,
    pub name: String,
}

impl ActivityRow {
    fn field(&self, attr: Attribute) -> &str {
        match attr {
            Attribute::Activity => &self.activity,
            Attribute::Location => &self.location,
            Attribute::Time => &self.time,
        }
    }
}

/// Tab-separated `activity, location, time, name` rows with a header line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityDatabase {
    rows: Vec<ActivityRow>,
}

impl ActivityDatabase {
    /// The synthetic database shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED.as_bytes()).expect("bundled database is valid")
    }

    pub fn load(path: &Path) -> Result<Self, DomainError> {
        let file = std::fs::File::open(path).map_err(|e| DomainError::Io(path.display().to_string(), e))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, DomainError> {
        let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<ActivityRow>().enumerate() {
            let line = i + 2;
            let row = rec.map_err(|e| DomainError::Database { line, reason: e.to_string() })?;
            if !ACTIVITIES.contains(&row.activity.as_str()) {
                return Err(DomainError::Database { line, reason: format!("unknown activity '{}'", row.activity) });
            }
            if !TIMES.contains(&row.time.as_str()) {
                return Err(DomainError::Database { line, reason: format!("unknown time '{}'", row.time) });
            }
            if row.location.trim().is_empty() || row.name.trim().is_empty() {
                return Err(DomainError::Database { line, reason: "empty field".into() });
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ActivityRow] {
        &self.rows
    }

    /// Distinct towns in first-seen order.
    pub fn locations(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.location.as_str()) {
                out.push(&r.location);
            }
        }
        out
    }

    /// Rows agreeing with every concrete slot; wildcards match anything.
    pub fn query(&self, query: &QueryBinding) -> Vec<&ActivityRow> {
        self.rows
            .iter()
            .filter(|row| Attribute::ALL.into_iter().all(|a| query.get(a).is_none_or(|v| v == row.field(a))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_covers_domains() {
        let db = ActivityDatabase::bundled();
        assert!(db.rows().len() >= 60);
        assert!(db.locations().len() >= 12);
        for a in ACTIVITIES {
            assert!(db.rows().iter().any(|r| r.activity == a), "{a}");
        }
        for t in TIMES {
            assert!(db.rows().iter().any(|r| r.time == t), "{t}");
        }
    }

    #[test]
    fn wildcard_query_returns_everything() {
        let db = ActivityDatabase::bundled();
        assert_eq!(db.query(&QueryBinding::default()).len(), db.rows().len());
    }

    #[test]
    fn unknown_location_matches_nothing() {
        let db = ActivityDatabase::bundled();
        assert!(db.query(&QueryBinding::new(None, Some("Atlantis"), None)).is_empty());
    }

    #[test]
    fn concrete_query_matches_linear_scan() {
        let db = ActivityDatabase::bundled();
        let q = QueryBinding::new(Some("wineries"), Some("Lambertville"), Some("morning"));
        let hits = db.query(&q);
        let mut expected = Vec::new();
        for row in db.rows() {
            if row.activity == "wineries" && row.location == "Lambertville" && row.time == "morning" {
                expected.push(row);
            }
        }
        assert!(!expected.is_empty());
        assert_eq!(hits, expected);
    }

    #[test]
    fn rejects_bad_rows() {
        let text = "activity\tlocation\ttime\tname\nzoos\tTrenton\tmidnight\tNight Zoo\n";
        let err = ActivityDatabase::from_reader(text.as_bytes()).unwrap_err();
        assert!(matches!(err, DomainError::Database { line: 2, .. }));
    }
}
