use std::fmt;

use serde::Serialize;

/// One broken invariant in an artifact. Violations are data: validators
/// collect them instead of failing on the first one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Record (user entry, building, grid...) index, 0-based.
    pub record: Option<usize>,
    /// Path index within the record, when relevant.
    pub path: Option<usize>,
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            record: None,
            path: None,
            field: field.into(),
            rule: rule.into(),
        }
    }

    pub fn at_record(mut self, record: usize) -> Self {
        self.record = Some(record);
        self
    }

    pub fn at_path(mut self, path: usize) -> Self {
        self.path = Some(path);
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.record {
            write!(f, "record {r}")?;
            if let Some(p) = self.path {
                write!(f, " path {p}")?;
            }
            write!(f, ": ")?;
        }
        write!(f, "{} violates `{}`", self.field, self.rule)
    }
}
