//! Flat `key=value` documents shared by scene and parameter configs.
//!
//! One pair per line, `#` starts a comment, blank lines are ignored. Keys and
//! values are trimmed. A later occurrence of a key overrides an earlier one.

use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    /// 1-based source line; 0 for entries that did not come from a file.
    pub line: usize,
}

pub fn parse_document(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key=value`, found `{content}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty key".into(),
            });
        }
        out.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

impl Entry {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Self {
        Entry {
            key: key.into(),
            value: value.into(),
            line: 0,
        }
    }

    pub fn parse<T: FromStr>(&self) -> Result<T> {
        self.value.parse::<T>().map_err(|_| Error::Parse {
            line: self.line,
            message: format!(
                "`{}` expects {}, found `{}`",
                self.key,
                short_type_name::<T>(),
                self.value
            ),
        })
    }

    /// Comma-separated list, optionally wrapped in `[...]`.
    pub fn parse_list<T: FromStr>(&self) -> Result<Vec<T>> {
        let inner = self.value.trim().trim_start_matches('[').trim_end_matches(']');
        if inner.trim().is_empty() {
            return Ok(Vec::new());
        }
        inner
            .split(',')
            .map(|tok| {
                tok.trim().parse::<T>().map_err(|_| Error::Parse {
                    line: self.line,
                    message: format!(
                        "`{}` expects a list of {}, found `{}`",
                        self.key,
                        short_type_name::<T>(),
                        tok.trim()
                    ),
                })
            })
            .collect()
    }
}

fn short_type_name<T>() -> &'static str {
    let full = std::any::type_name::<T>();
    match full {
        "f64" | "f32" => "a number",
        "u8" | "u16" | "u32" | "u64" | "usize" | "i32" | "i64" => "an integer",
        "bool" => "true/false",
        _ => full.rsplit("::").next().unwrap_or(full),
    }
}
