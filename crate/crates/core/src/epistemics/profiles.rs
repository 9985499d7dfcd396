//! Interpretation profiles: which assumptions an interpretation grants.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::AssumptionId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Flag {
    Check,
    Cross,
}

impl Flag {
    pub fn holds(self) -> bool {
        self == Flag::Check
    }

    pub fn glyph(self) -> &'static str {
        match self {
            Flag::Check => "✓",
            Flag::Cross => "×",
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Flag::Check => "check",
            Flag::Cross => "cross",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProfileError {
    #[error("line {line}: expected `name: <text>` first")]
    MissingName { line: usize },
    #[error("line {line}: expected `<assumption> = check|cross`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown assumption {token:?}")]
    UnknownAssumption { line: usize, token: String },
    #[error("line {line}: flag must be `check` or `cross`, got {token:?}")]
    BadFlag { line: usize, token: String },
    #[error("assumption {0} given twice")]
    Duplicate(AssumptionId),
    #[error("assumption {0} missing")]
    Missing(AssumptionId),
    #[error("unknown interpretation {0:?}")]
    UnknownInterpretation(String),
}

/// A ✓/× assignment over the eight table columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InterpretationProfile {
    name: String,
    flags: BTreeMap<AssumptionId, Flag>,
    /// Whether the interpretation is held to avoid the contradiction.
    claims_escape: bool,
}

impl InterpretationProfile {
    /// `flags` in table column order `Q S C P U T L M`.
    pub fn from_row(name: impl Into<String>, flags: [Flag; 8]) -> Self {
        Self {
            name: name.into(),
            flags: AssumptionId::TABLE_COLUMNS.into_iter().zip(flags).collect(),
            claims_escape: false,
        }
    }

    pub fn all_check() -> Self {
        Self::from_row("All assumptions hold", [Flag::Check; 8])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn slug(&self) -> String {
        self.name.to_ascii_lowercase().replace(' ', "-")
    }

    pub fn flag(&self, id: AssumptionId) -> Option<Flag> {
        self.flags.get(&id).copied()
    }

    /// Whether the assumption holds; assumptions outside the table never do.
    pub fn holds(&self, id: AssumptionId) -> bool {
        self.flag(id).is_some_and(Flag::holds)
    }

    pub fn claims_escape(&self) -> bool {
        self.claims_escape
    }

    pub fn with(mut self, id: AssumptionId, flag: Flag) -> Self {
        if AssumptionId::TABLE_COLUMNS.contains(&id) {
            self.flags.insert(id, flag);
        }
        self
    }

    /// Parses `name: <text>` followed by eight `<assumption> = check|cross` lines.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, first) = lines.next().ok_or(ProfileError::MissingName { line: 1 })?;
        let name = first
            .strip_prefix("name:")
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .ok_or(ProfileError::MissingName { line })?;
        let mut flags = BTreeMap::new();
        for (line, text) in lines {
            let (key, value) = text.split_once('=').ok_or_else(|| ProfileError::Syntax {
                line,
                text: text.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let id = AssumptionId::TABLE_COLUMNS
                .into_iter()
                .find(|a| a.token() == key)
                .ok_or_else(|| ProfileError::UnknownAssumption {
                    line,
                    token: key.to_string(),
                })?;
            let flag = match value {
                "check" => Flag::Check,
                "cross" => Flag::Cross,
                _ => {
                    return Err(ProfileError::BadFlag {
                        line,
                        token: value.to_string(),
                    })
                }
            };
            if flags.insert(id, flag).is_some() {
                return Err(ProfileError::Duplicate(id));
            }
        }
        if let Some(missing) = AssumptionId::TABLE_COLUMNS
            .into_iter()
            .find(|a| !flags.contains_key(a))
        {
            return Err(ProfileError::Missing(missing));
        }
        Ok(Self {
            name: name.to_string(),
            flags,
            claims_escape: false,
        })
    }

    pub fn to_file_format(&self) -> String {
        let mut out = format!("name: {}\n", self.name);
        for id in AssumptionId::TABLE_COLUMNS {
            let flag = self.flag(id).expect("all columns present");
            out.push_str(&format!("{} = {}\n", id.token(), flag.token()));
        }
        out
    }
}

impl fmt::Display for InterpretationProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (", self.name)?;
        for (i, id) in AssumptionId::TABLE_COLUMNS.into_iter().enumerate() {
            let sep = if i == 0 { "" } else { " " };
            write!(
                f,
                "{sep}{}{}",
                id.token(),
                self.flag(id).expect("all columns").glyph()
            )?;
        }
        f.write_str(")")
    }
}

/// The seven interpretations, with their ✓/× rows over `Q S C P U T L M`.
pub fn shipped() -> Vec<InterpretationProfile> {
    use Flag::{Check as Y, Cross as N};
    let rows: [(&str, [Flag; 8]); 7] = [
        ("Copenhagen", [Y, Y, Y, Y, N, Y, N, Y]),
        ("Collapse theories", [Y, Y, Y, Y, N, Y, N, N]),
        ("Bell-Bohm", [Y, Y, Y, Y, N, Y, N, N]),
        ("Relative-state", [Y, Y, Y, N, Y, N, N, N]),
        ("Many worlds", [Y, Y, Y, N, Y, N, N, N]),
        ("Consistent histories", [Y, Y, Y, Y, Y, Y, N, Y]),
        ("QBism", [Y, Y, N, Y, Y, Y, Y, Y]),
    ];
    rows.into_iter()
        .map(|(name, flags)| InterpretationProfile {
            claims_escape: true,
            ..InterpretationProfile::from_row(name, flags)
        })
        .collect()
}

/// Looks up a shipped profile by slug (`many-worlds`), display name, or short alias.
pub fn by_name(name: &str) -> Result<InterpretationProfile, ProfileError> {
    let wanted = name.trim().to_ascii_lowercase().replace([' ', '_'], "-");
    let alias = match wanted.as_str() {
        "collapse" | "grw" => "collapse-theories",
        "bohm" | "bohmian" => "bell-bohm",
        "everett" | "relative-state" => "relative-state",
        "mwi" => "many-worlds",
        "ch" => "consistent-histories",
        other => other,
    };
    shipped()
        .into_iter()
        .find(|p| p.slug() == alias)
        .ok_or_else(|| ProfileError::UnknownInterpretation(name.to_string()))
}

fn pad(text: &str, width: usize) -> String {
    let len = text.chars().count();
    format!("{text}{}", " ".repeat(width.saturating_sub(len)))
}

fn render(title: &str, columns: &[AssumptionId], profiles: &[InterpretationProfile]) -> String {
    let width = profiles
        .iter()
        .map(|p| p.name.chars().count())
        .max()
        .unwrap_or(0);
    let mut out = format!("{title}\n");
    let mut header = pad("", width);
    for id in columns {
        header.push_str(&format!(" | ({})", id.token()));
    }
    out.push_str(header.trim_end());
    out.push('\n');
    let rule_len = width + columns.len() * 6;
    out.push_str(&"-".repeat(rule_len));
    out.push('\n');
    for p in profiles {
        let mut row = pad(&p.name, width);
        for &id in columns {
            row.push_str(&format!(
                " |  {} ",
                p.flag(id).expect("all columns").glyph()
            ));
        }
        out.push_str(row.trim_end());
        out.push('\n');
    }
    out
}

/// Both assumption tables as fixed-width text.
pub fn render_tables() -> String {
    let profiles = shipped();
    let mut out = render(
        "Assumptions declared by the argument",
        &[AssumptionId::Q, AssumptionId::S, AssumptionId::C],
        &profiles,
    );
    out.push('\n');
    out.push_str(&render(
        "All assumptions",
        &AssumptionId::TABLE_COLUMNS,
        &profiles,
    ));
    out
}
