use std::collections::{BTreeMap, BTreeSet};

use super::TranslitError;

/// One line of a table file: `U+XXXX <tab> latin <tab> flags [# comment]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableEntry {
    pub unit: char,
    pub latin: String,
    pub lossy: bool,
}

/// Parses a table file. `_` in the latin column denotes the empty string.
pub fn parse_entries(text: &str) -> Result<(u32, Vec<TableEntry>), TranslitError> {
    let mut version = None;
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim_end();
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        let err = |message: String| TranslitError::Table { line: line_no, message };
        if cols[0] == "version" {
            let v = cols.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| err("bad version".into()))?;
            version = Some(v);
            continue;
        }
        if cols.len() != 3 {
            return Err(err(format!("expected 3 columns, found {}", cols.len())));
        }
        let hex = cols[0]
            .strip_prefix("U+")
            .ok_or_else(|| err(format!("unit '{}' is not U+XXXX", cols[0])))?;
        let unit = u32::from_str_radix(hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| err(format!("bad code point '{}'", cols[0])))?;
        let latin = if cols[1] == "_" { String::new() } else { cols[1].to_string() };
        if !latin.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(err(format!("latin '{latin}' must be lowercase ascii")));
        }
        let lossy = match cols[2] {
            "-" => false,
            "lossy" => true,
            other => return Err(err(format!("unknown flag '{other}'"))),
        };
        entries.push(TableEntry { unit, latin, lossy });
    }
    let version = version.ok_or(TranslitError::Table { line: 0, message: "missing version line".into() })?;
    Ok((version, entries))
}

/// Forward and backward maps between script units and Latin strings.
#[derive(Debug, Clone, Default)]
pub struct MappingTable {
    pub forward: BTreeMap<char, String>,
    pub backward: BTreeMap<String, char>,
    pub lossy_units: BTreeSet<char>,
}

impl MappingTable {
    /// Builds the maps. Non-lossy units must have pairwise distinct Latin
    /// strings; a lossy unit's Latin must already belong to a non-lossy unit.
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = &'a TableEntry>) -> Result<Self, TranslitError> {
        let mut t = MappingTable::default();
        let mut lossy = Vec::new();
        for e in entries {
            if t.forward.insert(e.unit, e.latin.clone()).is_some() {
                return Err(dup(format!("unit U+{:04X} listed twice", e.unit as u32)));
            }
            if e.lossy {
                t.lossy_units.insert(e.unit);
                lossy.push(e);
            } else if let Some(prev) = t.backward.insert(e.latin.clone(), e.unit) {
                return Err(dup(format!(
                    "latin '{}' claimed by U+{:04X} and U+{:04X}",
                    e.latin, prev as u32, e.unit as u32
                )));
            }
        }
        for e in lossy {
            if !t.backward.contains_key(&e.latin) {
                return Err(dup(format!("lossy unit U+{:04X} has no canonical counterpart", e.unit as u32)));
            }
        }
        Ok(t)
    }

    /// Longest Latin key, used to bound greedy matching.
    pub fn max_latin_len(&self) -> usize {
        self.backward.keys().map(String::len).max().unwrap_or(0)
    }
}

fn dup(message: String) -> TranslitError {
    TranslitError::Table { line: 0, message }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let (v, e) = parse_entries("version\t1\nU+0041\ta\t-\t# A\nU+0042\t_\t-\n").unwrap();
        assert_eq!(v, 1);
        assert_eq!(e[1].latin, "");
        let t = MappingTable::from_entries(&e).unwrap();
        assert_eq!(t.backward["a"], 'A');
    }

    #[test]
    fn rejects_duplicate_latin() {
        let (_, e) = parse_entries("version\t1\nU+0041\ta\t-\nU+0042\ta\t-\n").unwrap();
        assert!(MappingTable::from_entries(&e).is_err());
    }

    #[test]
    fn lossy_needs_canonical() {
        let (_, e) = parse_entries("version\t1\nU+0041\ta\tlossy\n").unwrap();
        assert!(MappingTable::from_entries(&e).is_err());
    }

    #[test]
    fn reports_bad_lines() {
        let err = parse_entries("version\t1\nU+0041\ta\n").unwrap_err();
        assert!(matches!(err, TranslitError::Table { line: 2, .. }));
        assert!(parse_entries("U+0041\ta\t-\n").is_err());
    }
}
