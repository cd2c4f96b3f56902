use std::sync::OnceLock;

use super::table::{parse_entries, MappingTable};
use super::{is_pass_through, latin_segments, Segment, TranslitError};

const BUILTIN: &str = include_str!("../../../../data/translit/abkai.tsv");

/// A lossy unit met during romanization; its round trip restores the
/// canonical unit that shares the same Latin, not the original.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrreversiblePosition {
    /// Character index in the input.
    pub position: usize,
    pub unit: char,
    pub latin: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Romanized {
    pub text: String,
    pub irreversible: Vec<IrreversiblePosition>,
}

#[derive(Debug, Clone)]
pub struct AbkaiScheme {
    pub version: u32,
    pub table: MappingTable,
    max_len: usize,
}

impl AbkaiScheme {
    pub fn builtin() -> &'static AbkaiScheme {
        static SCHEME: OnceLock<AbkaiScheme> = OnceLock::new();
        SCHEME.get_or_init(|| AbkaiScheme::from_table_text(BUILTIN).expect("shipped abkai table is valid"))
    }

    pub fn from_table_text(text: &str) -> Result<Self, TranslitError> {
        let (version, entries) = parse_entries(text)?;
        if entries.iter().any(|e| e.latin.is_empty()) {
            return Err(TranslitError::Table { line: 0, message: "empty latin not allowed".into() });
        }
        let table = MappingTable::from_entries(&entries)?;
        let max_len = table.max_latin_len();
        Ok(AbkaiScheme { version, table, max_len })
    }

    pub fn romanize(&self, text: &str) -> Result<Romanized, TranslitError> {
        let mut out = String::with_capacity(text.len());
        let mut irreversible = Vec::new();
        for (position, c) in text.chars().enumerate() {
            if let Some(latin) = self.table.forward.get(&c) {
                out.push_str(latin);
                if self.table.lossy_units.contains(&c) {
                    irreversible.push(IrreversiblePosition { position, unit: c, latin: latin.clone() });
                }
            } else if c.is_whitespace() || is_pass_through(c) || c.is_ascii_alphabetic() {
                out.push(c);
            } else {
                return Err(TranslitError::UnmappableCharacter { ch: c, position });
            }
        }
        Ok(Romanized { text: out, irreversible })
    }

    /// Greedy longest-match over the backward table.
    pub fn deromanize(&self, latin: &str) -> Result<String, TranslitError> {
        let mut out = String::with_capacity(latin.len());
        for seg in latin_segments(latin)? {
            match seg {
                Segment::Other(c) => out.push(c),
                Segment::Word(w) => {
                    let mut pos = 0;
                    while pos < w.len() {
                        let hit = (1..=self.max_len.min(w.len() - pos))
                            .rev()
                            .find_map(|n| self.table.backward.get(&w[pos..pos + n]).map(|&u| (n, u)));
                        match hit {
                            Some((n, unit)) => {
                                out.push(unit);
                                pos += n;
                            }
                            None => return Err(TranslitError::AmbiguousParse { word: w.to_string() }),
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

pub fn abkai_romanize(text: &str) -> Result<Romanized, TranslitError> {
    AbkaiScheme::builtin().romanize(text)
}

pub fn abkai_deromanize(latin: &str) -> Result<String, TranslitError> {
    AbkaiScheme::builtin().deromanize(latin)
}
