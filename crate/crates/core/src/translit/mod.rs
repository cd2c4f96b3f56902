//! Romanization of Hangul (Yale) and Manchu script (Abkai).
//!
//! Both schemes are driven by plain-text tables shipped under
//! `data/translit/`. Every function here is pure over immutable tables.

mod abkai;
mod hangul;
mod table;
mod yale;

pub use abkai::{abkai_deromanize, abkai_romanize, AbkaiScheme, IrreversiblePosition, Romanized};
pub use hangul::{compose_hangul, decompose_hangul, JamoTriple, HANGUL_BASE, HANGUL_LAST};
pub use table::{MappingTable, TableEntry};
pub use yale::{yale_deromanize, yale_romanize, YaleScheme};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TranslitError {
    #[error("'{0}' (U+{code:04X}) is not a precomposed Hangul syllable", code = *.0 as u32)]
    NotASyllable(char),
    #[error("unmappable character '{ch}' (U+{code:04X}) at position {position}", code = *.ch as u32)]
    UnmappableCharacter { ch: char, position: usize },
    #[error("no valid syllabification for '{word}'")]
    AmbiguousParse { word: String },
    #[error("table line {line}: {message}")]
    Table { line: usize, message: String },
}

/// Characters copied verbatim in both directions.
pub fn is_pass_through(c: char) -> bool {
    c.is_ascii_digit() || matches!(c, '.' | ',' | '?' | '!' | '-')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Script {
    Hangul,
    Manchu,
    Latin,
}

/// Sniffs which script a text is written in. Any Hangul syllable marks the
/// text as Hangul, any Mongolian-block code point as Manchu.
pub fn detect_script(text: &str) -> Script {
    for c in text.chars() {
        let cp = c as u32;
        if (HANGUL_BASE..=HANGUL_LAST).contains(&cp) {
            return Script::Hangul;
        }
        if (0x1800..=0x18AF).contains(&cp) {
            return Script::Manchu;
        }
    }
    Script::Latin
}

/// Romanizes `text` if it is in a non-Latin script, otherwise returns it
/// unchanged.
pub fn romanize_auto(text: &str) -> Result<String, TranslitError> {
    match detect_script(text) {
        Script::Hangul => yale_romanize(text),
        Script::Manchu => abkai_romanize(text).map(|r| r.text),
        Script::Latin => Ok(text.to_string()),
    }
}

/// Splits `text` into runs of ASCII letters (words to parse) and single
/// other characters, validating the latter.
fn latin_segments(text: &str) -> Result<Vec<Segment<'_>>, TranslitError> {
    let mut out = Vec::new();
    let mut start = None;
    for (pos, (i, c)) in text.char_indices().enumerate() {
        if c.is_ascii_alphabetic() {
            start.get_or_insert(i);
            continue;
        }
        if let Some(s) = start.take() {
            out.push(Segment::Word(&text[s..i]));
        }
        if c.is_whitespace() || is_pass_through(c) {
            out.push(Segment::Other(c));
        } else {
            return Err(TranslitError::UnmappableCharacter { ch: c, position: pos });
        }
    }
    if let Some(s) = start {
        out.push(Segment::Word(&text[s..]));
    }
    Ok(out)
}

enum Segment<'a> {
    Word(&'a str),
    Other(char),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sniffing() {
        assert_eq!(detect_script("한글 ok"), Script::Hangul);
        assert_eq!(detect_script("\u{1820}\u{1828}"), Script::Manchu);
        assert_eq!(detect_script("abka"), Script::Latin);
        assert_eq!(romanize_auto("abka i").unwrap(), "abka i");
        assert_eq!(romanize_auto("한글").unwrap(), "hankul");
    }

    #[test]
    fn pass_through_set() {
        for c in "0123456789.,?!-".chars() {
            assert!(is_pass_through(c));
        }
        assert!(!is_pass_through(';'));
        assert!(!is_pass_through('a'));
    }
}
