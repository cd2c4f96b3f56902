use std::collections::HashSet;
use std::sync::OnceLock;

use super::hangul::{compose_hangul, decompose_hangul, JamoTriple, HANGUL_BASE, HANGUL_LAST};
use super::table::{parse_entries, MappingTable};
use super::{is_pass_through, latin_segments, Segment, TranslitError};

const BUILTIN: &str = include_str!("../../../../data/translit/yale.tsv");

/// Yale romanization tables split by jamo role.
#[derive(Debug, Clone)]
pub struct YaleScheme {
    pub version: u32,
    initials: Vec<String>,
    medials: Vec<String>,
    /// Index 0 is the empty final.
    finals: Vec<String>,
    pub initial_table: MappingTable,
    pub medial_table: MappingTable,
    pub final_table: MappingTable,
}

impl YaleScheme {
    pub fn builtin() -> &'static YaleScheme {
        static SCHEME: OnceLock<YaleScheme> = OnceLock::new();
        SCHEME.get_or_init(|| YaleScheme::from_table_text(BUILTIN).expect("shipped yale table is valid"))
    }

    pub fn from_table_text(text: &str) -> Result<Self, TranslitError> {
        let (version, entries) = parse_entries(text)?;
        let role = |lo: u32, hi: u32| entries.iter().filter(move |e| (lo..=hi).contains(&(e.unit as u32)));
        let initial_table = MappingTable::from_entries(role(0x1100, 0x1112))?;
        let medial_table = MappingTable::from_entries(role(0x1161, 0x1175))?;
        let final_table = MappingTable::from_entries(role(0x11A8, 0x11C2))?;
        let collect = |t: &MappingTable, lo: u32, n: u32| -> Result<Vec<String>, TranslitError> {
            (lo..lo + n)
                .map(|cp| {
                    let c = char::from_u32(cp).expect("jamo code point");
                    t.forward.get(&c).cloned().ok_or(TranslitError::Table {
                        line: 0,
                        message: format!("missing jamo U+{cp:04X}"),
                    })
                })
                .collect()
        };
        let initials = collect(&initial_table, 0x1100, 19)?;
        let medials = collect(&medial_table, 0x1161, 21)?;
        let mut finals = vec![String::new()];
        finals.extend(collect(&final_table, 0x11A8, 27)?);
        if medials.iter().any(String::is_empty) || finals[1..].iter().any(String::is_empty) {
            return Err(TranslitError::Table { line: 0, message: "only initials may be empty".into() });
        }
        if entries.len() != 19 + 21 + 27 {
            return Err(TranslitError::Table { line: 0, message: "unexpected entries outside the jamo ranges".into() });
        }
        Ok(YaleScheme { version, initials, medials, finals, initial_table, medial_table, final_table })
    }

    pub fn romanize_syllable(&self, t: JamoTriple) -> String {
        let mut s = String::with_capacity(6);
        s.push_str(&self.initials[t.initial as usize]);
        s.push_str(&self.medials[t.medial as usize]);
        s.push_str(&self.finals[t.final_ as usize]);
        s
    }

    pub fn romanize(&self, text: &str) -> Result<String, TranslitError> {
        let mut out = String::with_capacity(text.len() * 2);
        for (position, c) in text.chars().enumerate() {
            let cp = c as u32;
            if (HANGUL_BASE..=HANGUL_LAST).contains(&cp) {
                out.push_str(&self.romanize_syllable(decompose_hangul(c)?));
            } else if c.is_whitespace() || is_pass_through(c) || c.is_ascii_alphabetic() {
                out.push(c);
            } else {
                return Err(TranslitError::UnmappableCharacter { ch: c, position });
            }
        }
        Ok(out)
    }

    pub fn deromanize(&self, latin: &str) -> Result<String, TranslitError> {
        let mut out = String::with_capacity(latin.len());
        for seg in latin_segments(latin)? {
            match seg {
                Segment::Other(c) => out.push(c),
                Segment::Word(w) => {
                    let syllables = self.parse_word(w).ok_or_else(|| TranslitError::AmbiguousParse { word: w.to_string() })?;
                    out.extend(syllables);
                }
            }
        }
        Ok(out)
    }

    /// Finds a syllabification of `word`, preferring the longest initial,
    /// vowel and final at each step and backtracking on dead ends.
    fn parse_word(&self, word: &str) -> Option<Vec<char>> {
        let bytes = word.as_bytes();
        let mut failed: HashSet<usize> = HashSet::new();
        let mut out = Vec::new();
        if self.parse_from(bytes, 0, &mut out, &mut failed) {
            Some(out)
        } else {
            None
        }
    }

    fn parse_from(&self, w: &[u8], pos: usize, out: &mut Vec<char>, failed: &mut HashSet<usize>) -> bool {
        if pos == w.len() {
            return !out.is_empty();
        }
        if failed.contains(&pos) {
            return false;
        }
        for (i, ini) in longest_first(&self.initials, w, pos) {
            let p1 = pos + ini.len();
            for (m, med) in longest_first(&self.medials, w, p1) {
                let p2 = p1 + med.len();
                for (f, fin) in longest_first(&self.finals, w, p2) {
                    let p3 = p2 + fin.len();
                    let t = JamoTriple { initial: i as u8, medial: m as u8, final_: f as u8 };
                    out.push(compose_hangul(t).expect("indices in range"));
                    if self.parse_from(w, p3, out, failed) {
                        return true;
                    }
                    out.pop();
                }
            }
        }
        failed.insert(pos);
        false
    }
}

/// Candidates from `options` that match `w` at `pos`, longest first.
fn longest_first<'a>(options: &'a [String], w: &[u8], pos: usize) -> Vec<(usize, &'a String)> {
    let mut v: Vec<(usize, &String)> = options
        .iter()
        .enumerate()
        .filter(|(_, s)| w[pos..].starts_with(s.as_bytes()))
        .collect();
    v.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
    v
}

pub fn yale_romanize(text: &str) -> Result<String, TranslitError> {
    YaleScheme::builtin().romanize(text)
}

/// Right inverse of [`yale_romanize`]: `yale_romanize(yale_deromanize(s)?) == s`.
/// Yale does not mark syllable boundaries, so multi-syllable words may come
/// back with a different (equally valid) syllabification.
pub fn yale_deromanize(latin: &str) -> Result<String, TranslitError> {
    YaleScheme::builtin().deromanize(latin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(yale_romanize("").unwrap(), "");
        assert_eq!(yale_romanize("한글").unwrap(), "hankul");
        assert_eq!(yale_romanize("가").unwrap(), "ka");
        assert_eq!(yale_deromanize("hankul").unwrap(), "한글");
        assert_eq!(yale_deromanize("").unwrap(), "");
    }

    #[test]
    fn unparseable() {
        assert_eq!(
            yale_deromanize("xq"),
            Err(TranslitError::AmbiguousParse { word: "xq".into() })
        );
        assert!(matches!(yale_deromanize("k"), Err(TranslitError::AmbiguousParse { .. })));
    }

    #[test]
    fn pass_through_and_errors() {
        assert_eq!(yale_romanize("한글, 2024!").unwrap(), "hankul, 2024!");
        assert_eq!(yale_deromanize("hankul, 2024!").unwrap(), "한글, 2024!");
        assert!(matches!(
            yale_romanize("한;"),
            Err(TranslitError::UnmappableCharacter { ch: ';', position: 1 })
        ));
        assert!(matches!(yale_deromanize("ka;"), Err(TranslitError::UnmappableCharacter { .. })));
    }

    #[test]
    fn table_has_full_jamo_inventory() {
        let s = YaleScheme::builtin();
        assert_eq!(s.initial_table.forward.len(), 19);
        assert_eq!(s.medial_table.forward.len(), 21);
        assert_eq!(s.final_table.forward.len(), 27);
        assert!(s.initial_table.lossy_units.is_empty());
    }

    #[test]
    fn ambiguous_words_still_round_trip_as_strings() {
        // 아니 and 안이 share the romanization "ani"
        let a = yale_romanize("아니").unwrap();
        assert_eq!(a, yale_romanize("안이").unwrap());
        assert_eq!(yale_romanize(&yale_deromanize(&a).unwrap()).unwrap(), a);
    }
}
