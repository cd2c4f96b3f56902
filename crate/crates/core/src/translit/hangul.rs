use super::TranslitError;

pub const HANGUL_BASE: u32 = 0xAC00;
pub const HANGUL_LAST: u32 = 0xD7A3;
const MEDIAL_COUNT: u32 = 21;
const FINAL_COUNT: u32 = 28;
const BLOCK: u32 = MEDIAL_COUNT * FINAL_COUNT; // 588

/// Jamo indices of a precomposed syllable. `final_` is 0 when the syllable
/// has no final consonant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JamoTriple {
    pub initial: u8,
    pub medial: u8,
    pub final_: u8,
}

pub fn decompose_hangul(ch: char) -> Result<JamoTriple, TranslitError> {
    let cp = ch as u32;
    if !(HANGUL_BASE..=HANGUL_LAST).contains(&cp) {
        return Err(TranslitError::NotASyllable(ch));
    }
    let q = cp - HANGUL_BASE;
    Ok(JamoTriple {
        initial: (q / BLOCK) as u8,
        medial: ((q % BLOCK) / FINAL_COUNT) as u8,
        final_: (q % FINAL_COUNT) as u8,
    })
}

/// Inverse of [`decompose_hangul`]. Returns `None` for out-of-range indices.
pub fn compose_hangul(t: JamoTriple) -> Option<char> {
    if t.initial >= 19 || t.medial as u32 >= MEDIAL_COUNT || t.final_ as u32 >= FINAL_COUNT {
        return None;
    }
    let cp = HANGUL_BASE + t.initial as u32 * BLOCK + t.medial as u32 * FINAL_COUNT + t.final_ as u32;
    char::from_u32(cp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_base() {
        assert_eq!(
            decompose_hangul('가').unwrap(),
            JamoTriple { initial: 0, medial: 0, final_: 0 }
        );
    }

    #[test]
    fn han() {
        // 0xD55C - 0xAC00 = 10588 = 18*588 + 0*28 + 4
        assert_eq!(
            decompose_hangul('한').unwrap(),
            JamoTriple { initial: 18, medial: 0, final_: 4 }
        );
    }

    #[test]
    fn rejects_latin() {
        assert_eq!(decompose_hangul('A'), Err(TranslitError::NotASyllable('A')));
        assert!(decompose_hangul('\u{D7A4}').is_err());
        assert!(decompose_hangul('\u{ABFF}').is_err());
    }

    #[test]
    fn compose_inverts_decompose_over_block() {
        for cp in HANGUL_BASE..=HANGUL_LAST {
            let c = char::from_u32(cp).unwrap();
            assert_eq!(compose_hangul(decompose_hangul(c).unwrap()), Some(c));
        }
        assert_eq!(compose_hangul(JamoTriple { initial: 19, medial: 0, final_: 0 }), None);
    }
}
