use thiserror::Error;
use unicode_normalization::UnicodeNormalization;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("title is empty after normalization")]
pub struct EmptyAfterNormalization;

/// Comparison key for titles: NFKC, lowercase, punctuation removed,
/// whitespace runs collapsed, trimmed.
pub fn normalize_title(raw: &str) -> Result<String, EmptyAfterNormalization> {
    let folded: String = raw.nfkc().flat_map(char::to_lowercase).collect();
    let mut out = String::with_capacity(folded.len());
    let mut pending_space = false;
    for c in folded.nfkc() {
        if c.general_category_group() == GeneralCategoryGroup::Punctuation {
            continue;
        }
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    if out.is_empty() {
        Err(EmptyAfterNormalization)
    } else {
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_applied_pipeline() {
        // "Towards  Fon–French NMT!": lowercase, drop "–" and "!", collapse the double space.
        assert_eq!(normalize_title("Towards  Fon–French NMT!").unwrap(), "towards fonfrench nmt");
    }

    #[test]
    fn already_normal() {
        assert_eq!(normalize_title("abc").unwrap(), "abc");
    }

    #[test]
    fn punctuation_only_is_empty() {
        assert_eq!(normalize_title("—!!—"), Err(EmptyAfterNormalization));
        assert_eq!(normalize_title("   "), Err(EmptyAfterNormalization));
    }

    #[test]
    fn compatibility_forms_fold() {
        // Fullwidth letters and the "ﬁ" ligature decompose under NFKC.
        assert_eq!(normalize_title("ＮＭＴ ﬁne-tuning").unwrap(), "nmt finetuning");
        // Precomposed and combining sequences compare equal.
        assert_eq!(normalize_title("Yorùbá").unwrap(), normalize_title("Yoru\u{300}ba\u{301}").unwrap());
    }

    #[test]
    fn tabs_and_newlines_collapse() {
        assert_eq!(normalize_title("\t a \n\n b  ").unwrap(), "a b");
    }

    #[test]
    fn idempotent_on_samples() {
        for s in ["Towards  Fon–French NMT!", "Masakhane: MT for Africa", "ＡＢＣ  def", "Ìgbò (Nigeria)"] {
            let once = normalize_title(s).unwrap();
            assert_eq!(normalize_title(&once).unwrap(), once);
        }
    }
}
