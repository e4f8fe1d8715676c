//! Token normalization shared by oracle selection and the metrics.

use serde::{Deserialize, Serialize};

/// True when every character of `token` is punctuation (and it is non-empty).
pub fn is_punct_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(is_punct_char)
}

fn is_punct_char(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205E}' | '\u{00A1}' | '\u{00AB}' | '\u{00BB}' | '\u{00BF}'
        )
}

/// Whitespace tokenizer with optional case folding and punctuation removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tokenizer {
    pub lowercase: bool,
    pub drop_punct: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self {
            lowercase: true,
            drop_punct: true,
        }
    }
}

impl Tokenizer {
    pub fn normalize(&self, token: &str) -> Option<String> {
        if self.drop_punct && is_punct_token(token) {
            return None;
        }
        Some(if self.lowercase {
            token.to_lowercase()
        } else {
            token.to_string()
        })
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.tokens(text.split_whitespace())
    }

    pub fn tokens<'a>(&self, forms: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        forms.into_iter().filter_map(|t| self.normalize(t)).collect()
    }

    pub fn describe(&self) -> String {
        format!(
            "whitespace split, lowercase={}, drop_punct={}",
            self.lowercase, self.drop_punct
        )
    }
}
