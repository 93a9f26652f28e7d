use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    /// Lowercased surface form. Stemming is applied later by the analyzer.
    pub normalized: String,
    /// Byte span of `surface` in the source text.
    pub offset: Range<usize>,
}

/// Splits on whitespace and punctuation; a token is a maximal run of
/// alphanumeric characters. Hyphens and apostrophes separate tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                tokens.push(make_token(text, s..i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(make_token(text, s..text.len()));
    }
    tokens
}

fn make_token(text: &str, offset: Range<usize>) -> Token {
    let surface = text[offset.clone()].to_string();
    Token {
        normalized: surface.to_lowercase(),
        surface,
        offset,
    }
}
