use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../../data/stopwords.txt");

/// The bundled INQUERY-style English stopword list.
pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(BUNDLED)
}

/// One term per line; blank lines and `#` comments are ignored. Entries are
/// lowercased.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_list_is_loaded() {
        let sw = default_stopwords();
        assert!(sw.len() > 400);
        for w in ["the", "what", "is", "it", "about", "are", "more"] {
            assert!(sw.contains(w), "{w}");
        }
        assert!(!sw.contains("tell"));
        assert!(!sw.contains("#"));
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let sw = parse_stopwords("# header\nThe\n\n  of  # inline\n");
        assert_eq!(sw.into_iter().collect::<Vec<_>>(), vec!["of", "the"]);
    }
}
