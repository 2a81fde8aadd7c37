//! Dictionary-driven stylistic markers.
//!
//! An utterance is reduced to its word count plus one presence bit per
//! dictionary category. Two dictionary formats are accepted:
//!
//! * LIWC `.dic`: a header enclosed by lines holding a single `%`, each header
//!   line `<id><whitespace><category>`, followed by body lines
//!   `<word><whitespace><id> <id> ...`. Body id tokens that are not plain
//!   integers (LIWC's conditional `<of>131/125` forms) are skipped.
//! * TSV: `category<TAB>word` per line. Blank lines and lines starting with
//!   `#` are ignored.
//!
//! Entries are lowercased. An entry ending in `*` is a stem and matches any
//! token with that prefix.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// The bundled eight-category function-word list.
pub const BUNDLED_TSV: &str = include_str!("../data/function_words.tsv");

#[derive(Debug, Clone)]
pub struct MarkerDictionary {
    categories: Vec<String>,
    entries: Vec<Vec<String>>,
    literals: HashMap<String, Vec<usize>>,
    stems: Vec<(String, usize)>,
}

/// Length and per-category bits of one utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    pub bits: Vec<u8>,
    pub length: u32,
}

impl MarkerDictionary {
    /// The bundled open replacement dictionary.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TSV).expect("bundled dictionary is valid")
    }

    /// Parse either format, detected by a leading `%` line.
    pub fn parse(source: &str) -> Result<Self> {
        let first = source.lines().map(str::trim).find(|l| !l.is_empty());
        if first == Some("%") {
            Self::parse_dic(source)
        } else {
            Self::parse_tsv(source)
        }
    }

    fn parse_tsv(source: &str) -> Result<Self> {
        let mut builder = Builder::default();
        for (lineno, raw) in source.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(cat), Some(word), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Dictionary(format!(
                    "line {}: expected `category<TAB>word`",
                    lineno + 1
                )));
            };
            let cat = cat.trim();
            if cat.is_empty() {
                return Err(Error::Dictionary(format!("line {}: empty category", lineno + 1)));
            }
            let idx = builder.category(cat);
            builder.entry(idx, word, lineno + 1)?;
        }
        builder.finish()
    }

    fn parse_dic(source: &str) -> Result<Self> {
        let mut builder = Builder::default();
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut delimiters = 0;
        for (lineno, raw) in source.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line == "%" {
                delimiters += 1;
                continue;
            }
            match delimiters {
                1 => {
                    let mut parts = line.split_whitespace();
                    let (Some(id), Some(name)) = (parts.next(), parts.next()) else {
                        return Err(Error::Dictionary(format!(
                            "line {}: header needs `<id> <category>`",
                            lineno + 1
                        )));
                    };
                    if id.parse::<u64>().is_err() {
                        return Err(Error::Dictionary(format!(
                            "line {}: category id `{id}` is not an integer",
                            lineno + 1
                        )));
                    }
                    if builder.index.contains_key(name) {
                        return Err(Error::Dictionary(format!(
                            "line {}: duplicate category `{name}`",
                            lineno + 1
                        )));
                    }
                    let idx = builder.category(name);
                    if ids.insert(id.to_string(), idx).is_some() {
                        return Err(Error::Dictionary(format!(
                            "line {}: duplicate category id {id}",
                            lineno + 1
                        )));
                    }
                }
                2 => {
                    let mut parts = line.split_whitespace();
                    let word = parts.next().unwrap_or_default();
                    for id in parts {
                        if id.parse::<u64>().is_err() {
                            continue;
                        }
                        let Some(&idx) = ids.get(id) else {
                            return Err(Error::Dictionary(format!(
                                "line {}: word `{word}` references undeclared category id {id}",
                                lineno + 1
                            )));
                        };
                        builder.entry(idx, word, lineno + 1)?;
                    }
                }
                _ => {
                    return Err(Error::Dictionary(format!(
                        "line {}: content outside the `%` header/body layout",
                        lineno + 1
                    )))
                }
            }
        }
        builder.finish()
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn entries(&self, category: usize) -> &[String] {
        &self.entries[category]
    }

    pub fn category_index(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == name)
    }

    /// Restrict to the named categories, in the order given.
    pub fn subset<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Config("marker subset is empty".into()));
        }
        let mut builder = Builder::default();
        for name in names {
            let name = name.as_ref();
            let src = self
                .category_index(name)
                .ok_or_else(|| Error::Config(format!("unknown marker `{name}`")))?;
            if builder.index.contains_key(name) {
                return Err(Error::Config(format!("marker `{name}` listed twice")));
            }
            let dst = builder.category(name);
            for e in &self.entries[src] {
                builder.entry(dst, e, 0)?;
            }
        }
        builder.finish()
    }

    /// Indices of every category matched by a single (already lowercased) token.
    pub fn matches<'a>(&'a self, token: &'a str) -> impl Iterator<Item = usize> + 'a {
        let lit = self.literals.get(token).into_iter().flatten().copied();
        let stems = self
            .stems
            .iter()
            .filter(move |(prefix, _)| token.starts_with(prefix.as_str()))
            .map(|&(_, c)| c);
        lit.chain(stems)
    }

    pub fn extract_features(&self, text: &str) -> FeatureVector {
        let mut bits = vec![0u8; self.categories.len()];
        let mut length = 0u32;
        for token in tokenize(text) {
            length += 1;
            for c in self.matches(&token) {
                bits[c] = 1;
            }
        }
        FeatureVector { bits, length }
    }

    /// A token that matches `category` and no other category.
    pub fn witness_token(&self, category: usize) -> Option<String> {
        self.entries[category]
            .iter()
            .map(|e| e.trim_end_matches('*').to_string())
            .find(|t| {
                tokenize(t).len() == 1 && {
                    let mut hits: Vec<usize> = self.matches(t).collect();
                    hits.sort_unstable();
                    hits.dedup();
                    hits == [category]
                }
            })
    }

    /// True when the token matches no category at all.
    pub fn is_filler(&self, token: &str) -> bool {
        self.matches(token).next().is_none()
    }
}

#[derive(Default)]
struct Builder {
    categories: Vec<String>,
    index: HashMap<String, usize>,
    entries: Vec<Vec<String>>,
}

impl Builder {
    fn category(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.categories.len();
        self.categories.push(name.to_string());
        self.index.insert(name.to_string(), i);
        self.entries.push(Vec::new());
        i
    }

    fn entry(&mut self, category: usize, raw: &str, line: usize) -> Result<()> {
        let word = raw.trim().to_lowercase();
        let at = |msg: String| {
            if line > 0 {
                Error::Dictionary(format!("line {line}: {msg}"))
            } else {
                Error::Dictionary(msg)
            }
        };
        let body = word.strip_suffix('*').unwrap_or(&word);
        if body.is_empty() {
            return Err(at("empty entry".into()));
        }
        if body.contains('*') {
            return Err(at(format!("entry `{word}` has `*` before its end")));
        }
        if !self.entries[category].contains(&word) {
            self.entries[category].push(word);
        }
        Ok(())
    }

    fn finish(self) -> Result<MarkerDictionary> {
        if self.categories.is_empty() || self.entries.iter().all(Vec::is_empty) {
            return Err(Error::Dictionary("dictionary has no entries".into()));
        }
        let mut literals: HashMap<String, Vec<usize>> = HashMap::new();
        let mut stems = Vec::new();
        for (c, words) in self.entries.iter().enumerate() {
            for w in words {
                match w.strip_suffix('*') {
                    Some(prefix) => stems.push((prefix.to_string(), c)),
                    None => literals.entry(w.clone()).or_default().push(c),
                }
            }
        }
        Ok(MarkerDictionary {
            categories: self.categories,
            entries: self.entries,
            literals,
            stems,
        })
    }
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

/// Lowercase and split on every character that is not a letter, digit or
/// apostrophe. Typographic apostrophes (U+2019) are folded to `'`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(is_token_char(c) || c == '\u{2019}'))
        .filter(|t| !t.is_empty())
        .map(|t| t.replace('\u{2019}', "'").to_lowercase())
        .collect()
}

/// Word count of an utterance.
pub fn utterance_length(text: &str) -> u32 {
    text.split(|c: char| !(is_token_char(c) || c == '\u{2019}'))
        .filter(|t| !t.is_empty())
        .count() as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dict(src: &str) -> MarkerDictionary {
        MarkerDictionary::parse(src).unwrap()
    }

    #[test]
    fn tsv_loads_categories_in_order() {
        let d = dict("article\tthe\narticle\ta\n");
        assert_eq!(d.categories(), ["article"]);
        assert_eq!(d.entries(0).len(), 2);
    }

    #[test]
    fn dic_format() {
        let src = "%\n1\tarticle\n2\tipron\n%\nthe\t1\nit*\t2\nkind\t<of>131/125 2\n";
        let d = dict(src);
        assert_eq!(d.categories(), ["article", "ipron"]);
        assert_eq!(d.extract_features("its the kind").bits, vec![1, 1]);
    }

    #[test]
    fn dic_undeclared_id_is_error() {
        let err = MarkerDictionary::parse("%\n1\tarticle\n%\nthe\t99\n").unwrap_err();
        assert!(err.to_string().contains("99"), "{err}");
    }

    #[test]
    fn empty_dictionary_is_error() {
        assert!(MarkerDictionary::parse("").is_err());
        assert!(MarkerDictionary::parse("# only a comment\n").is_err());
        assert!(MarkerDictionary::parse("%\n1\tarticle\n%\n").is_err());
    }

    #[test]
    fn malformed_entries() {
        assert!(MarkerDictionary::parse("article\t*\n").is_err());
        assert!(MarkerDictionary::parse("article\tt*e\n").is_err());
        assert!(MarkerDictionary::parse("article the\n").is_err());
        assert!(MarkerDictionary::parse("%\n1\ta\n1\tb\n%\nx\t1\n").is_err());
    }

    #[test]
    fn stem_matches_prefix() {
        let d = dict("ipron\tit*\n");
        for t in ["it", "its", "it's"] {
            assert_eq!(d.extract_features(t).bits, vec![1], "{t}");
        }
        assert_eq!(d.extract_features("sit").bits, vec![0]);
        assert_eq!(d.extract_features("its fine").bits, vec![1]);
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("I don't know."), ["i", "don't", "know"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("A--B"), ["a", "b"]);
        assert_eq!(tokenize("It\u{2019}s 42"), ["it's", "42"]);
    }

    #[test]
    fn lengths() {
        assert_eq!(utterance_length("the quick fox"), 3);
        assert_eq!(utterance_length(""), 0);
        assert_eq!(utterance_length("don't stop"), 2);
    }

    #[test]
    fn feature_extraction() {
        let d = dict("article\tthe\narticle\ta\n");
        assert_eq!(
            d.extract_features("the end"),
            FeatureVector { bits: vec![1], length: 2 }
        );
        assert_eq!(
            d.extract_features("nothing here"),
            FeatureVector { bits: vec![0], length: 2 }
        );
    }

    #[test]
    fn bundled_has_eight_categories_with_witnesses() {
        let d = MarkerDictionary::bundled();
        assert_eq!(d.len(), 8);
        for c in 0..d.len() {
            assert!(d.witness_token(c).is_some(), "{}", d.categories()[c]);
        }
    }

    #[test]
    fn subset_orders_and_rejects_unknown() {
        let d = MarkerDictionary::bundled();
        let s = d.subset(&["quant", "article"]).unwrap();
        assert_eq!(s.categories(), ["quant", "article"]);
        assert!(d.subset(&["nope"]).is_err());
        assert!(d.subset::<&str>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn adding_tokens_never_clears_bits(a in "[a-z' ]{0,40}", b in "[a-z' ]{0,40}") {
            let d = MarkerDictionary::bundled();
            let fa = d.extract_features(&a);
            let fab = d.extract_features(&format!("{a} {b}"));
            for (x, y) in fa.bits.iter().zip(&fab.bits) {
                prop_assert!(y >= x);
            }
            prop_assert_eq!(fa.length as usize, tokenize(&a).len());
        }

        #[test]
        fn stem_is_prefix_match(prefix in "[a-z]{1,4}", token in "[a-z]{1,8}") {
            let d = dict(&format!("s\t{prefix}*\n"));
            let hit = d.extract_features(&token).bits[0] == 1;
            prop_assert_eq!(hit, token.starts_with(&prefix));
        }
    }
}
