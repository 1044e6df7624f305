//! Bag-of-words features for scripts.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use super::{is_stop_word, porter_stem, FeatureMatrix};
use crate::error::{Error, Result};
use crate::lexer::{strip_comments, SourceScript};

/// Split an identifier on underscores, camel/Pascal case humps and letter/digit edges.
///
/// `configureCI_pipeline2` becomes `configure`, `CI`, `pipeline`, `2`.
pub fn split_identifier(ident: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    for chunk in ident.split(|c: char| !c.is_ascii_alphanumeric()) {
        let b = chunk.as_bytes();
        let mut start = 0;
        for i in 1..b.len() {
            let (prev, cur) = (b[i - 1], b[i]);
            let next_lower = b.get(i + 1).is_some_and(u8::is_ascii_lowercase);
            let boundary = (prev.is_ascii_lowercase() && cur.is_ascii_uppercase())
                || (prev.is_ascii_uppercase() && cur.is_ascii_uppercase() && next_lower)
                || (prev.is_ascii_digit() != cur.is_ascii_digit());
            if boundary {
                parts.push(&chunk[start..i]);
                start = i;
            }
        }
        if start < chunk.len() {
            parts.push(&chunk[start..]);
        }
    }
    parts
}

/// Comment removal, identifier splitting, symbol/number removal,
/// lowercasing, stop-word removal and Porter stemming.
pub fn bow_preprocess(script_text: &str) -> Vec<String> {
    let stripped = strip_comments(&SourceScript::new("", script_text));
    stripped
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
        .flat_map(split_identifier)
        .filter(|t| t.bytes().all(|c| c.is_ascii_alphabetic()) && !t.is_empty())
        .map(str::to_ascii_lowercase)
        .filter(|t| !is_stop_word(t))
        .map(|t| porter_stem(&t).expect("non-empty lowercase alphabetic token"))
        .collect()
}

/// Column vocabulary: the sorted union of tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
}

impl Vocabulary {
    pub fn fit<'a, I, T>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a T>,
        T: AsRef<[String]> + 'a + ?Sized,
    {
        let set: BTreeSet<&str> = docs
            .into_iter()
            .flat_map(|d| d.as_ref().iter().map(String::as_str))
            .collect();
        Self {
            tokens: set.into_iter().map(str::to_string).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Count matrix over this vocabulary; tokens outside it are ignored.
    pub fn transform(&self, ids: &[String], docs: &[Vec<String>]) -> Result<FeatureMatrix> {
        if ids.len() != docs.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} documents", ids.len()),
                got: docs.len().to_string(),
            });
        }
        let width = self.tokens.len();
        let mut values = vec![0.0; ids.len() * width];
        for (r, doc) in docs.iter().enumerate() {
            for tok in doc {
                if let Ok(c) = self.tokens.binary_search(tok) {
                    values[r * width + c] += 1.0;
                }
            }
        }
        FeatureMatrix::new(ids.to_vec(), self.tokens.clone(), values)
    }
}

pub fn bow_matrix(corpus: &BTreeMap<String, Vec<String>>) -> FeatureMatrix {
    let vocab = Vocabulary::fit(corpus.values());
    let ids: Vec<String> = corpus.keys().cloned().collect();
    let docs: Vec<Vec<String>> = corpus.values().cloned().collect();
    vocab
        .transform(&ids, &docs)
        .expect("ids and docs come from the same map")
}

/// Sparse `script_id,token,count` triplets; zero cells are omitted.
pub fn write_bow_triplets<W: Write>(m: &FeatureMatrix, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["script_id", "token", "count"])?;
    for (r, id) in m.row_ids.iter().enumerate() {
        for (c, tok) in m.col_names.iter().enumerate() {
            let v = m.get(r, c);
            if v != 0.0 {
                w.write_record([id.as_str(), tok.as_str(), &(v as u64).to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Read triplets back into a corpus of token lists (token order is not preserved).
pub fn read_bow_triplets<R: Read>(input: R) -> Result<BTreeMap<String, Vec<String>>> {
    let mut r = csv::Reader::from_reader(input);
    let mut corpus: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let count: usize = rec.get(2).unwrap_or_default().parse().map_err(|_| Error::Malformed {
            location: format!("bow row {}", i + 2),
            message: "count must be a non-negative integer".into(),
        })?;
        let doc = corpus.entry(rec.get(0).unwrap_or_default().to_string()).or_default();
        doc.extend(std::iter::repeat_n(rec.get(1).unwrap_or_default().to_string(), count));
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn splitting() {
        assert_eq!(split_identifier("configureCI_pipeline2"), ["configure", "CI", "pipeline", "2"]);
        assert_eq!(split_identifier("HTTPServer"), ["HTTP", "Server"]);
        assert_eq!(split_identifier("ntp::install"), ["ntp", "install"]);
        assert_eq!(split_identifier("x86_64"), ["x", "86", "64"]);
    }

    #[test]
    fn preprocess_examples() {
        assert!(bow_preprocess("").is_empty());
        assert_eq!(bow_preprocess("configureCI_pipeline2"), ["configur", "ci", "pipelin"]);
        assert!(bow_preprocess("# only a comment").is_empty());
        assert_eq!(
            bow_preprocess("package { 'the-java': ensure => installed } # the comment"),
            ["packag", "java", "ensur", "instal"]
        );
    }

    #[test]
    fn two_script_vocabulary() {
        let corpus = BTreeMap::from([
            ("ScriptX".to_string(), toks(&["instal", "java", "develop", "ci"])),
            ("ScriptY".to_string(), toks(&["instal", "maven", "ci", "deploy", "server"])),
        ]);
        let m = bow_matrix(&corpus);
        let ci = m.col_names.iter().position(|c| c == "ci").unwrap();
        assert_eq!(m.get(0, ci), 1.0);
        assert_eq!(m.get(1, ci), 1.0);
        assert_eq!(m.col_names, toks(&["ci", "deploy", "develop", "instal", "java", "maven", "server"]));
    }

    #[test]
    fn counting() {
        assert_eq!(bow_matrix(&BTreeMap::new()).n_rows(), 0);
        let m = bow_matrix(&BTreeMap::from([("s".to_string(), toks(&["a", "a", "b"]))]));
        assert_eq!(m.values(), [2.0, 1.0]);
        let m = bow_matrix(&BTreeMap::from([
            ("s".to_string(), toks(&["a"])),
            ("t".to_string(), vec![]),
        ]));
        assert_eq!(m.row(1), [0.0]);
    }

    #[test]
    fn unseen_tokens_are_dropped() {
        let vocab = Vocabulary::fit([toks(&["a", "b"])].iter());
        let m = vocab.transform(&["x".into()], &[toks(&["b", "zzz", "b"])]).unwrap();
        assert_eq!(m.values(), [0.0, 2.0]);
    }

    #[test]
    fn triplets_round_trip() {
        let corpus = BTreeMap::from([
            ("s1".to_string(), toks(&["a", "b", "a"])),
            ("s2".to_string(), toks(&["c"])),
        ]);
        let m = bow_matrix(&corpus);
        let mut buf = Vec::new();
        write_bow_triplets(&m, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "script_id,token,count\ns1,a,2\ns1,b,1\ns2,c,1\n"
        );
        assert_eq!(bow_matrix(&read_bow_triplets(buf.as_slice()).unwrap()), m);
    }

    proptest! {
        #[test]
        fn row_sums_equal_token_counts(docs in proptest::collection::btree_map("[a-z]{1,3}", proptest::collection::vec("[a-d]", 0..8), 0..5)) {
            let m = bow_matrix(&docs);
            for (r, doc) in docs.values().enumerate() {
                prop_assert_eq!(m.row(r).iter().sum::<f64>(), doc.len() as f64);
            }
        }

        #[test]
        fn preprocess_is_total(text in "\\PC{0,60}") {
            for t in bow_preprocess(&text) {
                prop_assert!(!t.is_empty());
                prop_assert!(t.bytes().all(|c| c.is_ascii_lowercase()));
            }
        }
    }
}
