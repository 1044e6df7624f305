//! The twelve per-script property counts.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexer::{physical_lines, tokenize, SourceScript, TokenKind};

static URL_PATTERN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"https?://[^\s'"]+"#).expect("valid url regex"));

/// Property names in CSV column order.
pub const PROPERTY_NAMES: [&str; 12] = [
    "attribute",
    "command",
    "comment",
    "ensure",
    "file",
    "file_mode",
    "hard_coded_string",
    "include",
    "lines_of_code",
    "require",
    "ssh_key",
    "url",
];

pub const CSV_HEADER: [&str; 14] = [
    "script_path",
    "attribute",
    "command",
    "comment",
    "ensure",
    "file",
    "file_mode",
    "hard_coded_string",
    "include",
    "lines_of_code",
    "require",
    "ssh_key",
    "url",
    "label",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PropertyVector {
    pub attribute: u64,
    pub command: u64,
    pub comment: u64,
    pub ensure: u64,
    pub file: u64,
    pub file_mode: u64,
    pub hard_coded_string: u64,
    pub include: u64,
    pub lines_of_code: u64,
    pub require: u64,
    pub ssh_key: u64,
    pub url: u64,
}

impl PropertyVector {
    /// Counts in [`PROPERTY_NAMES`] order.
    pub fn to_array(&self) -> [u64; 12] {
        [
            self.attribute,
            self.command,
            self.comment,
            self.ensure,
            self.file,
            self.file_mode,
            self.hard_coded_string,
            self.include,
            self.lines_of_code,
            self.require,
            self.ssh_key,
            self.url,
        ]
    }

    pub fn from_array(a: [u64; 12]) -> Self {
        Self {
            attribute: a[0],
            command: a[1],
            comment: a[2],
            ensure: a[3],
            file: a[4],
            file_mode: a[5],
            hard_coded_string: a[6],
            include: a[7],
            lines_of_code: a[8],
            require: a[9],
            ssh_key: a[10],
            url: a[11],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Defective,
    Neutral,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Defective => "defective",
            Label::Neutral => "neutral",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "defective" => Some(Label::Defective),
            "neutral" => Some(Label::Neutral),
            _ => None,
        }
    }

    pub fn is_defective(&self) -> bool {
        matches!(self, Label::Defective)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyRow {
    pub script_path: String,
    pub vector: PropertyVector,
    pub label: Option<Label>,
}

pub fn extract(script: &SourceScript) -> PropertyVector {
    let stream = tokenize(script);
    let mut v = PropertyVector::default();

    for tok in &stream.tokens {
        match tok.kind {
            TokenKind::Comment => v.comment += 1,
            TokenKind::StringLiteral => v.hard_coded_string += 1,
            TokenKind::Operator if tok.text == "=>" => v.attribute += 1,
            TokenKind::Word => match tok.text {
                "ensure" => v.ensure += 1,
                "file" => v.file += 1,
                "mode" => v.file_mode += 1,
                "include" => v.include += 1,
                "require" => v.require += 1,
                "ssh_authorized_key" => v.ssh_key += 1,
                w if w.eq_ignore_ascii_case("cmd") => v.command += 1,
                _ => {}
            },
            _ => {}
        }
    }

    v.lines_of_code = physical_lines(&script.body)
        .filter(|l| !l.trim().is_empty())
        .count() as u64;
    v.url = URL_PATTERN.find_iter(&script.body).count() as u64;
    v
}

/// Extract every script, sorted by path. Paths must be unique.
pub fn extract_corpus(scripts: &[SourceScript]) -> Result<Vec<PropertyRow>> {
    let mut by_path: BTreeMap<&str, &SourceScript> = BTreeMap::new();
    for s in scripts {
        if by_path.insert(s.path.as_str(), s).is_some() {
            return Err(Error::DuplicatePath(s.path.clone()));
        }
    }
    let ordered: Vec<&SourceScript> = by_path.into_values().collect();
    Ok(ordered
        .par_iter()
        .map(|s| PropertyRow {
            script_path: s.path.clone(),
            vector: extract(s),
            label: None,
        })
        .collect())
}

pub fn write_csv<W: Write>(rows: &[PropertyRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let mut rec: Vec<String> = Vec::with_capacity(14);
        rec.push(row.script_path.clone());
        rec.extend(row.vector.to_array().iter().map(u64::to_string));
        rec.push(row.label.map(|l| l.as_str().to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<PropertyRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Malformed {
            location: "header".into(),
            message: format!("expected `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let location = format!("row {}", i + 2);
        let mut counts = [0u64; 12];
        for (j, c) in counts.iter_mut().enumerate() {
            *c = rec[j + 1].trim().parse().map_err(|_| Error::Malformed {
                location: location.clone(),
                message: format!("`{}` is not a non-negative integer", &rec[j + 1]),
            })?;
        }
        let label = match rec[13].trim() {
            "" => None,
            s => Some(Label::parse(s).ok_or_else(|| Error::Malformed {
                location: location.clone(),
                message: format!("unknown label `{s}`"),
            })?),
        };
        rows.push(PropertyRow {
            script_path: rec[0].to_string(),
            vector: PropertyVector::from_array(counts),
            label,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex(body: &str) -> PropertyVector {
        extract(&SourceScript::new("t.pp", body))
    }

    #[test]
    fn empty_script_is_all_zero() {
        assert_eq!(ex(""), PropertyVector::default());
    }

    #[test]
    fn ntp_snippet() {
        let body = "# configure ntp\nfile { '/etc/ntp.conf':\n  ensure => present,\n  mode   => '0644',\n}\ninclude ntp";
        let expected = PropertyVector {
            attribute: 2,
            comment: 1,
            ensure: 1,
            file: 1,
            file_mode: 1,
            hard_coded_string: 2,
            include: 1,
            lines_of_code: 6,
            ..Default::default()
        };
        assert_eq!(ex(body), expected);
    }

    #[test]
    fn url_snippet() {
        let body = "$src = 'https://example.org/p.tgz'\nrequire apache";
        let expected = PropertyVector {
            url: 1,
            hard_coded_string: 1,
            require: 1,
            lines_of_code: 2,
            ..Default::default()
        };
        assert_eq!(ex(body), expected);
    }

    #[test]
    fn cmd_is_case_insensitive_other_keywords_are_not() {
        let v = ex("CMD cmd Cmd Ensure FILE Mode");
        assert_eq!(v.command, 3);
        assert_eq!(v.ensure + v.file + v.file_mode, 0);
    }

    #[test]
    fn urls_found_in_comments_and_bare_text() {
        let v = ex("# see http://a.b/c\nsource => http://x.y \"https://q/r\"");
        assert_eq!(v.url, 3);
    }

    #[test]
    fn blank_lines_are_not_code() {
        assert_eq!(ex("a\n\n   \n\tb\n").lines_of_code, 2);
    }

    #[test]
    fn corpus_is_sorted_and_rejects_duplicates() {
        let scripts = vec![
            SourceScript::new("b.pp", "include x"),
            SourceScript::new("a.pp", ""),
        ];
        let rows = extract_corpus(&scripts).unwrap();
        assert_eq!(rows[0].script_path, "a.pp");
        assert_eq!(rows[1].vector.include, 1);
        assert!(extract_corpus(&[]).unwrap().is_empty());

        let dup = vec![SourceScript::new("a.pp", ""), SourceScript::new("a.pp", "x")];
        assert!(matches!(extract_corpus(&dup), Err(Error::DuplicatePath(p)) if p == "a.pp"));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            PropertyRow {
                script_path: "m/a,b.pp".into(),
                vector: PropertyVector { url: 3, ..Default::default() },
                label: Some(Label::Defective),
            },
            PropertyRow {
                script_path: "m/c.pp".into(),
                vector: PropertyVector::default(),
                label: None,
            },
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "script_path,attribute,command,comment,ensure,file,file_mode,hard_coded_string,include,lines_of_code,require,ssh_key,url,label\n"
        ));
        assert!(text.ends_with("m/c.pp,0,0,0,0,0,0,0,0,0,0,0,0,\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    fn line() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("file { '/tmp/x':".to_string()),
            Just("  ensure => present,".to_string()),
            Just("  mode => '0644',".to_string()),
            Just("include apache".to_string()),
            Just("require ntp".to_string()),
            Just("ssh_authorized_key { 'k': }".to_string()),
            Just("exec { 'c': cmd => \"ls\" }".to_string()),
            Just("$u = 'http://x.org/a'".to_string()),
            Just("}".to_string()),
            Just("".to_string()),
            "[a-z_ =>]{0,20}",
        ]
    }

    fn script() -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec(line(), 0..12)
    }

    proptest! {
        #[test]
        fn inserting_a_comment_line_only_bumps_comment_and_loc(
            lines in script(),
            at in 0usize..12,
            text in "[a-z =>'\"]{0,15}",
        ) {
            let before = ex(&lines.join("\n"));
            let mut with = lines.clone();
            let at = at.min(with.len());
            with.insert(at, format!("# {text}"));
            let after = ex(&with.join("\n"));
            let mut expected = before;
            expected.comment += 1;
            expected.lines_of_code += 1;
            prop_assert_eq!(after, expected);
        }

        #[test]
        fn keywords_inside_strings_and_comments_are_ignored(lines in script()) {
            let base = ex(&lines.join("\n"));
            let mut noisy = lines.clone();
            noisy.push("$n = 'ensure file mode include require ssh_authorized_key cmd =>'".into());
            let after = ex(&noisy.join("\n"));
            prop_assert_eq!(after.hard_coded_string, base.hard_coded_string + 1);
            let strip = |v: PropertyVector| PropertyVector {
                hard_coded_string: 0, lines_of_code: 0, ..v
            };
            // the `=` in `$n = ...` is not an attribute
            prop_assert_eq!(strip(after), strip(base));
        }

        #[test]
        fn concatenation_is_additive_across_a_line_break(a in script(), b in script()) {
            let va = ex(&a.join("\n")).to_array();
            let vb = ex(&b.join("\n")).to_array();
            let joined = ex(&format!("{}\n{}", a.join("\n"), b.join("\n"))).to_array();
            for i in 0..12 {
                prop_assert!(joined[i] >= va[i].max(vb[i]));
                prop_assert!(joined[i] <= va[i] + vb[i]);
            }
        }
    }
}
