//! Commit exports to labeled script tables.
//!
//! Defect labels for commits are ingested from an external file; this module
//! only applies the repository selection thresholds, builds extended commit
//! messages (commit message plus referenced issue summaries), and propagates
//! commit labels onto the IaC scripts each commit touched.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Read, Write};
use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::properties::Label;

pub const SECONDS_PER_MONTH: i64 = 30 * 86_400;
/// Minimum IaC file share, in percent.
pub const MIN_IAC_FILE_PERCENT: u64 = 11;
pub const MIN_COMMITS_PER_MONTH: u64 = 2;

pub const DEFAULT_ISSUE_PATTERN: &str = r"(?i)(#|bug\s*|issue\s*)(\d{2,})";

static DEFAULT_ISSUE_REGEX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(DEFAULT_ISSUE_PATTERN).expect("valid issue regex"));

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct CommitRecord {
    pub sha: String,
    pub message: String,
    pub timestamp: i64,
    #[serde(rename = "paths")]
    pub changed_paths: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepoStats {
    pub total_files: u64,
    pub iac_files: u64,
    pub first_commit: i64,
    pub last_commit: i64,
    pub commit_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Share of IaC files in the repository.
    IacFileRatio,
    /// Commit frequency.
    CommitRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriteriaOutcome {
    Pass,
    Fail(Criterion),
}

pub fn passes_criteria(stats: &RepoStats) -> Result<CriteriaOutcome> {
    if stats.total_files == 0 {
        return Err(Error::InvalidStats("total_files is 0".into()));
    }
    if stats.iac_files > stats.total_files {
        return Err(Error::InvalidStats(format!(
            "iac_files {} exceeds total_files {}",
            stats.iac_files, stats.total_files
        )));
    }
    if stats.first_commit > stats.last_commit {
        return Err(Error::InvalidStats("first_commit is after last_commit".into()));
    }

    if stats.iac_files * 100 < MIN_IAC_FILE_PERCENT * stats.total_files {
        return Ok(CriteriaOutcome::Fail(Criterion::IacFileRatio));
    }
    let span = stats.last_commit - stats.first_commit;
    let months = ((span + SECONDS_PER_MONTH - 1) / SECONDS_PER_MONTH).max(1);
    if stats.commit_count < MIN_COMMITS_PER_MONTH * months as u64 {
        return Ok(CriteriaOutcome::Fail(Criterion::CommitRate));
    }
    Ok(CriteriaOutcome::Pass)
}

/// Extended commit message: the message followed by summaries of referenced issues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xcm {
    pub sha: String,
    pub text: String,
    pub issue_ids: Vec<String>,
    /// Referenced ids with no summary in the issue table.
    pub missing: usize,
}

#[derive(Debug, Clone)]
pub struct XcmBuilder {
    pattern: Regex,
}

impl Default for XcmBuilder {
    fn default() -> Self {
        Self {
            pattern: DEFAULT_ISSUE_REGEX.clone(),
        }
    }
}

impl XcmBuilder {
    /// Use a custom issue-id pattern. The last capture group must hold the id.
    pub fn with_pattern(pattern: &str) -> Result<Self> {
        let pattern = Regex::new(pattern).map_err(|e| Error::invalid(e.to_string()))?;
        if pattern.captures_len() < 2 {
            return Err(Error::invalid("issue pattern needs a capture group for the id"));
        }
        Ok(Self { pattern })
    }

    pub fn issue_ids(&self, message: &str) -> Vec<String> {
        let id_group = self.pattern.captures_len() - 1;
        let mut seen = HashSet::new();
        self.pattern
            .captures_iter(message)
            .filter_map(|c| c.get(id_group).map(|m| m.as_str().to_string()))
            .filter(|id| seen.insert(id.clone()))
            .collect()
    }

    pub fn build(&self, commit: &CommitRecord, issues: &HashMap<String, String>) -> Xcm {
        let issue_ids = self.issue_ids(&commit.message);
        let mut text = commit.message.clone();
        let mut missing = 0;
        for id in &issue_ids {
            match issues.get(id) {
                Some(summary) => {
                    text.push('\n');
                    text.push_str(summary);
                }
                None => missing += 1,
            }
        }
        Xcm {
            sha: commit.sha.clone(),
            text,
            issue_ids,
            missing,
        }
    }
}

pub fn build_xcm(commit: &CommitRecord, issues: &HashMap<String, String>) -> Xcm {
    XcmBuilder::default().build(commit, issues)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScriptLabels {
    pub labels: BTreeMap<String, Label>,
    /// Commits without a label; their paths are seen but never marked defective.
    pub skipped_commits: Vec<String>,
}

pub fn is_puppet_path(path: &str) -> bool {
    path.ends_with(".pp")
}

pub fn label_scripts<F>(
    commits: &[CommitRecord],
    labels: &HashMap<String, bool>,
    iac_path_filter: F,
) -> ScriptLabels
where
    F: Fn(&str) -> bool,
{
    let mut out = ScriptLabels::default();
    for commit in commits {
        let defect = match labels.get(&commit.sha) {
            Some(&d) => d,
            None => {
                out.skipped_commits.push(commit.sha.clone());
                false
            }
        };
        for path in commit.changed_paths.iter().filter(|p| iac_path_filter(p)) {
            let entry = out.labels.entry(path.clone()).or_insert(Label::Neutral);
            if defect {
                *entry = Label::Defective;
            }
        }
    }
    out
}

/// Merge per-repository label maps; defective wins.
pub fn merge_labels(maps: impl IntoIterator<Item = BTreeMap<String, Label>>) -> BTreeMap<String, Label> {
    let mut merged = BTreeMap::new();
    for map in maps {
        for (path, label) in map {
            let entry = merged.entry(path).or_insert(label);
            if label == Label::Defective {
                *entry = Label::Defective;
            }
        }
    }
    merged
}

pub fn read_commits<R: BufRead>(input: R) -> Result<Vec<CommitRecord>> {
    let mut commits = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<commit export>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let commit: CommitRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            location: format!("line {}", i + 1),
            message: e.to_string(),
        })?;
        if commit.sha.is_empty() || commit.timestamp <= 0 {
            return Err(Error::Malformed {
                location: format!("line {}", i + 1),
                message: "sha must be non-empty and timestamp positive".into(),
            });
        }
        if !seen.insert(commit.sha.clone()) {
            return Err(Error::DuplicateSha(commit.sha));
        }
        commits.push(commit);
    }
    Ok(commits)
}

pub fn read_issues<R: Read>(input: R) -> Result<HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(input);
    let mut issues = HashMap::new();
    for rec in r.records() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default().trim().to_string();
        let summary = rec.get(1).unwrap_or_default().to_string();
        issues.insert(id, summary);
    }
    Ok(issues)
}

pub fn read_commit_labels<R: Read>(input: R) -> Result<HashMap<String, bool>> {
    let mut r = csv::Reader::from_reader(input);
    let mut labels = HashMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let sha = rec.get(0).unwrap_or_default().trim().to_string();
        let value = match rec.get(1).map(str::trim) {
            Some("true") => true,
            Some("false") => false,
            other => {
                return Err(Error::Malformed {
                    location: format!("labels row {}", i + 2),
                    message: format!("expected true/false, got {:?}", other.unwrap_or("")),
                })
            }
        };
        if labels.insert(sha.clone(), value).is_some() {
            return Err(Error::DuplicateSha(sha));
        }
    }
    Ok(labels)
}

pub fn write_path_labels<W: Write>(labels: &BTreeMap<String, Label>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["path", "label"])?;
    for (path, label) in labels {
        w.write_record([path.as_str(), label.as_str()])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub fn read_path_labels<R: Read>(input: R) -> Result<BTreeMap<String, Label>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let label = Label::parse(rec.get(1).unwrap_or_default().trim()).ok_or_else(|| {
            Error::Malformed {
                location: format!("path labels row {}", i + 2),
                message: "label must be defective or neutral".into(),
            }
        })?;
        out.insert(rec.get(0).unwrap_or_default().to_string(), label);
    }
    Ok(out)
}

pub fn write_xcm_dump<W: Write>(xcms: &[Xcm], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["sha", "xcm_text", "issue_ids"])?;
    for x in xcms {
        w.write_record([x.sha.as_str(), x.text.as_str(), x.issue_ids.join(";").as_str()])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
