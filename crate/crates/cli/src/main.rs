//! `iac-defect`: extract properties from Puppet scripts, label them from commit
//! history, test which properties separate defective from neutral scripts, and
//! evaluate and rank defect-prediction models.
//!
//! Exit codes: 0 success, 2 empty input, 3 data violation, 64 usage.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iac_defect::features::bow_preprocess;
use iac_defect::learners::{
    cross_validate, feature_importance, CvConfig, EvalReport, FeatureSet, LabeledDataset,
    LearnerKind, LearnerSpec,
};
use iac_defect::lexer::SourceScript;
use iac_defect::mining::{
    is_puppet_path, label_scripts, read_commit_labels, read_commits, read_issues,
    write_path_labels, write_xcm_dump, XcmBuilder,
};
use iac_defect::properties::{extract_corpus, read_csv, write_csv, PropertyRow, PROPERTY_NAMES};
use iac_defect::stats::{cliffs_delta, mann_whitney_one_sided, scott_knott_esd, StatConfig};
use iac_defect::Error;
use walkdir::WalkDir;

const EXIT_EMPTY: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_USAGE: u8 = 64;

const MEASURES: [&str; 4] = ["precision", "recall", "auc", "f"];

#[derive(Debug, Parser)]
#[command(name = "iac-defect", version, about = "Defect prediction for Puppet scripts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure the twelve source-code properties of every `.pp` file under a directory.
    Extract {
        corpus_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `path,label` table (as written by `mine`) used to fill the label column.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Label scripts from commit history and write the extended commit messages.
    Mine {
        /// One JSON commit record per line.
        commits: PathBuf,
        /// `issue_id,summary` CSV.
        #[arg(long)]
        issues: Option<PathBuf>,
        /// `sha,is_defect_related` CSV with true/false values.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the `sha,xcm_text,issue_ids` dump [default: <out>.xcm.csv]
        #[arg(long)]
        xcm_out: Option<PathBuf>,
    },
    /// Mann-Whitney U and Cliff's delta per property, defective vs neutral.
    Analyze {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
        alpha: f64,
    },
    /// Rank the properties by random-forest importance.
    Importance {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Repeated stratified cross-validation of one learner.
    Evaluate(EvaluateArgs),
    /// Scott-Knott ESD ranking of evaluation reports, per measure.
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
        alpha: f64,
    },
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Property CSV with labels.
    dataset: PathBuf,
    /// `properties` (log + PCA of the twelve counts) or `bow` (bag of words)
    #[arg(long, value_parser = parse_features, default_value = "properties")]
    features: FeatureSet,
    /// cart, knn, logreg, gnb or rf
    #[arg(long, value_parser = parse_learner)]
    learner: LearnerKind,
    /// Directory the dataset's script paths are relative to (needed for `--features bow`).
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    folds: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    #[arg(long, default_value_t = 0.95, value_parser = parse_variance_target)]
    variance_target: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_learner(s: &str) -> Result<LearnerKind, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = LearnerKind::ALL.iter().map(|k| k.as_str()).collect();
        format!("expected one of: {}", names.join(", "))
    })
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a < 1.0 => Ok(a),
        _ => Err("expected a number strictly between 0 and 1".into()),
    }
}

fn parse_variance_target(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t > 0.0 && t <= 1.0 => Ok(t),
        _ => Err("expected a number in (0, 1]".into()),
    }
}

fn parse_features(s: &str) -> Result<FeatureSet, String> {
    s.parse().map_err(|_| "expected `properties` or `bow`".to_string())
}

/// A failed command: message plus process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn empty(message: impl Into<String>) -> Self {
        Self { code: EXIT_EMPTY, message: message.into() }
    }

    fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::EmptyInput(_) => EXIT_EMPTY,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = Result<(), Failure>;

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::usage(format!("cannot open {}: {e}", path.display())))
}

fn write_out(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Extract { corpus_dir, out, labels } => cmd_extract(&corpus_dir, &out, labels.as_deref()),
        Command::Mine { commits, issues, labels, out, xcm_out } => {
            let xcm_out = xcm_out.unwrap_or_else(|| out.with_extension("xcm.csv"));
            cmd_mine(&commits, issues.as_deref(), labels.as_deref(), &out, &xcm_out)
        }
        Command::Analyze { dataset, out, alpha } => cmd_analyze(&dataset, &out, alpha),
        Command::Importance { dataset, out, seed } => cmd_importance(&dataset, &out, seed),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Compare { reports, out, alpha } => cmd_compare(&reports, &out, alpha),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_extract(corpus_dir: &Path, out: &Path, labels: Option<&Path>) -> CmdResult {
    if !corpus_dir.is_dir() {
        return Err(Failure::usage(format!("{} is not a directory", corpus_dir.display())));
    }
    let mut scripts = Vec::new();
    let mut unreadable = 0usize;
    for entry in WalkDir::new(corpus_dir).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                eprintln!("warning: {e}");
                unreadable += 1;
                continue;
            }
        };
        if !entry.file_type().is_file() || !is_puppet_path(&entry.file_name().to_string_lossy()) {
            continue;
        }
        let rel = entry.path().strip_prefix(corpus_dir).unwrap_or(entry.path());
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        match fs::read(entry.path()) {
            Ok(bytes) => scripts.push(SourceScript::from_bytes(rel, &bytes)),
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", entry.path().display());
                unreadable += 1;
            }
        }
    }
    if unreadable > 0 {
        eprintln!("warning: {unreadable} file(s) could not be read");
    }

    let mut rows = extract_corpus(&scripts)?;
    if let Some(path) = labels {
        let map = iac_defect::mining::read_path_labels(open(path)?)?;
        for row in &mut rows {
            row.label = map.get(&row.script_path).copied();
        }
    }
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    write_out(out, &buf)?;
    if rows.is_empty() {
        return Err(Failure::empty(format!("no .pp files under {}", corpus_dir.display())));
    }
    eprintln!("extracted {} script(s)", rows.len());
    Ok(())
}

fn cmd_mine(
    commits: &Path,
    issues: Option<&Path>,
    labels: Option<&Path>,
    out: &Path,
    xcm_out: &Path,
) -> CmdResult {
    let commits = read_commits(open(commits)?)?;
    let issues = match issues {
        Some(p) => read_issues(open(p)?)?,
        None => HashMap::new(),
    };
    let commit_labels = match labels {
        Some(p) => read_commit_labels(open(p)?)?,
        None => HashMap::new(),
    };

    let builder = XcmBuilder::default();
    let xcms: Vec<_> = commits.iter().map(|c| builder.build(c, &issues)).collect();
    let missing: usize = xcms.iter().map(|x| x.missing).sum();
    if missing > 0 {
        eprintln!("warning: {missing} referenced issue id(s) not found in the issue table");
    }
    let labeled = label_scripts(&commits, &commit_labels, is_puppet_path);
    if !labeled.skipped_commits.is_empty() {
        eprintln!(
            "warning: {} commit(s) have no label and were treated as not defect-related",
            labeled.skipped_commits.len()
        );
    }

    let mut buf = Vec::new();
    write_path_labels(&labeled.labels, &mut buf)?;
    write_out(out, &buf)?;
    let mut buf = Vec::new();
    write_xcm_dump(&xcms, &mut buf)?;
    write_out(xcm_out, &buf)?;
    if commits.is_empty() {
        return Err(Failure::empty("commit file has no records"));
    }
    Ok(())
}

/// Labeled rows only; unlabeled rows are reported and dropped.
fn load_labeled(path: &Path) -> Result<Vec<PropertyRow>, Failure> {
    let rows = read_csv(open(path)?)?;
    if rows.is_empty() {
        return Err(Failure::empty(format!("{} has no rows", path.display())));
    }
    let total = rows.len();
    let labeled: Vec<PropertyRow> = rows.into_iter().filter(|r| r.label.is_some()).collect();
    if labeled.len() < total {
        eprintln!("warning: ignoring {} unlabeled row(s)", total - labeled.len());
    }
    if labeled.is_empty() {
        return Err(Failure::empty(format!("{} has no labeled rows", path.display())));
    }
    Ok(labeled)
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf)
}

fn cmd_analyze(dataset: &Path, out: &Path, alpha: f64) -> CmdResult {
    let cfg = StatConfig::new(alpha)?;
    let rows = load_labeled(dataset)?;
    let (defective, neutral): (Vec<&PropertyRow>, Vec<&PropertyRow>) =
        rows.iter().partition(|r| r.label.is_some_and(|l| l.is_defective()));
    if defective.is_empty() || neutral.is_empty() {
        return Err(Failure::data("dataset must contain both defective and neutral scripts"));
    }

    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(["property", "p_value", "delta", "magnitude", "reject_null"])
            .map_err(Error::from)?;
        for (j, name) in PROPERTY_NAMES.iter().enumerate() {
            let col = |rs: &[&PropertyRow]| -> Vec<f64> {
                rs.iter().map(|r| r.vector.to_array()[j] as f64).collect()
            };
            let (x, y) = (col(&defective), col(&neutral));
            let test = mann_whitney_one_sided(&x, &y, &cfg)?;
            let effect = cliffs_delta(&x, &y)?;
            w.write_record([
                name.to_string(),
                test.p_value.to_string(),
                effect.delta.to_string(),
                effect.magnitude.as_str().to_string(),
                test.reject_null.to_string(),
            ])
            .map_err(Error::from)?;
        }
        w.flush().map_err(|e| Failure::data(e.to_string()))?;
    }
    write_out(out, &buf)
}

fn cmd_importance(dataset: &Path, out: &Path, seed: u64) -> CmdResult {
    let data = LabeledDataset::from_property_rows(&load_labeled(dataset)?);
    let fi = feature_importance(&data, seed)?;
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(["rank", "property", "median_importance"]).map_err(Error::from)?;
        for (i, (name, v)) in fi.ranking.iter().enumerate() {
            w.write_record([(i + 1).to_string(), name.clone(), v.to_string()])
                .map_err(Error::from)?;
        }
        w.flush().map_err(|e| Failure::data(e.to_string()))?;
    }
    write_out(out, &buf)
}

fn cmd_evaluate(args: &EvaluateArgs) -> CmdResult {
    let rows = load_labeled(&args.dataset)?;
    let mut data = LabeledDataset::from_property_rows(&rows);
    if args.features == FeatureSet::Bow {
        let corpus = args
            .corpus
            .as_deref()
            .ok_or_else(|| Failure::usage("--features bow needs --corpus <dir> to read the scripts"))?;
        for row in &mut data.rows {
            let path = corpus.join(&row.id);
            let bytes = fs::read(&path)
                .map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
            row.tokens = Some(bow_preprocess(&SourceScript::from_bytes(row.id.clone(), &bytes).body));
        }
    }
    let cfg = CvConfig {
        folds: args.folds as usize,
        repeats: args.repeats as usize,
        variance_target: args.variance_target,
        ..CvConfig::default()
    };
    let spec = LearnerSpec::new(args.learner, args.seed);
    let report = cross_validate(&spec, args.features, &data, &cfg, args.seed)?;
    for event in &report.events {
        eprintln!("note: {event}");
    }
    write_out(&args.out, report.to_json()?.as_bytes())
}

fn cmd_compare(reports: &[PathBuf], out: &Path, alpha: f64) -> CmdResult {
    let cfg = StatConfig::new(alpha)?;
    let mut loaded: Vec<(String, EvalReport)> = Vec::new();
    for path in reports {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot open {}: {e}", path.display())))?;
        let report = EvalReport::from_json(&text)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        loaded.push((path.display().to_string(), report));
    }
    let (first_name, first) = &loaded[0];
    for (name, r) in &loaded[1..] {
        if (r.folds, r.repeats) != (first.folds, first.repeats) {
            return Err(Failure::data(format!(
                "{name} has {}x{} folds but {first_name} has {}x{}",
                r.repeats, r.folds, first.repeats, first.folds
            )));
        }
    }

    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(["measure", "rank", "treatment", "median"]).map_err(Error::from)?;
        for measure in MEASURES {
            let mut treatments = BTreeMap::new();
            for (name, r) in &loaded {
                let scores = r.raw_scores(measure).expect("known measure").to_vec();
                treatments.insert(name.clone(), scores);
            }
            let ranking = scott_knott_esd(treatments, &cfg)?;
            for (g, (names, medians)) in ranking.groups.iter().zip(&ranking.medians).enumerate() {
                for (name, m) in names.iter().zip(medians) {
                    w.write_record([measure.to_string(), (g + 1).to_string(), name.clone(), m.to_string()])
                        .map_err(Error::from)?;
                }
            }
        }
        w.flush().map_err(|e| Failure::data(e.to_string()))?;
    }
    write_out(out, &buf)
}
