use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use iac_defect::learners::EvalReport;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_iac-defect");

const HEADER: &str = "script_path,attribute,command,comment,ensure,file,file_mode,hard_coded_string,include,lines_of_code,require,ssh_key,url,label";

fn run(args: &[&Path]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_str(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    if let Some(parent) = p.parent() {
        fs::create_dir_all(parent).unwrap();
    }
    fs::write(&p, body).unwrap();
    p
}

fn p(s: &str) -> &Path {
    Path::new(s)
}

// --- extract ---------------------------------------------------------------

#[test]
fn extract_empty_corpus_writes_header_and_exits_2() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    write(&dir, "corpus/notes.txt", "ensure => present\n");
    let out = dir.path().join("out.csv");
    let o = run(&[p("extract"), &corpus, p("--out"), &out]);
    assert_eq!(code(&o), 2);
    assert_eq!(fs::read_to_string(&out).unwrap(), format!("{HEADER}\n"));
}

#[test]
fn extract_snippets_and_rerun_is_identical() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "corpus/ntp.pp",
        "# configure ntp\nfile { '/etc/ntp.conf':\n  ensure => present,\n  mode   => '0644',\n}\ninclude ntp\n",
    );
    write(&dir, "corpus/sub/src.pp", "$src = 'https://example.org/p.tgz'\nrequire apache\n");
    let corpus = dir.path().join("corpus");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(code(&run(&[p("extract"), &corpus, p("--out"), &a])), 0);
    assert_eq!(code(&run(&[p("extract"), &corpus, p("--out"), &b])), 0);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(
        text,
        format!("{HEADER}\nntp.pp,2,0,1,1,1,1,2,1,6,0,0,0,\nsub/src.pp,0,0,0,0,0,0,1,0,2,1,0,1,\n")
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn extract_fills_labels_from_mined_table() {
    let dir = TempDir::new().unwrap();
    write(&dir, "corpus/a.pp", "include a\n");
    write(&dir, "corpus/b.pp", "include b\n");
    write(&dir, "corpus/c.pp", "include c\n");
    let labels = write(&dir, "labels.csv", "path,label\na.pp,defective\nb.pp,neutral\n");
    let out = dir.path().join("out.csv");
    let o = run(&[p("extract"), &dir.path().join("corpus"), p("--out"), &out, p("--labels"), &labels]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(labels, ["defective", "neutral", ""]);
}

#[test]
fn missing_corpus_is_a_usage_error() {
    let o = run_str(&["extract", "/nonexistent/dir", "--out", "/tmp/never.csv"]);
    assert_eq!(code(&o), 64);
}

// --- mine ------------------------------------------------------------------

fn commits(dir: &TempDir, lines: &[&str]) -> PathBuf {
    write(dir, "commits.jsonl", &(lines.join("\n") + "\n"))
}

fn mine(dir: &TempDir, commits: &Path, labels: Option<&Path>) -> (Output, PathBuf) {
    let out = dir.path().join("paths.csv");
    let mut args: Vec<&Path> = vec![p("mine"), commits, p("--out"), &out];
    if let Some(l) = labels {
        args.extend([p("--labels"), l]);
    }
    (run(&args), out.clone())
}

#[test]
fn mine_with_empty_labels_marks_everything_neutral() {
    let dir = TempDir::new().unwrap();
    let c = commits(
        &dir,
        &[
            r#"{"sha":"a1","message":"init","timestamp":100,"paths":["m/a.pp","README"]}"#,
            r#"{"sha":"b2","message":"fix bug 1234","timestamp":200,"paths":["m/b.pp"]}"#,
        ],
    );
    let labels = write(&dir, "labels.csv", "");
    let (o, out) = mine(&dir, &c, Some(&labels));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out).unwrap(), "path,label\nm/a.pp,neutral\nm/b.pp,neutral\n");
}

#[test]
fn mine_label_cases_and_xcm_dump() {
    let dir = TempDir::new().unwrap();
    let c = commits(
        &dir,
        &[
            r#"{"sha":"c1","message":"fix file perms, bug 1234","timestamp":100,"paths":["a.pp","b.txt"]}"#,
            r#"{"sha":"c2","message":"tidy","timestamp":200,"paths":["a.pp","c.pp"]}"#,
            r#"{"sha":"c3","message":"tidy","timestamp":300,"paths":["a.pp"]}"#,
            r#"{"sha":"c4","message":"see #77 and #77","timestamp":400,"paths":["a.pp"]}"#,
        ],
    );
    let labels = write(&dir, "labels.csv", "sha,is_defect_related\nc1,true\nc2,false\nc3,false\nc4,false\n");
    let issues = write(&dir, "issues.csv", "issue_id,summary\n1234,mode wrong\n");
    let out = dir.path().join("paths.csv");
    let xcm = dir.path().join("xcm.csv");
    let o = run(&[
        p("mine"),
        &c,
        p("--issues"),
        &issues,
        p("--labels"),
        &labels,
        p("--out"),
        &out,
        p("--xcm-out"),
        &xcm,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // a.pp: one defect-related and three neutral commits; b.txt is not a script
    assert_eq!(fs::read_to_string(&out).unwrap(), "path,label\na.pp,defective\nc.pp,neutral\n");
    let dump = fs::read_to_string(&xcm).unwrap();
    assert!(dump.starts_with("sha,xcm_text,issue_ids\n"));
    assert!(dump.contains("c1,\"fix file perms, bug 1234\nmode wrong\",1234\n"));
    assert!(dump.contains("c4,see #77 and #77,77\n"));
}

#[test]
fn mine_default_xcm_path() {
    let dir = TempDir::new().unwrap();
    let c = commits(&dir, &[r#"{"sha":"a","message":"m","timestamp":1,"paths":[]}"#]);
    let (o, _) = mine(&dir, &c, None);
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("paths.xcm.csv").is_file());
}

#[test]
fn mine_duplicate_label_sha_exits_3() {
    let dir = TempDir::new().unwrap();
    let c = commits(&dir, &[r#"{"sha":"a","message":"m","timestamp":1,"paths":["x.pp"]}"#]);
    let labels = write(&dir, "labels.csv", "sha,is_defect_related\na,true\na,false\n");
    let (o, _) = mine(&dir, &c, Some(&labels));
    assert_eq!(code(&o), 3);
}

#[test]
fn mine_malformed_json_names_the_line() {
    let dir = TempDir::new().unwrap();
    let c = commits(
        &dir,
        &[r#"{"sha":"a","message":"m","timestamp":1,"paths":[]}"#, r#"{"sha": "b", oops}"#],
    );
    let (o, _) = mine(&dir, &c, None);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

// --- analyze ---------------------------------------------------------------

fn dataset(dir: &TempDir, rows: &[([u64; 12], &str)]) -> PathBuf {
    let mut text = format!("{HEADER}\n");
    for (i, (counts, label)) in rows.iter().enumerate() {
        let counts: Vec<String> = counts.iter().map(u64::to_string).collect();
        text.push_str(&format!("s{i:03}.pp,{},{label}\n", counts.join(",")));
    }
    write(dir, "dataset.csv", &text)
}

#[test]
fn analyze_dominating_defective_rows() {
    let dir = TempDir::new().unwrap();
    let mut rows = Vec::new();
    for i in 0..15u64 {
        rows.push(([100 + i; 12], "defective"));
        rows.push(([i; 12], "neutral"));
    }
    let data = dataset(&dir, &rows);
    let out = dir.path().join("analysis.csv");
    assert_eq!(code(&run(&[p("analyze"), &data, p("--out"), &out])), 0);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("property,p_value,delta,magnitude,reject_null"));
    let body: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(body.len(), 12);
    for f in &body {
        assert_eq!(f[2], "1");
        assert_eq!(f[3], "large");
        assert_eq!(f[4], "true");
    }
}

#[test]
fn analyze_identical_vectors_give_zero_delta() {
    let dir = TempDir::new().unwrap();
    let rows: Vec<([u64; 12], &str)> = (0..20)
        .map(|i| ([3; 12], if i % 3 == 0 { "defective" } else { "neutral" }))
        .collect();
    let data = dataset(&dir, &rows);
    let out = dir.path().join("analysis.csv");
    assert_eq!(code(&run(&[p("analyze"), &data, p("--out"), &out])), 0);
    for line in fs::read_to_string(&out).unwrap().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[2], f[3], f[4]), ("0", "negligible", "false"));
    }
}

#[test]
fn analyze_single_label_exits_3() {
    let dir = TempDir::new().unwrap();
    let data = dataset(&dir, &[([1; 12], "neutral"), ([2; 12], "neutral")]);
    let o = run(&[p("analyze"), &data, p("--out"), &dir.path().join("x.csv")]);
    assert_eq!(code(&o), 3);
}

// --- evaluate / compare ----------------------------------------------------

fn separable(dir: &TempDir) -> PathBuf {
    let rows: Vec<([u64; 12], &str)> = (0..60u64)
        .map(|i| {
            if i % 2 == 0 {
                ([50 + i % 7; 12], "defective")
            } else {
                ([i % 5; 12], "neutral")
            }
        })
        .collect();
    dataset(dir, &rows)
}

fn evaluate(dir: &TempDir, data: &Path, learner: &str, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(name);
    let o = Command::new(BIN)
        .arg("evaluate")
        .arg(data)
        .args(["--learner", learner, "--out"])
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn evaluate_separable_fixture() {
    let dir = TempDir::new().unwrap();
    let data = separable(&dir);
    let out = evaluate(&dir, &data, "logreg", "r.json", &[]);
    let report = EvalReport::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report.medians.auc >= 0.95, "median AUC {}", report.medians.auc);
    assert_eq!(report.raw.precision.len(), 100);
}

#[test]
fn evaluate_unknown_learner_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let data = separable(&dir);
    let o = Command::new(BIN)
        .arg("evaluate")
        .arg(&data)
        .args(["--learner", "svm", "--out"])
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
}

#[test]
fn evaluate_bow_reads_the_corpus() {
    let dir = TempDir::new().unwrap();
    let mut text = format!("{HEADER}\n");
    for i in 0..30 {
        let defective = i % 2 == 0;
        let body = if defective {
            format!("exec {{ 'restart_{i}': command => 'service restart broken' }}\n")
        } else {
            format!("package {{ 'tool_{i}': ensure => installed }}\n")
        };
        write(&dir, &format!("corpus/s{i}.pp"), &body);
        text.push_str(&format!("s{i}.pp,0,0,0,0,0,0,0,0,1,0,0,0,{}\n", if defective { "defective" } else { "neutral" }));
    }
    let data = write(&dir, "dataset.csv", &text);
    let corpus = dir.path().join("corpus");
    let out = evaluate(&dir, &data, "gnb", "bow.json", &["--features", "bow", "--corpus", corpus.to_str().unwrap(), "--repeats", "2"]);
    let report = fs::read_to_string(out).unwrap();
    assert!(report.contains("\"features\": \"bow\""));

    let o = Command::new(BIN)
        .arg("evaluate")
        .arg(&data)
        .args(["--learner", "gnb", "--features", "bow", "--out"])
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 64, "bow without --corpus");
}

fn compare(dir: &TempDir, reports: &[&Path]) -> (Output, String) {
    let out = dir.path().join("ranking.csv");
    let mut cmd = Command::new(BIN);
    cmd.arg("compare").args(reports).arg("--out").arg(&out);
    let o = cmd.output().unwrap();
    let text = fs::read_to_string(&out).unwrap_or_default();
    (o, text)
}

fn ranks(text: &str, measure: &str) -> Vec<(String, String)> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[0] == measure)
        .map(|f| (f[1].to_string(), Path::new(f[2]).file_name().unwrap().to_string_lossy().into_owned()))
        .collect()
}

#[test]
fn compare_identical_and_dominated_reports() {
    let dir = TempDir::new().unwrap();
    let data = separable(&dir);
    let good = evaluate(&dir, &data, "logreg", "good.json", &[]);
    let copy = dir.path().join("copy.json");
    fs::copy(&good, &copy).unwrap();

    let (o, text) = compare(&dir, &[&good, &copy]);
    assert_eq!(code(&o), 0);
    assert!(text.starts_with("measure,rank,treatment,median\n"));
    assert!(ranks(&text, "auc").iter().all(|(r, _)| r == "1"));

    // a report whose 100 AUCs are all lower
    let mut bad = fs::read_to_string(&good).unwrap();
    let marker = "\"auc\": [";
    let start = bad.rfind(marker).unwrap() + marker.len();
    let end = start + bad[start..].find(']').unwrap();
    let lowered: Vec<String> = (0..100).map(|i| format!("{}", 0.40 + i as f64 * 0.001)).collect();
    bad.replace_range(start..end, &lowered.join(", "));
    let bad_path = write(&dir, "bad.json", &bad);

    let (o, text) = compare(&dir, &[&bad_path, &good]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let auc = ranks(&text, "auc");
    assert_eq!(auc, [("1".to_string(), "good.json".to_string()), ("2".to_string(), "bad.json".to_string())]);

    let (_, text) = compare(&dir, &[&good, &copy, &bad_path]);
    let auc = ranks(&text, "auc");
    assert_eq!(auc.iter().filter(|(r, _)| r == "1").count(), 2);
    assert_eq!(auc.iter().find(|(_, n)| n == "bad.json").unwrap().0, "2");
}

#[test]
fn compare_rejects_mismatched_folds() {
    let dir = TempDir::new().unwrap();
    let data = separable(&dir);
    let a = evaluate(&dir, &data, "gnb", "a.json", &[]);
    let b = evaluate(&dir, &data, "gnb", "b.json", &["--folds", "5"]);
    let (o, _) = compare(&dir, &[&a, &b]);
    assert_eq!(code(&o), 3);
}

#[test]
fn compare_needs_two_reports() {
    let o = run_str(&["compare", "only.json", "--out", "/tmp/x.csv"]);
    assert_eq!(code(&o), 64);
}
