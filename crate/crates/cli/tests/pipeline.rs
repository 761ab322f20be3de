use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_venuerec");

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    /// A synthetic corpus in a fresh directory; `spec` goes to `synth`.
    fn new(spec: &[&str]) -> Self {
        let run = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        let out = run.path("corpus.jsonl");
        let mut args = vec!["synth", "--out", out.to_str().unwrap()];
        args.extend(spec);
        run.ok(&args);
        run
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn exec(&self, args: &[&str]) -> Output {
        let corpus = self.path("corpus.jsonl");
        let artifacts = self.path("art");
        // Shared settings go first so a test's own flags override them.
        Command::new(BIN)
            .args([
                "--corpus",
                corpus.to_str().unwrap(),
                "--artifacts",
                artifacts.to_str().unwrap(),
            ])
            .args(["--min-venue-articles", "10", "--min-df", "5", "-q"])
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.exec(args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    fn fails(&self, args: &[&str], code: i32) -> String {
        let out = self.exec(args);
        assert_eq!(
            out.status.code(),
            Some(code),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stderr).unwrap()
    }

    /// Every file under the artifacts directory with its bytes.
    fn snapshot(&self) -> BTreeMap<PathBuf, Vec<u8>> {
        fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
            for e in fs::read_dir(dir).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    walk(root, &p, out);
                } else {
                    out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
                }
            }
        }
        let mut out = BTreeMap::new();
        walk(&self.path("art"), &self.path("art"), &mut out);
        out
    }
}

fn small() -> Run {
    Run::new(&["--n-venues", "6"])
}

#[test]
fn cluster_before_prep_names_the_missing_vocabulary() {
    let run = small();
    run.ok(&["ingest"]);
    let err = run.fails(&["cluster"], 2);
    assert!(err.contains("missing vocabulary"), "{err}");
    assert!(err.contains("venuerec prep"), "{err}");
}

#[test]
fn recommend_ranks_the_true_venue_in_top_ten() {
    let run = Run::new(&[]);
    run.ok(&["train"]);
    let test = fs::read_to_string(run.path("art/ingest/test.jsonl")).unwrap();
    let mut seen = BTreeMap::new();
    for line in test.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        seen.entry(v["venue"].as_str().unwrap().to_string())
            .or_insert(line.to_string());
    }
    assert_eq!(seen.len(), 20);
    for (venue, line) in &seen {
        let q = run.path("query.jsonl");
        fs::write(&q, line).unwrap();
        let csv = run.ok(&["recommend", "--article", q.to_str().unwrap()]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("rank,venue_id,fused,content,author"));
        let top: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(top.len(), 10);
        assert!(top.contains(&venue.as_str()), "{venue} not in {top:?}");
    }

    // The same article given as text plus author ids.
    let (venue, line) = seen.iter().next().unwrap();
    let v: Value = serde_json::from_str(line).unwrap();
    let authors: Vec<&str> = v["authors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap())
        .collect();
    let csv = run.ok(&[
        "recommend",
        "--text",
        v["title_abstract"].as_str().unwrap(),
        "--authors",
        &authors.join(","),
        "--top",
        "3",
    ]);
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.contains(venue.as_str()));
}

#[test]
fn evaluate_writes_reports() {
    let run = small();
    run.ok(&["train"]);
    let out = run.path("reports/sweep.csv");
    run.ok(&[
        "evaluate",
        "--sweep-lambda",
        "0.0:1.0:0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("fingerprint,features,strategy"));
    assert_eq!(lines.count(), 5);
    assert!(fs::read_to_string(run.path("reports/sweep.csv.txt"))
        .unwrap()
        .contains("acc@10"));
    let cfg = fs::read_to_string(run.path("reports/sweep.csv.config.txt")).unwrap();
    assert!(cfg.contains("sweep-lambda = 0.0:1.0:0.25"));

    run.ok(&["profiles", "--features", "cb", "--strategy", "sp"]);
    run.ok(&["index", "--features", "cb", "--strategy", "sp"]);
    run.ok(&["evaluate", "--features", "cb", "--strategy", "sp"]);
    let csv = fs::read_to_string(run.path("art/reports/evaluate.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",cb,sp,"));
}

#[test]
fn stages_are_idempotent_and_leave_upstream_alone() {
    let run = small();
    run.ok(&["ingest"]);
    run.ok(&["prep"]);
    let upstream = run.snapshot();
    run.ok(&["cluster"]);
    run.ok(&["profiles"]);
    run.ok(&["index"]);
    let after = run.snapshot();
    for (p, bytes) in &upstream {
        assert_eq!(after.get(p), Some(bytes), "{} changed", p.display());
    }
    for stage in ["ingest", "prep", "cluster", "profiles", "index"] {
        run.ok(&[stage]);
    }
    assert_eq!(run.snapshot(), after);
}

#[test]
fn stale_or_changed_artifacts_are_refused() {
    let run = small();
    run.ok(&["train"]);

    let err = run.fails(&["cluster", "--min-df", "6"], 2);
    assert!(err.contains("fingerprint mismatch for prep"), "{err}");
    let err = run.fails(&["evaluate", "--k", "4"], 2);
    assert!(err.contains("fingerprint mismatch for cluster"), "{err}");

    // Rebuilding prep with new settings makes the old clustering stale.
    run.ok(&["prep", "--min-df", "6"]);
    let err = run.fails(&["profiles", "--min-df", "6"], 2);
    assert!(err.contains("re-run `venuerec cluster`"), "{err}");

    let train = run.path("art/ingest/train.jsonl");
    let mut text = fs::read_to_string(&train).unwrap();
    text.push('\n');
    fs::write(&train, text).unwrap();
    let err = run.fails(&["prep"], 2);
    assert!(err.contains("changed after"), "{err}");
}

#[test]
fn lock_file_blocks_a_second_run() {
    let run = small();
    fs::create_dir_all(run.path("art")).unwrap();
    fs::write(run.path("art/.lock"), "1").unwrap();
    let err = run.fails(&["ingest"], 2);
    assert!(err.contains("in use"), "{err}");
    fs::remove_file(run.path("art/.lock")).unwrap();
    run.ok(&["ingest"]);
    assert!(!run.path("art/.lock").exists());
}

#[test]
fn config_file_and_usage_errors() {
    let run = small();
    let conf = run.path("run.conf");
    fs::write(&conf, "# test\nmax-df = 0.8\nfeatures = cb\n").unwrap();
    let printed = run.ok(&["config", "--config", conf.to_str().unwrap(), "--max-df", "0.7"]);
    assert!(printed.contains("max-df = 0.7"));
    assert!(printed.contains("features = cb"));

    run.fails(&["frobnicate"], 1);
    run.fails(&["prep", "--max-df", "2"], 1);
    run.fails(&["prep", "--weighting", "bm25"], 1);
    fs::write(&conf, "no equals sign\n").unwrap();
    run.fails(&["config", "--config", conf.to_str().unwrap()], 1);
    let missing = run.path("absent.jsonl");
    let out = Command::new(BIN)
        .args(["ingest", "--corpus", missing.to_str().unwrap(), "--artifacts"])
        .arg(run.path("art"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_is_deterministic_and_writes_labels() {
    let run = small();
    let a = fs::read(run.path("corpus.jsonl")).unwrap();
    let out = run.path("again.jsonl");
    let labels = run.path("planted.tsv");
    Command::new(BIN)
        .args([
            "synth",
            "--n-venues",
            "6",
            "--out",
            out.to_str().unwrap(),
            "--planted",
            labels.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(fs::read(&out).unwrap(), a);
    let tsv = fs::read_to_string(&labels).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 6 * 3 * 45);
}
