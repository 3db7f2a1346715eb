mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tbger(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbger")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    /// Synthetic dump ingested and split into `corpus.jsonl` and `manifest.json`.
    fn new(questions: usize) -> Self {
        let dir = TempDir::new().unwrap();
        let site = dir.path().join("synth");
        std::fs::create_dir_all(&site).unwrap();
        let spec = common::SiteSpec {
            questions,
            ..Default::default()
        };
        std::fs::write(site.join("Posts.xml"), common::generate_posts_xml(&spec)).unwrap();
        let ws = Self { dir };
        let o = tbger(&[
            "ingest",
            "--dump",
            p(&site.join("Posts.xml")),
            "--out",
            p(&ws.path("corpus.jsonl")),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("site                 synth"), "{}", stdout(&o));
        let o = tbger(&[
            "split",
            "--corpus",
            p(&ws.path("corpus.jsonl")),
            "--out",
            p(&ws.path("manifest.json")),
            "--min-answers",
            "3",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn inputs(&self) -> Vec<String> {
        vec![
            "--corpus".into(),
            self.path("corpus.jsonl").to_string_lossy().into_owned(),
            "--manifest".into(),
            self.path("manifest.json").to_string_lossy().into_owned(),
        ]
    }

    fn run(&self, command: &str, extra: &[&str]) -> Output {
        let mut args: Vec<String> = vec![command.into()];
        args.extend(self.inputs());
        args.extend(extra.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        tbger(&refs)
    }

    fn test_question(&self) -> u64 {
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(self.path("manifest.json")).unwrap()).unwrap();
        manifest["split"]["test"][0].as_u64().unwrap()
    }
}

#[test]
fn missing_dump_exits_with_io_code_and_names_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere/Posts.xml");
    let o = tbger(&["ingest", "--dump", p(&missing), "--out", p(&dir.path().join("c.jsonl"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere/Posts.xml"), "{}", stderr(&o));
}

#[test]
fn malformed_dump_exits_with_parse_code() {
    let dir = TempDir::new().unwrap();
    let dump = dir.path().join("Posts.xml");
    std::fs::write(&dump, "<posts><row Id=\"1\" PostTypeId=\"1\" </posts>").unwrap();
    let o = tbger(&["ingest", "--dump", p(&dump), "--out", p(&dir.path().join("c.jsonl"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_code_three() {
    assert_eq!(tbger(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(tbger(&["ingest"]).status.code(), Some(3));
    assert_eq!(tbger(&["--help"]).status.code(), Some(0));
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.jsonl");
    std::fs::write(&corpus, "{\"kind\":\"site\",\"site_name\":\"x\"}\n").unwrap();
    let o = tbger(&[
        "split",
        "--corpus",
        p(&corpus),
        "--out",
        p(&dir.path().join("m.json")),
        "--ratios",
        "0.5,0.5,0.5",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn pipeline_commands() {
    let ws = Workspace::new(600);

    let o = ws.run("recommend", &["--question", "999999999"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("999999999"));

    let o = ws.run("evaluate", &["--method", "bogus"]);
    assert_eq!(o.status.code(), Some(3));

    let q = ws.test_question().to_string();
    let o = ws.run("recommend", &["--question", &q, "--top", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains(" user ")).count(), 5, "{text}");
    assert!(text.contains("accepted answerer"), "{text}");

    let o = ws.run(
        "build",
        &["--out", p(&ws.path("snap.bin")), "--at", "2016-06-01T00:00:00"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let direct = ws.run(
        "recommend",
        &["--tags", "topic1-tag0,topic1-tag2", "--at", "2016-06-01T00:00:00"],
    );
    let snap = ws.run(
        "recommend",
        &[
            "--tags",
            "topic1-tag0,topic1-tag2",
            "--at",
            "2016-06-01T00:00:00",
            "--snapshot",
            p(&ws.path("snap.bin")),
        ],
    );
    assert_eq!(direct.status.code(), Some(0));
    assert_eq!(stdout(&direct), stdout(&snap));

    let o = ws.run("recommend", &["--tags", "unheard-of", "--at", "2016-06-01T00:00:00"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));

    let out = ws.path("reports");
    let o = ws.run(
        "evaluate",
        &["--method", "all", "--mf-epochs", "10", "--out-dir", p(&out)],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for method in ["t-bger", "score", "tag-mf", "t-tag-mf"] {
        for ext in ["json", "txt", "csv"] {
            assert!(out.join(format!("synth.{method}.{ext}")).exists(), "{method}.{ext}");
        }
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("synth.t-bger.json")).unwrap()).unwrap();
    let counts = &report["counts"];
    assert_eq!(
        counts["evaluated"].as_u64().unwrap()
            + counts["excluded_not_candidate"].as_u64().unwrap()
            + counts["unscorable"].as_u64().unwrap(),
        counts["test_questions"].as_u64().unwrap()
    );

    let o = ws.run(
        "evaluate",
        &["--method", "t-bger", "--cold-start", "--out-dir", p(&out)],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cold: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("synth.t-bger.cold.json")).unwrap()).unwrap();
    assert_eq!(cold["config"]["min_answers"], 1);
    assert!(cold["candidates"].as_u64() > report["candidates"].as_u64());
    assert!(cold["cold_start"]["questions"].as_u64().unwrap() > 0);
}

#[test]
fn config_file_supplies_inputs() {
    let ws = Workspace::new(300);
    let config = ws.path("exp.json");
    let body = serde_json::json!({
        "corpus": ws.path("corpus.jsonl"),
        "manifest": ws.path("manifest.json"),
        "method": "score",
        "min_answers": 3,
        "score_trials": 5,
    });
    std::fs::write(&config, body.to_string()).unwrap();
    let o = tbger(&["--config", p(&config), "evaluate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("score"));
}
