use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use fedipol_cli::manifest::sha256_file;
use fedipol_cli::{run_pipeline, PipelineConfig};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/three_groups")
}

fn fixture_config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(fixture_dir().join("pipeline.conf")).unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

fn files_under(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, sha256_file(&p).unwrap().1);
            }
        }
    }
    out
}

#[test]
fn fixture_pipeline_finds_three_groups() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_pipeline(&fixture_config(dir.path()), None).unwrap();
    assert_eq!(outcome.suggested_k, Some(3));
    assert_eq!(outcome.k, 3);
    let m = &outcome.manifest;
    let names: Vec<&str> = m.artifacts.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ["positive", "negative", "backbone", "signed", "elbow", "partition", "report"]);
    assert_eq!(m.results["k"], serde_json::json!(3));
    assert_eq!(m.results["group_sizes"], serde_json::json!([6, 6, 6]));

    // the partition recovers the planted poles
    let text = std::fs::read_to_string(dir.path().join("partition.csv")).unwrap();
    let mut by_group: BTreeMap<String, std::collections::BTreeSet<String>> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let (domain, group) = line.split_once(',').unwrap();
        if group != "0" {
            let pole = domain.split('.').nth(1).unwrap().to_string();
            by_group.entry(group.to_string()).or_default().insert(pole);
        }
    }
    assert_eq!(by_group.len(), 3);
    assert!(by_group.values().all(|poles| poles.len() == 1));
}

#[test]
fn manifest_lists_every_written_file() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_pipeline(&fixture_config(dir.path()), None).unwrap();
    let mut on_disk = files_under(dir.path());
    on_disk.remove("manifest.json");
    let listed: BTreeMap<String, String> = outcome.manifest.files().map(|f| (f.path.clone(), f.sha256.clone())).collect();
    assert_eq!(listed, on_disk);
    let reread = fedipol_cli::Manifest::read(&outcome.manifest_path).unwrap();
    assert_eq!(reread.artifacts, outcome.manifest.artifacts);
}

#[test]
fn rerun_gives_identical_hashes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run_pipeline(&fixture_config(a.path()), None).unwrap().manifest;
    let mb = run_pipeline(&fixture_config(b.path()), None).unwrap().manifest;
    assert_eq!(ma.artifacts, mb.artifacts);
    // and in place, over the previous outputs
    let mc = run_pipeline(&fixture_config(a.path()), None).unwrap().manifest;
    assert_eq!(ma.artifacts, mc.artifacts);
}

#[test]
fn invalid_alpha_stops_before_any_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut cfg = fixture_config(&out);
    cfg.alpha = 1.5;
    let err = run_pipeline(&cfg, None).unwrap_err();
    assert_eq!(err.stage, "validate");
    assert!(err.to_string().contains("alpha"), "{err}");
    assert!(!out.exists());
}

#[test]
fn failing_stage_keeps_completed_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(dir.path());
    cfg.k = Some(500);
    let err = run_pipeline(&cfg, None).unwrap_err();
    assert_eq!(err.stage, "detect");
    let m = fedipol_cli::Manifest::read(&err.manifest.unwrap()).unwrap();
    let last = m.stages.last().unwrap();
    assert_eq!(last.name, "detect");
    assert!(!last.ok && last.error.is_some());
    assert_eq!(m.artifacts.len(), 4);
    for f in m.files() {
        assert!(dir.path().join(&f.path).exists(), "{}", f.path);
    }
}

#[test]
fn fixed_k_skips_the_elbow() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(dir.path());
    cfg.k = Some(3);
    let outcome = run_pipeline(&cfg, None).unwrap();
    assert_eq!(outcome.suggested_k, None);
    assert_eq!(outcome.manifest.artifacts.len(), 6);
    assert!(!dir.path().join("elbow.csv").exists());
}

fn fedipol(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_fedipol")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn subcommands_reproduce_the_pipeline() {
    let piped = tempfile::tempdir().unwrap();
    run_pipeline(&fixture_config(piped.path()), None).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let snapshot = fixture_dir().join("snapshot.jsonl").to_string_lossy().into_owned();
    let out = dir.path().to_string_lossy().into_owned();
    fedipol(&["build", "--snapshot", &snapshot, "--out", &out]);
    fedipol(&["filter", "--pos", &d("positive.csv"), "--alpha", "0.05", "--out", &d("backbone.csv"), "--verdicts", &d("verdicts.csv")]);
    fedipol(&["merge", "--pos", &d("backbone.csv"), "--neg", &d("negative.csv"), "--out", &d("signed.csv")]);
    let elbow = fedipol(&["elbow", "--signed", &d("signed.csv"), "--out", &d("elbow.csv"), "--long", &d("elbow_long.csv")]);
    assert!(elbow.contains("suggested k = 3"), "{elbow}");
    fedipol(&["detect", "--signed", &d("signed.csv"), "--curve", &d("elbow.csv"), "--out", &d("partition.csv"), "--drq", &d("drq.csv")]);
    fedipol(&[
        "--manifest",
        &d("report_manifest.json"),
        "report",
        "--signed",
        &d("signed.csv"),
        "--pos",
        &d("backbone.csv"),
        "--neg",
        &d("negative.csv"),
        "--partition",
        &d("partition.csv"),
        "--blocks",
        &snapshot,
        "--out",
        &d("report"),
    ]);
    let mut separate = files_under(dir.path());
    separate.remove("report_manifest.json");
    let mut together = files_under(piped.path());
    together.remove("manifest.json");
    assert_eq!(separate, together);

    let m = fedipol_cli::Manifest::read(Path::new(&d("report_manifest.json"))).unwrap();
    assert_eq!(m.command, "report");
    assert_eq!(m.artifacts[0].files.len(), 7);
}

#[test]
fn cli_flags_and_errors() {
    assert!(fedipol(&["--version"]).starts_with("fedipol "));
    let out = Command::new(env!("CARGO_BIN_EXE_fedipol"))
        .args(["pipeline", "--config", &fixture_dir().join("pipeline.conf").to_string_lossy(), "--alpha", "1.5"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}
