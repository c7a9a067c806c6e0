use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use scenecode_core::codecs::{serialize, SceneCodeLanguage};
use scenecode_harness::Split;

fn scenecode(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scenecode"))
        .current_dir(cwd)
        .env("RUST_BACKTRACE", "0")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(cwd: &Path, args: &[&str]) -> String {
    let out = scenecode(cwd, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn full_pipeline_through_the_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "gen",
            "--out",
            "split",
            "--tiers",
            "1,4",
            "--per-tier",
            "3",
            "--qa-seed",
            "5",
        ],
    );
    let split = Split::load(d.join("split")).unwrap();
    assert_eq!(split.scenes.len(), 6);
    assert_eq!(split.qa.len(), 48);
    assert!(split.cameras.values().all(|c| c.len() == 4));

    let synth = ok(
        d,
        &[
            "replay", "synth", "--store", "store", "--split", "split", "--model", "m", "--policy",
            "oracle",
        ],
    );
    assert!(synth.starts_with("360 responses"), "{synth}");
    ok(d, &["replay", "verify", "--store", "store"]);
    let recon = ok(
        d,
        &[
            "eval-reconstruct",
            "--model",
            "m",
            "--split",
            "split",
            "--replay",
            "store",
            "--out",
            "snaps",
        ],
    );
    assert_eq!(recon.lines().count(), 6);
    let sel = ok(d, &["select-langs", "--snapshots", "snaps", "--model", "m"]);
    // all oracle: every language ties at 1.0 and the first listed wins both
    assert_eq!(sel, "best threejs\nworst threejs\n");
    ok(
        d,
        &[
            "eval-qa",
            "--model",
            "m",
            "--split",
            "split",
            "--replay",
            "store",
            "--out",
            "snaps",
            "--modes",
            "direct,nl_cot,best_cc,worst_cc",
            "--select-from",
            "snaps",
        ],
    );
    assert!(d.join("snaps/m/qa/best_cc.json").exists());
    let text = ok(
        d,
        &["report", "--snapshots", "snaps", "--json", "report.json"],
    );
    assert!(text.contains("Reconstruct Score (direct)"));
    assert!(text.contains("100.0"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["reconstruct"][0]["delta"], 0.0);

    ok(
        d,
        &[
            "export",
            "--split",
            "split",
            "--out",
            "export",
            "--languages",
            "threejs,scene_dsl",
        ],
    );
    assert_eq!(fs::read_dir(d.join("export/render")).unwrap().count(), 24);
    assert_eq!(fs::read_dir(d.join("export/scene_dsl")).unwrap().count(), 6);
}

#[test]
fn missing_responses_fail_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &["gen", "--out", "split", "--tiers", "2", "--per-tier", "2"],
    );
    fs::create_dir_all(d.join("empty")).unwrap();
    let out = scenecode(
        d,
        &[
            "eval-reconstruct",
            "--model",
            "m",
            "--split",
            "split",
            "--replay",
            "empty",
            "--out",
            "snaps",
        ],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("aborted"));
    // the invalid cell is still written for inspection
    let snap = fs::read_to_string(d.join("snaps/m/reconstruct/threejs__direct.json")).unwrap();
    assert!(snap.contains("\"valid\": false"));
}

#[test]
fn tampered_store_is_reported_as_corrupt() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &["gen", "--out", "split", "--tiers", "1", "--per-tier", "1"],
    );
    ok(
        d,
        &[
            "replay", "synth", "--store", "store", "--split", "split", "--model", "m", "--policy",
            "oracle",
        ],
    );
    let victim = d.join("store/m/direct/prim_t1_s0000_q0.txt");
    fs::write(&victim, "tampered").unwrap();
    let out = scenecode(d, &["replay", "verify", "--store", "store"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fixture corruption"));
}

#[test]
fn self_supervised_dataset_from_raw_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "gen",
            "--out",
            "split",
            "--tiers",
            "1,2,3",
            "--per-tier",
            "4",
        ],
    );
    let split = Split::load(d.join("split")).unwrap();
    let raw = d.join("raw");
    fs::create_dir_all(&raw).unwrap();
    for s in &split.scenes {
        fs::write(
            raw.join(format!("{}.txt", s.scene_id)),
            serialize(SceneCodeLanguage::ThreeJs, s).unwrap(),
        )
        .unwrap();
    }
    // one rejected output
    fs::write(raw.join("prim_t9_s0000.txt"), "no code here").unwrap();
    let args = [
        "build-s3ft",
        "--raw",
        "raw",
        "--split",
        "split",
        "--out",
        "ds",
        "--seed",
        "42",
    ];
    let stdout = ok(d, &args);
    assert!(
        stdout.contains("single_view: pass rate 0.923 (12/13)"),
        "{stdout}"
    );
    let count = |p: &str| fs::read_to_string(d.join(p)).unwrap().lines().count();
    assert_eq!(
        count("ds/single_view/train.jsonl") + count("ds/single_view/val.jsonl"),
        12 * 20
    );
    let cross = count("ds/cross_viewpoint/train.jsonl") + count("ds/cross_viewpoint/val.jsonl");
    assert!((3.0..=4.0).contains(&(cross as f64 / 240.0)));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("ds/single_view/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(
        manifest["curation"]["rejections"]["missing_required_token"],
        1
    );

    let first = fs::read(d.join("ds/cross_viewpoint/train.jsonl")).unwrap();
    ok(d, &args);
    assert_eq!(
        fs::read(d.join("ds/cross_viewpoint/train.jsonl")).unwrap(),
        first
    );
}
