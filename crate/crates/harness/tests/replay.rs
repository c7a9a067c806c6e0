use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use scenecode_core::codecs::{serialize, SceneCodeLanguage};
use scenecode_core::qa::InferenceMode;
use scenecode_harness::client::{
    ChatRequest, ChatResponse, ClientError, ModelClient, ReplayClient,
};
use scenecode_harness::config::{ModeSpec, RunConfig, QA_LANGUAGE_SUBSET};
use scenecode_harness::gen::{generate_split, GenPlan};
use scenecode_harness::run::{qa_request, reconstruct_request, MAX_ERROR_RATE};
use scenecode_harness::snapshot::ItemStatus;
use scenecode_harness::synth::{synthesize_qa, synthesize_reconstruct, Policy};
use scenecode_harness::{
    report, run_qa_eval, run_reconstruct_eval, select_best_worst_language, CellSnapshot,
    ReplayStore, Split, StoreError,
};

const MODEL: &str = "fixture-vl";

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini")
}

/// Runs both evaluations over the shipped store, as the CLI does.
fn replay_fixture() -> Vec<CellSnapshot> {
    let dir = fixture();
    let split = Split::load(dir.join("split")).unwrap();
    let client = ReplayClient::new(ReplayStore::open(dir.join("store")));
    let mut config = RunConfig::replay(MODEL, dir.join("split"), dir.join("store"));
    config.modes = vec![ModeSpec::Direct, ModeSpec::NlCot];
    let recon = run_reconstruct_eval(&config, &split, &client).unwrap();
    assert!(!recon.aborted);
    let (best, worst) =
        select_best_worst_language(&recon.snapshots, MODEL, &QA_LANGUAGE_SUBSET).unwrap();
    config.best_language = Some(best);
    config.worst_language = Some(worst);
    config.modes = vec![
        ModeSpec::Direct,
        ModeSpec::NlCot,
        ModeSpec::CodeCotBest,
        ModeSpec::CodeCotWorst,
    ];
    let qa = run_qa_eval(&config, &split, &split.qa, &client).unwrap();
    assert!(!qa.aborted);
    recon.snapshots.into_iter().chain(qa.snapshots).collect()
}

#[test]
fn shipped_store_reproduces_golden_snapshots() {
    let start = Instant::now();
    let snaps = replay_fixture();
    let golden = fixture().join("golden");
    let bless = std::env::var_os("SCENECODE_BLESS").is_some();
    assert_eq!(snaps.len(), 12 + 4);
    for s in &snaps {
        let path = golden.join(s.relative_path());
        if bless {
            s.save(&golden).unwrap();
            continue;
        }
        let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(
            s.to_json() == want,
            "{} differs from the golden copy",
            path.display()
        );
    }
    // the CLI reports from snapshot files, so do the same here
    let r = report(&CellSnapshot::load_all(&golden).unwrap());
    if bless {
        fs::write(golden.join("report.txt"), r.to_text()).unwrap();
        fs::write(golden.join("report.json"), r.to_json()).unwrap();
    } else {
        assert_eq!(
            r.to_text(),
            fs::read_to_string(golden.join("report.txt")).unwrap()
        );
        assert_eq!(
            r.to_json(),
            fs::read_to_string(golden.join("report.json")).unwrap()
        );
    }
    assert!(
        start.elapsed().as_secs_f64() < 20.0,
        "{:?}",
        start.elapsed()
    );
}

#[test]
fn golden_snapshots_load_back() {
    let snaps = CellSnapshot::load_all(&fixture().join("golden")).unwrap();
    assert_eq!(snaps.len(), 16);
    for s in &snaps {
        let c = s.counts;
        assert_eq!(
            c.items,
            c.parsed + c.empty_parse + c.errored,
            "{}",
            s.file_stem()
        );
        assert_eq!(c.items, s.rows.len());
        assert!(s.timestamp_unix.is_none());
        assert!(s.valid);
    }
    // mixed policy: one missing response in ten
    let direct = snaps
        .iter()
        .find(|s| s.file_stem() == "threejs__direct")
        .unwrap();
    assert_eq!(direct.counts.errored, 1);
    assert_eq!(direct.counts.empty_parse, 1);
    assert_eq!(direct.counts.parsed, 8);
    // six oracle answers in ten are correct; corrupted, empty and missing are not
    let qa = snaps.iter().find(|s| s.file_stem() == "direct").unwrap();
    assert!((qa.qa.as_ref().unwrap().overall.accuracy - 0.6).abs() < 1e-12);
}

#[test]
fn replay_is_deterministic() {
    let a: Vec<String> = replay_fixture().iter().map(CellSnapshot::to_json).collect();
    let b: Vec<String> = replay_fixture().iter().map(CellSnapshot::to_json).collect();
    assert_eq!(a, b);
}

fn small_split(dir: &Path, seeds: u64) -> Split {
    let plan = GenPlan {
        tiers: vec![1, 3, 5],
        seeds: 0..seeds,
        qa_seed: 1,
    };
    let (split, manifest) = generate_split(dir.join("split"), &plan).unwrap();
    split.save(&manifest).unwrap();
    split
}

#[test]
fn oracle_responses_score_perfectly() {
    let tmp = tempfile::tempdir().unwrap();
    let split = small_split(tmp.path(), 2);
    let store = ReplayStore::open(tmp.path().join("store"));
    let mut config = RunConfig::replay("oracle", &split.dir, store.root());
    config.modes = vec![ModeSpec::Direct, ModeSpec::NlCot];
    synthesize_reconstruct(&store, &config, &split, Policy::AllOracle).unwrap();
    let client = ReplayClient::new(ReplayStore::open(store.root()));
    let out = run_reconstruct_eval(&config, &split, &client).unwrap();
    assert_eq!(out.snapshots.len(), 12);
    for s in &out.snapshots {
        let agg = s.aggregate.as_ref().unwrap();
        assert_eq!(agg.reconstruct_score, 1.0, "{}", s.file_stem());
        assert_eq!(agg.parse_rate, 1.0);
    }

    let modes = [
        InferenceMode::Direct,
        InferenceMode::NlCot,
        InferenceMode::CodeCot(SceneCodeLanguage::SceneDsl),
    ];
    synthesize_qa(&store, &config, &split, &modes, Policy::AllOracle).unwrap();
    config.modes = vec![
        ModeSpec::Direct,
        ModeSpec::NlCot,
        ModeSpec::CodeCot(SceneCodeLanguage::SceneDsl),
    ];
    let out = run_qa_eval(&config, &split, &split.qa, &client).unwrap();
    for s in &out.snapshots {
        assert_eq!(s.qa.as_ref().unwrap().overall.accuracy, 1.0, "{}", s.mode);
    }
}

#[test]
fn half_empty_responses_halve_the_parse_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = GenPlan {
        tiers: vec![2],
        seeds: 0..10,
        qa_seed: 0,
    };
    let (split, _) = generate_split(tmp.path().join("split"), &plan).unwrap();
    let store = ReplayStore::open(tmp.path().join("store"));
    let mut config = RunConfig::replay("half", &split.dir, store.root());
    config.languages = vec![SceneCodeLanguage::ThreeJs];
    for (k, scene) in split.scenes.iter().enumerate() {
        let req = reconstruct_request(
            &config,
            &split.dir,
            SceneCodeLanguage::ThreeJs,
            ModeSpec::Direct,
            scene,
        );
        let text = if k % 2 == 0 {
            serialize(SceneCodeLanguage::ThreeJs, scene).unwrap()
        } else {
            String::new()
        };
        store.record(&req.replay_key(), &text, 0).unwrap();
    }
    let out = run_reconstruct_eval(&config, &split, &ReplayClient::new(store)).unwrap();
    let s = &out.snapshots[0];
    let agg = s.aggregate.as_ref().unwrap();
    assert_eq!(agg.parse_rate, 0.5);
    assert_eq!(agg.f1, 0.5);
    assert_eq!(agg.position_fidelity, 1.0);
    assert_eq!(
        (s.counts.parsed, s.counts.empty_parse, s.counts.errored),
        (5, 5, 0)
    );
    let empty: Vec<_> = s
        .rows
        .iter()
        .filter(|r| r.status == ItemStatus::EmptyParse)
        .collect();
    assert!(empty.iter().all(|r| r.parsed_objects == Some(0)));
}

#[test]
fn changed_prompt_is_a_miss() {
    let tmp = tempfile::tempdir().unwrap();
    let split = small_split(tmp.path(), 1);
    let store = ReplayStore::open(tmp.path().join("store"));
    let config = RunConfig::replay("m", &split.dir, store.root());
    let item = &split.qa[0];
    let req = qa_request(&config, &split.dir, InferenceMode::Direct, item);
    store.record(&req.replay_key(), "3", 0).unwrap();
    let client = ReplayClient::new(ReplayStore::open(store.root()));
    assert_eq!(client.send(&req).unwrap().text, "3");
    let mut edited = req.clone();
    edited.user.push_str(" Be brief.");
    match client.send(&edited) {
        Err(ClientError::Store(StoreError::PromptChanged { .. })) => {}
        other => panic!("expected a prompt-change miss, got {other:?}"),
    }
    let mut other_item = req.clone();
    other_item.item = "nowhere".into();
    assert!(matches!(
        client.send(&other_item),
        Err(ClientError::Store(StoreError::Miss { .. }))
    ));
    // the token budget is not part of the key
    let mut budget = req;
    budget.max_new_tokens = 7;
    assert!(client.send(&budget).is_ok());
}

/// Fails every call for scenes whose index is below `failing`.
struct Flaky {
    inner: ReplayClient,
    failing: Vec<String>,
}

impl ModelClient for Flaky {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError> {
        if self
            .failing
            .iter()
            .any(|id| request.item.starts_with(id.as_str()))
        {
            return Err(ClientError::Http("503 service unavailable".into()));
        }
        self.inner.send(request)
    }
}

#[test]
fn failure_rate_above_threshold_aborts() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = GenPlan {
        tiers: vec![1],
        seeds: 0..10,
        qa_seed: 0,
    };
    let (split, _) = generate_split(tmp.path().join("split"), &plan).unwrap();
    let store = ReplayStore::open(tmp.path().join("store"));
    let mut config = RunConfig::replay("flaky", &split.dir, store.root());
    config.languages = vec![SceneCodeLanguage::ThreeJs, SceneCodeLanguage::SceneDsl];
    synthesize_reconstruct(&store, &config, &split, Policy::AllOracle).unwrap();
    let ids: Vec<String> = split.scenes.iter().map(|s| s.scene_id.clone()).collect();

    // 2 of 10 is at the threshold, not above it
    let at = Flaky {
        inner: ReplayClient::new(ReplayStore::open(store.root())),
        failing: ids[..2].to_vec(),
    };
    const { assert!(2.0 / 10.0 <= MAX_ERROR_RATE) };
    let out = run_reconstruct_eval(&config, &split, &at).unwrap();
    assert!(!out.aborted);
    assert_eq!(out.snapshots.len(), 2);
    let s = &out.snapshots[0];
    assert_eq!((s.counts.errored, s.counts.parsed), (2, 8));
    assert_eq!(s.aggregate.as_ref().unwrap().parse_rate, 0.8);
    assert!(s
        .rows
        .iter()
        .filter(|r| r.status == ItemStatus::Errored)
        .all(|r| r.error.as_deref().is_some_and(|e| e.contains("503"))));

    let above = Flaky {
        inner: ReplayClient::new(store),
        failing: ids[..3].to_vec(),
    };
    let out = run_reconstruct_eval(&config, &split, &above).unwrap();
    assert!(out.aborted);
    assert_eq!(out.snapshots.len(), 1, "later cells must not run");
    assert!(!out.snapshots[0].valid);
}

#[test]
fn errored_questions_count_as_incorrect() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = GenPlan {
        tiers: vec![3],
        seeds: 0..10,
        qa_seed: 0,
    };
    let (split, _) = generate_split(tmp.path().join("split"), &plan).unwrap();
    let store = ReplayStore::open(tmp.path().join("store"));
    let config = RunConfig::replay("qa", &split.dir, store.root());
    synthesize_qa(
        &store,
        &config,
        &split,
        &[InferenceMode::Direct],
        Policy::AllOracle,
    )
    .unwrap();
    let failing = vec![split.scenes[0].scene_id.clone()];
    let client = Flaky {
        inner: ReplayClient::new(store),
        failing,
    };
    let out = run_qa_eval(&config, &split, &split.qa, &client).unwrap();
    let s = &out.snapshots[0];
    assert_eq!(s.counts.errored, 8);
    assert_eq!(s.counts.items, 80);
    assert!((s.qa.as_ref().unwrap().overall.accuracy - 72.0 / 80.0).abs() < 1e-12);
}

#[test]
fn n_scenes_larger_than_split_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let split = small_split(tmp.path(), 1);
    let mut config = RunConfig::replay("m", &split.dir, tmp.path().join("store"));
    config.n_scenes = Some(50);
    let client = ReplayClient::new(ReplayStore::open(tmp.path().join("store")));
    assert!(run_reconstruct_eval(&config, &split, &client).is_err());
}
