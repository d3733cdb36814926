mod support;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pocketlens::compare::RelatednessReport;
use pocketlens::pipeline::{artifacts, hash_file, Pipeline, PipelineConfig, PipelineError, Stage, StageOutcome};

const SMALL: &str = "synth_docs_per_topic = 40\nmin_cluster_size = 10\n";

fn config(dir: &Path, extra: &str) -> PipelineConfig {
    let mut c = PipelineConfig::from_toml(&format!("{SMALL}{extra}")).unwrap();
    c.out_dir = dir.to_path_buf();
    c
}

fn open(dir: &Path, extra: &str, force: bool) -> Pipeline {
    Pipeline::open(config(dir, extra), force).unwrap()
}

/// Every artifact under `dir` except manifests and the lock, by relative
/// path, with its sha256.
fn artifact_hashes(dir: &Path) -> BTreeMap<PathBuf, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, String>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
                continue;
            }
            let name = path.file_name().unwrap().to_string_lossy();
            if name.ends_with(".manifest.json") || name == ".lock" {
                continue;
            }
            out.insert(path.strip_prefix(root).unwrap().to_path_buf(), hash_file(&path).unwrap());
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn missing_prerequisite_names_the_earliest_stage() {
    let dir = tempfile::tempdir().unwrap();
    let p = open(dir.path(), "", false);
    let err = p.run_stage(Stage::Cluster).unwrap_err();
    assert!(
        matches!(err, PipelineError::MissingStage { stage: Stage::Cluster, requires: Stage::Ingest, .. }),
        "{err}"
    );
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("run `ingest`"));

    let err = p.run_stage(Stage::Ingest).unwrap_err();
    assert!(matches!(err, PipelineError::MissingStage { requires: Stage::Synth, .. }));
}

#[test]
fn second_run_skips_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let p = open(dir.path(), "", false);
    let first = p.run_all(true).unwrap();
    assert!(first.iter().all(|o| !o.was_skipped()));
    let second = p.run_all(true).unwrap();
    assert!(second.iter().all(StageOutcome::was_skipped));
    assert!(dir.path().join(artifacts::EVAL_JSON).exists());
}

#[test]
fn changed_config_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    open(dir.path(), "", false).run_all(false).unwrap();

    let mut changed = config(dir.path(), "");
    changed.min_cluster_size = 12;
    let p = Pipeline::open(changed.clone(), false).unwrap();
    // earlier stages are unaffected by the clustering slice
    assert!(p.run_stage(Stage::Embed).unwrap().was_skipped());
    let err = p.run_stage(Stage::Cluster).unwrap_err();
    assert!(matches!(err, PipelineError::ConfigChanged(Stage::Cluster)), "{err}");
    assert_eq!(err.exit_code(), 2);
    drop(p);

    let p = Pipeline::open(changed, true).unwrap();
    assert!(!p.run_stage(Stage::Cluster).unwrap().was_skipped());
}

#[test]
fn the_directory_is_locked_while_open() {
    let dir = tempfile::tempdir().unwrap();
    let _held = open(dir.path(), "", false);
    let err = Pipeline::open(config(dir.path(), ""), false).err().unwrap();
    assert!(matches!(err, PipelineError::Locked(_)));
}

#[test]
fn identical_inputs_give_identical_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    open(a.path(), "", false).run_all(true).unwrap();
    open(b.path(), "", false).run_all(true).unwrap();
    let (ha, hb) = (artifact_hashes(a.path()), artifact_hashes(b.path()));
    assert!(ha.len() > 20);
    assert_eq!(ha, hb);
}

#[test]
fn no_stage_rewrites_earlier_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let p = open(dir.path(), "", false);
    let mut seen: BTreeMap<PathBuf, String> = BTreeMap::new();
    for stage in Stage::ALL {
        p.run_stage(stage).unwrap();
        let now = artifact_hashes(dir.path());
        for (path, hash) in &seen {
            assert_eq!(now.get(path), Some(hash), "{stage} changed {}", path.display());
        }
        seen = now;
    }
}

#[test]
fn disjoint_corpora_report_no_common_topics() {
    let dir = tempfile::tempdir().unwrap();
    let p = open(
        dir.path(),
        "synth_shared_topics = 0\nsynth_unique_russian = 2\nsynth_unique_english = 2\n",
        false,
    );
    p.run_all(false).unwrap();
    let report = std::fs::read_to_string(dir.path().join(artifacts::REPORT)).unwrap();
    assert!(report.contains("no common topics"), "{report}");
}

#[test]
fn remote_provider_matches_the_hash_run() {
    let sidecar = support::embedding_sidecar(2048);
    let (local, remote) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    open(local.path(), "", false).run_all(false).unwrap();
    open(remote.path(), &format!("provider = \"remote:{}\"\n", sidecar.url), false)
        .run_all(false)
        .unwrap();
    let (a, b) = (artifact_hashes(local.path()), artifact_hashes(remote.path()));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    // the mock sidecar serves the same vectors as hash:2048, so every
    // artifact matches, not just the schema
    assert_eq!(a, b);
    let report: RelatednessReport =
        serde_json::from_str(&std::fs::read_to_string(remote.path().join(artifacts::RELATEDNESS)).unwrap()).unwrap();
    assert!(report.russian_count > 0 && report.english_count > 0);
}

#[test]
fn unreachable_provider_is_a_provider_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = open(dir.path(), "provider = \"remote:http://127.0.0.1:1\"\n", false);
    p.run_stage(Stage::Synth).unwrap();
    p.run_stage(Stage::Ingest).unwrap();
    let err = p.run_stage(Stage::Embed).unwrap_err();
    assert!(matches!(err, PipelineError::Provider(_)), "{err}");
    assert_eq!(err.exit_code(), 4);
}
