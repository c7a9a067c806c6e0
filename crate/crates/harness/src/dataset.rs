//! Self-supervised datasets from a directory of raw Three.js responses.
//!
//! Input files are `<scene_id>.txt` (viewpoint 0) or `<scene_id>_v<k>.txt`.
//! Output: `<out>/<mode>/{train,val}.jsonl` and `<out>/<mode>/manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use scenecode_core::s3ft::{
    build_dataset, phase1_curate, records_to_jsonl, CurationReport, DatasetManifest, DatasetMode,
    DatasetSplit, RawOutput, ViewEntry, ViewpointTable,
};

use crate::split::{image_path, Split};
use crate::HarnessError;

fn split_name(stem: &str) -> (String, u32) {
    if let Some((id, v)) = stem.rsplit_once("_v") {
        if let Ok(k) = v.parse() {
            return (id.to_string(), k);
        }
    }
    (stem.to_string(), 0)
}

/// Raw responses in `dir`, sorted by file name.
pub fn read_raw_outputs(dir: &Path, split_dir: &Path) -> Result<Vec<RawOutput>, HarnessError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let (scene_id, viewpoint) = split_name(stem);
            let code = fs::read_to_string(&f).map_err(|e| HarnessError::io(&f, e))?;
            let image_ref = image_path(split_dir, &scene_id, viewpoint)
                .to_string_lossy()
                .into_owned();
            Ok(RawOutput {
                scene_id,
                image_ref,
                code,
                viewpoint,
            })
        })
        .collect()
}

pub fn viewpoint_table(split: &Split) -> ViewpointTable {
    split
        .cameras
        .iter()
        .map(|(id, cams)| {
            let views = cams
                .iter()
                .enumerate()
                .map(|(k, c)| ViewEntry {
                    viewpoint: k as u32,
                    image_ref: image_path(&split.dir, id, k as u32)
                        .to_string_lossy()
                        .into_owned(),
                    camera: *c,
                })
                .collect();
            (id.clone(), views)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct ManifestFile<'a> {
    dataset: &'a DatasetManifest,
    curation: &'a CurationReport,
}

/// Curates, builds and writes one mode's dataset.
pub fn build_and_write(
    raw: &[RawOutput],
    split: &Split,
    mode: DatasetMode,
    seed: u64,
    out: &Path,
) -> Result<(DatasetSplit, CurationReport), HarnessError> {
    let (accepted, report) = phase1_curate(raw);
    let dataset = build_dataset(&accepted, mode, &viewpoint_table(split), seed)?;
    let dir = out.join(mode.as_str());
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| HarnessError::io(&p, e))
    };
    write("train.jsonl", records_to_jsonl(&dataset.train))?;
    write("val.jsonl", records_to_jsonl(&dataset.val))?;
    let manifest = dataset.manifest(accepted.len(), Some(report.pass_rate));
    write(
        "manifest.json",
        serde_json::to_string_pretty(&ManifestFile {
            dataset: &manifest,
            curation: &report,
        })? + "\n",
    )?;
    Ok((dataset, report))
}
