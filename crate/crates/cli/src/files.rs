//! Instance files, artifact loading and provenance.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use routedist::geom::RegionModel;
use routedist::partition::InstanceConfig;
use routedist::scenario::{ScenarioSet, Split};

use crate::UsageError;

/// Instance document: a region reference plus all instance parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub id: String,
    /// Region file, relative to the instance file when not absolute.
    pub region: PathBuf,
    #[serde(flatten)]
    pub config: InstanceConfig,
}

pub struct Instance {
    pub id: String,
    /// Region with the instance depot.
    pub region: RegionModel,
    pub config: InstanceConfig,
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or_else(|| Path::new("."))
}

/// Region path as stored in an instance written to `out`.
pub fn relative_region(region: &Path, out: &Path) -> PathBuf {
    let same_dir = |a: &Path, b: &Path| match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    };
    let out_dir = base_dir(out);
    let out_dir = if out_dir.as_os_str().is_empty() { Path::new(".") } else { out_dir };
    let reg_dir = base_dir(region);
    let reg_dir = if reg_dir.as_os_str().is_empty() { Path::new(".") } else { reg_dir };
    match region.file_name() {
        Some(name) if same_dir(reg_dir, out_dir) => PathBuf::from(name),
        _ => region.canonicalize().unwrap_or_else(|_| region.to_path_buf()),
    }
}

pub fn load_region(path: &Path) -> Result<RegionModel> {
    RegionModel::load(path).with_context(|| format!("loading region {}", path.display()))
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading instance {}", path.display()))?;
    let doc: InstanceFile = serde_json::from_str(&text).map_err(|e| UsageError(format!("instance {}: {e}", path.display())))?;
    let region_path = if doc.region.is_absolute() {
        doc.region.clone()
    } else {
        base_dir(path).join(&doc.region)
    };
    let region = load_region(&region_path)?.with_depot(doc.config.depot);
    doc.config.validate(&region)?;
    Ok(Instance {
        id: doc.id,
        region,
        config: doc.config,
    })
}

pub fn load_scenarios(path: &Path, region: &RegionModel, split: Option<Split>) -> Result<ScenarioSet> {
    let s = ScenarioSet::load(path).with_context(|| format!("loading scenarios {}", path.display()))?;
    s.validate_against(region)
        .with_context(|| format!("scenarios {}", path.display()))?;
    if let Some(want) = split {
        if s.split != want {
            return Err(UsageError(format!(
                "{} holds {} scenarios, this step needs the {} split",
                path.display(),
                s.split.as_str(),
                want.as_str()
            ))
            .into());
        }
    }
    Ok(s)
}

/// Tool, version, command and seed recorded in every artifact.
pub fn provenance(command: &str, seed: u64, extra: Value) -> Value {
    let mut v = json!({
        "tool": "routedist",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
    });
    if let (Some(obj), Value::Object(more)) = (v.as_object_mut(), extra) {
        obj.extend(more);
    }
    v
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
