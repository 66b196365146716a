use std::path::{Path, PathBuf};

use anyhow::Context;
use dispatch_core::sim::PenaltySetting;
use serde::Deserialize;

/// JSON run description. Every field is optional so that command-line flags
/// can fill in or override it; relative paths resolve against the manifest's
/// directory.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub case: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub method: Option<String>,
    pub n_dne: Option<usize>,
    pub n_obp: Option<usize>,
    pub epsilon: Option<f64>,
    /// Explicit validation indices; takes precedence over `start`/`periods`.
    pub horizon: Option<Vec<usize>>,
    pub start: Option<usize>,
    pub periods: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub penalty: Option<PenaltySetting>,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let mut m: RunManifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut m.case,
            &mut m.history,
            &mut m.validation,
            &mut m.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(m)
    }
}
