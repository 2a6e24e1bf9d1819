//! Offline pipeline: training, experiment campaigns, re-analysis, stub
//! agents and synthetic fixtures.

mod experiment;
pub mod fixtures;
mod stub;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use experiment::{
    build_agent_index, load_artifacts, metrics_from_saved, run_experiment, train, AgentConfig, AgentKind, Artifacts, CampaignRecord, DataConfig,
    ExperimentConfig, Overrides, RunOutcome, RunStatus, StubConfig, TrainSummary, CIR6_ARTIFACT, INDEX_ARTIFACT, QRFA_ARTIFACT,
};
pub use stub::{pool_with_attribute, StubAgent, StubAgentSpec, StubPolicy};

use crate::error::{Error, Result};

/// Writes through a temporary sibling and renames it into place, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Argument(format!("{} has no file name", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
