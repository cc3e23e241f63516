use std::fs;
use std::path::{Path, PathBuf};

use coin_core::persist::write_json;
use coin_core::pipeline::{DataSource, PipelineConfig};

use crate::error::CliError;
use crate::files::CONFIG;

/// Config precedence: `--config`, else the config echoed into the run
/// directory by an earlier stage, else built-in defaults. `--seed` then
/// overrides the file and every stage seed is derived from the result.
pub fn load_config(explicit: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<PipelineConfig, CliError> {
    let echoed = out.join(CONFIG);
    let source: Option<PathBuf> = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None if echoed.exists() => Some(echoed),
        None => None,
    };
    let mut config = match source {
        Some(path) => parse_config(&path)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    let config = config.resolve();
    config
        .validate()
        .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
    if let DataSource::File(p) = &config.data.source {
        if !p.exists() {
            return Err(CliError::MissingInput(p.clone()));
        }
    }
    Ok(config)
}

/// Parses a config file, naming the offending field on failure.
pub fn parse_config(path: &Path) -> Result<PipelineConfig, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::Usage(format!(
            "invalid config {}: field `{field}`: {}",
            path.display(),
            e.inner()
        ))
    })
}

/// Writes the resolved config into `out`, creating the directory.
pub fn echo_config(config: &PipelineConfig, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out.display())))?;
    write_json(out.join(CONFIG), config)?;
    Ok(())
}
