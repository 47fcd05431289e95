use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Plain-text record of a run: command, every resolved parameter and the
/// files written. Contains no timestamps, so identical runs give identical
/// manifests. Output paths are listed relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub command: String,
    pub parameters: Vec<(String, String)>,
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, parameters: Vec<(String, String)>) -> Self {
        Self {
            command: command.into(),
            parameters,
            ..Default::default()
        }
    }

    pub fn render(&self, dir: &Path) -> String {
        let mut out = format!(
            "command: {}\nredundancy-cli: {}\nredundancy-core: {}\n\n[parameters]\n",
            self.command,
            env!("CARGO_PKG_VERSION"),
            redundancy_core::VERSION
        );
        for (key, value) in &self.parameters {
            out.push_str(&format!("{key} = {value}\n"));
        }
        out.push_str("\n[outputs]\n");
        for path in &self.outputs {
            let shown = path.strip_prefix(dir).unwrap_or(path);
            out.push_str(&format!("{}\n", shown.display()));
        }
        if !self.notes.is_empty() {
            out.push_str("\n[notes]\n");
            for note in &self.notes {
                out.push_str(&format!("{note}\n"));
            }
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.txt");
        fs::write(&path, self.render(dir)).map_err(CliError::io(&path))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_sections() {
        let mut m = Manifest::new("fig1", vec![("lambda".into(), "0.5".into())]);
        m.outputs.push("out/fig1.csv".into());
        let text = m.render(Path::new("out"));
        assert!(text.starts_with("command: fig1\n"));
        assert!(text.contains("[parameters]\nlambda = 0.5\n"));
        assert!(text.contains("[outputs]\nfig1.csv\n"));
        assert!(!text.contains("[notes]"));
    }
}
