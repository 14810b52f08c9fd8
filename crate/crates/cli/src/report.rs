use std::fs;
use std::path::Path;

use anyhow::Context;

use crate::format::Table;

/// Everything a run emits. Rendering is a pure function of the fields, so
/// equal inputs give equal bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub digest: String,
    pub seed: Option<u64>,
    pub warnings: Vec<String>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn render_text(&self) -> String {
        let mut out = format!("rdd {}\n", env!("CARGO_PKG_VERSION"));
        out.push_str(&format!("command  {}\n", self.command));
        out.push_str(&format!("config   sha256:{}\n", self.digest));
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed     {seed}\n"));
        }
        out.push('\n');
        if self.warnings.is_empty() {
            out.push_str("warnings: none\n");
        } else {
            out.push_str(&format!("warnings: {}\n", self.warnings.len()));
            for w in &self.warnings {
                out.push_str(&format!("  ! {w}\n"));
            }
        }
        for t in &self.tables {
            out.push('\n');
            out.push_str(&t.render_text());
        }
        out
    }

    /// Writes `report.txt`, one CSV per table and `warnings.txt`.
    pub fn write_to(&self, dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let write = |name: &str, bytes: &[u8]| {
            let path = dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
        };
        write("report.txt", self.render_text().as_bytes())?;
        let mut warnings = self.warnings.join("\n");
        if !warnings.is_empty() {
            warnings.push('\n');
        }
        write("warnings.txt", warnings.as_bytes())?;
        for t in &self.tables {
            write(&format!("{}.csv", t.name), &t.to_csv()?)?;
        }
        Ok(())
    }
}
