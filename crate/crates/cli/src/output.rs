use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::RunError;

/// Output directory plus the row count of every table written into it.
pub struct Output {
    dir: PathBuf,
    pub rows: BTreeMap<String, usize>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            rows: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| RunError::csv(&path, e))?;
        w.write_record(header).map_err(|e| RunError::csv(&path, e))?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row).map_err(|e| RunError::csv(&path, e))?;
        }
        w.flush().map_err(|e| RunError::io(&path, e))?;
        self.rows.insert(name.to_string(), rows.len());
        Ok(())
    }

    /// A table produced by a library writer; `rows` excludes the header.
    pub fn raw_table(
        &mut self,
        name: &str,
        rows: usize,
        write: impl FnOnce(&mut fs::File) -> std::io::Result<()>,
    ) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| RunError::io(&path, e))?;
        write(&mut f).map_err(|e| RunError::io(&path, e))?;
        self.rows.insert(name.to_string(), rows);
        Ok(())
    }

    /// Writes a reproduction file under `archive/`.
    pub fn archive(&self, name: &str, contents: &str) -> Result<PathBuf, RunError> {
        let dir = self.dir.join("archive");
        fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
        let path = dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| RunError::io(&path, e))?;
        f.write_all(contents.as_bytes()).map_err(|e| RunError::io(&path, e))?;
        Ok(path)
    }

    pub fn json(&self, name: &str, value: &serde_json::Value) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| RunError::io(&path, e))
    }
}
