//! Session catalog persisted as one JSON snapshot in the session directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use augdict::ColumnTable;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const SNAPSHOT: &str = "catalog.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadRecord {
    pub path: String,
    pub format: String,
    pub rows: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entry {
    pub table: ColumnTable,
    pub loads: Vec<LoadRecord>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Catalog {
    tables: BTreeMap<String, Entry>,
}

pub struct Session {
    dir: PathBuf,
    catalog: Catalog,
}

impl Session {
    /// Opens the session in `dir`; a missing snapshot is an empty catalog.
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(SNAPSHOT);
        let catalog = if path.exists() {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let mut c: Catalog =
                serde_json::from_str(&text).with_context(|| format!("decoding {}", path.display()))?;
            c.tables.values_mut().for_each(|e| e.table.rebuild_indexes());
            c
        } else {
            Catalog::default()
        };
        Ok(Self {
            dir: dir.to_owned(),
            catalog,
        })
    }

    /// Writes the snapshot atomically (temp file, then rename).
    pub fn save(&self) -> Result<()> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let tmp = self.dir.join(format!("{SNAPSHOT}.tmp"));
        let json = serde_json::to_vec(&self.catalog)?;
        fs::write(&tmp, json).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, self.dir.join(SNAPSHOT))?;
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Entry, CliError> {
        self.catalog
            .tables
            .get(name)
            .ok_or_else(|| CliError::UnknownTable(name.to_owned()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Entry, CliError> {
        self.catalog
            .tables
            .get_mut(name)
            .ok_or_else(|| CliError::UnknownTable(name.to_owned()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.catalog.tables.contains_key(name)
    }

    pub fn insert(&mut self, name: &str, entry: Entry) {
        self.catalog.tables.insert(name.to_owned(), entry);
    }
}
