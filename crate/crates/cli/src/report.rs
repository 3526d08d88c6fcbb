use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: &'a str,
    command: &'a str,
    library_version: &'a str,
    config_sha256: &'a str,
    result: &'a T,
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// One CSV table: header plus rows of already formatted cells.
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Everything a command produces.
pub struct Output<T: Serialize> {
    pub result: T,
    pub summary: String,
    pub tables: Vec<Table>,
}

/// Write `<command>.json`, `<command>.txt` and any CSV tables; returns the
/// paths written.
pub fn write<T: Serialize>(dir: &Path, command: &str, hash: &str, out: &Output<T>) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        library_version: skewprod::VERSION,
        config_sha256: hash,
        result: &out.result,
    };
    let mut json = serde_json::to_string_pretty(&env).map_err(io::Error::other)?;
    json.push('\n');
    let mut paths = Vec::new();
    let p = dir.join(format!("{command}.json"));
    fs::write(&p, json)?;
    paths.push(p);
    let p = dir.join(format!("{command}.txt"));
    fs::write(&p, &out.summary)?;
    paths.push(p);
    for t in &out.tables {
        let p = dir.join(format!("{}.csv", t.name));
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(&t.header)?;
        for r in &t.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        paths.push(p);
    }
    Ok(paths)
}
