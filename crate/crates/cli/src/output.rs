//! Result files. Every file carries the config hash and the seed.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Identifies the run that produced a file.
#[derive(Clone, Debug, Serialize)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    config_hash: &'a str,
    seed: u64,
    mode: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
    results: &'a T,
}

pub struct Writer {
    dir: PathBuf,
    stamp: Stamp,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, stamp: Stamp) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            stamp,
            written: Vec::new(),
        })
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn text(&mut self, name: &str, body: &str) -> io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(
        &mut self,
        name: &str,
        mode: &str,
        note: Option<&str>,
        results: &T,
    ) -> io::Result<()> {
        let doc = Document {
            config_hash: &self.stamp.config_hash,
            seed: self.stamp.seed,
            mode,
            note,
            results,
        };
        let body = serde_json::to_string_pretty(&doc).map_err(io::Error::other)?;
        self.text(name, &(body + "\n"))
    }

    /// CSV with `config_hash` and `seed` prepended to every row.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        let mut head = vec!["config_hash", "seed"];
        head.extend_from_slice(header);
        w.write_record(&head)?;
        let seed = self.stamp.seed.to_string();
        for row in rows {
            let mut rec = vec![self.stamp.config_hash.clone(), seed.clone()];
            rec.extend(row.iter().map(|v| format!("{v:e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }
}
