use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Writes `rows` as CSV, preceded by a `#schema=<kind>/v1` line.
pub fn write_csv<S: Serialize>(path: &Path, kind: &str, rows: &[S]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "#schema={kind}/v1")?;
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Schema tag of a file written by [`write_csv`].
pub fn read_csv_schema(path: &Path) -> Result<String> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    first
        .trim_end()
        .strip_prefix("#schema=")
        .map(str::to_owned)
        .ok_or_else(|| Error::Io(format!("{} has no schema line", path.display())))
}

/// Companion record of a campaign output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub schema: String,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub config: serde_json::Value,
    pub wall_time_seconds: f64,
    pub output: PathBuf,
}

impl Manifest {
    pub fn new(command: &str, schema: &str, seed: Option<u64>, config: serde_json::Value, output: &Path) -> Self {
        Self {
            tool: "pu-risklab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            schema: format!("{schema}/v1"),
            seed,
            workers: None,
            config,
            wall_time_seconds: 0.0,
            output: output.to_path_buf(),
        }
    }

    /// `<out>.manifest.json` next to the output file.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }
}

pub fn write_manifest(manifest: &Manifest) -> Result<PathBuf> {
    let path = Manifest::path_for(&manifest.output);
    let file = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(file, manifest)?;
    Ok(path)
}
