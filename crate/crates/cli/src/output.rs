use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use schedbound_core::table::Table;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Format;
use crate::error::{CliError, CliResult};

/// Resolved invocation, echoed into every JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub parameters: Value,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

/// Tables and headline numbers produced by one command.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub tables: Vec<(String, Table)>,
    pub summary: Map<String, Value>,
}

impl Artifacts {
    pub fn table(mut self, name: impl Into<String>, table: Table) -> Self {
        self.tables.push((name.into(), table));
        self
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), to_value(value));
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.set(key, value);
        self
    }
}

/// serde_json maps are ordered by key, so nested objects come out sorted.
pub fn to_value(value: impl Serialize) -> Value {
    serde_json::to_value(value).expect("serializable value")
}

fn summary_json(artifacts: &Artifacts, config: &ExperimentConfig) -> String {
    let mut root = artifacts.summary.clone();
    root.insert("config".into(), to_value(config));
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("json");
    text.push('\n');
    text
}

fn output_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Output {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> CliResult<()>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| output_error(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w)?;
    w.flush().map_err(|e| output_error(path, e))
}

/// With an output directory, write `<name>.csv` per table and `summary.json`
/// and list the paths on stderr; otherwise print the first table (csv) or
/// the summary (json) to stdout.
pub fn emit(artifacts: &Artifacts, config: &ExperimentConfig) -> CliResult<()> {
    if let Some(dir) = &config.output_path {
        fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
        for (name, table) in &artifacts.tables {
            let path = dir.join(format!("{name}.csv"));
            write_file(&path, |w| Ok(table.write_csv(w)?))?;
            eprintln!("wrote {}", path.display());
        }
        let path = dir.join("summary.json");
        let json = summary_json(artifacts, config);
        write_file(&path, |w| w.write_all(json.as_bytes()).map_err(|e| output_error(&path, e)))?;
        eprintln!("wrote {}", path.display());
        return Ok(());
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match (config.format, artifacts.tables.first()) {
        (Format::Csv, Some((_, table))) => table.write_csv(&mut out)?,
        _ => out
            .write_all(summary_json(artifacts, config).as_bytes())
            .map_err(|e| output_error(Path::new("<stdout>"), e))?,
    }
    Ok(())
}
