use std::fs;
use std::path::{Path, PathBuf};

use bosonic_snr::sweep::SweepTable;
use serde_json::{Map, Value};

/// Writes `<name>.csv` and the `<name>.json` sidecar. The sidecar holds the
/// table metadata merged with `extra`, plus a count of divergent rows.
pub fn write_table(dir: &Path, table: &SweepTable, extra: &Map<String, Value>) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{}.csv", table.name));
    fs::write(&csv, table.to_csv())?;
    let mut meta = match table.metadata_json() {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    for (k, v) in extra {
        meta.entry(k.clone()).or_insert_with(|| v.clone());
    }
    if let Some(divergent) = table.column("divergent") {
        meta.insert(
            "divergent_rows".into(),
            Value::from(divergent.iter().filter(|&&d| d == 1.0).count()),
        );
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(meta)).expect("metadata serializes");
    text.push('\n');
    fs::write(dir.join(format!("{}.json", table.name)), text)?;
    Ok(csv)
}
