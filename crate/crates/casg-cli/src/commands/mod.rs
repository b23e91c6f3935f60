pub mod estimate;
pub mod experiments;
pub mod history;
pub mod profile;

use std::path::{Path, PathBuf};

use crate::{Failure, TableFormat};

/// Writes a file under the output directory, creating it as needed.
pub fn write_output(out_dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Failure::config(format!("cannot create output directory: {e}")))?;
    let path = out_dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Renders a CSV table either natively or as a JSON array of row objects,
/// adjusting the file name extension accordingly.
pub fn render_table(name: &str, csv: &str, format: TableFormat) -> (String, String) {
    match format {
        TableFormat::Csv => (name.to_string(), csv.to_string()),
        TableFormat::Json => {
            let mut lines = csv.lines();
            let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
            let rows: Vec<serde_json::Value> = lines
                .filter(|l| !l.trim().is_empty())
                .map(|line| {
                    let mut obj = serde_json::Map::new();
                    for (key, field) in header.iter().zip(line.split(',')) {
                        // Integers first so 64-bit seeds survive exactly.
                        let value = field
                            .parse::<u64>()
                            .map(|v| serde_json::json!(v))
                            .or_else(|_| field.parse::<f64>().map(|v| serde_json::json!(v)))
                            .unwrap_or_else(|_| serde_json::json!(field));
                        obj.insert((*key).to_string(), value);
                    }
                    serde_json::Value::Object(obj)
                })
                .collect();
            let json_name = name.strip_suffix(".csv").unwrap_or(name).to_string() + ".json";
            (
                json_name,
                casg::harness::output::render_json(&serde_json::Value::Array(rows)),
            )
        }
    }
}

/// Parses a comma-separated coordinate list.
pub fn parse_point(text: &str) -> Result<nalgebra::DVector<f64>, Failure> {
    let coords: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    coords
        .map(nalgebra::DVector::from_vec)
        .map_err(|e| Failure::config(format!("cannot parse point '{text}': {e}")))
}
