//! Attribute CSV ingestion.
//!
//! Each file holds one attribute: a header `node_id,s1,…,sn` followed by one
//! row per node. Files must agree on the node set and on `n`; rows are
//! aligned to the node order of the first file.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use macnet::network::AttributeDataset;
use macnet::numkernel::Matrix;

use crate::error::{CliError, CliResult};

struct AttributeTable {
    ids: Vec<String>,
    /// Row-major `N_v x n`.
    values: Vec<Vec<f64>>,
    n: usize,
}

fn read_table(path: &Path) -> CliResult<AttributeTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| CliError::io(path, e))?,
        None => {
            return Err(CliError::SchemaMismatch {
                file: path.into(),
                line: 1,
                column: 1,
                message: "empty file".into(),
            })
        }
    };
    if header.get(0).map(|h| h.trim_start_matches('\u{feff}').trim()) != Some("node_id") {
        return Err(CliError::SchemaMismatch {
            file: path.into(),
            line: 1,
            column: 1,
            message: "first header cell must be 'node_id'".into(),
        });
    }
    let n = header.len() - 1;
    if n == 0 {
        return Err(CliError::SchemaMismatch {
            file: path.into(),
            line: 1,
            column: 2,
            message: "no sample columns".into(),
        });
    }

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for rec in records {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(CliError::SchemaMismatch {
                file: path.into(),
                line,
                column: rec.len().min(header.len()) + 1,
                message: format!("expected {} cells, found {}", header.len(), rec.len()),
            });
        }
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(CliError::SchemaMismatch {
                file: path.into(),
                line,
                column: 1,
                message: "empty node id".into(),
            });
        }
        if seen.insert(id.clone(), line).is_some() {
            return Err(CliError::DuplicateNodeId {
                file: path.into(),
                line,
                id,
            });
        }
        let row = (1..rec.len())
            .map(|c| {
                let cell = rec[c].trim();
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::NonNumericCell {
                        file: path.into(),
                        line,
                        column: c + 1,
                        value: cell.to_string(),
                    })
            })
            .collect::<CliResult<Vec<_>>>()?;
        ids.push(id);
        values.push(row);
    }
    Ok(AttributeTable { ids, values, n })
}

/// Attribute name for a file: its stem.
pub fn attribute_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Reads one file per attribute into an aligned dataset.
pub fn ingest(paths: &[PathBuf], names: Option<&[String]>) -> CliResult<AttributeDataset> {
    if paths.is_empty() {
        return Err(CliError::Usage("at least one attribute file is required".into()));
    }
    let names: Vec<String> = match names {
        Some(n) if n.len() != paths.len() => {
            return Err(CliError::Usage(format!(
                "{} attribute names given for {} files",
                n.len(),
                paths.len()
            )))
        }
        Some(n) => n.to_vec(),
        None => paths.iter().map(|p| attribute_name(p)).collect(),
    };
    let mut uniq = std::collections::HashSet::new();
    if let Some(dup) = names.iter().find(|n| !uniq.insert(n.as_str())) {
        return Err(CliError::Usage(format!("attribute name '{dup}' used twice")));
    }

    let tables = paths.iter().map(|p| read_table(p)).collect::<CliResult<Vec<_>>>()?;
    let first = &tables[0];
    let nv = first.ids.len();
    let n = first.n;
    let k = tables.len();

    let mut blocks: Vec<Matrix> = (0..nv).map(|_| Matrix::zeros(n, k)).collect();
    for (a, (table, path)) in tables.iter().zip(paths).enumerate() {
        if table.n != n {
            return Err(CliError::SchemaMismatch {
                file: path.clone(),
                line: 1,
                column: table.n.min(n) + 2,
                message: format!("{} sample columns, first file has {n}", table.n),
            });
        }
        let index: HashMap<&str, usize> =
            table.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        for (v, id) in first.ids.iter().enumerate() {
            let row = *index.get(id.as_str()).ok_or_else(|| CliError::SchemaMismatch {
                file: path.clone(),
                line: 0,
                column: 1,
                message: format!("node id '{id}' missing"),
            })?;
            for s in 0..n {
                blocks[v][(s, a)] = table.values[row][s];
            }
        }
        if table.ids.len() != nv {
            let known: std::collections::HashSet<&str> = first.ids.iter().map(String::as_str).collect();
            let extra = table
                .ids
                .iter()
                .position(|id| !known.contains(id.as_str()))
                .expect("sizes differ, so an unknown id exists");
            return Err(CliError::SchemaMismatch {
                file: path.clone(),
                line: extra as u64 + 2,
                column: 1,
                message: format!("node id '{}' not present in the first file", table.ids[extra]),
            });
        }
    }
    Ok(AttributeDataset::new(first.ids.clone(), names, blocks)?)
}
