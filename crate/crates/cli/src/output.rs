//! Serialized outputs and their readers.

use std::io::Write;
use std::path::{Path, PathBuf};

use macnet::inference::{Method, PValueMode, Sidedness};
use macnet::network::{
    node_index, CcaSolver, EdgeRecord, HomogeneitySummary, InferredNetwork, SkippedPair,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const EDGES_FILE: &str = "edges.csv";
pub const META_FILE: &str = "meta.json";

/// 17 significant digits, enough for an exact round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str, path: &Path, line: u64, column: usize) -> CliResult<f64> {
    s.trim().parse::<f64>().map_err(|_| CliError::NonNumericCell {
        file: path.into(),
        line,
        column,
        value: s.to_string(),
    })
}

/// Writes `bytes` to a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.flush().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Builds a CSV document in memory from a header and string rows.
pub fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::io("<csv>", e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::io("<csv>", e))?;
    }
    w.into_inner().map_err(|e| CliError::io("<csv>", e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::io(path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Settings recorded alongside an edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub sided: Sidedness,
    pub pvalue_mode: PValueMode,
    pub mc_draws: usize,
    pub seed: u64,
    pub cca_solver: CcaSolver,
}

/// Everything in an [`InferredNetwork`] except the edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMeta {
    pub node_ids: Vec<String>,
    pub attributes: Vec<String>,
    pub method: Method,
    pub gamma: f64,
    pub n_samples: usize,
    pub n_tests: usize,
    pub n_edges: usize,
    pub skipped_warnings: usize,
    pub skipped: Vec<SkippedPair>,
    pub floored: Vec<(usize, usize)>,
    pub homogeneity: Option<HomogeneitySummary>,
    /// Degrees of freedom formula of the homogeneity test.
    pub homogeneity_df_formula: String,
    pub settings: Option<RunSettings>,
    pub notes: Vec<String>,
}

impl NetworkMeta {
    pub fn from_network(net: &InferredNetwork, settings: Option<RunSettings>) -> Self {
        NetworkMeta {
            node_ids: net.node_ids.clone(),
            attributes: net.attributes.clone(),
            method: net.method,
            gamma: net.gamma,
            n_samples: net.n_samples,
            n_tests: net.n_tests,
            n_edges: net.edges.len(),
            skipped_warnings: net.skipped.len(),
            skipped: net.skipped.clone(),
            floored: net.floored.clone(),
            homogeneity: net.homogeneity,
            homogeneity_df_formula: "k*(k-1)".into(),
            settings,
            notes: vec![
                "p-values are two-sided unless settings.sided says otherwise".into(),
                "contrib_l is the mean of both endpoints' squared standardized first-root weights".into(),
            ],
        }
    }
}

fn edge_header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = ["node_i", "node_j", "method", "similarity", "statistic", "df", "p", "q"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=k).map(|l| format!("contrib_{l}")));
    h
}

pub fn edges_csv(net: &InferredNetwork) -> CliResult<Vec<u8>> {
    let k = net.attributes.len();
    let rows = net.edges.iter().map(|e| {
        let mut row = vec![
            net.node_ids[e.pair.0].clone(),
            net.node_ids[e.pair.1].clone(),
            e.method.to_string(),
            fmt_f64(e.similarity),
            fmt_f64(e.statistic),
            e.df.map(|d| d.to_string()).unwrap_or_default(),
            fmt_f64(e.p),
            fmt_f64(e.q),
        ];
        row.extend((0..k).map(|l| e.contrib.get(l).map(|&c| fmt_f64(c)).unwrap_or_default()));
        row
    });
    csv_bytes(&edge_header(k), rows)
}

/// Writes `edges.csv` and `meta.json` into `dir`.
pub fn write_network(dir: &Path, net: &InferredNetwork, settings: Option<RunSettings>) -> CliResult<()> {
    write_atomic(&dir.join(EDGES_FILE), &edges_csv(net)?)?;
    write_json(&dir.join(META_FILE), &NetworkMeta::from_network(net, settings))
}

/// `meta.json` next to an edge list, if present.
pub fn meta_path(edges: &Path) -> PathBuf {
    edges.parent().unwrap_or(Path::new(".")).join(META_FILE)
}

/// Reads an edge list and the metadata stored next to it.
///
/// Without `meta.json` the node set is the set of edge endpoints in order of
/// first appearance.
pub fn read_network(edges_path: &Path) -> CliResult<InferredNetwork> {
    let meta_file = meta_path(edges_path);
    let meta: Option<NetworkMeta> = if meta_file.exists() {
        let text = std::fs::read_to_string(&meta_file).map_err(|e| CliError::io(&meta_file, e))?;
        Some(serde_json::from_str(&text).map_err(|e| CliError::io(&meta_file, e))?)
    } else {
        None
    };

    let mut reader = csv::ReaderBuilder::new()
        .from_path(edges_path)
        .map_err(|e| CliError::io(edges_path, e))?;
    let header = reader.headers().map_err(|e| CliError::io(edges_path, e))?.clone();
    let expected_prefix = &edge_header(0);
    if header.len() < expected_prefix.len()
        || header.iter().zip(expected_prefix).any(|(a, b)| a != b)
    {
        return Err(CliError::SchemaMismatch {
            file: edges_path.into(),
            line: 1,
            column: 1,
            message: format!("expected header starting with {}", expected_prefix.join(",")),
        });
    }
    let k = header.len() - expected_prefix.len();

    let mut node_ids: Vec<String> = meta.as_ref().map(|m| m.node_ids.clone()).unwrap_or_default();
    let mut raw = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::io(edges_path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if meta.is_none() {
            for id in [&rec[0], &rec[1]] {
                if !node_ids.iter().any(|x| x == id) {
                    node_ids.push(id.to_string());
                }
            }
        }
        raw.push((line, rec));
    }
    let index = node_index(&node_ids);
    let mut edges = Vec::with_capacity(raw.len());
    let mut method_seen = None;
    for (line, rec) in &raw {
        let line = *line;
        let lookup = |col: usize| {
            index.get(&rec[col]).copied().ok_or_else(|| CliError::SchemaMismatch {
                file: edges_path.into(),
                line,
                column: col + 1,
                message: format!("node id '{}' not in the network's node set", &rec[col]),
            })
        };
        let (a, b) = (lookup(0)?, lookup(1)?);
        let method: Method = rec[2].parse().map_err(|_| CliError::SchemaMismatch {
            file: edges_path.into(),
            line,
            column: 3,
            message: format!("unknown method '{}'", &rec[2]),
        })?;
        method_seen = Some(method);
        let df = if rec[5].is_empty() {
            None
        } else {
            Some(rec[5].parse::<usize>().map_err(|_| CliError::NonNumericCell {
                file: edges_path.into(),
                line,
                column: 6,
                value: rec[5].to_string(),
            })?)
        };
        let contrib = if (8..8 + k).all(|c| rec[c].is_empty()) {
            Vec::new()
        } else {
            (8..8 + k)
                .map(|c| parse_f64(&rec[c], edges_path, line, c + 1))
                .collect::<CliResult<Vec<_>>>()?
        };
        edges.push(EdgeRecord {
            pair: (a.min(b), a.max(b)),
            similarity: parse_f64(&rec[3], edges_path, line, 4)?,
            method,
            statistic: parse_f64(&rec[4], edges_path, line, 5)?,
            df,
            p: parse_f64(&rec[6], edges_path, line, 7)?,
            q: parse_f64(&rec[7], edges_path, line, 8)?,
            contrib,
        });
    }
    edges.sort_by_key(|e| e.pair);

    Ok(match meta {
        Some(m) => InferredNetwork {
            node_ids,
            attributes: m.attributes,
            method: m.method,
            gamma: m.gamma,
            n_samples: m.n_samples,
            n_tests: m.n_tests,
            edges,
            skipped: m.skipped,
            floored: m.floored,
            homogeneity: m.homogeneity,
        },
        None => {
            let mut net = InferredNetwork::from_edges(
                node_ids,
                method_seen.unwrap_or(Method::Cca),
                f64::NAN,
                edges,
            );
            net.attributes = (1..=k).map(|l| format!("attribute_{l}")).collect();
            net
        }
    })
}
