//! Hypergeometric over-representation of node classes in annotated sets.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::bh_fdr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneSet {
    pub name: String,
    pub description: String,
    /// Unique members in file order.
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneSetCollection {
    pub universe_size: usize,
    pub sets: Vec<GeneSet>,
}

impl GeneSetCollection {
    /// Parses GMT lines `name<TAB>description<TAB>member…`. Blank lines and
    /// lines starting with `#` are ignored; repeated members are dropped.
    pub fn parse_gmt(text: &str, universe_size: usize) -> Result<Self> {
        let mut sets = Vec::new();
        let mut names = HashSet::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let name = fields.next().unwrap_or("").trim().to_string();
            let description = fields.next().unwrap_or("").to_string();
            if name.is_empty() {
                return Err(Error::InvalidInput(format!("line {}: missing set name", lineno + 1)));
            }
            if !names.insert(name.clone()) {
                return Err(Error::InvalidInput(format!(
                    "line {}: duplicate set name '{name}'",
                    lineno + 1
                )));
            }
            let mut seen = HashSet::new();
            let members: Vec<String> = fields
                .map(str::trim)
                .filter(|m| !m.is_empty())
                .filter(|m| seen.insert(m.to_string()))
                .map(str::to_string)
                .collect();
            if members.is_empty() {
                return Err(Error::InvalidInput(format!("line {}: set '{name}' is empty", lineno + 1)));
            }
            if members.len() > universe_size {
                return Err(Error::InvalidCounts(format!(
                    "set '{name}' has {} members, universe is {universe_size}",
                    members.len()
                )));
            }
            sets.push(GeneSet {
                name,
                description,
                members,
            });
        }
        Ok(GeneSetCollection { universe_size, sets })
    }

    /// Drops every set whose name contains any of the given substrings.
    pub fn excluding(&self, patterns: &[String]) -> (Self, Vec<String>) {
        let (kept, dropped): (Vec<_>, Vec<_>) = self
            .sets
            .iter()
            .cloned()
            .partition(|s| !patterns.iter().any(|p| !p.is_empty() && s.name.contains(p.as_str())));
        (
            GeneSetCollection {
                universe_size: self.universe_size,
                sets: kept,
            },
            dropped.into_iter().map(|s| s.name).collect(),
        )
    }
}

fn check_counts(overlap: usize, class_size: usize, set_size: usize, universe: usize) -> Result<()> {
    if class_size > universe || set_size > universe || overlap > class_size || overlap > set_size {
        return Err(Error::InvalidCounts(format!(
            "overlap {overlap}, class {class_size}, set {set_size}, universe {universe}"
        )));
    }
    Ok(())
}

/// Point masses of the hypergeometric support relative to the mode, found
/// by ratio recurrence; returns `(lowest support value, weights)`.
fn relative_masses(class_size: usize, set_size: usize, universe: usize) -> (usize, Vec<f64>) {
    let lo = (class_size + set_size).saturating_sub(universe);
    if let Some(w) = exact_counts(lo, class_size, set_size, universe) {
        return (lo, w);
    }
    let (n, k, big_n) = (class_size as f64, set_size as f64, universe as f64);
    let hi = class_size.min(set_size);
    // log pmf(x+1) − log pmf(x)
    let step = |x: f64| ((k - x) * (n - x) / ((x + 1.0) * (big_n - k - n + x + 1.0))).ln();
    let mut logs = vec![0.0; hi - lo + 1];
    for i in 1..logs.len() {
        logs[i] = logs[i - 1] + step((lo + i - 1) as f64);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, logs.into_iter().map(|l| (l - top).exp()).collect())
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Integer counts `C(K, x) C(N−K, n−x)` when their total is exactly
/// representable as an `f64`.
fn exact_counts(lo: usize, class_size: usize, set_size: usize, universe: usize) -> Option<Vec<f64>> {
    const EXACT: u128 = 1 << 53;
    if binomial(universe as u128, class_size as u128)? > EXACT {
        return None;
    }
    let (n, k, big_n) = (class_size as u128, set_size as u128, universe as u128);
    let hi = class_size.min(set_size) as u128;
    (lo as u128..=hi)
        .map(|x| Some((binomial(k, x)? * binomial(big_n - k, n - x)?) as f64))
        .collect()
}

/// `P(X = x)` for `X ~ Hypergeometric(universe, set_size, class_size)`.
pub fn hypergeom_pmf(x: usize, class_size: usize, set_size: usize, universe: usize) -> Result<f64> {
    check_counts(0, class_size, set_size, universe)?;
    let (lo, w) = relative_masses(class_size, set_size, universe);
    if x < lo || x >= lo + w.len() {
        return Ok(0.0);
    }
    let total: f64 = w.iter().sum();
    Ok(w[x - lo] / total)
}

/// `P(X ≥ overlap)` for `X ~ Hypergeometric(universe, set_size, class_size)`.
pub fn hypergeom_upper(overlap: usize, class_size: usize, set_size: usize, universe: usize) -> Result<f64> {
    check_counts(overlap, class_size, set_size, universe)?;
    let (lo, w) = relative_masses(class_size, set_size, universe);
    if overlap <= lo {
        return Ok(1.0);
    }
    let total: f64 = w.iter().sum();
    // smallest terms first
    let tail: f64 = w[overlap - lo..].iter().rev().sum();
    Ok((tail / total).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentResult {
    pub class_label: String,
    pub set_name: String,
    pub overlap: usize,
    pub class_size: usize,
    pub set_size: usize,
    pub p: f64,
    pub q: f64,
    pub enriched: bool,
}

/// How node identifiers matched the annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifierReport {
    pub n_nodes: usize,
    pub matched: usize,
    pub unmatched: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentReport {
    pub results: Vec<EnrichmentResult>,
    pub identifiers: IdentifierReport,
    pub excluded_sets: Vec<String>,
    pub warnings: Vec<String>,
}

/// Tests every (class, set) combination for over-representation and applies
/// Benjamini–Hochberg across the whole family.
///
/// `assignments` are `(node_id, class_label)`; nodes labelled
/// `unclassified` and nodes absent from every retained set are dropped first.
pub fn enrich(
    assignments: &[(String, String)],
    gsc: &GeneSetCollection,
    gamma: f64,
    exclude: &[String],
) -> Result<EnrichmentReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    let (gsc, excluded_sets) = gsc.excluding(exclude);
    let annotated: HashSet<&str> = gsc
        .sets
        .iter()
        .flat_map(|s| s.members.iter().map(String::as_str))
        .collect();

    let mut unmatched = Vec::new();
    let mut classes: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut all_labels: BTreeSet<&str> = BTreeSet::new();
    for (node, label) in assignments {
        if label == "unclassified" {
            continue;
        }
        all_labels.insert(label.as_str());
        if annotated.contains(node.as_str()) {
            classes.entry(label.as_str()).or_default().insert(node.as_str());
        } else {
            unmatched.push(node.clone());
        }
    }
    let matched: usize = classes.values().map(BTreeSet::len).sum();
    let mut warnings: Vec<String> = all_labels
        .iter()
        .filter(|l| !classes.contains_key(*l))
        .map(|l| format!("class '{l}' is empty after restriction to annotated nodes; skipped"))
        .collect();
    if matched == 0 && !assignments.is_empty() {
        warnings.push("no node identifier matched the annotation".into());
    }

    let mut sets: Vec<&crate::enrichment::GeneSet> = gsc.sets.iter().collect();
    sets.sort_by(|a, b| a.name.cmp(&b.name));

    let mut results = Vec::new();
    for (label, members) in &classes {
        for set in &sets {
            let overlap = set.members.iter().filter(|m| members.contains(m.as_str())).count();
            let p = hypergeom_upper(overlap, members.len(), set.members.len(), gsc.universe_size)?;
            results.push(EnrichmentResult {
                class_label: label.to_string(),
                set_name: set.name.clone(),
                overlap,
                class_size: members.len(),
                set_size: set.members.len(),
                p,
                q: 1.0,
                enriched: false,
            });
        }
    }
    if !results.is_empty() {
        let p: Vec<f64> = results.iter().map(|r| r.p).collect();
        let fdr = bh_fdr(&p, gamma)?;
        for (i, r) in results.iter_mut().enumerate() {
            r.q = fdr.qvalues[i];
            r.enriched = fdr.is_rejected(i);
        }
    }
    Ok(EnrichmentReport {
        results,
        identifiers: IdentifierReport {
            n_nodes: assignments.len(),
            matched,
            unmatched,
        },
        excluded_sets,
        warnings,
    })
}
