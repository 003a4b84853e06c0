//! Edge and node classification by first-root attribute contributions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::InferredNetwork;

pub const DEFAULT_THRESHOLD: f64 = 0.25;
pub const HISTOGRAM_BINS: usize = 50;
const CONTRIB_SUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeLabel {
    /// Driven by the attribute with this index.
    Dominated(usize),
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeClass {
    pub pair: (usize, usize),
    pub contrib: Vec<f64>,
    pub label: EdgeLabel,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeLabel {
    Dominated(usize),
    Mixed,
    /// Node without incident edges.
    Unclassified,
}

impl NodeLabel {
    /// Attribute name, `mixed` or `unclassified`.
    pub fn name(&self, attributes: &[String]) -> String {
        match self {
            NodeLabel::Dominated(l) => attributes[*l].clone(),
            NodeLabel::Mixed => "mixed".to_string(),
            NodeLabel::Unclassified => "unclassified".to_string(),
        }
    }

    pub fn parse(s: &str, attributes: &[String]) -> Result<Self> {
        match s {
            "mixed" => Ok(NodeLabel::Mixed),
            "unclassified" => Ok(NodeLabel::Unclassified),
            other => attributes
                .iter()
                .position(|a| a == other)
                .map(NodeLabel::Dominated)
                .ok_or_else(|| Error::InvalidInput(format!("unknown class label '{other}'"))),
        }
    }
}

impl EdgeLabel {
    pub fn name(&self, attributes: &[String]) -> String {
        match self {
            EdgeLabel::Dominated(l) => attributes[*l].clone(),
            EdgeLabel::Mixed => "mixed".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeClass {
    pub node_id: String,
    /// `(p_attr_1, …, p_attr_K, p_mixed)` over incident edges; all zero for
    /// isolated nodes.
    pub proportions: Vec<f64>,
    pub label: NodeLabel,
    /// Barycentric coordinates on the unit simplex (the proportions).
    pub simplex_coords: Vec<f64>,
    pub degree: usize,
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(t))
    }
}

/// Labels an edge as dominated by its largest contributor `l*` when
/// `contrib[l*] ≥ 1 − t`, and as mixed otherwise. Ties go to the lowest index.
pub fn classify_edge(pair: (usize, usize), contrib: &[f64], t: f64) -> Result<EdgeClass> {
    check_threshold(t)?;
    if contrib.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = contrib.iter().sum();
    if (sum - 1.0).abs() > CONTRIB_SUM_TOL || contrib.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::UnnormalizedContrib(sum));
    }
    let (top, max) = contrib
        .iter()
        .enumerate()
        .fold((0, contrib[0]), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let label = if max >= 1.0 - t {
        EdgeLabel::Dominated(top)
    } else {
        EdgeLabel::Mixed
    };
    Ok(EdgeClass {
        pair,
        contrib: contrib.to_vec(),
        label,
        threshold: t,
    })
}

/// Class proportions and majority label of a node from its incident edges.
///
/// Mixed wins ties; among attribute classes the lowest index wins.
pub fn classify_node(node_id: &str, k: usize, incident: &[&EdgeClass]) -> NodeClass {
    let mut counts = vec![0usize; k + 1];
    for e in incident {
        match e.label {
            EdgeLabel::Dominated(l) => counts[l] += 1,
            EdgeLabel::Mixed => counts[k] += 1,
        }
    }
    let degree = incident.len();
    if degree == 0 {
        return NodeClass {
            node_id: node_id.to_string(),
            proportions: vec![0.0; k + 1],
            label: NodeLabel::Unclassified,
            simplex_coords: vec![0.0; k + 1],
            degree,
        };
    }
    let proportions: Vec<f64> = counts.iter().map(|&c| c as f64 / degree as f64).collect();
    let best = *counts.iter().max().expect("k + 1 >= 1");
    let label = if counts[k] == best {
        NodeLabel::Mixed
    } else {
        NodeLabel::Dominated(counts.iter().position(|&c| c == best).expect("max exists"))
    };
    NodeClass {
        node_id: node_id.to_string(),
        simplex_coords: proportions.clone(),
        proportions,
        label,
        degree,
    }
}

/// Edge and node classes of a network whose edges carry contributions.
pub fn classify_network(net: &InferredNetwork, t: f64) -> Result<(Vec<EdgeClass>, Vec<NodeClass>)> {
    check_threshold(t)?;
    let k = net.attributes.len();
    let edges = net
        .edges
        .iter()
        .map(|e| {
            if e.contrib.len() != k || k == 0 {
                return Err(Error::InvalidInput(format!(
                    "edge {:?} carries {} contributions for {k} attributes",
                    e.pair,
                    e.contrib.len()
                )));
            }
            classify_edge(e.pair, &e.contrib, t)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut incident: Vec<Vec<&EdgeClass>> = vec![Vec::new(); net.n_nodes()];
    for e in &edges {
        incident[e.pair.0].push(e);
        incident[e.pair.1].push(e);
    }
    let nodes = net
        .node_ids
        .iter()
        .zip(&incident)
        .map(|(id, inc)| classify_node(id, k, inc))
        .collect();
    Ok((edges, nodes))
}

/// Cartesian position in the triangle with attribute 1 at `(0, 0)`,
/// attribute 2 at `(1, 0)` and mixed at `(½, √3/2)`.
pub fn ternary_xy(bary: &[f64]) -> Option<(f64, f64)> {
    if bary.len() != 3 {
        return None;
    }
    let h = 3f64.sqrt() / 2.0;
    Some((bary[1] + 0.5 * bary[2], h * bary[2]))
}

/// Equal-width histogram of `contrib[attribute]` over `[0, 1]`; the last bin
/// is closed on the right.
pub fn contribution_histogram(edges: &[EdgeClass], attribute: usize, bins: usize) -> Vec<usize> {
    let mut counts = vec![0usize; bins];
    if bins == 0 {
        return counts;
    }
    for e in edges {
        if let Some(&c) = e.contrib.get(attribute) {
            let idx = ((c * bins as f64).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_examples() {
        let e = classify_edge((0, 1), &[0.93, 0.07], 0.25).unwrap();
        assert_eq!(e.label, EdgeLabel::Dominated(0));
        assert_eq!(classify_edge((0, 1), &[0.5, 0.5], 0.3).unwrap().label, EdgeLabel::Mixed);
        assert_eq!(classify_edge((0, 1), &[0.6, 0.3, 0.1], 0.25).unwrap().label, EdgeLabel::Mixed);
        assert_eq!(
            classify_edge((0, 1), &[0.6, 0.3, 0.1], 0.45).unwrap().label,
            EdgeLabel::Dominated(0)
        );
        assert_eq!(classify_edge((0, 1), &[0.5, 0.5], 1.0), Err(Error::InvalidThreshold(1.0)));
        assert!(matches!(
            classify_edge((0, 1), &[0.5, 0.6], 0.25),
            Err(Error::UnnormalizedContrib(_))
        ));
    }

    #[test]
    fn node_examples() {
        let g = classify_edge((0, 1), &[0.9, 0.1], 0.25).unwrap();
        let p = classify_edge((0, 2), &[0.1, 0.9], 0.25).unwrap();
        let m = classify_edge((0, 3), &[0.5, 0.5], 0.25).unwrap();
        let n = classify_node("x", 2, &[&p, &p, &p, &g]);
        assert_eq!(n.proportions, vec![0.25, 0.75, 0.0]);
        assert_eq!(n.label, NodeLabel::Dominated(1));
        let n = classify_node("x", 2, &[&m, &m]);
        assert_eq!(n.label, NodeLabel::Mixed);
        assert_eq!(n.simplex_coords, vec![0.0, 0.0, 1.0]);
        assert_eq!(classify_node("x", 2, &[&g, &m]).label, NodeLabel::Mixed);
        assert_eq!(classify_node("x", 2, &[&g, &p]).label, NodeLabel::Dominated(0));
        assert_eq!(classify_node("x", 2, &[]).label, NodeLabel::Unclassified);
    }

    #[test]
    fn histogram_edges() {
        let e = classify_edge((0, 1), &[1.0, 0.0], 0.25).unwrap();
        let h = contribution_histogram(&[e.clone(), e], 0, HISTOGRAM_BINS);
        assert_eq!(h[HISTOGRAM_BINS - 1], 2);
        assert_eq!(h.iter().sum::<usize>(), 2);
        assert_eq!(contribution_histogram(&[], 0, HISTOGRAM_BINS), vec![0; HISTOGRAM_BINS]);
    }
}
