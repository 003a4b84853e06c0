//! Network inference over all node pairs and graph summary statistics.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{
    bartlett_chi2, bartlett_min_samples, bh_fdr, extreme_corr_pvalue, fisher_pvalue, fisher_z,
    homogeneity_lrt, two_sided_from_upper, Method, NormalBank, PValueMode, Sidedness,
};
use crate::numkernel::{cholesky, floor_eigenvalues, Matrix};
use crate::similarity::{
    canonical_corr, canonical_corr_homogeneous, Extreme, PairCorrelationStructure,
};

/// Eigenvalue floor applied to non-positive-definite pair supermatrices.
pub const PD_FLOOR: f64 = 1e-8;
/// Largest eigenvalue change tolerated by flooring before a pair is skipped.
pub const MAX_FLOOR_CHANGE: f64 = 0.01;
/// Level at which per-pair homogeneity tests are tallied.
pub const HOMOGENEITY_LEVEL: f64 = 0.05;

/// Attribute measurements for every node on a shared set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDataset {
    node_ids: Vec<String>,
    attribute_names: Vec<String>,
    /// One `n x K` block per node.
    samples: Vec<Matrix>,
    selected: Vec<usize>,
}

impl AttributeDataset {
    pub fn new(node_ids: Vec<String>, attribute_names: Vec<String>, samples: Vec<Matrix>) -> Result<Self> {
        if node_ids.len() < 2 {
            return Err(Error::InvalidInput("at least two nodes are required".into()));
        }
        if node_ids.len() != samples.len() {
            return Err(Error::LengthMismatch {
                left: node_ids.len(),
                right: samples.len(),
            });
        }
        let mut seen = HashSet::new();
        if let Some(dup) = node_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::InvalidInput(format!("duplicate node id '{dup}'")));
        }
        let k = attribute_names.len();
        if k == 0 {
            return Err(Error::EmptyInput);
        }
        let n = samples[0].rows();
        if n < 3 {
            return Err(Error::InsufficientSamples { needed: 3, got: n });
        }
        for (id, block) in node_ids.iter().zip(&samples) {
            if block.rows() != n || block.cols() != k {
                return Err(Error::DimensionMismatch(format!(
                    "node '{id}' has {}x{} samples, expected {n}x{k}",
                    block.rows(),
                    block.cols()
                )));
            }
            if block.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput);
            }
        }
        Ok(AttributeDataset {
            node_ids,
            attribute_names,
            samples,
            selected: (0..k).collect(),
        })
    }

    /// Restricts inference to the named attributes, in the given order.
    pub fn select(&mut self, names: &[&str]) -> Result<()> {
        if names.is_empty() {
            return Err(Error::EmptyInput);
        }
        let idx = names
            .iter()
            .map(|name| {
                self.attribute_names
                    .iter()
                    .position(|a| a == name)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown attribute '{name}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.selected = idx;
        Ok(())
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.selected.iter().map(|&a| self.attribute_names[a].clone()).collect()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn n_samples(&self) -> usize {
        self.samples[0].rows()
    }

    /// Full `n x K` block of one node.
    pub fn node_samples(&self, v: usize) -> &Matrix {
        &self.samples[v]
    }

    /// `n x |C|` block of the selected attributes of one node.
    pub fn node_block(&self, v: usize) -> Matrix {
        let s = &self.samples[v];
        Matrix::from_fn(s.rows(), self.selected.len(), |r, c| s[(r, self.selected[c])])
    }
}

/// Solver used for the canonical correlation of each pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CcaSolver {
    /// Full generalized eigenproblem on the estimated blocks.
    General,
    /// Single eigenproblem on the averaged marginal and symmetrized cross blocks.
    Homogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferConfig {
    pub method: Method,
    pub gamma: f64,
    pub sided: Sidedness,
    pub pvalue_mode: PValueMode,
    pub mc_draws: usize,
    pub seed: u64,
    pub cca_solver: CcaSolver,
    /// Run the per-pair homogeneity likelihood-ratio test.
    pub homogeneity_check: bool,
}

impl InferConfig {
    pub fn new(method: Method, gamma: f64) -> Self {
        InferConfig {
            method,
            gamma,
            sided: Sidedness::TwoSided,
            pvalue_mode: PValueMode::Formula,
            mc_draws: 1_000_000,
            seed: 0,
            cca_solver: CcaSolver::General,
            homogeneity_check: true,
        }
    }
}

/// One declared edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    /// Node indices with `pair.0 < pair.1`.
    pub pair: (usize, usize),
    pub similarity: f64,
    pub method: Method,
    pub statistic: f64,
    pub df: Option<usize>,
    pub p: f64,
    pub q: f64,
    /// First-root attribute contributions (cca only, otherwise empty).
    pub contrib: Vec<f64>,
}

/// Pair excluded from testing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub pair: (usize, usize),
    pub reason: String,
}

/// Tally of per-pair homogeneity tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneitySummary {
    pub df: usize,
    pub tested: usize,
    pub rejected: usize,
    /// Pairs where the constrained fit could not be computed.
    pub failed: usize,
    pub level: f64,
}

impl HomogeneitySummary {
    pub fn rejected_fraction(&self) -> f64 {
        if self.tested == 0 {
            0.0
        } else {
            self.rejected as f64 / self.tested as f64
        }
    }
}

/// Result of [`infer_network`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredNetwork {
    pub node_ids: Vec<String>,
    pub attributes: Vec<String>,
    pub method: Method,
    pub gamma: f64,
    pub n_samples: usize,
    /// Number of pairs that entered the FDR step.
    pub n_tests: usize,
    /// Sorted by `pair`.
    pub edges: Vec<EdgeRecord>,
    pub skipped: Vec<SkippedPair>,
    /// Pairs whose supermatrix was repaired by eigenvalue flooring.
    pub floored: Vec<(usize, usize)>,
    pub homogeneity: Option<HomogeneitySummary>,
}

impl InferredNetwork {
    /// Network with the given edges and no test metadata.
    pub fn from_edges(node_ids: Vec<String>, method: Method, gamma: f64, edges: Vec<EdgeRecord>) -> Self {
        let mut edges = edges;
        edges.sort_by_key(|e| e.pair);
        InferredNetwork {
            node_ids,
            attributes: Vec::new(),
            method,
            gamma,
            n_samples: 0,
            n_tests: 0,
            edges,
            skipped: Vec::new(),
            floored: Vec::new(),
            homogeneity: None,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn graph(&self) -> Graph {
        Graph::from_edges(self.n_nodes(), self.edges.iter().map(|e| e.pair))
    }
}

struct Standardized {
    /// Columns scaled to zero mean and unit sum of squares.
    columns: Vec<Vec<f64>>,
    within: Matrix,
}

fn standardize(block: &Matrix) -> std::result::Result<Standardized, usize> {
    let (n, k) = (block.rows(), block.cols());
    let columns = (0..k)
        .map(|c| {
            let raw = block.column(c);
            let m = raw.iter().sum::<f64>() / n as f64;
            let ss: f64 = raw.iter().map(|v| (v - m) * (v - m)).sum();
            if ss == 0.0 {
                return Err(c);
            }
            let inv = 1.0 / ss.sqrt();
            Ok(raw.iter().map(|v| (v - m) * inv).collect::<Vec<_>>())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let within = Matrix::from_fn(k, k, |a, b| if a == b { 1.0 } else { dot(&columns[a], &columns[b]) });
    Ok(Standardized { columns, within })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0)
}

/// Outcome of testing one pair before multiplicity control.
enum PairOutcome {
    Tested {
        similarity: f64,
        statistic: f64,
        df: Option<usize>,
        p: f64,
        contrib: Vec<f64>,
        floored: bool,
        homogeneity_p: Option<Option<f64>>,
    },
    Skipped(String),
}

struct PairContext<'a> {
    cfg: &'a InferConfig,
    n: usize,
    k: usize,
    bank: Option<&'a NormalBank>,
}

/// Tests every node pair and declares edges by Benjamini–Hochberg at `cfg.gamma`.
pub fn infer_network(data: &AttributeDataset, cfg: &InferConfig) -> Result<InferredNetwork> {
    if !(cfg.gamma > 0.0 && cfg.gamma < 1.0) {
        return Err(Error::InvalidGamma(cfg.gamma));
    }
    let k = data.selected().len();
    let n = data.n_samples();
    match cfg.method {
        Method::Pearson if k != 1 => {
            return Err(Error::InvalidInput(format!(
                "method pearson needs exactly one attribute, {k} selected"
            )))
        }
        Method::Pearson | Method::Max | Method::Min if n < 4 => {
            return Err(Error::InsufficientSamples { needed: 4, got: n })
        }
        Method::Cca if n < bartlett_min_samples(k) => {
            return Err(Error::InsufficientSamples {
                needed: bartlett_min_samples(k),
                got: n,
            })
        }
        Method::Max | Method::Min if k > 2 && cfg.pvalue_mode == PValueMode::Formula => {
            return Err(Error::InvalidInput(
                "the closed-form max/min tail covers two attributes; use the Monte Carlo mode".into(),
            ))
        }
        _ => {}
    }

    let blocks: Vec<Matrix> = (0..data.n_nodes()).map(|v| data.node_block(v)).collect();
    let standardized = blocks
        .iter()
        .enumerate()
        .map(|(v, b)| {
            standardize(b).map_err(|c| Error::ConstantAttribute {
                node: data.node_ids()[v].clone(),
                attribute: data.attribute_names()[data.selected()[c]].clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let bank = match (cfg.method, cfg.pvalue_mode) {
        (Method::Max | Method::Min, PValueMode::MonteCarlo) if k > 1 => {
            Some(NormalBank::new(k, cfg.mc_draws, cfg.seed))
        }
        _ => None,
    };
    let ctx = PairContext {
        cfg,
        n,
        k,
        bank: bank.as_ref(),
    };

    let nv = data.n_nodes();
    let pairs: Vec<(usize, usize)> = (0..nv)
        .flat_map(|i| ((i + 1)..nv).map(move |j| (i, j)))
        .collect();
    let outcomes = pairs
        .par_iter()
        .map(|&(i, j)| test_pair(&ctx, &standardized[i], &standardized[j], &blocks[i], &blocks[j]))
        .collect::<Result<Vec<_>>>()?;

    let mut tested = Vec::new();
    let mut skipped = Vec::new();
    let mut floored = Vec::new();
    let mut homog = HomogeneitySummary {
        df: crate::inference::homogeneity_df(k),
        tested: 0,
        rejected: 0,
        failed: 0,
        level: HOMOGENEITY_LEVEL,
    };
    let run_homog = cfg.homogeneity_check && k >= 2;
    for (&pair, outcome) in pairs.iter().zip(outcomes) {
        match outcome {
            PairOutcome::Skipped(reason) => skipped.push(SkippedPair { pair, reason }),
            PairOutcome::Tested {
                similarity,
                statistic,
                df,
                p,
                contrib,
                floored: was_floored,
                homogeneity_p,
            } => {
                if was_floored {
                    floored.push(pair);
                }
                match homogeneity_p {
                    Some(Some(hp)) => {
                        homog.tested += 1;
                        if hp < HOMOGENEITY_LEVEL {
                            homog.rejected += 1;
                        }
                    }
                    Some(None) => homog.failed += 1,
                    None => {}
                }
                tested.push((pair, similarity, statistic, df, p, contrib));
            }
        }
    }

    let pvalues: Vec<f64> = tested.iter().map(|t| t.4).collect();
    let edges = if pvalues.is_empty() {
        Vec::new()
    } else {
        let fdr = bh_fdr(&pvalues, cfg.gamma)?;
        fdr.rejected
            .iter()
            .map(|&idx| {
                let (pair, similarity, statistic, df, p, contrib) = tested[idx].clone();
                EdgeRecord {
                    pair,
                    similarity,
                    method: cfg.method,
                    statistic,
                    df,
                    p,
                    q: fdr.qvalues[idx],
                    contrib,
                }
            })
            .collect()
    };

    Ok(InferredNetwork {
        node_ids: data.node_ids().to_vec(),
        attributes: data.selected_names(),
        method: cfg.method,
        gamma: cfg.gamma,
        n_samples: n,
        n_tests: pvalues.len(),
        edges,
        skipped,
        floored,
        homogeneity: run_homog.then_some(homog),
    })
}

fn test_pair(
    ctx: &PairContext<'_>,
    si: &Standardized,
    sj: &Standardized,
    xi: &Matrix,
    xj: &Matrix,
) -> Result<PairOutcome> {
    let k = ctx.k;
    let n = ctx.n;
    let cfg = ctx.cfg;
    let cross = Matrix::from_fn(k, k, |l, m| dot(&si.columns[l], &sj.columns[m]));

    let homogeneity_p = (cfg.homogeneity_check && k >= 2).then(|| homogeneity_lrt(xi, xj).ok().map(|t| t.p));

    let outcome = match cfg.method {
        Method::Pearson => {
            let rho = cross[(0, 0)];
            let z = fisher_z(rho, n)?;
            PairOutcome::Tested {
                similarity: rho,
                statistic: z,
                df: None,
                p: fisher_pvalue(z, cfg.sided),
                contrib: Vec::new(),
                floored: false,
                homogeneity_p,
            }
        }
        Method::Max | Method::Min => {
            let mode = if cfg.method == Method::Max {
                Extreme::Max
            } else {
                Extreme::Min
            };
            let rhos: Vec<f64> = (0..k).map(|l| cross[(l, l)]).collect();
            let zs = rhos.iter().map(|&r| fisher_z(r, n)).collect::<Result<Vec<_>>>()?;
            let pick = |v: &[f64]| match mode {
                Extreme::Max => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Extreme::Min => v.iter().copied().fold(f64::INFINITY, f64::min),
            };
            let similarity = pick(&rhos);
            let c = pick(&zs);
            let upper = if k == 1 {
                fisher_pvalue(c, Sidedness::OneSided)
            } else {
                // null correlation of the Fisher statistics of attributes l and m
                let rz = Matrix::from_fn(k, k, |l, m| {
                    if l == m {
                        1.0
                    } else {
                        si.within[(l, m)] * sj.within[(l, m)]
                    }
                });
                match ctx.bank {
                    Some(bank) => crate::inference::extreme_tail_mc(bank, &rz, c, mode)?,
                    None => extreme_corr_pvalue(zs[0], zs[1], rz[(0, 1)], mode)?,
                }
            };
            let p = match cfg.sided {
                Sidedness::OneSided => upper,
                Sidedness::TwoSided => two_sided_from_upper(upper),
            };
            PairOutcome::Tested {
                similarity,
                statistic: c,
                df: None,
                p,
                contrib: Vec::new(),
                floored: false,
                homogeneity_p,
            }
        }
        Method::Cca => {
            let joint = Matrix::block(&si.within, &cross, &cross.transpose(), &sj.within)?;
            let (joint, floored) = match cholesky(&joint) {
                Ok(_) => (joint, false),
                Err(Error::NotPositiveDefinite { .. }) => {
                    let (repaired, change) = floor_eigenvalues(&joint, PD_FLOOR)?;
                    if change > MAX_FLOOR_CHANGE {
                        return Ok(PairOutcome::Skipped(format!(
                            "supermatrix not positive definite (floor change {change:.3e})"
                        )));
                    }
                    (unit_diagonal(&repaired), true)
                }
                Err(e) => return Err(e),
            };
            let structure = PairCorrelationStructure::from_joint(&joint)?;
            let solved = match cfg.cca_solver {
                CcaSolver::General => canonical_corr(&structure),
                CcaSolver::Homogeneous => {
                    let sm = Matrix::from_fn(k, k, |a, b| {
                        0.5 * (structure.sigma_ii()[(a, b)] + structure.sigma_jj()[(a, b)])
                    });
                    let c = structure.sigma_ij();
                    let sc = Matrix::from_fn(k, k, |a, b| 0.5 * (c[(a, b)] + c[(b, a)]));
                    canonical_corr_homogeneous(&sm, &sc)
                }
            };
            let sol = match solved {
                Ok(sol) => sol,
                Err(e) if e.is_numerical() => {
                    return Ok(PairOutcome::Skipped(format!("canonical correlation failed: {e}")))
                }
                Err(e) => return Err(e),
            };
            let test = bartlett_chi2(&sol.roots, n, k)?;
            PairOutcome::Tested {
                similarity: sol.rho_c,
                statistic: test.statistic,
                df: Some(test.df),
                p: test.p,
                contrib: sol.contrib,
                floored,
                homogeneity_p,
            }
        }
    };
    Ok(outcome)
}

/// Rescales a positive-definite matrix to unit diagonal.
fn unit_diagonal(a: &Matrix) -> Matrix {
    let d: Vec<f64> = (0..a.rows()).map(|i| a[(i, i)].sqrt()).collect();
    Matrix::from_fn(a.rows(), a.cols(), |i, j| {
        if i == j {
            1.0
        } else {
            a[(i, j)] / (d[i] * d[j])
        }
    })
}

/// Simple undirected graph as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph on `n` nodes; self-loops and repeated pairs are ignored.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut sets = vec![BTreeSet::new(); n];
        for (a, b) in edges {
            if a != b {
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        Graph {
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    /// Local clustering coefficient; 0 for nodes of degree below 2.
    pub fn clustering(&self) -> Vec<f64> {
        (0..self.n_nodes())
            .map(|v| {
                let nb = &self.adj[v];
                let d = nb.len();
                if d < 2 {
                    return 0.0;
                }
                let mut links = 0usize;
                for (x, &a) in nb.iter().enumerate() {
                    for &b in &nb[x + 1..] {
                        if self.has_edge(a, b) {
                            links += 1;
                        }
                    }
                }
                2.0 * links as f64 / (d * (d - 1)) as f64
            })
            .collect()
    }

    /// Betweenness centrality by Brandes accumulation, normalized by
    /// `(N−1)(N−2)/2`.
    pub fn betweenness(&self) -> Vec<f64> {
        let n = self.n_nodes();
        let mut cb = vec![0.0; n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![usize::MAX; n];
        let mut delta = vec![0.0f64; n];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut stack = Vec::with_capacity(n);
        let mut queue = VecDeque::with_capacity(n);
        for s in 0..n {
            sigma.iter_mut().for_each(|x| *x = 0.0);
            dist.iter_mut().for_each(|x| *x = usize::MAX);
            delta.iter_mut().for_each(|x| *x = 0.0);
            preds.iter_mut().for_each(Vec::clear);
            sigma[s] = 1.0;
            dist[s] = 0;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                stack.push(v);
                for &w in &self.adj[v] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                    if dist[w] == dist[v] + 1 {
                        sigma[w] += sigma[v];
                        preds[w].push(v);
                    }
                }
            }
            while let Some(w) = stack.pop() {
                for &v in &preds[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
                if w != s {
                    cb[w] += delta[w];
                }
            }
        }
        if n < 3 {
            return vec![0.0; n];
        }
        // each unordered pair was counted from both endpoints
        let norm = ((n - 1) * (n - 2)) as f64;
        cb.into_iter().map(|x| x / norm).collect()
    }

    /// Component label per node, labels assigned in order of first node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n_nodes();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &w in &self.adj[v] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Size of the largest connected component.
    pub fn largest_component(&self) -> usize {
        let labels = self.components();
        let mut sizes = vec![0usize; labels.iter().max().map_or(0, |m| m + 1)];
        for l in labels {
            sizes[l] += 1;
        }
        sizes.into_iter().max().unwrap_or(0)
    }
}

/// Whole-network summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub density: f64,
    pub lcc_size: usize,
    /// Mean `|similarity|` over declared edges (0 without edges).
    pub avg_abs_similarity: f64,
    pub degree: Vec<usize>,
    pub avg_degree: f64,
    pub clustering: Vec<f64>,
    pub avg_clustering: f64,
    pub betweenness: Vec<f64>,
    pub avg_betweenness: f64,
}

/// `2E / (V(V−1))`.
pub fn density(n_nodes: usize, n_edges: usize) -> f64 {
    if n_nodes < 2 {
        return 0.0;
    }
    2.0 * n_edges as f64 / (n_nodes * (n_nodes - 1)) as f64
}

/// `2E / V`.
pub fn average_degree(n_nodes: usize, n_edges: usize) -> f64 {
    if n_nodes == 0 {
        return 0.0;
    }
    2.0 * n_edges as f64 / n_nodes as f64
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn summary(net: &InferredNetwork) -> NetworkSummary {
    let g = net.graph();
    let nv = g.n_nodes();
    let ne = g.n_edges();
    let degree = g.degrees();
    let clustering = g.clustering();
    let betweenness = g.betweenness();
    let abs_sim: Vec<f64> = net.edges.iter().map(|e| e.similarity.abs()).collect();
    NetworkSummary {
        n_nodes: nv,
        n_edges: ne,
        density: density(nv, ne),
        lcc_size: g.largest_component(),
        avg_abs_similarity: mean(&abs_sim),
        avg_degree: average_degree(nv, ne),
        degree,
        avg_clustering: mean(&clustering),
        clustering,
        avg_betweenness: mean(&betweenness),
        betweenness,
    }
}

pub fn degree_distribution(net: &InferredNetwork) -> Vec<usize> {
    net.graph().degrees()
}

pub fn clustering_values(net: &InferredNetwork) -> Vec<f64> {
    net.graph().clustering()
}

pub fn betweenness_values(net: &InferredNetwork) -> Vec<f64> {
    net.graph().betweenness()
}

pub fn largest_connected_component(net: &InferredNetwork) -> usize {
    net.graph().largest_component()
}

/// `|E_a ∩ E_b| / |E_a ∪ E_b|` from set sizes; 1 when both sets are empty.
pub fn jaccard_from_counts(size_a: usize, size_b: usize, shared: usize) -> f64 {
    let union = size_a + size_b - shared;
    if union == 0 {
        1.0
    } else {
        shared as f64 / union as f64
    }
}

/// Jaccard similarity of two edge sets over the same nodes, and the number of
/// shared edges. Edges are matched by node identifier.
pub fn jaccard(a: &InferredNetwork, b: &InferredNetwork) -> Result<(f64, usize)> {
    let ids_a: HashSet<&str> = a.node_ids.iter().map(String::as_str).collect();
    let ids_b: HashSet<&str> = b.node_ids.iter().map(String::as_str).collect();
    if ids_a != ids_b || ids_a.len() != a.node_ids.len() || ids_b.len() != b.node_ids.len() {
        return Err(Error::NodeSetMismatch);
    }
    let keyed = |net: &InferredNetwork| -> HashSet<(String, String)> {
        net.edges
            .iter()
            .map(|e| {
                let x = net.node_ids[e.pair.0].clone();
                let y = net.node_ids[e.pair.1].clone();
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect()
    };
    let ea = keyed(a);
    let eb = keyed(b);
    let shared = ea.intersection(&eb).count();
    Ok((jaccard_from_counts(ea.len(), eb.len(), shared), shared))
}

/// Index of each node id.
pub fn node_index(ids: &[String]) -> HashMap<&str, usize> {
    ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
}
