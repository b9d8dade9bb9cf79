//! Weighted undirected graphs and the spectral quantities driving gossip:
//! Laplacian, spectral gap, effective resistances.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;

use crate::error::{Error, Result};
use crate::linalg::sorted_eigen;

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Line(usize),
    Cycle(usize),
    Grid { rows: usize, cols: usize },
    Complete(usize),
    /// Explicit edges on nodes `0..nodes`.
    EdgeList { nodes: usize, edges: Vec<(usize, usize)> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Uniform,
    /// One positive weight per edge, in the topology's edge order; rescaled
    /// to sum to one.
    Explicit(Vec<f64>),
}

/// Connected simple graph with an edge-activation distribution `P`.
#[derive(Debug, Clone)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    probs: Vec<f64>,
    index: HashMap<(usize, usize), usize>,
    sampler: WeightedIndex<f64>,
}

fn key(v: usize, w: usize) -> (usize, usize) {
    (v.min(w), v.max(w))
}

impl Graph {
    pub fn new(node_count: usize, edges: Vec<(usize, usize)>, weights: Weights) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidGraph(format!("need at least 2 nodes, got {node_count}")));
        }
        if edges.is_empty() {
            return Err(Error::InvalidGraph("no edges".into()));
        }
        let mut index = HashMap::with_capacity(edges.len());
        let mut canonical = Vec::with_capacity(edges.len());
        for (i, &(v, w)) in edges.iter().enumerate() {
            if v == w {
                return Err(Error::InvalidGraph(format!("self-loop at node {v}")));
            }
            if v >= node_count || w >= node_count {
                return Err(Error::InvalidGraph(format!("edge {{{v}, {w}}} references a node >= {node_count}")));
            }
            if index.insert(key(v, w), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate edge {{{v}, {w}}}")));
            }
            canonical.push(key(v, w));
        }
        let probs = match weights {
            Weights::Uniform => vec![1.0 / canonical.len() as f64; canonical.len()],
            Weights::Explicit(w) => {
                if w.len() != canonical.len() {
                    return Err(Error::InvalidGraph(format!(
                        "{} weights for {} edges",
                        w.len(),
                        canonical.len()
                    )));
                }
                if let Some(bad) = w.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
                    return Err(Error::InvalidGraph(format!("edge weight must be positive, got {bad}")));
                }
                let total: f64 = w.iter().sum();
                w.iter().map(|p| p / total).collect()
            }
        };
        check_connected(node_count, &canonical)?;
        let sampler = WeightedIndex::new(&probs).map_err(|e| Error::InvalidGraph(e.to_string()))?;
        Ok(Graph { node_count, edges: canonical, probs, index, sampler })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Edges as `(v, w)` with `v < w`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_index(&self, v: usize, w: usize) -> Result<usize> {
        self.index.get(&key(v, w)).copied().ok_or(Error::EdgeNotInGraph(v, w))
    }

    pub fn sampler(&self) -> &WeightedIndex<f64> {
        &self.sampler
    }

    pub fn p_min(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ P_vw (e_v − e_w)(e_v − e_w)ᵀ`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.node_count, self.node_count);
        for (&(v, w), &p) in self.edges.iter().zip(&self.probs) {
            l[(v, v)] += p;
            l[(w, w)] += p;
            l[(v, w)] -= p;
            l[(w, v)] -= p;
        }
        l
    }
}

fn check_connected(n: usize, edges: &[(usize, usize)]) -> Result<()> {
    let mut adj = vec![Vec::new(); n];
    for &(v, w) in edges {
        adj[v].push(w);
        adj[w].push(v);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    let missing: Vec<usize> = (0..n).filter(|&v| !seen[v]).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Disconnected(format!(
            "{} of {n} nodes unreachable from node 0 (first: {})",
            missing.len(),
            missing[0]
        )))
    }
}

pub fn build_graph(topology: &Topology, weights: Weights) -> Result<Graph> {
    let (n, edges) = match topology {
        Topology::Line(m) => {
            let m = *m;
            (m, (1..m).map(|i| (i - 1, i)).collect())
        }
        Topology::Cycle(m) => {
            let m = *m;
            if m < 3 {
                return Err(Error::InvalidGraph(format!("cycle needs at least 3 nodes, got {m}")));
            }
            (m, (0..m).map(|i| (i, (i + 1) % m)).collect())
        }
        Topology::Grid { rows, cols } => {
            let (r, c) = (*rows, *cols);
            if r == 0 || c == 0 {
                return Err(Error::InvalidGraph(format!("grid dimensions must be >= 1, got {r}x{c}")));
            }
            let id = |i: usize, j: usize| i * c + j;
            let mut edges = Vec::with_capacity(2 * r * c);
            for i in 0..r {
                for j in 0..c {
                    if j + 1 < c {
                        edges.push((id(i, j), id(i, j + 1)));
                    }
                    if i + 1 < r {
                        edges.push((id(i, j), id(i + 1, j)));
                    }
                }
            }
            (r * c, edges)
        }
        Topology::Complete(m) => {
            let m = *m;
            (m, (0..m).flat_map(|v| (v + 1..m).map(move |w| (v, w))).collect())
        }
        Topology::EdgeList { nodes, edges } => (*nodes, edges.clone()),
    };
    Graph::new(n, edges, weights)
}

/// Parses `v w p` lines (0-based nodes, positive weight). Blank lines and
/// `#` comments are skipped. The node count is one more than the largest id.
pub fn parse_edge_list(text: &str) -> Result<(Topology, Weights)> {
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    let mut problems = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parsed = match fields.as_slice() {
            [v, w, p] => match (v.parse::<usize>(), w.parse::<usize>(), p.parse::<f64>()) {
                (Ok(v), Ok(w), Ok(p)) => Some((v, w, p)),
                _ => None,
            },
            _ => None,
        };
        match parsed {
            Some((v, w, p)) => {
                edges.push((v, w));
                weights.push(p);
            }
            None => problems.push(format!("edge list line {}: expected `v w p`, got `{line}`", lineno + 1)),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let nodes = edges.iter().map(|&(v, w)| v.max(w) + 1).max().unwrap_or(0);
    Ok((Topology::EdgeList { nodes, edges }, Weights::Explicit(weights)))
}

/// Spectral data of a connected graph's Laplacian.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    pub laplacian: DMatrix<f64>,
    /// Second-smallest Laplacian eigenvalue.
    pub mu_gossip: f64,
    pub pinv_laplacian: DMatrix<f64>,
    /// `(e_v − e_w)ᵀ 𝓛⁺ (e_v − e_w)` per edge, in edge order.
    pub r_eff: Vec<f64>,
    pub r_max: f64,
}

impl SpectralCache {
    pub fn resistance(&self, v: usize, w: usize) -> f64 {
        let p = &self.pinv_laplacian;
        p[(v, v)] + p[(w, w)] - 2.0 * p[(v, w)]
    }
}

pub fn spectral(graph: &Graph) -> Result<SpectralCache> {
    let laplacian = graph.laplacian();
    let (values, vectors) = sorted_eigen(&laplacian);
    let top = values[values.len() - 1];
    let mu_gossip = values[1];
    if !(mu_gossip > 1e-12 * top) {
        return Err(Error::Disconnected(format!("spectral gap {mu_gossip:e} is numerically zero")));
    }
    let n = graph.node_count();
    // Drop the constant eigenvector; everything else is the range.
    let mut pinv = DMatrix::zeros(n, n);
    for k in 1..n {
        let u = vectors.column(k);
        pinv += (u * u.transpose()) / values[k];
    }
    let mut cache = SpectralCache { laplacian, mu_gossip, pinv_laplacian: pinv, r_eff: Vec::new(), r_max: 0.0 };
    cache.r_eff = graph.edges().iter().map(|&(v, w)| cache.resistance(v, w)).collect();
    cache.r_max = cache.r_eff.iter().copied().fold(0.0, f64::max);
    Ok(cache)
}

/// `(θ_RG, θ_ARG) = (μ_gossip, √(μ_gossip / (2 R_max)))`.
///
/// Since `R_eff(v, w) ≤ ‖e_v − e_w‖² / μ_gossip = 2 / μ_gossip`, always
/// `θ_ARG ≥ θ_RG / 2`, with equality on complete graphs and single edges.
pub fn gossip_rates(cache: &SpectralCache) -> (f64, f64) {
    let rg = cache.mu_gossip;
    let arg = (cache.mu_gossip / (2.0 * cache.r_max)).sqrt();
    debug_assert!(arg >= 0.5 * rg * (1.0 - 1e-9), "theta_ARG below theta_RG / 2");
    (rg, arg)
}

/// `e_v − e_w` as a dense vector of length `n`.
pub fn edge_vector(n: usize, v: usize, w: usize) -> DVector<f64> {
    let mut a = DVector::zeros(n);
    a[v] = 1.0;
    a[w] = -1.0;
    a
}
