//! KNN feature graphs, the renormalized GCN propagation operator, and
//! structural statistics.

use std::io::Write;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected edge `(u, v)` with `u < v`.
pub type Edge = (usize, usize);

/// Standardized node features, undirected edges, labels and split masks.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGraph {
    pub nodes: Array2<f64>,
    pub edges: Vec<Edge>,
    pub labels: Vec<usize>,
    pub train_mask: Vec<bool>,
    pub test_mask: Vec<bool>,
}

impl FeatureGraph {
    pub fn new(
        nodes: Array2<f64>,
        edges: Vec<Edge>,
        labels: Vec<usize>,
        train_mask: Vec<bool>,
        test_mask: Vec<bool>,
    ) -> Result<Self> {
        let g = Self {
            nodes,
            edges,
            labels,
            train_mask,
            test_mask,
        };
        g.check()?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.nodes.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.nrows() == 0
    }

    fn check(&self) -> Result<()> {
        let n = self.len();
        if self.labels.len() != n || self.train_mask.len() != n || self.test_mask.len() != n {
            return Err(Error::Dimension(format!(
                "graph with {n} nodes has {} labels and masks of {}/{}",
                self.labels.len(),
                self.train_mask.len(),
                self.test_mask.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &self.edges {
            if u >= v || v >= n {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) is not canonical")));
            }
            if !seen.insert((u, v)) {
                return Err(Error::InvalidInput(format!("duplicate edge ({u}, {v})")));
            }
        }
        if self.train_mask.iter().zip(&self.test_mask).any(|(a, b)| *a && *b) {
            return Err(Error::InvalidInput("train and test masks overlap".into()));
        }
        for class in [0, 1] {
            let present = self.labels.iter().zip(&self.train_mask).any(|(&l, &m)| m && l == class);
            if !present {
                return Err(Error::DegenerateLabels);
            }
        }
        Ok(())
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        adjacency_lists(self.len(), &self.edges)
    }
}

pub fn adjacency_lists(n: usize, edges: &[Edge]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Directed k-nearest neighbours (Euclidean, self excluded, ties to the lower
/// index), one sorted list per node.
pub fn knn_lists(x: ArrayView2<f64>, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = x.nrows();
    if k == 0 || n <= k {
        return Err(Error::InvalidParameter(format!(
            "k-nearest-neighbour graph needs 1 <= k < n (k = {k}, n = {n})"
        )));
    }
    let row = |i: usize| {
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(x.row(i), x.row(j)), j))
            .collect();
        let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        cand.select_nth_unstable_by(k - 1, by);
        cand.truncate(k);
        cand.sort_unstable_by(by);
        cand.into_iter().map(|(_, j)| j).collect::<Vec<_>>()
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok((0..n).into_par_iter().map(row).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok((0..n).map(row).collect())
    }
}

/// Union-symmetrized KNN edge list, sorted.
pub fn knn_graph(x: ArrayView2<f64>, k: usize) -> Result<Vec<Edge>> {
    let lists = knn_lists(x, k)?;
    let mut edges: Vec<Edge> = lists
        .iter()
        .enumerate()
        .flat_map(|(i, nb)| nb.iter().map(move |&j| (i.min(j), i.max(j))))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

/// Sparse symmetric matrix `D^-1/2 (A + I) D^-1/2` in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl PropagationOperator {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut d = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[[i, j]] = v;
            }
        }
        d
    }

    /// `self · m`.
    pub fn matmul(&self, m: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(m.nrows(), self.n, "propagation operator shape mismatch");
        let mut out = Array2::zeros((self.n, m.ncols()));
        for i in 0..self.n {
            let mut acc = out.row_mut(i);
            for (j, v) in self.row(i) {
                acc.scaled_add(v, &m.row(j));
            }
        }
        out
    }
}

pub fn normalize_adjacency(n: usize, edges: &[Edge]) -> PropagationOperator {
    let adj = adjacency_lists(n, edges);
    let inv_sqrt: Vec<f64> = adj.iter().map(|a| 1.0 / ((a.len() + 1) as f64).sqrt()).collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(n + 2 * edges.len());
    let mut vals = Vec::with_capacity(n + 2 * edges.len());
    row_ptr.push(0);
    for i in 0..n {
        let mut entries: Vec<usize> = adj[i].clone();
        entries.push(i);
        entries.sort_unstable();
        for j in entries {
            cols.push(j);
            vals.push(inv_sqrt[i] * inv_sqrt[j]);
        }
        row_ptr.push(cols.len());
    }
    PropagationOperator { n, row_ptr, cols, vals }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub average_degree: f64,
    pub average_degree_centrality: f64,
    pub average_clustering_coefficient: f64,
}

/// Average degree, degree centrality and local clustering coefficient
/// (nodes of degree < 2 contribute 0).
pub fn graph_stats(n: usize, edges: &[Edge]) -> Result<GraphStats> {
    if n < 2 {
        return Err(Error::InsufficientGraph);
    }
    let adj = adjacency_lists(n, edges);
    let mut clustering = 0.0;
    for nb in &adj {
        let d = nb.len();
        if d < 2 {
            continue;
        }
        let mut links = 0usize;
        for (a_idx, &a) in nb.iter().enumerate() {
            // Count neighbours of `a` that are also later neighbours of `i`.
            links += count_common(&adj[a], &nb[a_idx + 1..]);
        }
        clustering += 2.0 * links as f64 / (d * (d - 1)) as f64;
    }
    let average_degree = 2.0 * edges.len() as f64 / n as f64;
    Ok(GraphStats {
        nodes: n,
        edges: edges.len(),
        average_degree,
        average_degree_centrality: average_degree / (n - 1) as f64,
        average_clustering_coefficient: clustering / n as f64,
    })
}

fn count_common(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeListHeader {
    pub n: usize,
    pub k: usize,
    pub metric: String,
    pub edges: usize,
}

/// Writes a one-line JSON header followed by `u v` per edge.
pub fn write_edge_list<W: Write>(mut out: W, n: usize, k: usize, edges: &[Edge]) -> std::io::Result<()> {
    let header = EdgeListHeader {
        n,
        k,
        metric: "euclidean".into(),
        edges: edges.len(),
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for (u, v) in edges {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

/// Leading `#` comment lines are skipped.
pub fn read_edge_list(text: &str) -> Result<(EdgeListHeader, Vec<Edge>)> {
    let mut lines = text.lines().enumerate().skip_while(|(_, l)| l.starts_with('#'));
    let header: EdgeListHeader =
        serde_json::from_str(lines.next().ok_or_else(|| Error::EmptyInput("edge list".into()))?.1)?;
    let mut edges = Vec::with_capacity(header.edges);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<usize>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected `u v`, got `{line}`"),
                })
            }
        }
    }
    Ok((header, edges))
}
