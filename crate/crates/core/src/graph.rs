//! The user network: co-rating similarity, thresholded adjacency and the
//! column-stochastic transition matrix used by PageRank.

use std::io::Write;

use rayon::prelude::*;

use crate::data::RatingMatrix;

/// Symmetric co-rating counts, stored as the sparse strict upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    upper: Vec<Vec<(usize, u32)>>,
}

impl SimilarityMatrix {
    pub fn num_users(&self) -> usize {
        self.upper.len()
    }

    /// s_ij; the diagonal is always 0.
    pub fn get(&self, i: usize, j: usize) -> u32 {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        if lo == hi {
            return 0;
        }
        let row = &self.upper[lo];
        row.binary_search_by_key(&hi, |&(k, _)| k)
            .map(|p| row[p].1)
            .unwrap_or(0)
    }

    /// Nonzero entries `(i, j, s_ij)` with `i < j`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.upper
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, s)| (i, j, s)))
    }
}

/// Counts the items co-rated by every pair of users.
///
/// Each user's row is accumulated by walking the raters of every item the user
/// rated, so the cost is driven by item popularity rather than `m^2`.
pub fn cooccurrence_similarity(ratings: &RatingMatrix) -> SimilarityMatrix {
    let m = ratings.num_users();
    let upper = (0..m)
        .into_par_iter()
        .map_init(
            || (vec![0u32; m], Vec::new()),
            |(counts, touched), i| {
                let (items, _) = ratings.user_ratings(i);
                for &item in items {
                    let (raters, _) = ratings.item_ratings(item);
                    let start = raters.partition_point(|&k| k <= i);
                    for &k in &raters[start..] {
                        if counts[k] == 0 {
                            touched.push(k);
                        }
                        counts[k] += 1;
                    }
                }
                touched.sort_unstable();
                let row: Vec<(usize, u32)> = touched.iter().map(|&k| (k, counts[k])).collect();
                for &k in touched.iter() {
                    counts[k] = 0;
                }
                touched.clear();
                row
            },
        )
        .collect();
    SimilarityMatrix { upper }
}

/// Binary symmetric user network, no self loops.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    tau: u32,
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyMatrix {
    pub fn num_users(&self) -> usize {
        self.neighbors.len()
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Edge list with one `i j` pair per line, each undirected edge written in both directions.
    pub fn write_edge_list(&self, mut out: impl Write) -> std::io::Result<()> {
        for (i, nbrs) in self.neighbors.iter().enumerate() {
            for j in nbrs {
                writeln!(out, "{i} {j}")?;
            }
        }
        Ok(())
    }
}

/// a_ij = 1 iff s_ij > tau (strict) and i != j.
pub fn threshold_adjacency(similarity: &SimilarityMatrix, tau: u32) -> AdjacencyMatrix {
    let mut neighbors = vec![Vec::new(); similarity.num_users()];
    for (i, j, s) in similarity.upper_entries() {
        if s > tau {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
    }
    for n in &mut neighbors {
        n.sort_unstable();
    }
    AdjacencyMatrix { tau, neighbors }
}

/// Column-oriented sparse M with m_ij = 1/deg(j) for every arc j -> i.
///
/// Columns of nodes without out-arcs stay all-zero and are listed as dead ends;
/// PageRank compensates for the mass they leak.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    dead_ends: Vec<usize>,
}

impl TransitionMatrix {
    pub fn from_adjacency(adj: &AdjacencyMatrix) -> Self {
        Self::from_out_links(&adj.neighbors)
    }

    /// Builds M from per-node out-link lists. Duplicate links are collapsed;
    /// self links are allowed.
    pub fn from_out_links<L: AsRef<[usize]>>(links: &[L]) -> Self {
        let n = links.len();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        let mut dead_ends = Vec::new();
        col_ptr.push(0);
        for (j, out) in links.iter().enumerate() {
            let mut targets = out.as_ref().to_vec();
            targets.sort_unstable();
            targets.dedup();
            assert!(
                targets.last().is_none_or(|&t| t < n),
                "out-link target out of range"
            );
            if targets.is_empty() {
                dead_ends.push(j);
            } else {
                let w = 1.0 / targets.len() as f64;
                values.extend(std::iter::repeat_n(w, targets.len()));
                row_idx.extend(targets);
            }
            col_ptr.push(row_idx.len());
        }
        TransitionMatrix {
            col_ptr,
            row_idx,
            values,
            dead_ends,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let span = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[span.clone()], &self.values[span])
    }

    pub fn out_degree(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn dead_ends(&self) -> &[usize] {
        &self.dead_ends
    }

    pub fn is_dead_end(&self, j: usize) -> bool {
        self.out_degree(j) == 0
    }

    /// `y = scale * M x`
    pub fn mul_into(&self, x: &[f64], scale: f64, y: &mut [f64]) {
        y.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let s = scale * xj;
            let (rows, vals) = self.column(j);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += s * v;
            }
        }
    }
}

/// Newman modularity of a hard partition of the user network.
///
/// Only used as a diagnostic for fuzzy communities (via their dominant cluster).
pub fn modularity(adj: &AdjacencyMatrix, labels: &[usize]) -> f64 {
    assert_eq!(labels.len(), adj.num_users());
    let two_m = (2 * adj.num_edges()) as f64;
    if two_m == 0.0 {
        return 0.0;
    }
    let groups = labels.iter().copied().max().map_or(0, |g| g + 1);
    let mut internal = vec![0.0; groups];
    let mut degree = vec![0.0; groups];
    for (i, nbrs) in adj.neighbors.iter().enumerate() {
        degree[labels[i]] += nbrs.len() as f64;
        internal[labels[i]] += nbrs.iter().filter(|&&j| labels[j] == labels[i]).count() as f64;
    }
    internal
        .iter()
        .zip(&degree)
        .map(|(&e, &d)| e / two_m - (d / two_m).powi(2))
        .sum()
}
