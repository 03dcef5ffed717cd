//! Personalized PageRank by power iteration, plus a dense linear-solve
//! reference for small graphs.
//!
//! The vector for a source node `s` is the fixed point of
//!
//! ```text
//! r = damping * M r + (1 - damping) * e_s + leak
//! ```
//!
//! where `leak` is the probability mass lost through dead-end columns of `M`
//! during the multiply. Leaked mass is returned to `e_s` by default, or spread
//! uniformly over all nodes with [`DeadEndPolicy::Uniform`].

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::TransitionMatrix;

/// Largest graph accepted by [`ppr_linear_solve`].
pub const MAX_ORACLE_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DeadEndPolicy {
    /// Leaked mass goes back to the source node.
    #[default]
    Teleport,
    /// Leaked mass is spread evenly over all nodes.
    Uniform,
}

impl std::str::FromStr for DeadEndPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "teleport" => Ok(DeadEndPolicy::Teleport),
            "uniform" => Ok(DeadEndPolicy::Uniform),
            other => Err(format!(
                "unknown dead-end policy `{other}` (expected teleport or uniform)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PprConfig {
    /// Probability of following an edge rather than teleporting.
    pub damping: f64,
    /// Stop once the L1 change between iterates drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub dead_end: DeadEndPolicy,
}

impl Default for PprConfig {
    fn default() -> Self {
        PprConfig {
            damping: 0.85,
            tol: 1e-8,
            max_iter: 200,
            dead_end: DeadEndPolicy::Teleport,
        }
    }
}

impl PprConfig {
    pub fn validate(&self) -> Result<()> {
        // Zero damping is accepted: it is the teleport-only limit.
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "PageRank tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig(
                "PageRank max_iter must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PprVector {
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// L1 change of the last iteration.
    pub residual: f64,
    pub converged: bool,
}

pub fn personalized_pagerank(
    transition: &TransitionMatrix,
    source: usize,
    cfg: &PprConfig,
) -> Result<PprVector> {
    cfg.validate()?;
    let n = transition.num_nodes();
    if source >= n {
        return Err(Error::IndexOutOfRange {
            what: "source",
            index: source,
            len: n,
        });
    }
    Ok(power_iterate(transition, source, cfg))
}

fn power_iterate(transition: &TransitionMatrix, source: usize, cfg: &PprConfig) -> PprVector {
    let n = transition.num_nodes();
    let beta = cfg.damping;
    let mut rank = vec![0.0; n];
    rank[source] = 1.0;
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        transition.mul_into(&rank, beta, &mut next);
        let kept: f64 = next.iter().sum();
        let leak = (beta - kept).max(0.0);
        next[source] += 1.0 - beta;
        if leak > 0.0 {
            match cfg.dead_end {
                DeadEndPolicy::Teleport => next[source] += leak,
                DeadEndPolicy::Uniform => {
                    let share = leak / n as f64;
                    next.iter_mut().for_each(|v| *v += share);
                }
            }
        }
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < cfg.tol {
            break;
        }
    }

    let total: f64 = rank.iter().sum();
    rank.iter_mut().for_each(|v| *v /= total);
    PprVector {
        scores: rank,
        iterations,
        residual,
        converged: residual < cfg.tol,
    }
}

/// Solves `(I - damping * M') r = (1 - damping) e_source` directly, where `M'`
/// is `M` with each dead-end column replaced according to `policy`.
///
/// Gaussian elimination with partial pivoting; meant as a reference for small
/// graphs only.
pub fn ppr_linear_solve(
    transition: &TransitionMatrix,
    source: usize,
    damping: f64,
    policy: DeadEndPolicy,
) -> Result<Vec<f64>> {
    let n = transition.num_nodes();
    if n > MAX_ORACLE_NODES {
        return Err(Error::InvalidConfig(format!(
            "linear solve limited to {MAX_ORACLE_NODES} nodes, got {n}"
        )));
    }
    if source >= n {
        return Err(Error::IndexOutOfRange {
            what: "source",
            index: source,
            len: n,
        });
    }
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for j in 0..n {
        if transition.is_dead_end(j) {
            match policy {
                DeadEndPolicy::Teleport => a[source][j] -= damping,
                DeadEndPolicy::Uniform => a.iter_mut().for_each(|row| row[j] -= damping / n as f64),
            }
        } else {
            let (rows, vals) = transition.column(j);
            for (&i, &v) in rows.iter().zip(vals) {
                a[i][j] -= damping * v;
            }
        }
    }
    a[source][n] = 1.0 - damping;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::Singular);
        }
        a.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                let (upper, lower) = a.split_at_mut(row);
                for (target, pivot_value) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *target -= factor * pivot_value;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][n] - tail) / a[row][row];
    }
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowDiagnostics {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Row `i` holds the personalized PageRank vector with teleport at user `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PprFeatureMatrix {
    pub damping: f64,
    pub features: DMatrix<f64>,
    pub diagnostics: Vec<RowDiagnostics>,
}

impl PprFeatureMatrix {
    pub fn num_users(&self) -> usize {
        self.features.nrows()
    }

    pub fn all_converged(&self) -> bool {
        self.diagnostics.iter().all(|d| d.converged)
    }

    pub fn unconverged_rows(&self) -> Vec<usize> {
        self.diagnostics
            .iter()
            .enumerate()
            .filter(|(_, d)| !d.converged)
            .map(|(i, _)| i)
            .collect()
    }

    /// CSV dump: a `# m=<m>,beta=<damping>` header, then one row per user.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# m={},beta={}", self.num_users(), self.damping)?;
        write_matrix_rows(&self.features, &mut out)
    }

    /// Reads a dump produced by [`write_csv`](Self::write_csv). Diagnostics are
    /// not stored, so every row is marked converged.
    pub fn read_csv(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let bad = |msg: String| Error::InvalidConfig(format!("PPR dump: {msg}"));
        let header = lines
            .next()
            .ok_or_else(|| bad("missing header".into()))?
            .map_err(|e| bad(e.to_string()))?;
        let mut m = None;
        let mut damping = None;
        for field in header.trim_start_matches('#').trim().split(',') {
            match field.split_once('=') {
                Some(("m", v)) => m = v.parse::<usize>().ok(),
                Some(("beta", v)) => damping = v.parse::<f64>().ok(),
                _ => return Err(bad(format!("unexpected header field `{field}`"))),
            }
        }
        let (m, damping) = m
            .zip(damping)
            .ok_or_else(|| bad("incomplete header".into()))?;
        let mut data = Vec::with_capacity(m * m);
        for line in lines {
            let line = line.map_err(|e| bad(e.to_string()))?;
            for v in line.split(',') {
                data.push(
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("bad value `{v}`")))?,
                );
            }
        }
        if data.len() != m * m {
            return Err(bad(format!(
                "expected {} values, found {}",
                m * m,
                data.len()
            )));
        }
        Ok(PprFeatureMatrix {
            damping,
            features: DMatrix::from_row_slice(m, m, &data),
            diagnostics: vec![
                RowDiagnostics {
                    iterations: 0,
                    residual: 0.0,
                    converged: true,
                };
                m
            ],
        })
    }
}

pub(crate) fn write_matrix_rows(
    matrix: &DMatrix<f64>,
    out: &mut impl Write,
) -> std::io::Result<()> {
    for row in matrix.row_iter() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.write_all(b",")?;
            }
            write!(out, "{v}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Personalized PageRank for every user. Rows are independent and computed in parallel.
pub fn ppr_feature_matrix(
    transition: &TransitionMatrix,
    cfg: &PprConfig,
) -> Result<PprFeatureMatrix> {
    cfg.validate()?;
    let n = transition.num_nodes();
    let rows: Vec<PprVector> = (0..n)
        .into_par_iter()
        .map(|s| power_iterate(transition, s, cfg))
        .collect();
    let mut features = DMatrix::zeros(n, n);
    let mut diagnostics = Vec::with_capacity(n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.scores.into_iter().enumerate() {
            features[(i, j)] = v;
        }
        diagnostics.push(RowDiagnostics {
            iterations: row.iterations,
            residual: row.residual,
            converged: row.converged,
        });
    }
    Ok(PprFeatureMatrix {
        damping: cfg.damping,
        features,
        diagnostics,
    })
}
