//! Weighted undirected graphs as Laplacian matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("edge ({i}, {j}) has non-positive weight {w}")]
    NonPositiveWeight { i: usize, j: usize, w: f64 },
    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("ring needs 1 <= k < n/2, got n = {n}, k = {k}")]
    InvalidK { n: usize, k: usize },
    #[error("a network needs at least {min} nodes, got {n}")]
    TooFewNodes { n: usize, min: usize },
    #[error("grounding set must be a non-empty proper subset of the nodes")]
    EmptyOrFullIndexSet,
    #[error("matrix is not square ({rows} x {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("row {row} sums to {sum}, expected zero")]
    RowSumNonzero { row: usize, sum: f64 },
    #[error("positive off-diagonal entry at ({row}, {col})")]
    PositiveOffDiagonal { row: usize, col: usize },
    #[error("connectivity scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error("non-finite entry in the Laplacian")]
    NonFinite,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, NetworkError>;

/// Relative threshold below which the algebraic connectivity counts as zero.
pub const DISCONNECTED_TOL: f64 = 1e-9;

/// A validated symmetric Laplacian with its eigendecomposition.
///
/// Eigenvalues are sorted ascending; column `k` of [`eigenvectors`](Self::eigenvectors)
/// belongs to eigenvalue `k` and has its first non-negligible entry positive.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl LaplacianMatrix {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(NetworkError::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(NetworkError::TooFewNodes { n: 0, min: 1 });
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(NetworkError::NonFinite);
        }
        let norm = inf_norm(&matrix);
        for i in 0..rows {
            for j in (i + 1)..rows {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * norm {
                    return Err(NetworkError::NotSymmetric { row: i, col: j });
                }
            }
        }
        for i in 0..rows {
            for j in 0..rows {
                if i != j && matrix[(i, j)] > 1e-12 * norm {
                    return Err(NetworkError::PositiveOffDiagonal { row: i, col: j });
                }
            }
            let sum: f64 = matrix.row(i).iter().sum();
            if sum.abs() > 1e-10 * norm {
                return Err(NetworkError::RowSumNonzero { row: i, sum });
            }
        }
        let symmetric = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self::decompose(symmetric))
    }

    fn decompose(matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        let eig = SymmetricEigen::new(matrix.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    col.neg_mut();
                }
            }
            eigenvectors.set_column(dst, &col);
        }
        Self {
            matrix,
            eigenvalues,
            eigenvectors,
        }
    }

    /// Builds the Laplacian of an edge list; repeated edges add up.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(NetworkError::TooFewNodes { n, min: 1 });
        }
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            for index in [i, j] {
                if index >= n {
                    return Err(NetworkError::IndexOutOfRange { index, n });
                }
            }
            if i == j {
                return Err(NetworkError::SelfLoop(i));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(NetworkError::NonPositiveWeight { i, j, w });
            }
            m[(i, j)] -= w;
            m[(j, i)] -= w;
            m[(i, i)] += w;
            m[(j, j)] += w;
        }
        Ok(Self::decompose(m))
    }

    /// The edgeless graph on `n` nodes.
    pub fn empty(n: usize) -> Result<Self> {
        Self::from_edges(n, &[])
    }

    pub fn complete_graph(n: usize, weight: f64) -> Result<Self> {
        if n < 2 {
            return Err(NetworkError::TooFewNodes { n, min: 2 });
        }
        let edges: Vec<_> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j, weight)))
            .collect();
        Self::from_edges(n, &edges)
    }

    pub fn path_graph(n: usize, weight: f64) -> Result<Self> {
        if n < 2 {
            return Err(NetworkError::TooFewNodes { n, min: 2 });
        }
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, weight)).collect();
        Self::from_edges(n, &edges)
    }

    /// Ring where every node links to its `k` nearest neighbours on each side.
    pub fn k_regular_ring(n: usize, k: usize, weight: f64) -> Result<Self> {
        if k == 0 || 2 * k >= n {
            return Err(NetworkError::InvalidK { n, k });
        }
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (1..=k).map(move |d| (i, (i + d) % n, weight)))
            .collect();
        Self::from_edges(n, &edges)
    }

    /// Connected random graph: a spanning path plus each remaining pair
    /// with probability `p`, weights uniform in `[w_lo, w_hi]`.
    pub fn random_connected<R: Rng + ?Sized>(
        n: usize,
        p: f64,
        w_lo: f64,
        w_hi: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if n < 2 {
            return Err(NetworkError::TooFewNodes { n, min: 2 });
        }
        let weight = |rng: &mut R| {
            if w_hi > w_lo {
                rng.random_range(w_lo..=w_hi)
            } else {
                w_lo
            }
        };
        let mut edges = Vec::new();
        for i in 0..n - 1 {
            edges.push((i, i + 1, weight(rng)));
        }
        for i in 0..n {
            for j in (i + 2)..n {
                if rng.random_bool(p.clamp(0.0, 1.0)) {
                    edges.push((i, j, weight(rng)));
                }
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Parses `nodes n` / `edge i j w` lines; `#` starts a comment.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let (n, edges) = parse_edge_list(text)?;
        Self::from_edges(n, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let n = self.n();
        let mut out = format!("nodes {n}\n");
        for i in 0..n {
            for j in (i + 1)..n {
                let w = -self.matrix[(i, j)];
                if w > 0.0 {
                    out.push_str(&format!("edge {i} {j} {w}\n"));
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Second-smallest eigenvalue; zero for a single node.
    pub fn algebraic_connectivity(&self) -> f64 {
        if self.n() < 2 {
            0.0
        } else {
            self.eigenvalues[1]
        }
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.n() - 1]
    }

    /// Infinity norm of the matrix.
    pub fn norm(&self) -> f64 {
        inf_norm(&self.matrix)
    }

    pub fn is_connected(&self) -> bool {
        self.n() == 1 || self.algebraic_connectivity() > DISCONNECTED_TOL * self.norm()
    }

    /// `alpha * L`; the eigenvectors are reused.
    pub fn scale_connectivity(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(NetworkError::InvalidScale(alpha));
        }
        Ok(Self {
            matrix: &self.matrix * alpha,
            eigenvalues: &self.eigenvalues * alpha,
            eigenvectors: self.eigenvectors.clone(),
        })
    }

    /// Removes the rows and columns in `removed`.
    pub fn grounded(&self, removed: &[usize]) -> Result<GroundedLaplacian> {
        let n = self.n();
        let mut mask = vec![false; n];
        for &index in removed {
            if index >= n {
                return Err(NetworkError::IndexOutOfRange { index, n });
            }
            mask[index] = true;
        }
        let removed: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let kept: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
        if removed.is_empty() || kept.is_empty() {
            return Err(NetworkError::EmptyOrFullIndexSet);
        }
        let matrix = self.matrix.select_rows(&kept).select_columns(&kept);
        Ok(GroundedLaplacian {
            kept,
            removed,
            matrix,
        })
    }

    /// Compares the least eigenvalue of the grounded matrix against `(m/n) lambda_2`.
    pub fn grounded_bound_check(&self, removed: &[usize]) -> Result<GroundedBound> {
        let grounded = self.grounded(removed)?;
        let least = grounded.least_eigenvalue();
        let bound = grounded.removed.len() as f64 / self.n() as f64 * self.algebraic_connectivity();
        Ok(GroundedBound {
            least_eigenvalue: least,
            lower_bound: bound,
            holds: least >= bound - 1e-12 * self.norm().max(1.0),
        })
    }
}

/// Laplacian with a subset of rows and columns deleted.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedLaplacian {
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

impl GroundedLaplacian {
    pub fn least_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundedBound {
    pub least_eigenvalue: f64,
    pub lower_bound: f64,
    pub holds: bool,
}

pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

pub(crate) fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| NetworkError::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| NetworkError::Parse {
        line,
        message: format!("bad {what} `{tok}`"),
    })
}

/// Weighted undirected edges `(i, j, w)`.
pub type Edges = Vec<(usize, usize, f64)>;

/// Parses an edge list into a node count and its edges.
pub fn parse_edge_list(text: &str) -> Result<(usize, Edges)> {
    let mut n = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw);
        if body.is_empty() {
            continue;
        }
        let mut toks = body.split_whitespace();
        match toks.next() {
            Some("nodes") => n = Some(parse_field::<usize>(toks.next(), line, "node count")?),
            Some("edge") => {
                let i = parse_field(toks.next(), line, "node index")?;
                let j = parse_field(toks.next(), line, "node index")?;
                let w = parse_field(toks.next(), line, "weight")?;
                edges.push((i, j, w));
            }
            Some(other) => {
                return Err(NetworkError::Parse {
                    line,
                    message: format!("unknown directive `{other}`"),
                })
            }
            None => {}
        }
    }
    let n = n.ok_or(NetworkError::Parse {
        line: 0,
        message: "missing `nodes` line".into(),
    })?;
    Ok((n, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn complete_graph_spectrum() {
        let l = LaplacianMatrix::complete_graph(4, 1.0).unwrap();
        let ev = l.eigenvalues();
        assert!(ev[0].abs() < 1e-12);
        for k in 1..4 {
            assert_relative_eq!(ev[k], 4.0, epsilon = 1e-12);
        }
        let v0 = l.eigenvectors().column(0);
        for x in v0.iter() {
            assert_relative_eq!(*x, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn path_two_nodes() {
        let l = LaplacianMatrix::from_edges(2, &[(0, 1, 2.0)]).unwrap();
        assert_eq!(l.matrix(), &DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]));
        assert_relative_eq!(l.algebraic_connectivity(), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn ring_spectrum_matches_circulant_formula() {
        let (n, k) = (12, 2);
        let l = LaplacianMatrix::k_regular_ring(n, k, 1.0).unwrap();
        let mut expected: Vec<f64> = (0..n)
            .map(|j| {
                (1..=k)
                    .map(|d| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * (j * d) as f64 / n as f64).cos())
                    .sum()
            })
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in l.eigenvalues().iter().zip(&expected) {
            assert_relative_eq!(*a, *b, epsilon = 1e-10);
        }
    }

    #[test]
    fn edge_validation() {
        assert_eq!(
            LaplacianMatrix::from_edges(2, &[(0, 0, 1.0)]),
            Err(NetworkError::SelfLoop(0))
        );
        assert!(matches!(
            LaplacianMatrix::from_edges(2, &[(0, 1, -1.0)]),
            Err(NetworkError::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            LaplacianMatrix::from_edges(2, &[(0, 2, 1.0)]),
            Err(NetworkError::IndexOutOfRange { index: 2, n: 2 })
        ));
        assert_eq!(
            LaplacianMatrix::k_regular_ring(4, 2, 1.0),
            Err(NetworkError::InvalidK { n: 4, k: 2 })
        );
    }

    #[test]
    fn matrix_validation() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -0.5, 0.5]);
        assert!(matches!(
            LaplacianMatrix::from_matrix(asym),
            Err(NetworkError::NotSymmetric { .. })
        ));
        let rowsum = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        assert!(matches!(
            LaplacianMatrix::from_matrix(rowsum),
            Err(NetworkError::RowSumNonzero { .. })
        ));
        let positive = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        assert!(matches!(
            LaplacianMatrix::from_matrix(positive),
            Err(NetworkError::PositiveOffDiagonal { .. })
        ));
    }

    #[test]
    fn disconnected_graph_detected() {
        let l = LaplacianMatrix::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(!l.is_connected());
        assert!(LaplacianMatrix::path_graph(4, 1.0).unwrap().is_connected());
    }

    #[test]
    fn scaling() {
        let l = LaplacianMatrix::path_graph(3, 1.0).unwrap();
        let s = l.scale_connectivity(3.0).unwrap();
        assert_relative_eq!(s.algebraic_connectivity(), 3.0 * l.algebraic_connectivity());
        assert_eq!(l.scale_connectivity(0.0), Err(NetworkError::InvalidScale(0.0)));
    }

    #[test]
    fn grounded_examples() {
        let l = LaplacianMatrix::path_graph(3, 1.0).unwrap();
        let g = l.grounded(&[0]).unwrap();
        assert_eq!(g.matrix, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 1.0]));
        let check = l.grounded_bound_check(&[0]).unwrap();
        assert_relative_eq!(check.least_eigenvalue, (3.0 - 5f64.sqrt()) / 2.0, epsilon = 1e-12);
        assert_relative_eq!(check.lower_bound, 1.0 / 3.0, epsilon = 1e-12);
        assert!(check.holds);
        assert_eq!(l.grounded(&[]), Err(NetworkError::EmptyOrFullIndexSet));
        assert_eq!(l.grounded(&[0, 1, 2]), Err(NetworkError::EmptyOrFullIndexSet));
    }

    #[test]
    fn edge_list_round_trip() {
        let text = "# triangle\nnodes 3\nedge 0 1 1.5\nedge 1 2 2 # heavy\nedge 0 2 0.25\n";
        let l = LaplacianMatrix::from_edge_list(text).unwrap();
        assert_eq!(l.matrix()[(0, 1)], -1.5);
        let again = LaplacianMatrix::from_edge_list(&l.to_edge_list()).unwrap();
        assert_eq!(again.matrix(), l.matrix());
        assert!(matches!(
            LaplacianMatrix::from_edge_list("nodes 2\nedge 0 x 1"),
            Err(NetworkError::Parse { line: 2, .. })
        ));
    }
}
