//! Plain-text network description.
//!
//! ```text
//! # two consensus agents
//! nodes 2
//! edge 0 1 1.5
//! node 0 num 1 / den 0 1
//! generator 1 2.0 0.8 15 0.4
//! coupling num 1 / den 1
//! ```
//!
//! `row <i> v_0 ... v_{n-1}` lines give the Laplacian directly and exclude
//! `edge` lines. `generator <i> m d [r_inv tau]` declares a swing node with
//! optional turbine droop in place of a `node` line.

use std::fmt::Write as _;

use coherelab::coherence::{NetworkModel, Tolerances};
use coherelab::network::{LaplacianMatrix, NetworkError};
use coherelab::{RationalTF, SwingParams};
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct NetfileError {
    /// 1-based; 0 when the problem is not tied to one line.
    pub line: usize,
    pub message: String,
}

fn fail<T>(line: usize, message: impl Into<String>) -> Result<T, NetfileError> {
    Err(NetfileError {
        line,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeSpec {
    Dynamics(RationalTF),
    Generator(SwingParams),
}

impl NodeSpec {
    pub fn transfer_function(&self) -> RationalTF {
        match self {
            NodeSpec::Dynamics(g) => g.clone(),
            NodeSpec::Generator(p) => p.transfer_function(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Edges(Vec<(usize, usize, f64)>),
    /// Explicit Laplacian with the source line of each row.
    Rows(DMatrix<f64>, Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFile {
    pub nodes: Vec<NodeSpec>,
    pub topology: Topology,
    pub coupling: RationalTF,
    edge_lines: Vec<usize>,
}

impl NetworkFile {
    pub fn new(nodes: Vec<NodeSpec>, edges: Vec<(usize, usize, f64)>, coupling: RationalTF) -> Self {
        Self {
            nodes,
            edge_lines: vec![0; edges.len()],
            topology: Topology::Edges(edges),
            coupling,
        }
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn parse(text: &str) -> Result<Self, NetfileError> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        let mut edge_lines = Vec::new();
        let mut rows: Vec<Option<(Vec<f64>, usize)>> = Vec::new();
        let mut nodes: Vec<Option<NodeSpec>> = Vec::new();
        let mut coupling: Option<RationalTF> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (keyword, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
            let rest = rest.trim();
            if keyword != "nodes" && n.is_none() {
                return fail(line, "`nodes <n>` must come first");
            }
            match keyword {
                "nodes" => {
                    if n.is_some() {
                        return fail(line, "duplicate `nodes` line");
                    }
                    let count: usize = parse_number(rest, line, "node count")?;
                    if count == 0 {
                        return fail(line, "a network needs at least one node");
                    }
                    n = Some(count);
                    nodes = vec![None; count];
                    rows = vec![None; count];
                }
                "edge" => {
                    let fields: Vec<&str> = rest.split_whitespace().collect();
                    let [i, j, w] = fields[..] else {
                        return fail(line, "expected `edge <i> <j> <w>`");
                    };
                    let i = node_index(i, n.unwrap_or(0), line)?;
                    let j = node_index(j, n.unwrap_or(0), line)?;
                    let w: f64 = parse_number(w, line, "weight")?;
                    if i == j {
                        return fail(line, format!("self-loop at node {i}"));
                    }
                    if !(w > 0.0) || !w.is_finite() {
                        return fail(line, format!("edge weight must be positive, got {w}"));
                    }
                    edges.push((i, j, w));
                    edge_lines.push(line);
                }
                "row" => {
                    let mut fields = rest.split_whitespace();
                    let i = node_index(fields.next().unwrap_or(""), n.unwrap_or(0), line)?;
                    let values = fields
                        .map(|v| parse_number::<f64>(v, line, "matrix entry"))
                        .collect::<Result<Vec<_>, _>>()?;
                    if values.len() != n.unwrap_or(0) {
                        return fail(line, format!("row {i} has {} entries, expected {}", values.len(), n.unwrap_or(0)));
                    }
                    if rows[i].is_some() {
                        return fail(line, format!("duplicate row {i}"));
                    }
                    rows[i] = Some((values, line));
                }
                "node" => {
                    let (i, tf) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                    let i = node_index(i, n.unwrap_or(0), line)?;
                    let g: RationalTF = tf.parse().map_err(|e| NetfileError {
                        line,
                        message: format!("node {i}: {e}"),
                    })?;
                    set_node(&mut nodes, i, NodeSpec::Dynamics(g), line)?;
                }
                "generator" => {
                    let fields: Vec<&str> = rest.split_whitespace().collect();
                    if fields.len() != 3 && fields.len() != 5 {
                        return fail(line, "expected `generator <i> <m> <d> [<r_inv> <tau>]`");
                    }
                    let i = node_index(fields[0], n.unwrap_or(0), line)?;
                    let numbers = fields[1..]
                        .iter()
                        .map(|v| parse_number::<f64>(v, line, "generator parameter"))
                        .collect::<Result<Vec<_>, _>>()?;
                    let invalid = |e: coherelab::AggregateError| NetfileError {
                        line,
                        message: e.to_string(),
                    };
                    let mut params = SwingParams::new(numbers[0], numbers[1]).map_err(invalid)?;
                    if numbers.len() == 4 {
                        params = params.with_droop(numbers[2], numbers[3]).map_err(invalid)?;
                    }
                    set_node(&mut nodes, i, NodeSpec::Generator(params), line)?;
                }
                "coupling" => {
                    if coupling.is_some() {
                        return fail(line, "duplicate `coupling` line");
                    }
                    coupling = Some(rest.parse().map_err(|e| NetfileError {
                        line,
                        message: format!("coupling: {e}"),
                    })?);
                }
                other => return fail(line, format!("unknown keyword `{other}`")),
            }
        }

        let Some(n) = n else {
            return fail(0, "missing `nodes <n>` line");
        };
        let nodes = nodes
            .into_iter()
            .enumerate()
            .map(|(i, node)| node.ok_or_else(|| NetfileError {
                line: 0,
                message: format!("node {i} has no dynamics line"),
            }))
            .collect::<Result<Vec<_>, _>>()?;
        let coupling = coupling.ok_or_else(|| NetfileError {
            line: 0,
            message: "missing `coupling` line".into(),
        })?;

        let given_rows = rows.iter().filter(|r| r.is_some()).count();
        let topology = if given_rows > 0 {
            if !edges.is_empty() {
                return fail(edge_lines[0], "`edge` and `row` lines cannot be mixed");
            }
            let mut matrix = DMatrix::zeros(n, n);
            let mut lines = Vec::with_capacity(n);
            for (i, row) in rows.into_iter().enumerate() {
                let Some((values, line)) = row else {
                    return fail(0, format!("row {i} of the Laplacian is missing"));
                };
                matrix.row_mut(i).copy_from_slice(&values);
                lines.push(line);
            }
            Topology::Rows(matrix, lines)
        } else {
            Topology::Edges(edges)
        };
        Ok(Self {
            nodes,
            topology,
            coupling,
            edge_lines,
        })
    }

    pub fn laplacian(&self) -> Result<LaplacianMatrix, NetfileError> {
        match &self.topology {
            Topology::Edges(edges) => LaplacianMatrix::from_edges(self.n(), edges).map_err(|e| NetfileError {
                line: self.edge_lines.first().copied().unwrap_or(0),
                message: e.to_string(),
            }),
            Topology::Rows(matrix, lines) => LaplacianMatrix::from_matrix(matrix.clone()).map_err(|e| {
                let line = match e {
                    NetworkError::NotSymmetric { row, .. }
                    | NetworkError::RowSumNonzero { row, .. }
                    | NetworkError::PositiveOffDiagonal { row, .. } => lines[row],
                    _ => 0,
                };
                NetfileError {
                    line,
                    message: e.to_string(),
                }
            }),
        }
    }

    pub fn model(&self, tolerances: Tolerances) -> Result<NetworkModel, crate::CliError> {
        let laplacian = self.laplacian()?;
        let nodes = self.nodes.iter().map(NodeSpec::transfer_function).collect();
        Ok(NetworkModel::with_tolerances(laplacian, nodes, self.coupling.clone(), tolerances)?)
    }

    /// Swing parameters of every node, when all nodes are declared as generators.
    pub fn generators(&self) -> Option<Vec<SwingParams>> {
        self.nodes
            .iter()
            .map(|node| match node {
                NodeSpec::Generator(p) => Some(*p),
                NodeSpec::Dynamics(_) => None,
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes {}", self.n());
        match &self.topology {
            Topology::Edges(edges) => {
                for (i, j, w) in edges {
                    let _ = writeln!(out, "edge {i} {j} {w}");
                }
            }
            Topology::Rows(matrix, _) => {
                for (i, row) in matrix.row_iter().enumerate() {
                    let values: Vec<String> = row.iter().map(f64::to_string).collect();
                    let _ = writeln!(out, "row {i} {}", values.join(" "));
                }
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                NodeSpec::Dynamics(g) => {
                    let _ = writeln!(out, "node {i} {}", tf_text(g));
                }
                NodeSpec::Generator(p) => {
                    let _ = match p.droop {
                        Some(d) => writeln!(out, "generator {i} {} {} {} {}", p.inertia, p.damping, d.r_inv, d.tau),
                        None => writeln!(out, "generator {i} {} {}", p.inertia, p.damping),
                    };
                }
            }
        }
        let _ = writeln!(out, "coupling {}", tf_text(&self.coupling));
        out
    }

    /// Netfile describing a model, with its edges read off the Laplacian.
    pub fn from_model(model: &NetworkModel) -> Self {
        let l = model.laplacian().matrix();
        let n = model.n();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if l[(i, j)] != 0.0 {
                    edges.push((i, j, -l[(i, j)]));
                }
            }
        }
        let nodes = model.nodes().iter().cloned().map(NodeSpec::Dynamics).collect();
        Self::new(nodes, edges, model.coupling().clone())
    }
}

fn tf_text(g: &RationalTF) -> String {
    let join = |c: &[f64]| c.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    format!("num {} / den {}", join(g.num().coeffs()), join(g.den().coeffs()))
}

fn parse_number<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, NetfileError> {
    tok.trim().parse().map_err(|_| NetfileError {
        line,
        message: format!("bad {what} `{tok}`"),
    })
}

fn node_index(tok: &str, n: usize, line: usize) -> Result<usize, NetfileError> {
    let i: usize = parse_number(tok, line, "node index")?;
    if i >= n {
        return fail(line, format!("node index {i} out of range for {n} nodes"));
    }
    Ok(i)
}

fn set_node(nodes: &mut [Option<NodeSpec>], i: usize, spec: NodeSpec, line: usize) -> Result<(), NetfileError> {
    if nodes[i].is_some() {
        return fail(line, format!("node {i} has more than one dynamics line"));
    }
    nodes[i] = Some(spec);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = "\
# consensus pair
nodes 2
edge 0 1 1.5
node 0 num 1 / den 0 1
node 1 num: 4 / den: 0 1   # colons are optional
coupling num 1 / den 1
";

    #[test]
    fn parses_the_basic_format() {
        let file = NetworkFile::parse(PAIR).unwrap();
        assert_eq!(file.n(), 2);
        assert_eq!(file.topology, Topology::Edges(vec![(0, 1, 1.5)]));
        let model = file.model(Tolerances::default()).unwrap();
        assert_eq!(model.nodes()[1], RationalTF::integrator().scale(4.0));
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            ("nodes 2\nedge 0 2 1\n", 2, "out of range"),
            ("edge 0 1 1\n", 1, "must come first"),
            ("nodes 2\nedge 0 1 -1\n", 2, "positive"),
            ("nodes 2\nnode 0 num 1 / den 1\nnode 0 num 1 / den 1\n", 3, "more than one"),
            ("nodes 1\nnode 0 num x / den 1\n", 2, "node 0"),
            ("nodes 1\nlink 0 1\n", 2, "unknown keyword"),
        ];
        for (text, line, needle) in cases {
            let err = NetworkFile::parse(text).unwrap_err();
            assert_eq!(err.line, line, "{text:?}: {err}");
            assert!(err.message.contains(needle), "{text:?}: {err}");
        }
        let err = NetworkFile::parse("nodes 2\nnode 0 num 1 / den 1\ncoupling num 1 / den 1\n").unwrap_err();
        assert!(err.message.contains("node 1 has no dynamics"));
    }

    #[test]
    fn asymmetric_rows_are_rejected_at_their_line() {
        let text = "nodes 2\nrow 0 1 -1\nrow 1 -0.5 0.5\nnode 0 num 1 / den 0 1\nnode 1 num 1 / den 0 1\ncoupling num 1 / den 1\n";
        let file = NetworkFile::parse(text).unwrap();
        let err = file.laplacian().unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("symmetric"));
    }

    #[test]
    fn generators_expand_to_swing_dynamics() {
        let text = "nodes 2\nedge 0 1 1\ngenerator 0 2 1\ngenerator 1 3 1 10 0.5\ncoupling num 1 / den 0 1\n";
        let file = NetworkFile::parse(text).unwrap();
        let params = file.generators().unwrap();
        assert!(params[0].droop.is_none() && params[1].droop.is_some());
        assert_eq!(NetworkFile::parse(&file.to_text()).unwrap(), NetworkFile { edge_lines: vec![2], ..file });
    }
}
