//! Weighted undirected graphs and their incidence structure.
//!
//! Edges are stored once, canonically oriented from the lower node index to
//! the higher, and sorted lexicographically. That fixed order is what makes
//! every downstream quantity (edge vectors, incidence products, generated
//! files) reproducible byte for byte.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result, Scalar};

/// One undirected edge with `lo < hi` and a strictly positive weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub lo: usize,
    pub hi: usize,
    pub weight: T,
}

/// A vector indexed by nodes.
///
/// Thin wrapper over `Vec` with the handful of norms and inner products the
/// solver needs; it mostly exists to keep node- and edge-indexed quantities
/// from being mixed up.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVector<T>(Vec<T>);

/// A vector indexed by edges, in the graph's canonical edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVector<T>(Vec<T>);

impl<T: Scalar> NodeVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        NodeVector(values)
    }

    pub fn zeros(n: usize) -> Self {
        NodeVector(vec![T::zero(); n])
    }

    pub fn constant(n: usize, value: T) -> Self {
        NodeVector(vec![value; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> T) -> Self {
        NodeVector((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn dot(&self, other: &Self) -> T {
        assert_eq!(self.len(), other.len(), "node vector lengths differ");
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> T {
        self.0.iter().map(|&a| a * a).sum::<T>().sqrt()
    }

    /// `Σ_i |x_i|^p`, the p-th power of the p-norm.
    pub fn lp_pow(&self, p: T) -> T {
        self.0.iter().map(|&a| a.abs().powf(p)).sum()
    }

    /// `‖self - other‖₂`.
    pub fn diff_norm(&self, other: &Self) -> T {
        assert_eq!(self.len(), other.len(), "node vector lengths differ");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    pub fn scale_mut(&mut self, factor: T) {
        for v in &mut self.0 {
            *v *= factor;
        }
    }

    /// Returns the vector scaled to unit Euclidean norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= T::zero() || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        let mut out = self.clone();
        out.scale_mut(T::one() / n);
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl<T> std::ops::Index<usize> for NodeVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> std::ops::IndexMut<usize> for NodeVector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T> From<Vec<T>> for NodeVector<T> {
    fn from(v: Vec<T>) -> Self {
        NodeVector(v)
    }
}

impl<T> AsRef<[T]> for NodeVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

impl<T: Scalar> EdgeVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        EdgeVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn norm(&self) -> T {
        self.0.iter().map(|&a| a * a).sum::<T>().sqrt()
    }
}

impl<T> std::ops::Index<usize> for EdgeVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> AsRef<[T]> for EdgeVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

/// Weighted undirected graph with a fixed, canonical edge enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T> {
    n: usize,
    edges: Vec<Edge<T>>,
    adjacency: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> Graph<T> {
    /// Builds a graph on `n` nodes from an edge list.
    ///
    /// Edges may arrive in any orientation and order; they are flipped to
    /// `lo < hi` and sorted by `(lo, hi)`. Self-loops, duplicate edges,
    /// out-of-range endpoints, and non-finite or non-positive weights are
    /// rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut canon: Vec<Edge<T>> = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if !(w.is_finite() && w > T::zero()) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has non-positive or non-finite weight {w}"
                )));
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            canon.push(Edge { lo, hi, weight: w });
        }
        canon.sort_by(|x, y| (x.lo, x.hi).cmp(&(y.lo, y.hi)));
        for pair in canon.windows(2) {
            if pair[0].lo == pair[1].lo && pair[0].hi == pair[1].hi {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    pair[0].lo, pair[0].hi
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for e in &canon {
            adjacency[e.lo].push((e.hi, e.weight));
            adjacency[e.hi].push((e.lo, e.weight));
        }
        Ok(Graph { n, edges: canon, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical order; this order defines edge-vector indexing.
    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// Neighbors of `i` with the connecting weights, ascending by neighbor.
    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.adjacency[i]
    }

    /// Weighted degrees `d_i = Σ_j w_ij`.
    pub fn degree_vector(&self) -> NodeVector<T> {
        let mut d = vec![T::zero(); self.n];
        for e in &self.edges {
            d[e.lo] += e.weight;
            d[e.hi] += e.weight;
        }
        NodeVector(d)
    }

    /// Edge weights in canonical order.
    pub fn edge_weight_vector(&self) -> EdgeVector<T> {
        EdgeVector(self.edges.iter().map(|e| e.weight).collect())
    }

    /// Applies the signed incidence operator: `(Bx)_k = x_hi - x_lo` for
    /// edge `k = (lo, hi)`.
    pub fn incidence_apply(&self, x: &NodeVector<T>) -> Result<EdgeVector<T>> {
        self.check_node_dim(x.len())?;
        Ok(EdgeVector(
            self.edges.iter().map(|e| x[e.hi] - x[e.lo]).collect(),
        ))
    }

    /// Applies the transpose of the incidence operator:
    /// `(Bᵀy)_i = Σ_{k: i = hi(k)} y_k - Σ_{k: i = lo(k)} y_k`.
    pub fn incidence_transpose_apply(&self, y: &EdgeVector<T>) -> Result<NodeVector<T>> {
        if y.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                expected: self.edges.len(),
                actual: y.len(),
            });
        }
        let mut out = vec![T::zero(); self.n];
        for (k, e) in self.edges.iter().enumerate() {
            out[e.hi] += y[k];
            out[e.lo] -= y[k];
        }
        Ok(NodeVector(out))
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    pub(crate) fn check_node_dim(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: len });
        }
        Ok(())
    }

    /// Serializes to the plain-text edge-list format:
    ///
    /// ```text
    /// #nodes 5
    /// 0 1 1
    /// 0 2 0.5
    /// ```
    ///
    /// The `#nodes` header preserves isolated nodes; weights print in the
    /// shortest form that round-trips exactly.
    pub fn to_edge_list_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "#nodes {}", self.n);
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {}", e.lo, e.hi, e.weight);
        }
        s
    }

    /// Parses the edge-list format accepted by [`Self::to_edge_list_string`].
    ///
    /// Lines starting with `#` are comments, except a `#nodes N` header which
    /// pins the node count. Without a header the node count is the largest
    /// endpoint plus one.
    pub fn from_edge_list_str(input: &str) -> Result<Self> {
        let mut declared: Option<usize> = None;
        let mut edges: Vec<(usize, usize, T)> = Vec::new();
        let mut max_node = 0usize;
        for (idx, raw) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(count) = rest.trim().strip_prefix("nodes") {
                    let parsed = count.trim().parse::<usize>().map_err(|e| Error::Parse {
                        line: line_no,
                        message: format!("bad node count: {e}"),
                    })?;
                    if declared.replace(parsed).is_some() {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "duplicate #nodes header".into(),
                        });
                    }
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), Some(w)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected `<node> <node> <weight>`".into(),
                });
            };
            if parts.next().is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "trailing tokens after weight".into(),
                });
            }
            let a = a.parse::<usize>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad node index: {e}"),
            })?;
            let b = b.parse::<usize>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad node index: {e}"),
            })?;
            let w = w.parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad weight: {e}"),
            })?;
            max_node = max_node.max(a).max(b);
            edges.push((a, b, T::cast(w)));
        }
        let n = match declared {
            Some(n) => n,
            None if edges.is_empty() => {
                return Err(Error::Parse {
                    line: 0,
                    message: "no edges and no #nodes header".into(),
                })
            }
            None => max_node + 1,
        };
        Graph::new(n, edges)
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_edge_list_str(&text)
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_edge_list_string())?;
        Ok(())
    }
}
