//! Bi-partitions, cut quality metrics, and the eigenvector threshold sweep.
//!
//! Given a solved second eigenvector, the sweep scans the `n - 1` prefix
//! splits of the sorted entries, scores each by the ratio Cheeger cut, and
//! returns the best. Thresholds never separate equal entries: a node set with
//! identical eigenvector values is either wholly in or wholly out.

use crate::graph::{Graph, NodeVector};
use crate::{Error, Result, Scalar};

/// A two-way node partition, stored as 0/1 labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<u8>,
}

impl Partition {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidParameter("partition needs at least one node".into()));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
        }
        Ok(Partition { labels })
    }

    pub fn from_indicator(side: &[bool]) -> Result<Self> {
        Self::new(side.iter().map(|&b| u8::from(b)).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Node counts of sides 0 and 1.
    pub fn side_sizes(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    /// The same partition with sides swapped.
    pub fn complement(&self) -> Partition {
        Partition { labels: self.labels.iter().map(|&l| 1 - l).collect() }
    }
}

/// The standard quality measures of a two-way cut.
///
/// With `C` one side, `cut` the total crossing weight, and `vol` the summed
/// weighted degrees: `rcut = cut·(1/|C| + 1/|C^c|)`, `rcc = cut/min(|C|,
/// |C^c|)`, and `ncut`/`ncc` the same with volumes in place of sizes. If a
/// side has zero volume (all its nodes isolated) the volume-normalized
/// metrics are infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutMetrics<T> {
    pub cut: T,
    pub rcut: T,
    pub rcc: T,
    pub ncut: T,
    pub ncc: T,
    pub sizes: [usize; 2],
    pub volumes: [T; 2],
}

/// Evaluates all cut metrics of a partition. Both sides must be nonempty.
pub fn cut_metrics<T: Scalar>(g: &Graph<T>, partition: &Partition) -> Result<CutMetrics<T>> {
    g.check_node_dim(partition.len())?;
    let labels = partition.labels();
    let sizes = partition.side_sizes();
    if sizes[0] == 0 || sizes[1] == 0 {
        return Err(Error::EmptySide);
    }
    let mut cut = T::zero();
    for e in g.edges() {
        if labels[e.lo] != labels[e.hi] {
            cut += e.weight;
        }
    }
    let deg = g.degree_vector();
    let mut volumes = [T::zero(); 2];
    for (i, &l) in labels.iter().enumerate() {
        volumes[l as usize] += deg[i];
    }
    let s0 = T::cast(sizes[0]);
    let s1 = T::cast(sizes[1]);
    Ok(CutMetrics {
        cut,
        rcut: cut * (T::one() / s0 + T::one() / s1),
        rcc: cut / s0.min(s1),
        ncut: cut * (T::one() / volumes[0] + T::one() / volumes[1]),
        ncc: cut / volumes[0].min(volumes[1]),
        sizes,
        volumes,
    })
}

/// Outcome of [`threshold_sweep`].
#[derive(Debug, Clone)]
pub struct SweepResult<T> {
    /// Best partition found; side 0 is the low (`v ≤ threshold`) side.
    pub partition: Partition,
    /// Metrics of that partition, freshly evaluated.
    pub metrics: CutMetrics<T>,
    /// The split value: the largest eigenvector entry on the low side.
    pub threshold: T,
}

/// Sweeps all order-respecting prefix splits of `v` and keeps the one with
/// the smallest ratio Cheeger cut.
///
/// Entries are sorted ascending (index order on ties); a split is considered
/// only between strictly different values, so equal entries always stay
/// together. Ties in `rcc` go to the smaller cut, then to the smaller
/// threshold — the lower candidates win automatically because the scan runs
/// upward. The winning metrics are recomputed from scratch; the running cut
/// is only used for selection.
pub fn threshold_sweep<T: Scalar>(g: &Graph<T>, v: &NodeVector<T>) -> Result<SweepResult<T>> {
    g.check_node_dim(v.len())?;
    if !v.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        v[i]
            .partial_cmp(&v[j])
            .expect("finiteness checked above")
            .then(i.cmp(&j))
    });
    if v[order[0]] == v[order[n - 1]] {
        return Err(Error::ConstantVector);
    }

    let mut in_low = vec![false; n];
    let mut cut = T::zero();
    let mut size_low = 0usize;
    let mut best: Option<(T, T, T, usize)> = None; // (rcc, cut, threshold, prefix)
    for (idx, &u) in order.iter().enumerate().take(n - 1) {
        // Move u to the low side: its edges flip between crossing and internal.
        for &(nbr, w) in g.neighbors(u) {
            if in_low[nbr] {
                cut -= w;
            } else {
                cut += w;
            }
        }
        in_low[u] = true;
        size_low += 1;
        if v[u] < v[order[idx + 1]] {
            let small = T::cast(size_low.min(n - size_low));
            let rcc = cut / small;
            let better = match best {
                None => true,
                Some((best_rcc, best_cut, _, _)) => {
                    rcc < best_rcc || (rcc == best_rcc && cut < best_cut)
                }
            };
            if better {
                best = Some((rcc, cut, v[u], size_low));
            }
        }
    }

    let (_, _, threshold, prefix) = best.expect("non-constant vectors admit a split");
    let mut labels = vec![1u8; n];
    for &u in &order[..prefix] {
        labels[u] = 0;
    }
    let partition = Partition::new(labels)?;
    let metrics = cut_metrics(g, &partition)?;
    Ok(SweepResult { partition, metrics, threshold })
}

/// Label agreement between two partitions, insensitive to which side is
/// called 0: `max(agree, n - agree) / n`, always in `[1/2, 1]`.
pub fn partition_accuracy(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    let n = a.len();
    let agree = a
        .labels()
        .iter()
        .zip(b.labels())
        .filter(|(x, y)| x == y)
        .count();
    Ok(agree.max(n - agree) as f64 / n as f64)
}
