//! Benchmark instance generators: stochastic block models, noisy two-moons
//! point clouds, and the k-nearest-neighbor similarity graphs built from them.
//!
//! Everything here is driven by [`PortableRng`], a small deterministic RNG
//! wrapper with a pinned draw order, so that a `(generator, seed)` pair
//! identifies one instance exactly — across runs, platforms, and releases.

use ndarray::Array2;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::Partition;
use crate::graph::Graph;
use crate::{Error, Result, Scalar};

/// Deterministic random source with a stable, documented draw order.
///
/// A 64-bit seed is expanded into a 256-bit ChaCha8 key with four rounds of
/// SplitMix64, so that nearby seeds (0, 1, 2, ...) yield unrelated streams.
/// On top of the raw ChaCha8 words:
///
/// * [`uniform`](Self::uniform) consumes one `u64` and maps its top 53 bits
///   onto `[0, 1)`;
/// * [`gaussian`](Self::gaussian) uses Marsaglia's polar method: each accepted
///   round consumes two uniforms and yields two variates, the second of which
///   is cached and returned by the next call before anything else is drawn.
///
/// The consumption order is part of the output contract of every generator in
/// this module; changing it changes every seeded instance.
pub struct PortableRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        PortableRng {
            inner: ChaCha8Rng::from_seed(key),
            spare: None,
        }
    }

    /// Next raw word from the keystream.
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw from `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * 2f64.powi(-53)
    }

    /// Standard normal draw (polar rejection method, spare cached).
    pub fn gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare.take() {
            return g;
        }
        loop {
            let x = 2.0 * self.uniform() - 1.0;
            let y = 2.0 * self.uniform() - 1.0;
            let s = x * x + y * y;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(y * f);
                return x * f;
            }
        }
    }
}

/// How many reseeded attempts [`sbm_generate`] makes before giving up on
/// drawing a connected graph.
pub const SBM_MAX_ATTEMPTS: usize = 100;

/// Two-block stochastic block model with `n_c` nodes per block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmParams {
    /// Nodes per block; the graph has `2 * n_c` nodes.
    pub n_c: usize,
    /// Edge probability within a block.
    pub q_in: f64,
    /// Edge probability across the two blocks.
    pub q_out: f64,
    pub seed: u64,
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_c == 0 {
            return Err(Error::InvalidParameter("n_c must be positive".into()));
        }
        for (name, q) in [("q_in", self.q_in), ("q_out", self.q_out)] {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {q}"
                )));
            }
        }
        Ok(())
    }
}

/// Draws a two-block SBM together with its ground-truth partition
/// (block 0 = nodes `0..n_c`, block 1 = the rest).
///
/// Each unordered pair `(i, j)` with `i < j` (outer index `i` ascending,
/// inner `j` ascending) consumes exactly one uniform; the pair becomes a
/// unit-weight edge when the draw falls below the block-dependent
/// probability. Disconnected draws are discarded and the generator retries
/// with `seed + 1`, `seed + 2`, ... up to [`SBM_MAX_ATTEMPTS`] reseedings.
pub fn sbm_generate<T: Scalar>(params: &SbmParams) -> Result<(Graph<T>, Partition)> {
    params.validate()?;
    let n = 2 * params.n_c;
    for attempt in 0..SBM_MAX_ATTEMPTS {
        let mut rng = PortableRng::new(params.seed.wrapping_add(attempt as u64));
        let mut edges = Vec::new();
        for i in 0..n {
            let i_in_first = i < params.n_c;
            for j in (i + 1)..n {
                let q = if i_in_first == (j < params.n_c) {
                    params.q_in
                } else {
                    params.q_out
                };
                if rng.uniform() < q {
                    edges.push((i, j, T::one()));
                }
            }
        }
        let graph = Graph::new(n, edges)?;
        if graph.is_connected() {
            let labels: Vec<u8> = (0..n).map(|i| u8::from(i >= params.n_c)).collect();
            return Ok((graph, Partition::new(labels)?));
        }
    }
    Err(Error::GenerationFailed(SBM_MAX_ATTEMPTS))
}

/// Angle placement along each semicircle of the two-moons cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleSampling {
    /// Independent uniform angles (one uniform draw per point).
    Uniform,
    /// `n_c` evenly spaced angles including both endpoints; no angle draws.
    Equispaced,
}

/// Noisy two-moons point cloud in `d` ambient dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoonsParams {
    /// Points per moon; the cloud has `2 * n_c` points.
    pub n_c: usize,
    /// Ambient dimension (the moons live in the first two coordinates).
    pub d: usize,
    /// Noise variance added independently to every coordinate.
    pub sigma2: f64,
    pub seed: u64,
    pub angles: AngleSampling,
}

impl MoonsParams {
    /// Benchmark defaults: 10 ambient dimensions, noise variance 0.02,
    /// uniformly sampled angles.
    pub fn new(n_c: usize, seed: u64) -> Self {
        MoonsParams {
            n_c,
            d: 10,
            sigma2: 0.02,
            seed,
            angles: AngleSampling::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_c < 2 {
            return Err(Error::InvalidParameter(
                "need at least two points per moon".into(),
            ));
        }
        if self.d < 2 {
            return Err(Error::InvalidParameter(
                "ambient dimension must be at least 2".into(),
            ));
        }
        if !self.sigma2.is_finite() || self.sigma2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be finite and non-negative, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }
}

/// A labelled point cloud, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    points: Array2<T>,
    labels: Vec<u8>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(points: Array2<T>, labels: Vec<u8>) -> Result<Self> {
        if points.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.nrows(),
                actual: labels.len(),
            });
        }
        Ok(PointCloud { points, labels })
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<T> {
        &self.points
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn truth(&self) -> Result<Partition> {
        Partition::new(self.labels.clone())
    }

    /// CSV with header `x1,...,xd,label`, one point per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.dim() {
            out.push_str(&format!("x{},", j + 1));
        }
        out.push_str("label\n");
        for (row, label) in self.points.rows().into_iter().zip(&self.labels) {
            for v in row.iter() {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{label}\n"));
        }
        out
    }
}

/// Samples the two-moons cloud: the first `n_c` points on the upper
/// semicircle of radius 1 about the origin, the remaining `n_c` on the lower
/// semicircle about `(1, 0.5)`, with i.i.d. Gaussian noise of variance
/// `sigma2` on all `d` coordinates.
///
/// Draw order per point: the angle uniform (in `Uniform` mode only), then `d`
/// gaussians for the noise. Labels follow the moons: `0` then `1`.
pub fn moons_generate<T: Scalar>(params: &MoonsParams) -> Result<PointCloud<T>> {
    params.validate()?;
    let n = 2 * params.n_c;
    let sigma = params.sigma2.sqrt();
    let mut rng = PortableRng::new(params.seed);
    let mut points = Array2::zeros((n, params.d));
    let mut labels = Vec::with_capacity(n);
    for idx in 0..n {
        let moon = idx / params.n_c;
        let theta = match params.angles {
            AngleSampling::Uniform => rng.uniform() * std::f64::consts::PI,
            AngleSampling::Equispaced => {
                let i = idx % params.n_c;
                std::f64::consts::PI * i as f64 / (params.n_c - 1) as f64
            }
        };
        // Moon 1 is the upper semicircle reflected through its own center,
        // i.e. the lower semicircle of the circle about (1, 0.5).
        let (cx, cy) = if moon == 0 {
            (theta.cos(), theta.sin())
        } else {
            (1.0 - theta.cos(), 0.5 - theta.sin())
        };
        for j in 0..params.d {
            let base = match j {
                0 => cx,
                1 => cy,
                _ => 0.0,
            };
            points[[idx, j]] = T::cast(base + sigma * rng.gaussian());
        }
        labels.push(moon as u8);
    }
    PointCloud::new(points, labels)
}

/// Choice of local scale for the similarity weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaRule {
    /// `sigma_i` = distance from point `i` to its nearest neighbor.
    NearestNeighbor,
    /// `sigma_i` = distance from point `i` to its `k`-th nearest neighbor.
    KthNeighbor,
}

/// Symmetric k-nearest-neighbor similarity graph with locally scaled
/// Gaussian weights and the nearest-neighbor scale rule.
///
/// See [`knn_similarity_graph_with`] for the construction.
pub fn knn_similarity_graph<T: Scalar>(cloud: &PointCloud<T>, k: usize) -> Result<Graph<T>> {
    knn_similarity_graph_with(cloud, k, SigmaRule::NearestNeighbor)
}

/// Builds the k-NN similarity graph: nodes are points, and `(i, j)` is an
/// edge whenever either endpoint ranks the other among its `k` nearest
/// neighbors (ties broken by index). Edge weights are
///
/// ```text
/// w_ij = max( exp(-2 d_ij^2 / sigma_i^2), exp(-2 d_ij^2 / sigma_j^2) )
/// ```
///
/// with the local scales `sigma_i` picked by `rule`. Duplicate points make
/// the scale collapse to zero and are rejected.
pub fn knn_similarity_graph_with<T: Scalar>(
    cloud: &PointCloud<T>,
    k: usize,
    rule: SigmaRule,
) -> Result<Graph<T>> {
    let n = cloud.n_points();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "neighbor count must satisfy 1 <= k < n, got k={k} with n={n}"
        )));
    }

    let mut dist2 = vec![T::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = cloud
                .points
                .row(i)
                .iter()
                .zip(cloud.points.row(j).iter())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>();
            dist2[i * n + j] = d2;
            dist2[j * n + i] = d2;
        }
    }

    // Per-point neighbor lists and squared local scales.
    let mut sigma2 = vec![T::zero(); n];
    let mut neighbor_pairs = std::collections::BTreeSet::new();
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            dist2[i * n + a]
                .partial_cmp(&dist2[i * n + b])
                .expect("squared distances are finite")
                .then(a.cmp(&b))
        });
        let scale_at = match rule {
            SigmaRule::NearestNeighbor => 0,
            SigmaRule::KthNeighbor => k - 1,
        };
        let s2 = dist2[i * n + order[scale_at]];
        if s2 == T::zero() {
            // The nearest neighbor can only sit at distance zero if the
            // points coincide (the k-th one only if at least two do).
            return Err(Error::DuplicatePoints(i.min(order[0]), i.max(order[0])));
        }
        sigma2[i] = s2;
        for &j in &order[..k] {
            neighbor_pairs.insert((i.min(j), i.max(j)));
        }
    }

    let two = T::cast(2.0);
    let edges: Vec<(usize, usize, T)> = neighbor_pairs
        .into_iter()
        .map(|(i, j)| {
            let d2 = dist2[i * n + j];
            let w = (-two * d2 / sigma2[i])
                .exp()
                .max((-two * d2 / sigma2[j]).exp());
            // Guard against underflow on freak far pairs; the true weight is
            // positive and the graph contract requires it.
            (i, j, w.max(T::min_positive_value()))
        })
        .collect();
    Graph::new(n, edges)
}
