//! Attribute and class hypergraphs over training samples.
//!
//! Vertices are samples, hyperedges are attributes (or classes). The
//! incidence matrix `H` is n×m with `H[v, e] = 1` iff sample `v` belongs to
//! hyperedge `e`, so for attributes it is exactly the label matrix.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::check_dim;
use crate::linalg::{pairwise_sq_distances, sq_distance};
use crate::predictor::FeatureMatrix;
use crate::{Error, Matrix, Result};

/// Binary vertex × hyperedge membership matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    h: Matrix,
}

impl IncidenceMatrix {
    /// Validate a 0/1 matrix. Probabilistic (fractional) memberships are rejected.
    pub fn new(h: Matrix) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        for c in 0..h.ncols() {
            for r in 0..h.nrows() {
                let value = h[(r, c)];
                if value != 0.0 && value != 1.0 {
                    return Err(Error::NonBinaryEntry { row: r, col: c, value });
                }
            }
        }
        Ok(Self { h })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.h
    }

    pub fn into_matrix(self) -> Matrix {
        self.h
    }

    pub fn n_vertices(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_edges(&self) -> usize {
        self.h.ncols()
    }

    pub fn contains(&self, vertex: usize, edge: usize) -> bool {
        self.h[(vertex, edge)] == 1.0
    }

    /// Vertices of hyperedge `edge` in ascending order.
    pub fn members(&self, edge: usize) -> Vec<usize> {
        self.h
            .column(edge)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Restrict to a subset of vertices (rows), keeping every hyperedge.
    pub fn select_vertices(&self, vertices: &[usize]) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        Ok(Self {
            h: self.h.select_rows(vertices),
        })
    }
}

/// The attribute hypergraph: one hyperedge per attribute, incidence = labels.
pub fn build_attribute_hypergraph(labels: &Matrix) -> Result<IncidenceMatrix> {
    IncidenceMatrix::new(labels.clone())
}

/// Sorted distinct class ids.
pub fn distinct_classes(class_labels: &[usize]) -> Vec<usize> {
    let mut ids = class_labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// One hyperedge per distinct class, columns in ascending class-id order.
pub fn build_class_hypergraph(class_labels: &[usize]) -> Result<IncidenceMatrix> {
    if class_labels.is_empty() {
        return Err(Error::EmptyInput("class labels"));
    }
    let classes = distinct_classes(class_labels);
    let mut h = Matrix::zeros(class_labels.len(), classes.len());
    for (v, label) in class_labels.iter().enumerate() {
        let col = classes.binary_search(label).expect("label is in its own class set");
        h[(v, col)] = 1.0;
    }
    Ok(IncidenceMatrix { h })
}

/// δ(e): number of vertices in each hyperedge.
pub fn edge_degrees(h: &IncidenceMatrix) -> Vec<usize> {
    (0..h.n_edges())
        .map(|e| h.h.column(e).iter().filter(|&&v| v == 1.0).count())
        .collect()
}

/// Nonnegative per-hyperedge weights, optionally tagged with the heat-kernel
/// bandwidth that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperedgeWeights {
    values: Vec<f64>,
    bandwidth: Option<f64>,
}

impl HyperedgeWeights {
    /// Caller-supplied weights.
    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        Ok(Self {
            values,
            bandwidth: None,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bandwidth(&self) -> Option<f64> {
        self.bandwidth
    }
}

pub(crate) fn check_bandwidth(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveBandwidth(mu))
    }
}

/// Heat-kernel affinities `exp(-‖x_i - x_j‖² / mu)` for all sample pairs.
pub fn heat_kernel_affinity(x: &FeatureMatrix, mu: f64) -> Result<Matrix> {
    check_bandwidth(mu)?;
    let mut a = pairwise_sq_distances(x.matrix());
    a.apply(|v| *v = (-*v / mu).exp());
    Ok(a)
}

/// Hyperedge weight = mean heat-kernel affinity over ordered pairs of
/// distinct members. Hyperedges with fewer than two members get weight 0.
pub fn heat_kernel_weights(x: &FeatureMatrix, h: &IncidenceMatrix, mu: f64) -> Result<HyperedgeWeights> {
    check_dim("heat_kernel_weights: samples", h.n_vertices(), x.n_samples())?;
    check_bandwidth(mu)?;
    let affinity = heat_kernel_affinity(x, mu)?;
    let n = affinity.nrows();
    let values = (0..h.n_edges())
        .map(|e| {
            let members = h.members(e);
            let k = members.len();
            if k < 2 {
                return 0.0;
            }
            let mut sum = 0.0;
            for (pos, &a) in members.iter().enumerate() {
                let col = &affinity.as_slice()[a * n..(a + 1) * n];
                sum += members[pos + 1..].iter().map(|&b| col[b]).sum::<f64>();
            }
            // Each unordered pair stands for two ordered pairs.
            (2.0 * sum / (k * (k - 1)) as f64).min(1.0)
        })
        .collect();
    Ok(HyperedgeWeights {
        values,
        bandwidth: Some(mu),
    })
}

/// d(v) = Σ_e w(e) h(v, e).
pub fn vertex_degrees(h: &IncidenceMatrix, w: &HyperedgeWeights) -> Result<Vec<f64>> {
    check_dim("vertex_degrees: hyperedges", h.n_edges(), w.len())?;
    Ok((0..h.n_vertices())
        .map(|v| {
            w.values
                .iter()
                .enumerate()
                .filter(|&(e, _)| h.contains(v, e))
                .map(|(_, &we)| we)
                .sum()
        })
        .collect())
}

const BANDWIDTH_PAIRS: usize = 1000;

/// Data-scaled bandwidth: the mean squared distance over up to 1000 random
/// sample pairs (all pairs when there are fewer). Falls back to 1.0 when
/// there is no spread.
pub fn default_bandwidth(x: &FeatureMatrix, seed: u64) -> f64 {
    let n = x.n_samples();
    if n < 2 {
        return 1.0;
    }
    let total_pairs = n * (n - 1) / 2;
    let m = x.matrix();
    let col = |j: usize| &m.as_slice()[j * m.nrows()..(j + 1) * m.nrows()];
    let mean = if total_pairs <= BANDWIDTH_PAIRS {
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += sq_distance(col(i), col(j));
            }
        }
        sum / total_pairs as f64
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = 0.0;
        for _ in 0..BANDWIDTH_PAIRS {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            sum += sq_distance(col(i), col(j));
        }
        sum / BANDWIDTH_PAIRS as f64
    };
    if mean > 0.0 && mean.is_finite() {
        mean
    } else {
        1.0
    }
}
